#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "factorseg/panel.hpp"

using namespace factorseg;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << content;
    return p;
}

}  // namespace

TEST_CASE("load_csv ingests rows-are-series", "[panel]") {
    // 3x5 so the T >= 8 rule triggers the transpose case below; use 3x8.
    const auto path = write_temp("fs_panel_a.csv",
                                 "1,2,3,4,5,6,7,8\n"
                                 "2,4,6,8,10,12,14,16\n"
                                 "0,0,0,0,0,0,0,1\n");
    const auto p = load_csv(path.string(), Orientation::rows_are_series);
    CHECK(p.n() == 3);
    CHECK(p.T() == 8);
    CHECK(p.values(1, 3) == 8.0);
    CHECK_FALSE(p.centered);
}

TEST_CASE("load_csv normalizes rows-are-time", "[panel]") {
    std::string content;
    for (int t = 0; t < 9; ++t) content += std::to_string(t) + "," + std::to_string(2 * t) + "\n";
    const auto path = write_temp("fs_panel_b.csv", content);
    const auto p = load_csv(path.string(), Orientation::rows_are_time);
    CHECK(p.n() == 2);
    CHECK(p.T() == 9);
    CHECK(p.values(1, 4) == 8.0);
}

TEST_CASE("load_csv accepts a header under rows-are-time and keeps labels", "[panel]") {
    std::string content = "gdp,cpi\n";
    for (int t = 0; t < 8; ++t) content += std::to_string(t) + ",1\n";
    const auto path = write_temp("fs_panel_c.csv", content);
    const auto p = load_csv(path.string(), Orientation::rows_are_time);
    REQUIRE(p.series_labels.size() == 2);
    CHECK(p.series_labels[0] == "gdp");
    CHECK(p.series_labels[1] == "cpi");
}

TEST_CASE("load_csv rejects NaN cells naming the position", "[panel]") {
    const auto path = write_temp("fs_panel_nan.csv",
                                 "1,2,3,4,5,6,7,8\n"
                                 "1,2,NaN,4,5,6,7,8\n");
    CHECK_THROWS_MATCHES(load_csv(path.string(), Orientation::rows_are_series), ParseError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("row 2") &&
                             Catch::Matchers::ContainsSubstring("col 3")));
}

TEST_CASE("load_csv rejects ragged rows", "[panel]") {
    const auto path = write_temp("fs_panel_rag.csv",
                                 "1,2,3,4,5,6,7,8\n"
                                 "1,2,3\n");
    CHECK_THROWS_AS(load_csv(path.string(), Orientation::rows_are_series), FormatError);
}

TEST_CASE("load_csv enforces minimum dimensions", "[panel]") {
    const auto path = write_temp("fs_panel_dim.csv", "1,2,3\n4,5,6\n");
    CHECK_THROWS_AS(load_csv(path.string(), Orientation::rows_are_series), DimensionError);
}

TEST_CASE("load_csv accepts scientific notation", "[panel]") {
    const auto path = write_temp("fs_panel_sci.csv",
                                 "1e-3,2E4,-3.5e+2,4,5,6,7,8\n"
                                 "1,2,3,4,5,6,7,8\n");
    const auto p = load_csv(path.string(), Orientation::rows_are_series);
    CHECK(p.values(0, 0) == Catch::Approx(1e-3));
    CHECK(p.values(0, 1) == Catch::Approx(2e4));
    CHECK(p.values(0, 2) == Catch::Approx(-350.0));
}

TEST_CASE("center subtracts row means and is idempotent", "[panel]") {
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 5, 5, 5;
    const auto p = panel_from_matrix(m);
    const auto c = center(p);
    CHECK(c.centered);
    CHECK(c.values(0, 0) == Catch::Approx(-1.0));
    CHECK(c.values(0, 1) == Catch::Approx(0.0));
    CHECK(c.values(0, 2) == Catch::Approx(1.0));
    CHECK(c.values.row(1).cwiseAbs().maxCoeff() == 0.0);  // constant row -> zeros

    const auto cc = center(c);
    CHECK((cc.values - c.values).cwiseAbs().maxCoeff() <= 1e-14 * c.values.cwiseAbs().maxCoeff());
}

TEST_CASE("row sums vanish after centering within tolerance", "[panel]") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(8, 64) * 1e6;
    const auto c = center(panel_from_matrix(m));
    for (Eigen::Index i = 0; i < c.n(); ++i) {
        const double scale = c.values.row(i).cwiseAbs().maxCoeff();
        CHECK(std::abs(c.values.row(i).sum()) <= 1e-10 * static_cast<double>(c.T()) * std::max(scale, 1.0));
    }
}

TEST_CASE("save/load round-trips values bit-exactly", "[panel]") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(5, 16);
    m(2, 3) = 1.0 / 3.0;
    m(4, 15) = -1e-17;
    const auto p = panel_from_matrix(m);
    const fs::path path = fs::temp_directory_path() / "fs_panel_rt.csv";
    save_csv(p, path.string());
    const auto back = load_csv(path.string(), Orientation::rows_are_series);
    REQUIRE(back.n() == p.n());
    REQUIRE(back.T() == p.T());
    CHECK((back.values.array() == p.values.array()).all());
}

TEST_CASE("panel_from_matrix rejects non-finite values", "[panel]") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 8);
    m(1, 2) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(panel_from_matrix(m), ParseError);
}
