#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "factorseg/rng.hpp"
#include "factorseg/wavelet.hpp"

using namespace factorseg;

TEST_CASE("haar filters at the finest scales", "[wavelet]") {
    const auto f1 = haar_filter(-1);
    REQUIRE(f1.length() == 2);
    CHECK(f1.coefficients(0) == Catch::Approx(1.0 / std::sqrt(2.0)));
    CHECK(f1.coefficients(1) == Catch::Approx(-1.0 / std::sqrt(2.0)));

    const auto f2 = haar_filter(-2);
    REQUIRE(f2.length() == 4);
    CHECK(f2.coefficients(0) == Catch::Approx(0.5));
    CHECK(f2.coefficients(1) == Catch::Approx(0.5));
    CHECK(f2.coefficients(2) == Catch::Approx(-0.5));
    CHECK(f2.coefficients(3) == Catch::Approx(-0.5));

    CHECK(haar_filter(-3).length() == 8);
    CHECK_THROWS_AS(haar_filter(0), ScaleError);
    CHECK_THROWS_AS(haar_filter(-21), ScaleError);
}

TEST_CASE("haar filters are zero-sum and unit-norm at every scale", "[wavelet]") {
    for (int j = -1; j >= -12; --j) {
        const auto f = haar_filter(j);
        CHECK(std::abs(f.coefficients.sum()) <= 1e-14);
        CHECK(std::abs(f.coefficients.squaredNorm() - 1.0) <= 1e-12);
    }
}

TEST_CASE("scale_count instances", "[wavelet]") {
    CHECK(scale_count(500) == 3);
    CHECK(scale_count(200) == 2);
    CHECK(scale_count(16) == 2);
    CHECK(scale_count(500, 1.0, 0.5) == 1);  // log2(sqrt(log2 500)) = 1.58
    CHECK(scale_count(500, 2.0, 1.0) == 6);
    CHECK_THROWS_AS(scale_count(7), DimensionError);
    CHECK_THROWS_AS(scale_count(100, 1.0, 1.5), ConfigError);
}

TEST_CASE("transform_g hand examples", "[wavelet]") {
    Eigen::VectorXd s(2);
    s << 3, 1;
    const auto g = transform_g(s, -1);
    CHECK(g(1) == Catch::Approx(std::sqrt(2.0)));  // |1-3|/sqrt(2)

    Eigen::VectorXd c = Eigen::VectorXd::Constant(20, 4.2);
    CHECK(transform_g(c, -2).cwiseAbs().maxCoeff() <= 1e-14);

    Eigen::VectorXd ramp(10);
    for (int t = 0; t < 10; ++t) ramp(t) = t + 1;
    const auto gr = transform_g(ramp, -1);
    for (int t = 1; t < 10; ++t) CHECK(gr(t) == Catch::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("transform_g rejects series shorter than the filter", "[wavelet]") {
    Eigen::VectorXd s(3);
    s << 1, 2, 3;
    CHECK_THROWS_AS(transform_g(s, -2), LengthError);
}

TEST_CASE("transform_h hand examples", "[wavelet]") {
    Eigen::VectorXd a(2), b(2);
    a << 3, 1;
    b << 0, 2;
    CHECK(transform_h(a, b, -1, 1)(1) == Catch::Approx(0.0).margin(1e-15));

    // a == b with s = -1 cancels exactly; with s = +1 doubles g
    Eigen::VectorXd x(16);
    Rng rng(4);
    for (int t = 0; t < 16; ++t) x(t) = rng.normal();
    CHECK(transform_h(x, x, -2, -1).cwiseAbs().maxCoeff() == 0.0);
    const auto doubled = transform_h(x, x, -2, 1);
    const auto g = transform_g(x, -2);
    CHECK((doubled - 2.0 * g).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("transform_h is symmetric for s = +1", "[wavelet]") {
    Rng rng(9);
    Eigen::VectorXd a(32), b(32);
    for (int t = 0; t < 32; ++t) {
        a(t) = rng.normal();
        b(t) = rng.normal();
    }
    CHECK((transform_h(a, b, -2, 1) - transform_h(b, a, -2, 1)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(transform_h(a, b.head(10), -1, 1), LengthError);
}

TEST_CASE("g invariances: level shift exact, positive scaling exact", "[wavelet]") {
    Rng rng(12);
    for (int rep = 0; rep < 25; ++rep) {
        Eigen::VectorXd x(40);
        for (int t = 0; t < 40; ++t) x(t) = rng.normal();
        const int j = -1 - static_cast<int>(rng.uniform_int(0, 2));
        const auto base = transform_g(x, j);
        const auto shifted = transform_g(x.array() + 17.5, j);
        CHECK((base - shifted).cwiseAbs().maxCoeff() <= 1e-12);
        const double c = 0.5 + rng.uniform();
        const auto scaled = transform_g(c * x, j);
        CHECK((scaled - c * base).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("choose_sign rules", "[wavelet]") {
    Eigen::VectorXd a(12);
    Rng rng(3);
    for (int t = 0; t < 12; ++t) a(t) = rng.normal();
    CHECK(choose_sign(a, a) == -1);
    CHECK(choose_sign(a, -a) == 1);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(12);
    CHECK_THROWS_AS(choose_sign(a, z), DegenerateInputError);

    // long independent Gaussian pair never errors
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd u(200), v(200);
        for (int t = 0; t < 200; ++t) {
            u(t) = rng.normal();
            v(t) = rng.normal();
        }
        const int s = choose_sign(u, v);
        CHECK((s == 1 || s == -1));
    }
}

TEST_CASE("build_panel row counts", "[wavelet]") {
    Rng rng(31);
    Eigen::MatrixXd src(3, 64);
    for (int i = 0; i < 3; ++i)
        for (int t = 0; t < 64; ++t) src(i, t) = rng.normal();

    WtConfig reduced;
    reduced.J_star = 2;
    const auto pr = build_panel(src, ComponentKind::common, reduced);
    CHECK(pr.rows() == 6);

    WtConfig full = reduced;
    full.mode = PanelMode::full;
    const auto pf = build_panel(src, ComponentKind::common, full);
    CHECK(pf.rows() == 12);

    CHECK((pr.values.array() >= 0.0).all());
    CHECK((pf.values.array() >= 0.0).all());
}

TEST_CASE("build_panel on a constant source is all zeros", "[wavelet]") {
    Eigen::MatrixXd src = Eigen::MatrixXd::Constant(4, 32, 2.5);
    WtConfig cfg;
    cfg.J_star = 2;
    cfg.mode = PanelMode::full;
    const auto p = build_panel(src, ComponentKind::idiosyncratic, cfg);
    CHECK(p.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.sigmas.array() == 0.0).all());
}

TEST_CASE("build_panel enforces the row cap", "[wavelet]") {
    Eigen::MatrixXd src = Eigen::MatrixXd::Random(40, 64);
    WtConfig cfg;
    cfg.J_star = 3;
    cfg.mode = PanelMode::full;
    cfg.row_cap = 1000;  // 3 * 40*41/2 = 2460 rows
    CHECK_THROWS_MATCHES(build_panel(src, ComponentKind::common, cfg), ResourceError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("reduced")));
}

TEST_CASE("build_panel rejects series shorter than the filter", "[wavelet]") {
    Eigen::MatrixXd src = Eigen::MatrixXd::Random(3, 8);
    WtConfig cfg;
    cfg.scales = {-4};  // filter length 16 > T = 8
    CHECK_THROWS_AS(build_panel(src, ComponentKind::common, cfg), LengthError);
}

TEST_CASE("burn-in boundary marks early columns out of scope", "[wavelet]") {
    Eigen::MatrixXd src = Eigen::MatrixXd::Random(3, 64);
    WtConfig cfg;
    cfg.J_star = 3;
    cfg.boundary = Boundary::burn_in;
    const auto p = build_panel(src, ComponentKind::common, cfg);
    CHECK(p.t_start == 8);  // longest filter at scale -3
}

TEST_CASE("scale-shift panel has distinct segment means of g at scale -1", "[wavelet]") {
    // variance shift: sd 1 then sd 3; the mean |difference| changes across
    // the break (the Monte-Carlo face of the piecewise-constant signal).
    Rng rng(77);
    int hits = 0;
    for (int rep = 0; rep < 30; ++rep) {
        Eigen::VectorXd x(400);
        for (int t = 0; t < 400; ++t) x(t) = (t < 200 ? 1.0 : 3.0) * rng.normal();
        const auto g = transform_g(x, -1);
        const double m1 = g.segment(1, 198).mean();
        const double m2 = g.segment(201, 198).mean();
        if (m2 > 2.0 * m1) ++hits;
    }
    CHECK(hits >= 27);
}
