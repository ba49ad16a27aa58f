#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "factorseg/factor.hpp"
#include "factorseg/segment.hpp"
#include "factorseg/simgen.hpp"
#include "oracles.hpp"

using namespace factorseg;

TEST_CASE("theta_scale arithmetic", "[simgen]") {
    ScenarioSpec spec;
    spec.n = 100;  // H = 5
    spec.q = 5;
    spec.phi = 1.0;
    spec.rho_f = 0.4;
    spec.rho = 0.5;
    spec.beta = 0.2;
    CHECK(theta_scale(spec) == Catch::Approx(3.1887755102040813).margin(1e-12));

    spec.phi = 0.0;
    CHECK(theta_scale(spec) == 0.0);

    spec.phi = 2.0;
    ScenarioSpec half = spec;
    half.phi = 1.0;
    CHECK(theta_scale(spec) == Catch::Approx(2.0 * theta_scale(half)));
}

TEST_CASE("scenario break locations use the nearest-integer bracket", "[simgen]") {
    ScenarioSpec spec;
    spec.scenario = Scenario::S1;
    spec.n = 20;
    spec.T = 200;
    spec.q = 2;
    spec.seed = 1;
    const auto ds = generate(spec);
    REQUIRE(ds.truth.size() == 1u);
    CHECK(ds.truth[0].location == 67);
    CHECK(ds.truth[0].origin == ComponentKind::common);
}

TEST_CASE("M2 truth layout at T = 500", "[simgen]") {
    ScenarioSpec spec;
    spec.scenario = Scenario::M2;
    spec.n = 20;
    spec.T = 500;
    spec.q = 2;
    spec.seed = 3;
    const auto ds = generate(spec);
    REQUIRE(ds.truth.size() == 4u);
    CHECK(ds.truth[0].location == 167);
    CHECK(ds.truth[1].location == 250);
    CHECK(ds.truth[2].location == 300);
    CHECK(ds.truth[3].location == 400);
    CHECK(ds.truth[0].origin == ComponentKind::common);
    CHECK(ds.truth[1].origin == ComponentKind::common);
    CHECK(ds.truth[2].origin == ComponentKind::idiosyncratic);
    CHECK(ds.truth[3].origin == ComponentKind::common);
}

TEST_CASE("generation is deterministic in spec + seed", "[simgen]") {
    ScenarioSpec spec;
    spec.scenario = Scenario::M1;
    spec.n = 15;
    spec.T = 120;
    spec.q = 3;
    spec.seed = 99;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK((a.panel.values.array() == b.panel.values.array()).all());
    const auto c = generate([&] {
        auto s = spec;
        s.seed = 100;
        return s;
    }());
    CHECK((a.panel.values.array() != c.panel.values.array()).any());
}

TEST_CASE("panel equals common plus scaled idiosyncratic part", "[simgen]") {
    for (auto scen : {Scenario::null_model, Scenario::S1, Scenario::S3, Scenario::S5, Scenario::M2}) {
        ScenarioSpec spec;
        spec.scenario = scen;
        spec.n = 12;
        spec.T = 100;
        spec.q = 2;
        spec.seed = 5;
        const auto ds = generate(spec);
        CHECK((ds.panel.values.array() == (ds.true_common + ds.true_idio).array()).all());
    }
}

TEST_CASE("S1 with zero magnitude degenerates to the null law", "[simgen]") {
    ScenarioSpec s1;
    s1.scenario = Scenario::S1;
    s1.n = 10;
    s1.T = 600;
    s1.q = 2;
    s1.sigma = 0.0;  // loadings shift is N(0, 0): no actual break
    s1.seed = 17;
    const auto a = generate(s1);
    REQUIRE(a.truth.size() == 1u);
    const Eigen::Index eta = a.truth[0].location;
    const double var_left = a.true_common.leftCols(eta).array().square().mean();
    const double var_right =
        a.true_common.rightCols(a.true_common.cols() - eta).array().square().mean();
    CHECK(var_left == Catch::Approx(var_right).epsilon(0.35));  // same law, sampling noise only
}

TEST_CASE("declared breaks actually move the second-moment structure", "[simgen]") {
    // Segment covariances on either side of each break differ by clearly
    // more than the within-law sampling wobble (large-T smoke run).
    const auto frob_gap = [](const Eigen::MatrixXd& comp, Eigen::Index at, Eigen::Index width) {
        const Eigen::MatrixXd a = comp.middleCols(at - width, width);
        const Eigen::MatrixXd b = comp.middleCols(at, width);
        const Eigen::MatrixXd ca = a * a.transpose() / static_cast<double>(width);
        const Eigen::MatrixXd cb = b * b.transpose() / static_cast<double>(width);
        return (ca - cb).norm() / std::max(ca.norm(), 1e-12);
    };

    ScenarioSpec spec;
    spec.n = 20;
    spec.T = 2000;
    spec.q = 2;
    spec.seed = 23;

    spec.scenario = Scenario::S1;
    auto ds = generate(spec);
    CHECK(frob_gap(ds.true_common, ds.truth[0].location, 300) > 0.25);

    spec.scenario = Scenario::S4;
    spec.varrho = 1.0;
    ds = generate(spec);
    // autocovariance at lag 1 flips sign; compare lag-1 cross moments
    const Eigen::Index eta = ds.truth[0].location;
    const auto lag1 = [&](Eigen::Index from, Eigen::Index len) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < ds.true_idio.rows(); ++i)
            for (Eigen::Index t = from; t < from + len - 1; ++t)
                acc += ds.true_idio(i, t) * ds.true_idio(i, t + 1);
        return acc / static_cast<double>(ds.true_idio.rows() * (len - 1));
    };
    const double before = lag1(eta - 600, 600);
    const double after = lag1(eta + 10, 600);
    CHECK(std::abs(before - after) > 0.1 * std::abs(before) + 1e-6);
}

TEST_CASE("baseline reducers equal brute force", "[simgen]") {
    Rng rng(88);
    for (int rep = 0; rep < 30; ++rep) {
        Eigen::MatrixXd m(1 + rng.uniform_int(0, 5), 8 + rng.uniform_int(0, 17));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index t = 0; t < m.cols(); ++t) m(r, t) = rng.normal();
        const auto panel = wavelet_panel_from_rows(m);
        const auto cm = cusum(panel, 1, m.cols());
        const auto got = baseline_reducers(cm);
        const auto want = oracles::baselines_bruteforce(cm.values, 1, 1, static_cast<int>(m.cols()) - 1);
        CHECK(got.max_stat == want.max_stat);
        CHECK(got.avg_stat == want.avg_stat);
    }
}

TEST_CASE("baseline reducers: single row makes MAX equal AVG", "[simgen]") {
    Rng rng(91);
    Eigen::MatrixXd m(1, 30);
    for (int t = 0; t < 30; ++t) m(0, t) = rng.normal();
    const auto cm = cusum(wavelet_panel_from_rows(m), 1, 30);
    const auto bl = baseline_reducers(cm);
    CHECK(bl.max_stat == bl.avg_stat);
    CHECK(bl.max_location == bl.avg_location);

    Eigen::MatrixXd z = Eigen::MatrixXd::Constant(2, 20, 1.0);
    const auto cmz = cusum(wavelet_panel_from_rows(z), 1, 20);
    const auto blz = baseline_reducers(cmz);
    CHECK(blz.max_stat == Catch::Approx(0.0).margin(1e-15));
    CHECK(blz.avg_stat == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("invalid scenario specs are rejected", "[simgen]") {
    ScenarioSpec spec;
    spec.varrho = 0.0;
    CHECK_THROWS_AS(generate(spec), ConfigError);
    spec.varrho = 1.0;
    spec.rho_f = 1.0;
    CHECK_THROWS_AS(generate(spec), ConfigError);
}
