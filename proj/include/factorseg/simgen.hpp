#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "factorseg/errors.hpp"
#include "factorseg/panel.hpp"
#include "factorseg/rng.hpp"
#include "factorseg/segment.hpp"
#include "factorseg/wavelet.hpp"

namespace factorseg {

/// Simulation designs: a stationary q-factor base model with a single
/// structural break (S1-S5), two multiple-break designs (M1, M2) and a
/// break-free null.
enum class Scenario { null_model, S1, S2, S3, S4, S5, M1, M2 };

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::null_model: return "null";
        case Scenario::S1: return "S1";
        case Scenario::S2: return "S2";
        case Scenario::S3: return "S3";
        case Scenario::S4: return "S4";
        case Scenario::S5: return "S5";
        case Scenario::M1: return "M1";
        case Scenario::M2: return "M2";
    }
    return "?";
}

inline Scenario scenario_from_string(const std::string& s) {
    if (s == "null") return Scenario::null_model;
    if (s == "S1") return Scenario::S1;
    if (s == "S2") return Scenario::S2;
    if (s == "S3") return Scenario::S3;
    if (s == "S4") return Scenario::S4;
    if (s == "S5") return Scenario::S5;
    if (s == "M1") return Scenario::M1;
    if (s == "M2") return Scenario::M2;
    throw ConfigError("unknown scenario '" + s + "'");
}

struct ScenarioSpec {
    Scenario scenario = Scenario::null_model;
    Eigen::Index n = 100;
    Eigen::Index T = 200;
    int q = 5;             // base factor count
    double phi = 1.0;      // idiosyncratic/common variance ratio control
    double sigma = std::sqrt(2.0);  // break magnitude
    double varrho = 1.0;   // affected fraction
    double rho_f = 0.4;    // leading factor AR parameter
    double rho = 0.5;      // half-width of the idiosyncratic AR distribution
    double beta = 0.2;     // cross-sectional MA coefficient magnitude
    std::uint64_t seed = 0;
    int burn_in = 100;
    Eigen::Index break_at = 0;  // S1-S5 break location; 0 -> [T/3]

    // M1 is parameterised: loadings and per-break variance multipliers may
    // be supplied; synthetic defaults are used otherwise.
    Eigen::MatrixXd m1_loadings;
    std::vector<double> m1_factor_jumps;  // per factor
    std::vector<double> m1_idio_jumps;    // per series

    void validate() const {
        if (n < 2 || T < 16) throw ConfigError("scenario: n >= 2 and T >= 16 required");
        if (q < 1) throw ConfigError("scenario: q >= 1 required");
        if (!(phi >= 0.0)) throw ConfigError("scenario: phi >= 0 required");
        if (!(varrho > 0.0) || varrho > 1.0) throw ConfigError("scenario: varrho in (0, 1] required");
        if (std::abs(rho_f) >= 1.0) throw ConfigError("scenario: |rho_f| < 1 required");
    }
};

struct TruthPoint {
    Eigen::Index location = 0;
    ComponentKind origin = ComponentKind::common;
    std::string kind;
};

/// Generated dataset with ground truth: panel == true_common + true_idio
/// entrywise (true_idio already carries the sqrt(theta) scaling).
struct GeneratedDataset {
    TimeSeriesPanel panel;
    Eigen::MatrixXd true_common;
    Eigen::MatrixXd true_idio;
    std::vector<TruthPoint> truth;
    double theta = 1.0;
};

namespace detail {

/// Bracket rule for scenario break locations: the nearest integer, which
/// reproduces [T/3] = 67 at T = 200.
inline Eigen::Index bracket(double x) { return static_cast<Eigen::Index>(std::llround(x)); }

inline Eigen::Index cross_bandwidth(Eigen::Index n) {
    const auto h = static_cast<Eigen::Index>(std::floor(static_cast<double>(n) / 20.0));
    return std::clamp<Eigen::Index>(h, 1, 10);
}

inline std::vector<Eigen::Index> draw_subset(Eigen::Index n, double varrho, Rng& rng) {
    const auto size = std::clamp<Eigen::Index>(bracket(varrho * static_cast<double>(n)), 1, n);
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = 0; i < size; ++i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(i, n - 1));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(size));
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace detail

/// Idiosyncratic scaling theta = phi * q / (1 - rho_f^2) * (1 - rho^2) / (1 + 2 H beta^2),
/// which equalises the average variances of the common and idiosyncratic
/// parts at phi = 1.
inline double theta_scale(const ScenarioSpec& spec) {
    spec.validate();
    const double H = static_cast<double>(detail::cross_bandwidth(spec.n));
    return spec.phi * static_cast<double>(spec.q) / (1.0 - spec.rho_f * spec.rho_f) *
           (1.0 - spec.rho * spec.rho) / (1.0 + 2.0 * H * spec.beta * spec.beta);
}

namespace detail {

struct BaseDraws {
    Eigen::MatrixXd loadings;       // n x q
    Eigen::VectorXd rho_factor;     // per factor AR parameter
    Eigen::VectorXd rho_idio;       // per series AR parameter
    Eigen::VectorXd beta_i;         // per series MA coefficient, +-beta
};

inline BaseDraws base_draws(const ScenarioSpec& spec, Rng& rng) {
    BaseDraws d;
    d.loadings.resize(spec.n, spec.q);
    for (Eigen::Index i = 0; i < spec.n; ++i)
        for (int j = 0; j < spec.q; ++j) d.loadings(i, j) = rng.normal();
    d.rho_factor.resize(spec.q);
    for (int j = 0; j < spec.q; ++j) d.rho_factor(j) = spec.rho_f - 0.05 * j;
    d.rho_idio.resize(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) d.rho_idio(i) = rng.uniform(-spec.rho, spec.rho);
    d.beta_i.resize(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) d.beta_i(i) = rng.uniform() < 0.5 ? -spec.beta : spec.beta;
    return d;
}

/// AR(1) factor paths with a presample burn-in; `flip_at` (0 = never)
/// switches the sign of every AR parameter after that time.
inline Eigen::MatrixXd factor_paths(const ScenarioSpec& spec, const Eigen::VectorXd& rho_j,
                                    Eigen::Index flip_at, Rng& rng) {
    const int q = static_cast<int>(rho_j.size());
    Eigen::MatrixXd f(q, spec.T);
    for (int j = 0; j < q; ++j) {
        double prev = 0.0;
        for (int t = -spec.burn_in; t < static_cast<int>(spec.T); ++t) {
            const double ar = (flip_at > 0 && t >= static_cast<int>(flip_at)) ? -rho_j(j) : rho_j(j);
            const double cur = ar * prev + rng.normal();
            if (t >= 0) f(j, t) = cur;
            prev = cur;
        }
    }
    return f;
}

struct IdioBreak {
    Eigen::Index at = 0;  // 0 = none
    std::vector<Eigen::Index> affected;
    bool flip_ar = false;
    bool double_bandwidth = false;
};

/// Idiosyncratic panel with AR(1) dynamics and cross-sectional MA
/// spillover of bandwidth H; supports the S4 (AR sign flip) and S5
/// (bandwidth doubling) breaks.
inline Eigen::MatrixXd idio_paths(const ScenarioSpec& spec, const BaseDraws& d, const IdioBreak& brk,
                                  Rng& rng) {
    const Eigen::Index n = spec.n;
    const Eigen::Index H = cross_bandwidth(n);
    std::vector<char> hit(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i : brk.affected) hit[static_cast<std::size_t>(i)] = 1;

    Eigen::MatrixXd eps(n, spec.T);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd v(n);
    for (int t = -spec.burn_in; t < static_cast<int>(spec.T); ++t) {
        for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
        const bool post = brk.at > 0 && t >= static_cast<int>(brk.at);
        for (Eigen::Index i = 0; i < n; ++i) {
            double ar = d.rho_idio(i);
            Eigen::Index h = H;
            if (post && hit[static_cast<std::size_t>(i)]) {
                if (brk.flip_ar) ar = -ar;
                if (brk.double_bandwidth) h = std::min<Eigen::Index>(2 * H, n - 1);
            }
            double acc = ar * prev(i) + v(i);
            for (Eigen::Index k = -h; k <= h; ++k) {
                if (k == 0) continue;
                const Eigen::Index idx = i + k;
                if (idx < 0 || idx >= n) continue;
                acc += d.beta_i(i) * v(idx);
            }
            if (t >= 0) eps(i, t) = acc;
            prev(i) = acc;
        }
    }
    return eps;
}

}  // namespace detail

/// Generates a dataset for the given scenario with full ground truth.
/// Identical spec + seed reproduces the dataset bit for bit.
inline GeneratedDataset generate(const ScenarioSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, {0xFAC7u}));
    GeneratedDataset out;

    if (spec.scenario == Scenario::M1) {
        // Variance-shift design with heavy-tailed innovations. Loadings and
        // per-break variance multipliers are user-supplied or synthetic.
        const int q = spec.m1_loadings.size() > 0 ? static_cast<int>(spec.m1_loadings.cols()) : spec.q;
        Eigen::MatrixXd lambda;
        if (spec.m1_loadings.size() > 0) {
            if (spec.m1_loadings.rows() != spec.n) throw ConfigError("M1: loadings must have n rows");
            lambda = spec.m1_loadings;
        } else {
            lambda.resize(spec.n, q);
            for (Eigen::Index i = 0; i < spec.n; ++i)
                for (int j = 0; j < q; ++j) lambda(i, j) = rng.normal();
        }
        std::vector<double> fj = spec.m1_factor_jumps;
        if (fj.empty())
            for (int j = 0; j < q; ++j) fj.push_back(1.5 + 0.25 * j);
        std::vector<double> ij = spec.m1_idio_jumps;
        if (ij.empty()) ij.assign(static_cast<std::size_t>(spec.n), 2.0);
        if (static_cast<int>(fj.size()) != q || static_cast<Eigen::Index>(ij.size()) != spec.n)
            throw ConfigError("M1: jump vectors must match factor count and n");

        const Eigen::Index eta_chi1 = detail::bracket(static_cast<double>(spec.T) / 3.0);
        const Eigen::Index eta_chi2 = detail::bracket(static_cast<double>(spec.T) / 2.0);
        const Eigen::Index eta_eps1 = eta_chi2;
        const Eigen::Index eta_eps2 = detail::bracket(4.0 * static_cast<double>(spec.T) / 5.0);

        auto regime_chi = [&](Eigen::Index t) { return t < eta_chi1 ? 0 : (t < eta_chi2 ? 1 : 2); };
        auto regime_eps = [&](Eigen::Index t) { return t < eta_eps1 ? 0 : (t < eta_eps2 ? 1 : 2); };

        Eigen::MatrixXd f(q, spec.T);
        for (int j = 0; j < q; ++j)
            for (Eigen::Index t = 0; t < spec.T; ++t) {
                const int b = regime_chi(t);
                const double g = b == 0 ? 1.0 : std::pow(spec.sigma * fj[static_cast<std::size_t>(j)],
                                                         b % 2 == 1 ? -1.0 : 1.0);
                f(j, t) = g * rng.student_t(7);
            }
        Eigen::MatrixXd eps(spec.n, spec.T);
        for (Eigen::Index i = 0; i < spec.n; ++i)
            for (Eigen::Index t = 0; t < spec.T; ++t) {
                const int b = regime_eps(t);
                const double g = b == 0 ? 1.0 : std::pow(spec.sigma * ij[static_cast<std::size_t>(i)],
                                                         b % 2 == 1 ? -1.0 : 1.0);
                eps(i, t) = g * rng.student_t(7);
            }

        out.true_common = lambda * f;
        double var_chi = 0.0, var_eps = 0.0;
        for (Eigen::Index i = 0; i < spec.n; ++i) {
            var_chi += (out.true_common.row(i).array() - out.true_common.row(i).mean()).square().sum();
            var_eps += (eps.row(i).array() - eps.row(i).mean()).square().sum();
        }
        out.theta = spec.phi * (var_eps > 0.0 ? var_chi / var_eps : 1.0);
        out.true_idio = std::sqrt(out.theta) * eps;
        out.truth = {{eta_chi1, ComponentKind::common, "variance"},
                     {eta_chi2, ComponentKind::common, "variance"},
                     {eta_eps1, ComponentKind::idiosyncratic, "variance"},
                     {eta_eps2, ComponentKind::idiosyncratic, "variance"}};
    } else if (spec.scenario == Scenario::M2) {
        const Eigen::Index eta1 = detail::bracket(static_cast<double>(spec.T) / 3.0);       // loadings
        const Eigen::Index eta2 = detail::bracket(static_cast<double>(spec.T) / 2.0);       // factor AR
        const Eigen::Index eta3 = detail::bracket(3.0 * static_cast<double>(spec.T) / 5.0); // idio AR
        const Eigen::Index eta4 = detail::bracket(4.0 * static_cast<double>(spec.T) / 5.0); // new factor

        detail::BaseDraws d = detail::base_draws(spec, rng);
        const auto set1 = detail::draw_subset(spec.n, spec.varrho, rng);
        const auto set3 = detail::draw_subset(spec.n, spec.varrho, rng);
        const auto set4 = detail::draw_subset(spec.n, spec.varrho, rng);

        Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(spec.n, spec.q);
        for (Eigen::Index i : set1)
            for (int j = 0; j < spec.q; ++j) delta(i, j) = rng.normal(0.0, spec.sigma);

        const Eigen::MatrixXd f = detail::factor_paths(spec, d.rho_factor, eta2, rng);

        Eigen::VectorXd rho_new(1);
        rho_new(0) = spec.rho_f;
        const Eigen::MatrixXd f_new = detail::factor_paths(spec, rho_new, 0, rng);
        Eigen::VectorXd lambda_new = Eigen::VectorXd::Zero(spec.n);
        for (Eigen::Index i : set4) lambda_new(i) = rng.normal();

        detail::IdioBreak brk;
        brk.at = eta3;
        brk.affected = set3;
        brk.flip_ar = true;
        const Eigen::MatrixXd eps = detail::idio_paths(spec, d, brk, rng);

        out.true_common.resize(spec.n, spec.T);
        for (Eigen::Index t = 0; t < spec.T; ++t) {
            const Eigen::MatrixXd lam = t < eta1 ? d.loadings : (d.loadings + delta);
            out.true_common.col(t) = lam * f.col(t);
            if (t >= eta4) out.true_common.col(t) += std::sqrt(2.0) * lambda_new * f_new(0, t);
        }
        out.theta = theta_scale(spec);
        out.true_idio = std::sqrt(out.theta) * eps;
        out.truth = {{eta1, ComponentKind::common, "loadings"},
                     {eta2, ComponentKind::common, "factor_ar"},
                     {eta3, ComponentKind::idiosyncratic, "idio_ar"},
                     {eta4, ComponentKind::common, "new_factor"}};
    } else {
        // Single-break family (S1-S5) and the break-free null.
        const Eigen::Index eta =
            spec.scenario == Scenario::null_model
                ? 0
                : (spec.break_at > 0 ? spec.break_at : detail::bracket(static_cast<double>(spec.T) / 3.0));
        detail::BaseDraws d = detail::base_draws(spec, rng);
        const auto affected = spec.scenario == Scenario::null_model
                                  ? std::vector<Eigen::Index>{}
                                  : detail::draw_subset(spec.n, spec.varrho, rng);

        const Eigen::Index factor_flip = spec.scenario == Scenario::S2 ? eta : 0;
        const Eigen::MatrixXd f = detail::factor_paths(spec, d.rho_factor, factor_flip, rng);

        detail::IdioBreak brk;
        if (spec.scenario == Scenario::S4 || spec.scenario == Scenario::S5) {
            brk.at = eta;
            brk.affected = affected;
            brk.flip_ar = spec.scenario == Scenario::S4;
            brk.double_bandwidth = spec.scenario == Scenario::S5;
        }
        const Eigen::MatrixXd eps = detail::idio_paths(spec, d, brk, rng);

        out.true_common = d.loadings * f;
        if (spec.scenario == Scenario::S1) {
            Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(spec.n, spec.q);
            for (Eigen::Index i : affected)
                for (int j = 0; j < spec.q; ++j) delta(i, j) = rng.normal(0.0, spec.sigma);
            for (Eigen::Index t = eta; t < spec.T; ++t) out.true_common.col(t) += delta * f.col(t);
        } else if (spec.scenario == Scenario::S3) {
            Eigen::VectorXd rho_new(1);
            rho_new(0) = spec.rho_f;
            const Eigen::MatrixXd f_new = detail::factor_paths(spec, rho_new, 0, rng);
            Eigen::VectorXd lambda_new = Eigen::VectorXd::Zero(spec.n);
            for (Eigen::Index i : affected) lambda_new(i) = rng.normal(0.0, spec.sigma);
            for (Eigen::Index t = eta; t < spec.T; ++t)
                out.true_common.col(t) += lambda_new * f_new(0, t);
        }

        out.theta = theta_scale(spec);
        out.true_idio = std::sqrt(out.theta) * eps;

        switch (spec.scenario) {
            case Scenario::null_model: break;
            case Scenario::S1: out.truth = {{eta, ComponentKind::common, "loadings"}}; break;
            case Scenario::S2: out.truth = {{eta, ComponentKind::common, "factor_ar"}}; break;
            case Scenario::S3: out.truth = {{eta, ComponentKind::common, "new_factor"}}; break;
            case Scenario::S4: out.truth = {{eta, ComponentKind::idiosyncratic, "idio_ar"}}; break;
            case Scenario::S5: out.truth = {{eta, ComponentKind::idiosyncratic, "covariance"}}; break;
            default: break;
        }
    }

    out.panel = panel_from_matrix(out.true_common + out.true_idio);
    return out;
}

/// MAX and AVG aggregation of a CUSUM matrix: the comparison baselines of
/// the benchmark harness. MAX takes the largest |CUSUM| over rows and split
/// points; AVG maximises the cross-sectional mean of |CUSUM| over split
/// points.
struct BaselineStats {
    double max_stat = 0.0;
    Eigen::Index max_location = 1;
    double avg_stat = 0.0;
    Eigen::Index avg_location = 1;
};

inline BaselineStats baseline_reducers(const CusumMatrix& cm, Eigen::Index b_lo = 0, Eigen::Index b_hi = 0) {
    BaselineStats out;
    out.max_location = out.avg_location = cm.s;
    if (b_lo < cm.s) b_lo = cm.s;
    if (b_hi <= 0 || b_hi > cm.e - 1) b_hi = cm.e - 1;
    const Eigen::Index N = cm.rows();
    if (N == 0 || b_hi < b_lo) return out;

    out.max_stat = out.avg_stat = -std::numeric_limits<double>::infinity();
    for (Eigen::Index b = b_lo; b <= b_hi; ++b) {
        double col_max = 0.0;
        double col_sum = 0.0;
        for (Eigen::Index r = 0; r < N; ++r) {
            const double v = std::abs(cm.values(r, b - cm.s));
            col_max = std::max(col_max, v);
            col_sum += v;
        }
        if (col_max > out.max_stat) {
            out.max_stat = col_max;
            out.max_location = b;
        }
        const double col_avg = col_sum / static_cast<double>(N);
        if (col_avg > out.avg_stat) {
            out.avg_stat = col_avg;
            out.avg_location = b;
        }
    }
    return out;
}

}  // namespace factorseg
