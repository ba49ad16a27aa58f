#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "factorseg/errors.hpp"
#include "factorseg/panel.hpp"

namespace factorseg {

/// Top-m eigenpairs of a symmetric matrix, eigenvalues non-increasing,
/// eigenvector columns orthonormal with a deterministic sign convention.
struct EigenSystem {
    Eigen::VectorXd values;   // length m
    Eigen::MatrixXd vectors;  // n x m
};

struct CappedVectors {
    Eigen::MatrixXd vectors;                               // entrywise-clamped copy
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> active;  // true where the clamp bound
};

/// Eigenvector capping policy for the PCA estimator of the common
/// components. `disabled` (the default) leaves eigenvectors untouched;
/// `data_driven` resolves the constant so that capping only affects
/// principal components beyond the information-criterion factor count.
struct Capping {
    enum class Mode { disabled, data_driven, fixed };
    Mode mode = Mode::disabled;
    double c_w = 0.0;

    static Capping disabled() { return {}; }
    static Capping data_driven() { return {Mode::data_driven, 0.0}; }
    static Capping fixed(double c) {
        if (!(c > 0.0)) throw ConfigError("capping constant must be positive");
        return {Mode::fixed, c};
    }
};

/// Common/idiosyncratic split of a panel for a given factor count k.
/// common + idiosyncratic reconstructs the input exactly.
struct FactorDecomposition {
    int k = 0;
    Eigen::MatrixXd loadings;       // n x k
    Eigen::MatrixXd factors;        // k x T
    Eigen::MatrixXd common;         // n x T
    Eigen::MatrixXd idiosyncratic;  // n x T
    double cap_constant = std::numeric_limits<double>::infinity();
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> capping_active;  // n x k
};

/// Sample covariance (len)^{-1} sum_{t=s}^{e} x_t x_t' over a 1-based
/// inclusive interval. The panel is expected to be centered beforehand.
inline Eigen::MatrixXd sample_covariance(const TimeSeriesPanel& panel, Eigen::Index s, Eigen::Index e) {
    if (s < 1 || e > panel.T() || e < s)
        throw RangeError("covariance interval [" + std::to_string(s) + ", " + std::to_string(e) +
                         "] outside [1, " + std::to_string(panel.T()) + "]");
    const Eigen::Index len = e - s + 1;
    const auto block = panel.values.middleCols(s - 1, len);
    Eigen::MatrixXd cov = (block * block.transpose()) / static_cast<double>(len);
    cov = 0.5 * (cov + cov.transpose()).eval();
    return cov;
}

inline Eigen::MatrixXd sample_covariance(const TimeSeriesPanel& panel) {
    return sample_covariance(panel, 1, panel.T());
}

/// Top-m eigenpairs. Sign is fixed so the entry of largest magnitude in
/// each eigenvector is positive (first such entry on ties), making the
/// output deterministic across runs.
inline EigenSystem leading_eigen(const Eigen::MatrixXd& cov, Eigen::Index m) {
    const Eigen::Index n = cov.rows();
    if (cov.cols() != n) throw InputError("leading_eigen: matrix not square");
    if (m < 1 || m > n) throw DimensionError("leading_eigen: need 1 <= m <= n");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw InputError("leading_eigen: matrix not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (cov + cov.transpose()));
    if (solver.info() != Eigen::Success) throw InputError("leading_eigen: eigensolver failed");

    EigenSystem out;
    out.values.resize(m);
    out.vectors.resize(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index src = n - 1 - j;  // solver sorts ascending
        out.values(j) = solver.eigenvalues()(src);
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0.0) v = -v;
        out.vectors.col(j) = v;
    }
    return out;
}

/// Entrywise clamp of eigenvector entries to +-c_w/sqrt(n), preserving sign.
inline CappedVectors cap_eigenvectors(const EigenSystem& eig, double c_w) {
    if (!(c_w > 0.0)) throw ConfigError("cap_eigenvectors: c_w must be positive");
    const Eigen::Index n = eig.vectors.rows();
    const double bound = c_w / std::sqrt(static_cast<double>(n));
    CappedVectors out;
    out.vectors = eig.vectors;
    out.active = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, eig.vectors.cols(), false);
    for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double& w = out.vectors(i, j);
            if (std::abs(w) > bound) {
                w = (w > 0.0 ? bound : -bound);
                out.active(i, j) = true;
            }
        }
    }
    return out;
}

/// Information-criterion penalty for factor-number estimation. `screen` is
/// the classic (n ^ T)^{-1} log(n ^ T) form used when setting up the
/// screening range; `segment` is the (n + sqrt(T)) / (n sqrt(T)) log^a(n ^ sqrt(T))
/// form used on detected segments, with a > 0 configurable.
struct IcPenalty {
    enum class Kind { screen, segment };
    Kind kind = Kind::screen;
    double a = 2.0;

    static IcPenalty screen() { return {Kind::screen, 0.0}; }
    static IcPenalty segment(double a = 2.0) { return {Kind::segment, a}; }
};

namespace detail {

inline double ic_penalty_value(const IcPenalty& pen, Eigen::Index n, Eigen::Index len) {
    const double nd = static_cast<double>(n);
    const double td = static_cast<double>(len);
    if (pen.kind == IcPenalty::Kind::screen) {
        const double m = std::min(nd, td);
        return std::log(m) / m;
    }
    const double rt = std::sqrt(td);
    return (nd + rt) / (nd * rt) * std::pow(std::log(std::min(nd, rt)), pen.a);
}

}  // namespace detail

/// Bai-Ng style factor-number estimate over a 1-based time interval:
/// argmin over k in {1..r_max} of log V(k) + k p(n, len), where V(k) is the
/// mean squared residual of the k-factor PCA fit on the interval.
inline int bai_ng_factor_number(const TimeSeriesPanel& panel, Eigen::Index s, Eigen::Index e, int r_max,
                                IcPenalty penalty = IcPenalty::screen()) {
    const Eigen::Index len = e - s + 1;
    if (len < 2) throw RangeError("bai_ng_factor_number: interval too short");
    if (r_max < 1 || r_max >= std::min<Eigen::Index>(panel.n(), len))
        throw DimensionError("bai_ng_factor_number: need 1 <= r_max < n ^ len");

    const Eigen::MatrixXd cov = sample_covariance(panel, s, e);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd evals = solver.eigenvalues();  // ascending
    const double trace = evals.sum();
    const double p = detail::ic_penalty_value(penalty, panel.n(), len);
    // Residuals at machine-noise level relative to the panel scale count as
    // zero, so exactly low-rank panels tie at their true rank instead of
    // chasing rounding noise down the log scale.
    const double floor = std::max(1e-15 * std::abs(trace) / static_cast<double>(panel.n()),
                                  std::numeric_limits<double>::min());

    int best_k = 1;
    double best_ic = std::numeric_limits<double>::infinity();
    double removed = 0.0;
    for (int k = 1; k <= r_max; ++k) {
        removed += evals(panel.n() - k);
        const double v = std::max((trace - removed) / static_cast<double>(panel.n()), floor);
        const double ic = std::log(v) + k * p;
        if (ic < best_ic) {
            best_ic = ic;
            best_k = k;
        }
    }
    return best_k;
}

inline int bai_ng_factor_number(const TimeSeriesPanel& panel, int r_max,
                                IcPenalty penalty = IcPenalty::screen()) {
    return bai_ng_factor_number(panel, 1, panel.T(), r_max, penalty);
}

namespace detail {

/// Default upper end of the screening range (also used when resolving a
/// data-driven capping constant).
inline int default_r_upper(Eigen::Index n, Eigen::Index T) {
    const auto nt = static_cast<double>(std::min(n, T));
    int r = std::max(20, static_cast<int>(std::floor(std::sqrt(nt))));
    r = std::min<int>(r, static_cast<int>(n) - 1);
    r = std::min<int>(r, static_cast<int>(T) - 2);
    return std::max(r, 1);
}

}  // namespace detail

/// PCA split of the panel into common and idiosyncratic components using k
/// (possibly capped) leading eigenvectors of the sample covariance.
inline FactorDecomposition decompose(const TimeSeriesPanel& panel, int k, Capping cap = Capping::disabled()) {
    const Eigen::Index n = panel.n();
    if (k < 1 || k >= n) throw DimensionError("decompose: need 1 <= k < n");

    const Eigen::MatrixXd cov = sample_covariance(panel);

    int r_lower = 0;
    int m = k;
    if (cap.mode == Capping::Mode::data_driven) {
        r_lower = bai_ng_factor_number(panel, detail::default_r_upper(n, panel.T()), IcPenalty::screen());
        m = std::max(k, r_lower);
    }
    EigenSystem eig = leading_eigen(cov, m);

    FactorDecomposition out;
    out.k = k;
    double c_w = std::numeric_limits<double>::infinity();
    if (cap.mode == Capping::Mode::fixed) {
        c_w = cap.c_w;
    } else if (cap.mode == Capping::Mode::data_driven) {
        c_w = std::sqrt(static_cast<double>(n)) * eig.vectors.leftCols(r_lower).cwiseAbs().maxCoeff();
    }
    out.cap_constant = c_w;

    Eigen::MatrixXd w = eig.vectors.leftCols(k);
    if (std::isfinite(c_w)) {
        EigenSystem head{eig.values.head(k), w};
        CappedVectors capped = cap_eigenvectors(head, c_w);
        w = std::move(capped.vectors);
        out.capping_active = std::move(capped.active);
    } else {
        out.capping_active = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, k, false);
    }

    const double sqrt_n = std::sqrt(static_cast<double>(n));
    out.loadings = sqrt_n * w;
    out.factors = (w.transpose() * panel.values) / sqrt_n;  // k x T
    out.common = w * (w.transpose() * panel.values);
    out.idiosyncratic = panel.values - out.common;
    return out;
}

}  // namespace factorseg
