#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "factorseg/errors.hpp"
#include "factorseg/wavelet.hpp"

namespace factorseg {

/// Scaled CUSUM series of every retained panel row over a segment [s, e]
/// (1-based, inclusive). Column b - s holds Y^l_{s,b,e} for b = s..e-1.
/// Rows with zero scaling constant carry no information and are dropped;
/// their panel indices are recorded in excluded_rows.
struct CusumMatrix {
    Eigen::Index s = 1;
    Eigen::Index e = 1;
    Eigen::MatrixXd values;          // retained rows x (e - s)
    std::vector<int> row_index;      // panel row id per retained row
    std::vector<int> excluded_rows;  // panel rows dropped for sigma == 0
    Eigen::VectorXd sigmas;          // per retained row

    Eigen::Index rows() const { return values.rows(); }
};

inline CusumMatrix cusum(const WaveletPanel& panel, Eigen::Index s, Eigen::Index e) {
    if (s < 1 || e > panel.T() || e <= s)
        throw RangeError("cusum: need 1 <= s < e <= T, got [" + std::to_string(s) + ", " + std::to_string(e) + "]");

    CusumMatrix cm;
    cm.s = s;
    cm.e = e;
    for (Eigen::Index r = 0; r < panel.rows(); ++r) {
        if (panel.sigmas(r) > 0.0)
            cm.row_index.push_back(static_cast<int>(r));
        else
            cm.excluded_rows.push_back(static_cast<int>(r));
    }

    const Eigen::Index nrows = static_cast<Eigen::Index>(cm.row_index.size());
    const Eigen::Index len = e - s + 1;
    cm.values.resize(nrows, len - 1);
    cm.sigmas.resize(nrows);

    std::vector<double> prefix(static_cast<std::size_t>(len) + 1);
    for (Eigen::Index r = 0; r < nrows; ++r) {
        const Eigen::Index src = cm.row_index[static_cast<std::size_t>(r)];
        cm.sigmas(r) = panel.sigmas(src);
        prefix[0] = 0.0;
        for (Eigen::Index t = 0; t < len; ++t)
            prefix[static_cast<std::size_t>(t) + 1] = prefix[static_cast<std::size_t>(t)] + panel.values(src, s - 1 + t);
        const double total = prefix[static_cast<std::size_t>(len)];
        const double inv_sigma = 1.0 / cm.sigmas(r);
        for (Eigen::Index b = 0; b < len - 1; ++b) {
            const double nl = static_cast<double>(b + 1);
            const double nr = static_cast<double>(len - b - 1);
            const double left = prefix[static_cast<std::size_t>(b) + 1];
            const double weight = std::sqrt(nl * nr / static_cast<double>(len));
            cm.values(r, b) = inv_sigma * weight * (left / nl - (total - left) / nr);
        }
    }
    return cm;
}

/// Result of maximising the Double CUSUM array over split point and
/// cross-sectional count: the test statistic, its location (1-based time
/// index of the last point of the left segment) and the count m at the max.
struct DcResult {
    double statistic = 0.0;
    Eigen::Index location = 1;
    Eigen::Index m = 0;
    Eigen::VectorXd per_b;  // max-over-m profile per split point, when requested
};

/// Double CUSUM aggregation over split points b in [b_lo, b_hi] (absolute
/// 1-based indices). For each b the |CUSUM| column is sorted non-increasing
/// and contrasted between its m largest values and the rest. Ties break
/// toward the smallest b, then the smallest m. An empty matrix yields a
/// zero statistic at the left edge.
inline DcResult double_cusum(const CusumMatrix& cm, Eigen::Index b_lo, Eigen::Index b_hi,
                             bool keep_profile = false) {
    DcResult res;
    res.location = cm.s;
    if (b_lo < cm.s) b_lo = cm.s;
    if (b_hi > cm.e - 1) b_hi = cm.e - 1;
    if (keep_profile && b_hi >= b_lo) res.per_b = Eigen::VectorXd::Zero(b_hi - b_lo + 1);
    const Eigen::Index N = cm.rows();
    if (N == 0 || b_hi < b_lo) return res;

    res.location = b_lo;
    res.m = 1;
    res.statistic = -std::numeric_limits<double>::infinity();
    const double two_n = 2.0 * static_cast<double>(N);
    std::vector<double> col(static_cast<std::size_t>(N));
    for (Eigen::Index b = b_lo; b <= b_hi; ++b) {
        for (Eigen::Index r = 0; r < N; ++r) col[static_cast<std::size_t>(r)] = std::abs(cm.values(r, b - cm.s));
        std::sort(col.begin(), col.end(), std::greater<double>());
        double total = 0.0;
        for (double v : col) total += v;
        double top = 0.0;
        double best_m_val = -std::numeric_limits<double>::infinity();
        Eigen::Index best_m = 1;
        for (Eigen::Index m = 1; m <= N; ++m) {
            top += col[static_cast<std::size_t>(m - 1)];
            const double md = static_cast<double>(m);
            const double d = std::sqrt(md * (two_n - md) / two_n) *
                             (top / md - (total - top) / (two_n - md));
            if (d > best_m_val) {
                best_m_val = d;
                best_m = m;
            }
        }
        if (keep_profile) res.per_b(b - b_lo) = best_m_val;
        if (best_m_val > res.statistic) {
            res.statistic = best_m_val;
            res.location = b;
            res.m = best_m;
        }
    }
    if (!std::isfinite(res.statistic)) {
        res.statistic = 0.0;
        res.location = b_lo;
        res.m = 0;
    }
    return res;
}

inline DcResult double_cusum(const CusumMatrix& cm, bool keep_profile = false) {
    return double_cusum(cm, cm.s, cm.e - 1, keep_profile);
}

/// A change-point with its detection provenance: binary-segmentation level
/// u, node v, the test statistic and the threshold it exceeded.
struct ChangePoint {
    Eigen::Index location = 0;
    int level = 0;
    int node = 0;
    double statistic = 0.0;
    double threshold = 0.0;
};

struct ChangePointSet {
    std::vector<ChangePoint> points;  // sorted by location
    ComponentKind origin = ComponentKind::common;

    std::vector<Eigen::Index> locations() const {
        std::vector<Eigen::Index> out;
        out.reserve(points.size());
        for (const auto& p : points) out.push_back(p.location);
        return out;
    }
};

/// Trim width d_T = floor(min(log^2 T, 0.25 T^{6/7})), natural log by
/// default. The log base is configurable since the source formula leaves it
/// open.
inline Eigen::Index default_trim(Eigen::Index T, double log_base = std::numbers::e) {
    if (T < 16) throw DimensionError("default_trim: T >= 16 required");
    const double lt = std::log(static_cast<double>(T)) / std::log(log_base);
    const double d = std::min(lt * lt, 0.25 * std::pow(static_cast<double>(T), 6.0 / 7.0));
    return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(d)));
}

/// Per-node threshold source for the DCBS recursion. Returning nullopt
/// stops the search on that interval (used when a precomputed threshold
/// tree is exhausted).
using ThresholdProvider =
    std::function<std::optional<double>(int u, int v, Eigen::Index s, Eigen::Index e)>;

struct DcbsOptions {
    Eigen::Index d_T = 1;
    int max_depth = 32;
    Eigen::Index min_gap = 0;  // 0 -> d_T
};

namespace detail {

struct DcbsFrame {
    int u, v;
    Eigen::Index s, e;
    Eigen::Index trim_left, trim_right;
};

inline void dcbs_recurse(const WaveletPanel& panel, const ThresholdProvider& threshold,
                         const DcbsOptions& opt, const DcbsFrame& f, std::vector<ChangePoint>& out) {
    if (f.u > opt.max_depth) return;
    if (f.e - f.s + 1 <= 4 * opt.d_T) return;
    const Eigen::Index b_lo = f.s + f.trim_left;
    const Eigen::Index b_hi = f.e - f.trim_right;
    if (b_lo > b_hi) return;

    const auto pi = threshold(f.u, f.v, f.s, f.e);
    if (!pi) return;

    const CusumMatrix cm = cusum(panel, f.s, f.e);
    const DcResult dc = double_cusum(cm, b_lo, b_hi);
    if (!(dc.statistic > *pi)) return;

    out.push_back({dc.location, f.u, f.v, dc.statistic, *pi});
    const Eigen::Index gap = std::max(opt.d_T, opt.min_gap > 0 ? opt.min_gap : opt.d_T);
    dcbs_recurse(panel, threshold, opt, {f.u + 1, 2 * f.v - 1, f.s, dc.location, f.trim_left, gap}, out);
    dcbs_recurse(panel, threshold, opt, {f.u + 1, 2 * f.v, dc.location + 1, f.e, gap, f.trim_right}, out);
}

}  // namespace detail

/// Double CUSUM Binary Segmentation over [s0, e0] (defaults to the panel's
/// valid range). Bisection recurses while the statistic exceeds the
/// per-node threshold; split points are searched at least d_T away from the
/// segment ends.
inline ChangePointSet dcbs(const WaveletPanel& panel, const ThresholdProvider& threshold,
                           const DcbsOptions& opt, Eigen::Index s0 = 0, Eigen::Index e0 = 0) {
    if (opt.d_T < 1) throw ConfigError("dcbs: d_T >= 1 required");
    if (s0 == 0) s0 = panel.t_start;
    if (e0 == 0) e0 = panel.T();

    ChangePointSet set;
    set.origin = panel.source;
    detail::dcbs_recurse(panel, threshold, opt, {1, 1, s0, e0, opt.d_T, opt.d_T}, set.points);
    std::sort(set.points.begin(), set.points.end(),
              [](const ChangePoint& a, const ChangePoint& b) { return a.location < b.location; });
    return set;
}

}  // namespace factorseg
