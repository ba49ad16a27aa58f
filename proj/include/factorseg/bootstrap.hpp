#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "factorseg/errors.hpp"
#include "factorseg/factor.hpp"
#include "factorseg/parallel.hpp"
#include "factorseg/rng.hpp"
#include "factorseg/segment.hpp"
#include "factorseg/wavelet.hpp"

namespace factorseg {

/// Stationary bootstrap configuration. p values are inverse mean block
/// lengths: one per estimated factor for the common components, a single
/// pooled value for the idiosyncratic ones.
struct SbConfig {
    int R = 200;
    double alpha = 0.05;
    Eigen::VectorXd p_common;  // length k
    double p_idio = 1.0;
    std::uint64_t seed = 0;
    int tree_height = 1;
    bool retain_replicates = false;
    int threads = 0;

    void validate() const {
        if (R < 1) throw ConfigError("bootstrap: R >= 1 required");
        if (!(alpha > 0.0) || !(alpha < 1.0)) throw ConfigError("bootstrap: alpha in (0, 1) required");
        for (Eigen::Index j = 0; j < p_common.size(); ++j)
            if (!(p_common(j) > 0.0) || p_common(j) > 1.0)
                throw ConfigError("bootstrap: block parameters must lie in (0, 1]");
        if (!(p_idio > 0.0) || p_idio > 1.0) throw ConfigError("bootstrap: block parameters must lie in (0, 1]");
        if (tree_height < 1) throw ConfigError("bootstrap: tree height >= 1 required");
    }
};

/// Column index sequence of one stationary-bootstrap draw: geometric block
/// lengths, uniform block starts, periodic extension, truncated to T.
inline std::vector<Eigen::Index> sb_indices(Eigen::Index T, double p, Rng& rng) {
    if (!(p > 0.0) || p > 1.0) throw ConfigError("sb_indices: p in (0, 1] required");
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(T));
    while (static_cast<Eigen::Index>(idx.size()) < T) {
        const Eigen::Index start = static_cast<Eigen::Index>(rng.uniform_int(0, T - 1));
        std::int64_t len = rng.geometric(p);
        for (std::int64_t l = 0; l < len && static_cast<Eigen::Index>(idx.size()) < T; ++l)
            idx.push_back((start + l) % T);
    }
    return idx;
}

/// Resamples all m rows jointly: every row uses the same block index
/// sequence, preserving cross-sectional dependence.
inline Eigen::MatrixXd sb_resample(const Eigen::Ref<const Eigen::MatrixXd>& block, double p, Rng& rng) {
    const Eigen::Index T = block.cols();
    const auto idx = sb_indices(T, p, rng);
    Eigen::MatrixXd out(block.rows(), T);
    for (Eigen::Index t = 0; t < T; ++t) out.col(t) = block.col(idx[static_cast<std::size_t>(t)]);
    return out;
}

enum class BlockHorizon { mean_T13, panel_T15 };

namespace detail {

/// Trapezoidal taper: 1 on [0, 1/2), 2(1 - |z|) on [1/2, 1], 0 beyond.
inline double trapezoid_taper(double z) {
    const double az = std::abs(z);
    if (az < 0.5) return 1.0;
    if (az <= 1.0) return 2.0 * (1.0 - az);
    return 0.0;
}

/// Automatic bandwidth from the autocorrelation structure: twice the
/// smallest lag after which a run of sample autocorrelations stays inside
/// the +-2 sqrt(log10(T) / T) band.
inline Eigen::Index auto_bandwidth(const Eigen::VectorXd& acov, Eigen::Index T) {
    const double denom = acov(0);
    const double bound = 2.0 * std::sqrt(std::log10(static_cast<double>(T)) / static_cast<double>(T));
    const Eigen::Index k_run = std::max<Eigen::Index>(
        5, static_cast<Eigen::Index>(std::ceil(std::log10(static_cast<double>(T)))));
    const Eigen::Index m_max = acov.size() - 1;

    for (Eigen::Index m = 0; m + 1 <= m_max; ++m) {
        bool quiet = true;
        for (Eigen::Index k = m + 1; k <= std::min(m + k_run, m_max); ++k) {
            if (std::abs(acov(k) / denom) > bound) {
                quiet = false;
                break;
            }
        }
        if (quiet) return 2 * m;
    }
    return 2 * m_max;
}

}  // namespace detail

/// Inverse mean block length for the stationary bootstrap of one series,
/// after Politis-White: p^{-1} = (G^2 / g(0)^2)^{1/3} T^{1/3}, with the
/// T^{1/5} variant used for panel-wide resampling. The result is clamped
/// into (1/T, 1].
inline double block_length_politis_white(const Eigen::Ref<const Eigen::VectorXd>& series,
                                         BlockHorizon horizon) {
    const Eigen::Index T = series.size();
    if (T < 20) throw DimensionError("block_length_politis_white: T >= 20 required");
    const double mean = series.mean();
    const Eigen::Index lag_cap = std::min<Eigen::Index>(
        T - 1, static_cast<Eigen::Index>(std::ceil(std::sqrt(static_cast<double>(T)))) + 10);
    Eigen::VectorXd acov(lag_cap + 1);
    for (Eigen::Index k = 0; k <= lag_cap; ++k) {
        double acc = 0.0;
        for (Eigen::Index t = 0; t < T - k; ++t) acc += (series(t) - mean) * (series(t + k) - mean);
        acov(k) = acc / static_cast<double>(T);
    }
    if (!(acov(0) > 0.0)) throw DegenerateInputError("block_length_politis_white: constant series");

    const Eigen::Index bandwidth = detail::auto_bandwidth(acov, T);
    double g_hat = 0.0;  // sum over |k| <= bandwidth of taper * |k| * R(k)
    double g0 = 0.0;     // sum of taper * R(k)
    for (Eigen::Index k = -bandwidth; k <= bandwidth; ++k) {
        const Eigen::Index ak = std::abs(k);
        if (ak > lag_cap) continue;
        const double w = detail::trapezoid_taper(bandwidth == 0 ? 0.0
                                                                : static_cast<double>(k) /
                                                                      static_cast<double>(bandwidth));
        g_hat += w * static_cast<double>(ak) * acov(ak);
        g0 += w * acov(ak);
    }

    const double t_pow = horizon == BlockHorizon::mean_T13
                             ? std::cbrt(static_cast<double>(T))
                             : std::pow(static_cast<double>(T), 0.2);
    const double ratio = g0 != 0.0 ? (g_hat * g_hat) / (g0 * g0) : 0.0;
    const double p_inv = std::cbrt(ratio) * t_pow;
    double p = p_inv > 1.0 ? 1.0 / p_inv : 1.0;
    p = std::clamp(p, 1.0 / static_cast<double>(T), 1.0);
    return p;
}

/// Default height of the bootstrap interval tree: floor(log2(T) / 2).
inline int default_tree_height(Eigen::Index T) {
    if (T < 2) throw DimensionError("default_tree_height: T >= 2 required");
    return std::max(1, static_cast<int>(std::floor(std::log2(static_cast<double>(T)) / 2.0)));
}

/// One node of the precomputed binary tree of DCBS intervals: the observed
/// statistic and split location, plus the bootstrap threshold once filled.
struct TreeNode {
    int u = 1;
    int v = 1;
    Eigen::Index s = 1;
    Eigen::Index e = 1;
    Eigen::Index trim_left = 1;
    Eigen::Index trim_right = 1;
    double stat = 0.0;
    Eigen::Index location = 1;
    Eigen::Index m = 0;
    double threshold = 0.0;
    std::vector<double> replicate_stats;  // retained only on request
};

struct ThresholdTree {
    std::vector<TreeNode> nodes;  // breadth-first: (1,1), (2,1), (2,2), ...
    int height = 1;

    const TreeNode* find(int u, int v) const {
        for (const auto& n : nodes)
            if (n.u == u && n.v == v) return &n;
        return nullptr;
    }
};

namespace detail {

/// Linear-interpolation sample quantile of a sorted vector (the convention
/// of standard statistical software).
inline double interpolated_quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = (static_cast<double>(n) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

/// Grows the untested DCBS tree from the observed panel: every eligible
/// interval is split at its DC argmax regardless of any threshold.
inline void grow_tree(const WaveletPanel& panel, const DcbsOptions& opt, int height, DcbsFrame f,
                      std::vector<TreeNode>& nodes) {
    if (f.u > height) return;
    if (f.e - f.s + 1 <= 4 * opt.d_T) return;
    const Eigen::Index b_lo = f.s + f.trim_left;
    const Eigen::Index b_hi = f.e - f.trim_right;
    if (b_lo > b_hi) return;

    const CusumMatrix cm = cusum(panel, f.s, f.e);
    const DcResult dc = double_cusum(cm, b_lo, b_hi);
    TreeNode node;
    node.u = f.u;
    node.v = f.v;
    node.s = f.s;
    node.e = f.e;
    node.trim_left = f.trim_left;
    node.trim_right = f.trim_right;
    node.stat = dc.statistic;
    node.location = dc.location;
    node.m = dc.m;
    nodes.push_back(node);

    const Eigen::Index gap = std::max(opt.d_T, opt.min_gap > 0 ? opt.min_gap : opt.d_T);
    grow_tree(panel, opt, height, {f.u + 1, 2 * f.v - 1, f.s, dc.location, f.trim_left, gap}, nodes);
    grow_tree(panel, opt, height, {f.u + 1, 2 * f.v, dc.location + 1, f.e, gap, f.trim_right}, nodes);
}

}  // namespace detail

/// One stationary-bootstrap draw of the estimated component: factors are
/// resampled independently per series (they are uncorrelated by
/// construction), the idiosyncratic n-vector jointly.
inline Eigen::MatrixXd resample_component(const FactorDecomposition& decomp, ComponentKind which,
                                          const SbConfig& cfg, std::uint64_t replicate_seed) {
    if (which == ComponentKind::common) {
        if (cfg.p_common.size() != decomp.k)
            throw ConfigError("bootstrap: p_common must have one entry per factor");
        const Eigen::Index T = decomp.factors.cols();
        Eigen::MatrixXd f_star(decomp.k, T);
        for (int j = 0; j < decomp.k; ++j) {
            Rng rng(derive_seed(replicate_seed, {static_cast<std::uint64_t>(j) + 1}));
            f_star.row(j) = sb_resample(decomp.factors.row(j), cfg.p_common(j), rng);
        }
        return decomp.loadings * f_star;
    }
    Rng rng(derive_seed(replicate_seed, {0}));
    return sb_resample(decomp.idiosyncratic, cfg.p_idio, rng);
}

/// One bootstrap replicate of the DC test statistic over [s, e], computed
/// on the wavelet panel of the resampled component with the same transform
/// settings as the main run.
inline double bootstrap_statistic(const FactorDecomposition& decomp, ComponentKind which, Eigen::Index s,
                                  Eigen::Index e, const SbConfig& cfg, const WtConfig& wt,
                                  Eigen::Index d_T, std::uint64_t replicate_seed) {
    const Eigen::MatrixXd component = resample_component(decomp, which, cfg, replicate_seed);
    const WaveletPanel panel = build_panel(component, which, wt);
    if (e <= s) throw RangeError("bootstrap_statistic: need s < e");
    const CusumMatrix cm = cusum(panel, s, e);
    return double_cusum(cm, s + d_T, e - d_T).statistic;
}

/// Grows the binary tree of DCBS intervals from the observed panel and
/// fills per-node thresholds as (1 - alpha)-quantiles of R bootstrap
/// statistics. Each replicate resamples the component once and is evaluated
/// at every node, so no replicate panel is ever stored.
inline ThresholdTree build_threshold_tree(const WaveletPanel& observed, const FactorDecomposition& decomp,
                                          ComponentKind which, const SbConfig& cfg, const WtConfig& wt,
                                          const DcbsOptions& opt, Eigen::Index s0 = 0, Eigen::Index e0 = 0,
                                          Eigen::Index root_trim_left = 0, Eigen::Index root_trim_right = 0) {
    cfg.validate();
    if (s0 == 0) s0 = observed.t_start;
    if (e0 == 0) e0 = observed.T();
    if (root_trim_left <= 0) root_trim_left = opt.d_T;
    if (root_trim_right <= 0) root_trim_right = opt.d_T;

    ThresholdTree tree;
    tree.height = cfg.tree_height;
    detail::grow_tree(observed, opt, cfg.tree_height, {1, 1, s0, e0, root_trim_left, root_trim_right},
                      tree.nodes);
    std::sort(tree.nodes.begin(), tree.nodes.end(), [](const TreeNode& a, const TreeNode& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    if (tree.nodes.empty()) return tree;

    const std::size_t n_nodes = tree.nodes.size();
    std::vector<std::vector<double>> stats(n_nodes, std::vector<double>(static_cast<std::size_t>(cfg.R)));
    parallel_for(
        cfg.R,
        [&](std::int64_t rep) {
            const std::uint64_t rep_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(rep)});
            const Eigen::MatrixXd component = resample_component(decomp, which, cfg, rep_seed);
            const WaveletPanel panel = build_panel(component, which, wt);
            for (std::size_t i = 0; i < n_nodes; ++i) {
                const TreeNode& node = tree.nodes[i];
                const CusumMatrix cm = cusum(panel, node.s, node.e);
                stats[i][static_cast<std::size_t>(rep)] =
                    double_cusum(cm, node.s + node.trim_left, node.e - node.trim_right).statistic;
            }
        },
        cfg.threads);

    for (std::size_t i = 0; i < n_nodes; ++i) {
        auto& v = stats[i];
        std::sort(v.begin(), v.end());
        tree.nodes[i].threshold = detail::interpolated_quantile(v, 1.0 - cfg.alpha);
        if (cfg.retain_replicates) tree.nodes[i].replicate_stats = std::move(v);
    }
    return tree;
}

/// Replays the stopping rule over the precomputed tree in breadth-first
/// order: descendants of non-rejected nodes are discarded, so the result is
/// exactly what the sequential binary segmentation would return.
inline ChangePointSet replay_tree(const ThresholdTree& tree, ComponentKind origin) {
    ChangePointSet out;
    out.origin = origin;
    std::vector<std::pair<int, int>> alive{{1, 1}};
    for (const auto& node : tree.nodes) {
        const bool is_alive =
            std::find(alive.begin(), alive.end(), std::make_pair(node.u, node.v)) != alive.end();
        if (!is_alive) continue;
        if (node.stat > node.threshold) {
            out.points.push_back({node.location, node.u, node.v, node.stat, node.threshold});
            alive.emplace_back(node.u + 1, 2 * node.v - 1);
            alive.emplace_back(node.u + 1, 2 * node.v);
        }
    }
    std::sort(out.points.begin(), out.points.end(),
              [](const ChangePoint& a, const ChangePoint& b) { return a.location < b.location; });
    return out;
}

}  // namespace factorseg
