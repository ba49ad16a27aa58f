#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "factorseg/bootstrap.hpp"
#include "factorseg/errors.hpp"
#include "factorseg/factor.hpp"
#include "factorseg/panel.hpp"
#include "factorseg/rng.hpp"
#include "factorseg/segment.hpp"
#include "factorseg/wavelet.hpp"

namespace factorseg {

/// Factor-number candidates {r_lower, ..., r_upper}: the lower end from the
/// information criterion, the upper end max(20, floor(sqrt(n ^ T))) clipped
/// below n.
struct ScreeningRange {
    int r_lower = 1;
    int r_upper = 1;
    std::vector<int> candidates;
};

inline ScreeningRange screening_range(const TimeSeriesPanel& panel, int max_candidates = 0) {
    if (panel.n() < 4 || panel.T() < 32)
        throw DimensionError("screening_range: n >= 4 and T >= 32 required");
    ScreeningRange sr;
    sr.r_upper = detail::default_r_upper(panel.n(), panel.T());
    sr.r_lower = bai_ng_factor_number(panel, sr.r_upper, IcPenalty::screen());
    if (max_candidates > 0) sr.r_upper = std::min(sr.r_upper, sr.r_lower + max_candidates - 1);
    for (int k = sr.r_lower; k <= sr.r_upper; ++k) sr.candidates.push_back(k);
    return sr;
}

/// Full pipeline configuration. Zero-valued knobs resolve to the
/// recommended defaults at run time (d_T, min_gap, J_star, tree height).
struct PipelineConfig {
    Capping capping = Capping::disabled();
    PanelMode panel_mode = PanelMode::reduced;
    Boundary boundary = Boundary::reflect;
    bool sequential_scales = false;
    int R = 200;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    Eigen::Index d_T = 0;
    Eigen::Index min_gap = 0;
    int tree_height = 0;
    int J_star = 0;
    double scale_C = 1.0;
    double scale_upsilon = 1.0;
    double segment_ic_a = 2.0;
    std::vector<double> c_grid;  // empty -> {0.50, 0.55, ..., 0.95}
    long row_cap = 10000;
    int threads = 0;
    int max_candidates = 0;  // 0 -> full screening range
    bool retain_replicates = false;
};

struct SegmentResult {
    Eigen::Index s = 1;
    Eigen::Index e = 1;
    int r_hat = 0;  // 0 when skipped
    bool skipped = false;
};

enum class BreakKind { loading_or_number, autocorrelation_only };

inline std::string to_string(BreakKind kind) {
    return kind == BreakKind::loading_or_number ? "loading_or_number_break" : "autocorrelation_only";
}

struct BreakClassification {
    Eigen::Index location = 0;
    int r_left = 0;
    int r_right = 0;
    int r_pooled = 0;
    BreakKind kind = BreakKind::autocorrelation_only;
};

struct KbcTable {
    std::vector<double> c_values;
    std::vector<std::vector<int>> k;  // one vector per segment
};

struct ScreeningEntry {
    int k = 0;
    std::vector<Eigen::Index> locations;
    bool subset_of_star = false;
};

/// Resolved configuration echoed into the report for provenance.
struct ResolvedConfig {
    PipelineConfig base;
    Eigen::Index d_T = 1;
    Eigen::Index min_gap = 1;
    int J_star = 1;
    int tree_height = 1;
    int r_lower = 1;
    int r_upper = 1;
    std::vector<int> candidates;
    std::vector<double> c_grid;
};

struct DetectionReport {
    ResolvedConfig config;
    std::vector<ScreeningEntry> screening;
    int k_star = 0;
    ChangePointSet common_points;
    ChangePointSet idio_points;
    std::vector<SegmentResult> segments;
    std::vector<BreakClassification> breaks;  // per interior common change-point
    KbcTable kbc;
};

namespace detail {

inline std::vector<std::pair<Eigen::Index, Eigen::Index>> segments_from_points(
    const std::vector<Eigen::Index>& locations, Eigen::Index T) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> segs;
    Eigen::Index start = 1;
    for (Eigen::Index loc : locations) {
        segs.emplace_back(start, loc);
        start = loc + 1;
    }
    segs.emplace_back(start, T);
    return segs;
}

inline int segment_r_max(Eigen::Index n, Eigen::Index len, int r_upper) {
    return std::max(1, std::min<int>({r_upper, static_cast<int>(n) - 1, static_cast<int>(len) - 2}));
}

}  // namespace detail

/// Segment-wise factor-number estimation with the segment-flavoured IC
/// penalty. Segments shorter than r_upper + 2 are skipped, not estimated.
inline std::vector<SegmentResult> segment_analysis(const TimeSeriesPanel& panel,
                                                   const std::vector<Eigen::Index>& common_locations,
                                                   int r_upper, double a = 2.0) {
    std::vector<SegmentResult> out;
    for (const auto& [s, e] : detail::segments_from_points(common_locations, panel.T())) {
        SegmentResult sr;
        sr.s = s;
        sr.e = e;
        const Eigen::Index len = e - s + 1;
        if (len < static_cast<Eigen::Index>(r_upper) + 2) {
            sr.skipped = true;
        } else {
            sr.r_hat = bai_ng_factor_number(panel, s, e, detail::segment_r_max(panel.n(), len, r_upper),
                                            IcPenalty::segment(a));
        }
        out.push_back(sr);
    }
    return out;
}

/// Compares left, right and pooled segment factor numbers: a break in the
/// loadings or the factor count shows up as a different pooled estimate,
/// while a pure autocorrelation change leaves all three equal.
inline BreakClassification classify_break(const TimeSeriesPanel& panel, Eigen::Index left_s,
                                          Eigen::Index left_e, Eigen::Index right_e, int r_upper,
                                          double a = 2.0) {
    const Eigen::Index right_s = left_e + 1;
    if (left_e - left_s + 1 < static_cast<Eigen::Index>(r_upper) + 2 ||
        right_e - right_s + 1 < static_cast<Eigen::Index>(r_upper) + 2)
        throw RangeError("classify_break: segment shorter than r_upper + 2");

    BreakClassification bc;
    bc.location = left_e;
    bc.r_left = bai_ng_factor_number(panel, left_s, left_e,
                                     detail::segment_r_max(panel.n(), left_e - left_s + 1, r_upper),
                                     IcPenalty::segment(a));
    bc.r_right = bai_ng_factor_number(panel, right_s, right_e,
                                      detail::segment_r_max(panel.n(), right_e - right_s + 1, r_upper),
                                      IcPenalty::segment(a));
    bc.r_pooled = bai_ng_factor_number(panel, left_s, right_e,
                                       detail::segment_r_max(panel.n(), right_e - left_s + 1, r_upper),
                                       IcPenalty::segment(a));
    bc.kind = (bc.r_left == bc.r_right && bc.r_right == bc.r_pooled) ? BreakKind::autocorrelation_only
                                                                     : BreakKind::loading_or_number;
    return bc;
}

/// k_b(c): per segment, the smallest number of leading eigenvalues of the
/// segment covariance whose share of the top-q_b spectrum exceeds c.
inline KbcTable kbc_table(const TimeSeriesPanel& panel, const std::vector<Eigen::Index>& common_locations,
                          const std::vector<double>& c_grid) {
    for (double c : c_grid)
        if (!(c > 0.0) || !(c < 1.0)) throw ConfigError("kbc_table: c values must lie in (0, 1)");
    KbcTable table;
    table.c_values = c_grid;
    for (const auto& [s, e] : detail::segments_from_points(common_locations, panel.T())) {
        const Eigen::Index len = e - s + 1;
        if (len < 2) throw RangeError("kbc_table: degenerate segment");
        const Eigen::Index q_b = std::min<Eigen::Index>(panel.n() - 1, len - 1);
        const Eigen::MatrixXd cov = sample_covariance(panel, s, e);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
        Eigen::VectorXd evals = solver.eigenvalues().reverse();  // non-increasing
        double denom = 0.0;
        for (Eigen::Index j = 0; j < q_b; ++j) denom += std::max(evals(j), 0.0);
        std::vector<int> row;
        row.reserve(c_grid.size());
        for (double c : c_grid) {
            double cum = 0.0;
            int k = static_cast<int>(q_b);
            for (Eigen::Index j = 0; j < q_b; ++j) {
                cum += std::max(evals(j), 0.0);
                if (denom > 0.0 && cum / denom > c) {
                    k = static_cast<int>(j) + 1;
                    break;
                }
            }
            row.push_back(k);
        }
        table.k.push_back(std::move(row));
    }
    return table;
}

namespace detail {

inline std::vector<double> default_c_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 9; ++i) grid.push_back(0.50 + 0.05 * i);
    return grid;
}

inline double safe_block_length(const Eigen::Ref<const Eigen::VectorXd>& series, BlockHorizon horizon) {
    try {
        return block_length_politis_white(series, horizon);
    } catch (const DegenerateInputError&) {
        return 1.0;
    }
}

inline Eigen::VectorXd common_block_lengths(const FactorDecomposition& decomp) {
    Eigen::VectorXd p(decomp.k);
    for (int j = 0; j < decomp.k; ++j)
        p(j) = safe_block_length(decomp.factors.row(j).transpose(), BlockHorizon::panel_T15);
    return p;
}

/// Pooled idiosyncratic block parameter: harmonic pooling of per-series
/// inverse block lengths.
inline double pooled_idio_block_length(const FactorDecomposition& decomp) {
    const Eigen::Index n = decomp.idiosyncratic.rows();
    double acc = 0.0;
    Eigen::Index used = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = safe_block_length(decomp.idiosyncratic.row(i).transpose(), BlockHorizon::panel_T15);
        acc += 1.0 / p;
        ++used;
    }
    if (used == 0) return 1.0;
    const double pooled = static_cast<double>(used) / acc;
    return std::clamp(pooled, 1.0 / static_cast<double>(decomp.idiosyncratic.cols()), 1.0);
}

struct StageTwoInputs {
    WtConfig wt;
    DcbsOptions opt;
    int R = 200;
    double alpha = 0.05;
    int threads = 0;
    bool retain_replicates = false;
    bool sequential = false;
    int sequential_scale_cap = 0;
};

/// Stage 2 for one component: build the transformed panel, grow the
/// bootstrap threshold tree and replay the stopping rule. In sequential
/// mode the scales are traversed one at a time over the current segments
/// until the change-point set stabilises.
inline ChangePointSet stage_two(const Eigen::MatrixXd& component, ComponentKind kind,
                                const FactorDecomposition& decomp, const Eigen::VectorXd& p_common,
                                double p_idio, const StageTwoInputs& in, std::uint64_t seed_base) {
    SbConfig sb;
    sb.R = in.R;
    sb.alpha = in.alpha;
    sb.p_common = p_common;
    sb.p_idio = p_idio;
    sb.tree_height = in.opt.max_depth;
    sb.retain_replicates = in.retain_replicates;
    sb.threads = in.threads;

    if (!in.sequential) {
        sb.seed = seed_base;
        const WaveletPanel panel = build_panel(component, kind, in.wt);
        const ThresholdTree tree = build_threshold_tree(panel, decomp, kind, sb, in.wt, in.opt);
        return replay_tree(tree, kind);
    }

    const Eigen::Index T = component.cols();
    const Eigen::Index gap = in.opt.min_gap > 0 ? std::max(in.opt.d_T, in.opt.min_gap) : in.opt.d_T;
    ChangePointSet result;
    result.origin = kind;
    const int scale_cap = in.sequential_scale_cap > 0
                              ? in.sequential_scale_cap
                              : std::max(1, static_cast<int>(std::floor(std::log2(static_cast<double>(T)))) - 3);
    for (int depth = 1; depth <= scale_cap; ++depth) {
        const int j = -depth;
        if ((Eigen::Index{1} << depth) > T) break;
        WtConfig wt_j = in.wt;
        wt_j.scales = {j};
        const WaveletPanel panel = build_panel(component, kind, wt_j);

        bool changed = false;
        const auto segs = segments_from_points(result.locations(), T);
        for (std::size_t si = 0; si < segs.size(); ++si) {
            const auto [a, b] = segs[si];
            if (b - a + 1 <= 4 * in.opt.d_T) continue;
            sb.seed = derive_seed(seed_base, {static_cast<std::uint64_t>(depth),
                                              static_cast<std::uint64_t>(si)});
            const Eigen::Index trim_left = a == 1 ? in.opt.d_T : gap;
            const Eigen::Index trim_right = b == T ? in.opt.d_T : gap;
            const ThresholdTree tree =
                build_threshold_tree(panel, decomp, kind, sb, wt_j, in.opt,
                                     std::max(a, panel.t_start), b, trim_left, trim_right);
            ChangePointSet found = replay_tree(tree, kind);
            if (!found.points.empty()) changed = true;
            for (auto& p : found.points) result.points.push_back(p);
        }
        std::sort(result.points.begin(), result.points.end(),
                  [](const ChangePoint& x, const ChangePoint& y) { return x.location < y.location; });
        if (depth > 1 && !changed) break;  // stop once a deeper scale adds nothing
    }
    return result;
}

}  // namespace detail

/// Runs the full methodology: screening over factor-number candidates,
/// change-point detection for the common components, selection of k*,
/// detection for the idiosyncratic components and segment-wise factor
/// analysis of the result.
inline DetectionReport detect(const TimeSeriesPanel& input, const PipelineConfig& cfg) {
    const TimeSeriesPanel panel = input.centered ? input : center(input);
    const Eigen::Index T = panel.T();

    DetectionReport report;
    ResolvedConfig& rc = report.config;
    rc.base = cfg;
    rc.d_T = cfg.d_T > 0 ? cfg.d_T : default_trim(T);
    rc.min_gap = cfg.min_gap > 0 ? cfg.min_gap : rc.d_T;
    rc.J_star = cfg.J_star > 0 ? cfg.J_star : scale_count(T, cfg.scale_C, cfg.scale_upsilon);
    rc.tree_height = cfg.tree_height > 0 ? cfg.tree_height : default_tree_height(T);
    rc.c_grid = cfg.c_grid.empty() ? detail::default_c_grid() : cfg.c_grid;

    const ScreeningRange sr = screening_range(panel, cfg.max_candidates);
    rc.r_lower = sr.r_lower;
    rc.r_upper = sr.r_upper;
    rc.candidates = sr.candidates;

    WtConfig wt;
    wt.J_star = rc.J_star;
    wt.mode = cfg.panel_mode;
    wt.boundary = cfg.boundary;
    wt.row_cap = cfg.row_cap;

    detail::StageTwoInputs stage;
    stage.wt = wt;
    stage.opt = {rc.d_T, rc.tree_height, rc.min_gap};
    stage.R = cfg.R;
    stage.alpha = cfg.alpha;
    stage.threads = cfg.threads;
    stage.retain_replicates = cfg.retain_replicates;
    stage.sequential = cfg.sequential_scales;

    // Stage 1 + 2 for every candidate factor count.
    std::map<int, ChangePointSet> per_k;
    std::map<int, FactorDecomposition> decomps;
    for (int k : sr.candidates) {
        FactorDecomposition dec = decompose(panel, k, cfg.capping);
        const Eigen::VectorXd p_common = detail::common_block_lengths(dec);
        per_k[k] = detail::stage_two(dec.common, ComponentKind::common, dec, p_common, 1.0, stage,
                                     derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(k)}));
        decomps.emplace(k, std::move(dec));
    }

    // Largest candidate attaining the maximum change-point count wins.
    std::size_t max_card = 0;
    for (const auto& [k, set] : per_k) max_card = std::max(max_card, set.points.size());
    int k_star = sr.candidates.front();
    for (int k : sr.candidates)
        if (per_k[k].points.size() == max_card) k_star = std::max(k_star, k);
    report.k_star = k_star;
    report.common_points = per_k[k_star];

    const auto star_locs = report.common_points.locations();
    for (int k : sr.candidates) {
        ScreeningEntry entry;
        entry.k = k;
        entry.locations = per_k[k].locations();
        entry.subset_of_star = std::all_of(entry.locations.begin(), entry.locations.end(), [&](Eigen::Index l) {
            return std::find(star_locs.begin(), star_locs.end(), l) != star_locs.end();
        });
        report.screening.push_back(std::move(entry));
    }

    // Idiosyncratic chain at k*.
    const FactorDecomposition& dec_star = decomps.at(k_star);
    const double p_idio = detail::pooled_idio_block_length(dec_star);
    report.idio_points =
        detail::stage_two(dec_star.idiosyncratic, ComponentKind::idiosyncratic, dec_star,
                          Eigen::VectorXd(), p_idio, stage,
                          derive_seed(cfg.seed, {2, static_cast<std::uint64_t>(k_star)}));

    // Post-detection segment analysis.
    report.segments = segment_analysis(panel, star_locs, sr.r_upper, cfg.segment_ic_a);
    for (std::size_t i = 0; i + 1 < report.segments.size(); ++i) {
        const auto& left = report.segments[i];
        const auto& right = report.segments[i + 1];
        if (left.skipped || right.skipped) continue;
        report.breaks.push_back(
            classify_break(panel, left.s, left.e, right.e, sr.r_upper, cfg.segment_ic_a));
    }
    report.kbc = kbc_table(panel, star_locs, rc.c_grid);
    return report;
}

}  // namespace factorseg
