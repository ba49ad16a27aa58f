#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "factorseg/errors.hpp"

namespace factorseg {

enum class ComponentKind { common, idiosyncratic };

/// Haar filter at negative scale j: length 2^{-j}, first half 2^{j/2},
/// second half -2^{j/2}. Zero-sum and unit-norm by construction.
struct HaarFilter {
    int scale = -1;
    Eigen::VectorXd coefficients;

    Eigen::Index length() const { return coefficients.size(); }
};

inline HaarFilter haar_filter(int j) {
    if (j >= 0) throw ScaleError("haar_filter: scale must be negative");
    if (j < -20) throw ScaleError("haar_filter: scale below supported range");
    const Eigen::Index len = Eigen::Index{1} << (-j);
    const double amp = std::pow(2.0, 0.5 * j);
    HaarFilter f;
    f.scale = j;
    f.coefficients.resize(len);
    f.coefficients.head(len / 2).setConstant(amp);
    f.coefficients.tail(len / 2).setConstant(-amp);
    return f;
}

/// Number of finest wavelet scales to use: floor(C * log2(log2(T)^upsilon))
/// with the recommended defaults C = 1, upsilon = 1.
inline int scale_count(Eigen::Index T, double C = 1.0, double upsilon = 1.0) {
    if (T < 8) throw DimensionError("scale_count: T >= 8 required");
    if (!(C > 0.0) || !(upsilon > 0.0) || upsilon > 1.0)
        throw ConfigError("scale_count: need C > 0 and upsilon in (0, 1]");
    const double inner = std::pow(std::log2(static_cast<double>(T)), upsilon);
    int j = static_cast<int>(std::floor(C * std::log2(inner)));
    return std::clamp(j, 1, 20);
}

enum class PanelMode { reduced, full };

/// Left-boundary handling for wavelet coefficients at t < L_j: `reflect`
/// mirrors the series at the edge so every column is defined; `burn_in`
/// leaves the first L_j - 1 columns out of CUSUM computations instead.
enum class Boundary { reflect, burn_in };

namespace detail {

/// Signed wavelet coefficients d_t = sum_l series[t-l] psi_l for all t,
/// with reflected indices at the left boundary.
inline Eigen::VectorXd haar_coefficients(const Eigen::Ref<const Eigen::VectorXd>& series, const HaarFilter& f) {
    const Eigen::Index T = series.size();
    const Eigen::Index L = f.length();
    if (T < L) throw LengthError("wavelet: series shorter than filter");
    Eigen::VectorXd d(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        double acc = 0.0;
        for (Eigen::Index l = 0; l < L; ++l) {
            Eigen::Index q = t - l;
            if (q < 0) q = -q - 1;  // reflect
            acc += series(q) * f.coefficients(l);
        }
        d(t) = acc;
    }
    return d;
}

}  // namespace detail

/// |wavelet coefficient| series of one input series at scale j.
inline Eigen::VectorXd transform_g(const Eigen::Ref<const Eigen::VectorXd>& series, int j) {
    return detail::haar_coefficients(series, haar_filter(j)).cwiseAbs();
}

/// |d_a + s * d_b| with un-absolute wavelet coefficients; the cross-series
/// analogue of transform_g.
inline Eigen::VectorXd transform_h(const Eigen::Ref<const Eigen::VectorXd>& a,
                                   const Eigen::Ref<const Eigen::VectorXd>& b, int j, int sign) {
    if (a.size() != b.size()) throw LengthError("transform_h: series lengths differ");
    if (sign != 1 && sign != -1) throw ConfigError("transform_h: sign must be +-1");
    const HaarFilter f = haar_filter(j);
    const Eigen::VectorXd da = detail::haar_coefficients(a, f);
    const Eigen::VectorXd db = detail::haar_coefficients(b, f);
    return (da + static_cast<double>(sign) * db).cwiseAbs();
}

/// -sign of the sample correlation of the two series; +1 on a zero
/// correlation. Zero-variance inputs are rejected.
inline int choose_sign(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (a.size() != b.size()) throw LengthError("choose_sign: series lengths differ");
    const Eigen::Index T = a.size();
    const double ma = a.mean(), mb = b.mean();
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        const double xa = a(t) - ma, xb = b(t) - mb;
        saa += xa * xa;
        sbb += xb * xb;
        sab += xa * xb;
    }
    if (saa <= 0.0 || sbb <= 0.0) throw DegenerateInputError("choose_sign: zero-variance input");
    if (sab > 0.0) return -1;
    if (sab < 0.0) return 1;
    return 1;
}

/// One row of a WaveletPanel: scale, source series (pair for cross rows)
/// and the sign used by cross rows.
struct WaveletRowMeta {
    int scale = -1;
    int i = 0;       // 0-based series index
    int i2 = -1;     // second series for cross rows, -1 for auto rows
    int sign = 1;

    bool is_cross() const { return i2 >= 0; }
};

struct WtConfig {
    int J_star = 1;
    PanelMode mode = PanelMode::reduced;
    Boundary boundary = Boundary::reflect;
    long row_cap = 10000;
    std::vector<int> scales;  // explicit scale subset; empty -> {-1, ..., -J_star}

    std::vector<int> resolved_scales() const {
        if (!scales.empty()) return scales;
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(J_star));
        for (int j = -1; j >= -J_star; --j) out.push_back(j);
        return out;
    }
};

/// Panel of non-negative wavelet-transformed series: the Stage 2 input.
/// sigmas are the row scaling constants sqrt(mean y^2), computed once over
/// the whole series and cached here.
struct WaveletPanel {
    Eigen::MatrixXd values;  // rows x T
    std::vector<WaveletRowMeta> row_meta;
    ComponentKind source = ComponentKind::common;
    int J_star = 1;
    PanelMode mode = PanelMode::reduced;
    Boundary boundary = Boundary::reflect;
    Eigen::Index t_start = 1;  // first CUSUM-eligible column, 1-based
    Eigen::VectorXd sigmas;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index T() const { return values.cols(); }
};

namespace detail {

inline int sign_or_default(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b) {
    try {
        return choose_sign(a, b);
    } catch (const DegenerateInputError&) {
        return 1;
    }
}

inline void fill_sigmas(WaveletPanel& panel) {
    const Eigen::Index T = panel.T();
    panel.sigmas.resize(panel.rows());
    for (Eigen::Index r = 0; r < panel.rows(); ++r) {
        Eigen::Index from = 0;
        if (panel.boundary == Boundary::burn_in) {
            const Eigen::Index L = Eigen::Index{1} << (-panel.row_meta[static_cast<std::size_t>(r)].scale);
            from = L - 1;
        }
        const Eigen::Index cnt = T - from;
        panel.sigmas(r) = std::sqrt(panel.values.row(r).tail(cnt).squaredNorm() / static_cast<double>(cnt));
    }
}

}  // namespace detail

/// Builds the Stage 2 panel from an n x T component matrix. Reduced mode
/// emits only the per-series g_j rows; full mode adds the h_j cross rows
/// for i < i' with data-driven signs. Rows are grouped by scale, then by
/// series index.
inline WaveletPanel build_panel(const Eigen::Ref<const Eigen::MatrixXd>& source, ComponentKind kind,
                                const WtConfig& cfg) {
    const Eigen::Index n = source.rows();
    const Eigen::Index T = source.cols();
    const std::vector<int> scales = cfg.resolved_scales();
    if (scales.empty()) throw ConfigError("build_panel: at least one scale required");

    const long per_scale = cfg.mode == PanelMode::reduced
                               ? static_cast<long>(n)
                               : static_cast<long>(n) * (static_cast<long>(n) + 1) / 2;
    const long total_rows = per_scale * static_cast<long>(scales.size());
    if (total_rows > cfg.row_cap)
        throw ResourceError("build_panel: " + std::to_string(total_rows) + " rows exceed the row cap of " +
                            std::to_string(cfg.row_cap) + "; use reduced mode or raise the cap");

    WaveletPanel panel;
    panel.source = kind;
    panel.mode = cfg.mode;
    panel.boundary = cfg.boundary;
    panel.J_star = static_cast<int>(scales.size());
    panel.values.resize(total_rows, T);
    panel.row_meta.resize(static_cast<std::size_t>(total_rows));

    // Signs depend only on the source series, not the scale.
    Eigen::MatrixXi signs;
    if (cfg.mode == PanelMode::full) {
        signs.setOnes(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index i2 = i + 1; i2 < n; ++i2)
                signs(i, i2) = detail::sign_or_default(source.row(i).transpose(), source.row(i2).transpose());
    }

    Eigen::Index row = 0;
    Eigen::Index max_len = 1;
    for (int j : scales) {
        const HaarFilter filter = haar_filter(j);
        if (T < filter.length()) throw LengthError("build_panel: T shorter than filter at scale " + std::to_string(j));
        max_len = std::max(max_len, filter.length());

        Eigen::MatrixXd coeffs(n, T);
        for (Eigen::Index i = 0; i < n; ++i)
            coeffs.row(i) = detail::haar_coefficients(source.row(i).transpose(), filter).transpose();

        for (Eigen::Index i = 0; i < n; ++i) {
            panel.values.row(row) = coeffs.row(i).cwiseAbs();
            panel.row_meta[static_cast<std::size_t>(row)] = {j, static_cast<int>(i), -1, 1};
            ++row;
        }
        if (cfg.mode == PanelMode::full) {
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index i2 = i + 1; i2 < n; ++i2) {
                    const int s = signs(i, i2);
                    panel.values.row(row) =
                        (coeffs.row(i) + static_cast<double>(s) * coeffs.row(i2)).cwiseAbs();
                    panel.row_meta[static_cast<std::size_t>(row)] = {j, static_cast<int>(i),
                                                                     static_cast<int>(i2), s};
                    ++row;
                }
            }
        }
    }

    panel.t_start = cfg.boundary == Boundary::burn_in ? max_len : 1;
    detail::fill_sigmas(panel);
    return panel;
}

/// Wraps an arbitrary row panel (already in "transformed" space) so it can
/// be fed straight into the segmentation stage.
inline WaveletPanel wavelet_panel_from_rows(Eigen::MatrixXd values,
                                            ComponentKind kind = ComponentKind::common) {
    WaveletPanel panel;
    panel.values = std::move(values);
    panel.source = kind;
    panel.J_star = 1;
    panel.row_meta.resize(static_cast<std::size_t>(panel.rows()));
    for (Eigen::Index r = 0; r < panel.rows(); ++r)
        panel.row_meta[static_cast<std::size_t>(r)] = {-1, static_cast<int>(r), -1, 1};
    panel.t_start = 1;
    detail::fill_sigmas(panel);
    return panel;
}

}  // namespace factorseg
