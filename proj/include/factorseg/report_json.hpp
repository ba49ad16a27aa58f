#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "factorseg/pipeline.hpp"

namespace factorseg {

namespace detail {

inline nlohmann::json points_to_json(const ChangePointSet& set) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : set.points) {
        arr.push_back({{"location", p.location},
                       {"level", p.level},
                       {"node", p.node},
                       {"statistic", p.statistic},
                       {"threshold", p.threshold}});
    }
    return arr;
}

inline ChangePointSet points_from_json(const nlohmann::json& arr, ComponentKind origin) {
    ChangePointSet set;
    set.origin = origin;
    for (const auto& j : arr) {
        ChangePoint p;
        p.location = j.at("location").get<Eigen::Index>();
        p.level = j.at("level").get<int>();
        p.node = j.at("node").get<int>();
        p.statistic = j.at("statistic").get<double>();
        p.threshold = j.at("threshold").get<double>();
        set.points.push_back(p);
    }
    return set;
}

inline std::string capping_to_string(const Capping& c) {
    switch (c.mode) {
        case Capping::Mode::disabled: return "disabled";
        case Capping::Mode::data_driven: return "auto";
        case Capping::Mode::fixed: return std::to_string(c.c_w);
    }
    return "disabled";
}

}  // namespace detail

/// Stable report schema: keys `config`, `screening`, `k_star`,
/// `common_changepoints`, `idio_changepoints`, `segments`, `kbc`.
inline nlohmann::json report_to_json(const DetectionReport& report) {
    nlohmann::json j;
    const ResolvedConfig& rc = report.config;
    j["config"] = {{"R", rc.base.R},
                   {"alpha", rc.base.alpha},
                   {"seed", rc.base.seed},
                   {"d_T", rc.d_T},
                   {"min_gap", rc.min_gap},
                   {"J_star", rc.J_star},
                   {"tree_height", rc.tree_height},
                   {"panel_mode", rc.base.panel_mode == PanelMode::reduced ? "reduced" : "full"},
                   {"boundary", rc.base.boundary == Boundary::reflect ? "reflect" : "burn_in"},
                   {"capping", detail::capping_to_string(rc.base.capping)},
                   {"sequential_scales", rc.base.sequential_scales},
                   {"segment_ic_a", rc.base.segment_ic_a},
                   {"r_lower", rc.r_lower},
                   {"r_upper", rc.r_upper},
                   {"candidates", rc.candidates},
                   {"c_grid", rc.c_grid}};

    j["screening"] = nlohmann::json::array();
    for (const auto& entry : report.screening) {
        j["screening"].push_back({{"k", entry.k},
                                  {"changepoints", entry.locations},
                                  {"subset_of_star", entry.subset_of_star}});
    }
    j["k_star"] = report.k_star;
    j["common_changepoints"] = detail::points_to_json(report.common_points);
    j["idio_changepoints"] = detail::points_to_json(report.idio_points);

    j["segments"] = nlohmann::json::array();
    for (std::size_t i = 0; i < report.segments.size(); ++i) {
        const auto& seg = report.segments[i];
        nlohmann::json js = {{"start", seg.s}, {"end", seg.e}, {"r_hat", seg.r_hat}, {"skipped", seg.skipped}};
        js["classification"] = nullptr;
        if (i > 0) {
            for (const auto& brk : report.breaks) {
                if (brk.location == seg.s - 1) {
                    js["classification"] = to_string(brk.kind);
                    js["r_left"] = brk.r_left;
                    js["r_right"] = brk.r_right;
                    js["r_pooled"] = brk.r_pooled;
                }
            }
        }
        j["segments"].push_back(js);
    }

    j["kbc"] = {{"c", report.kbc.c_values}, {"k", report.kbc.k}};
    return j;
}

/// Inverse of report_to_json; the round trip is lossless for every field
/// that the schema carries.
inline DetectionReport report_from_json(const nlohmann::json& j) {
    DetectionReport report;
    const auto& jc = j.at("config");
    report.config.base.R = jc.at("R").get<int>();
    report.config.base.alpha = jc.at("alpha").get<double>();
    report.config.base.seed = jc.at("seed").get<std::uint64_t>();
    report.config.d_T = jc.at("d_T").get<Eigen::Index>();
    report.config.min_gap = jc.at("min_gap").get<Eigen::Index>();
    report.config.J_star = jc.at("J_star").get<int>();
    report.config.tree_height = jc.at("tree_height").get<int>();
    report.config.base.panel_mode =
        jc.at("panel_mode").get<std::string>() == "full" ? PanelMode::full : PanelMode::reduced;
    report.config.base.boundary =
        jc.at("boundary").get<std::string>() == "burn_in" ? Boundary::burn_in : Boundary::reflect;
    const std::string cap = jc.at("capping").get<std::string>();
    if (cap == "disabled")
        report.config.base.capping = Capping::disabled();
    else if (cap == "auto")
        report.config.base.capping = Capping::data_driven();
    else
        report.config.base.capping = Capping::fixed(std::stod(cap));
    report.config.base.sequential_scales = jc.at("sequential_scales").get<bool>();
    report.config.base.segment_ic_a = jc.at("segment_ic_a").get<double>();
    report.config.r_lower = jc.at("r_lower").get<int>();
    report.config.r_upper = jc.at("r_upper").get<int>();
    report.config.candidates = jc.at("candidates").get<std::vector<int>>();
    report.config.c_grid = jc.at("c_grid").get<std::vector<double>>();

    for (const auto& entry : j.at("screening")) {
        ScreeningEntry se;
        se.k = entry.at("k").get<int>();
        se.locations = entry.at("changepoints").get<std::vector<Eigen::Index>>();
        se.subset_of_star = entry.at("subset_of_star").get<bool>();
        report.screening.push_back(std::move(se));
    }
    report.k_star = j.at("k_star").get<int>();
    report.common_points = detail::points_from_json(j.at("common_changepoints"), ComponentKind::common);
    report.idio_points = detail::points_from_json(j.at("idio_changepoints"), ComponentKind::idiosyncratic);

    for (const auto& js : j.at("segments")) {
        SegmentResult seg;
        seg.s = js.at("start").get<Eigen::Index>();
        seg.e = js.at("end").get<Eigen::Index>();
        seg.r_hat = js.at("r_hat").get<int>();
        seg.skipped = js.at("skipped").get<bool>();
        report.segments.push_back(seg);
        if (!js.at("classification").is_null()) {
            BreakClassification bc;
            bc.location = seg.s - 1;
            bc.r_left = js.at("r_left").get<int>();
            bc.r_right = js.at("r_right").get<int>();
            bc.r_pooled = js.at("r_pooled").get<int>();
            bc.kind = js.at("classification").get<std::string>() == "autocorrelation_only"
                          ? BreakKind::autocorrelation_only
                          : BreakKind::loading_or_number;
            report.breaks.push_back(bc);
        }
    }

    report.kbc.c_values = j.at("kbc").at("c").get<std::vector<double>>();
    report.kbc.k = j.at("kbc").at("k").get<std::vector<std::vector<int>>>();
    return report;
}

}  // namespace factorseg
