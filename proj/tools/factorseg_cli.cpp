// Command-line front end: detect / simulate / benchmark / report.
//
// Exit codes: 0 success, 1 analysis error, 2 usage or I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "factorseg/factorseg.hpp"
#include "factorseg/report_json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAnalysis = 1;
constexpr int kExitUsage = 2;

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw factorseg::FormatError("cannot write '" + path.string() + "'");
    out << text;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw factorseg::FormatError("cannot open '" + path + "'");
    json j;
    in >> j;
    return j;
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
    std::string input;
    std::string config_file;
    std::string out_dir = ".";
    bool rows_are_time = false;
    bool full_panel = false;
    bool sequential = false;
    bool no_capping = false;
    bool cap_auto = false;
    bool retain_replicates = false;
    int R = 200;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    long d_T = 0;
    long min_gap = 0;
    int J_star = 0;
    int tree_height = 0;
    int threads = 0;
    int max_candidates = 0;
    double cap_value = 0.0;
};

void apply_config_file(const json& j, factorseg::PipelineConfig& cfg, bool& rows_are_time) {
    static const std::vector<std::string> known = {
        "rows_are_time", "panel_mode",  "sequential_scales", "capping",    "R",
        "alpha",         "seed",        "d_T",               "min_gap",    "J_star",
        "tree_height",   "threads",     "max_candidates",    "segment_ic_a", "c_grid",
        "row_cap",       "boundary",    "retain_replicates"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw factorseg::ConfigError("unknown config key '" + key + "'");
        (void)value;
    }
    if (j.contains("rows_are_time")) rows_are_time = j.at("rows_are_time").get<bool>();
    if (j.contains("panel_mode"))
        cfg.panel_mode = j.at("panel_mode").get<std::string>() == "full" ? factorseg::PanelMode::full
                                                                         : factorseg::PanelMode::reduced;
    if (j.contains("boundary"))
        cfg.boundary = j.at("boundary").get<std::string>() == "burn_in" ? factorseg::Boundary::burn_in
                                                                        : factorseg::Boundary::reflect;
    if (j.contains("sequential_scales")) cfg.sequential_scales = j.at("sequential_scales").get<bool>();
    if (j.contains("capping")) {
        const auto& c = j.at("capping");
        if (c.is_string()) {
            const std::string s = c.get<std::string>();
            if (s == "disabled")
                cfg.capping = factorseg::Capping::disabled();
            else if (s == "auto")
                cfg.capping = factorseg::Capping::data_driven();
            else
                throw factorseg::ConfigError("capping must be 'disabled', 'auto' or a number");
        } else {
            cfg.capping = factorseg::Capping::fixed(c.get<double>());
        }
    }
    if (j.contains("R")) cfg.R = j.at("R").get<int>();
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("d_T")) cfg.d_T = j.at("d_T").get<long>();
    if (j.contains("min_gap")) cfg.min_gap = j.at("min_gap").get<long>();
    if (j.contains("J_star")) cfg.J_star = j.at("J_star").get<int>();
    if (j.contains("tree_height")) cfg.tree_height = j.at("tree_height").get<int>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("max_candidates")) cfg.max_candidates = j.at("max_candidates").get<int>();
    if (j.contains("segment_ic_a")) cfg.segment_ic_a = j.at("segment_ic_a").get<double>();
    if (j.contains("c_grid")) cfg.c_grid = j.at("c_grid").get<std::vector<double>>();
    if (j.contains("row_cap")) cfg.row_cap = j.at("row_cap").get<long>();
    if (j.contains("retain_replicates")) cfg.retain_replicates = j.at("retain_replicates").get<bool>();
}

void write_plot_data(const fs::path& dir, const factorseg::TimeSeriesPanel& panel,
                     const factorseg::DetectionReport& report) {
    using namespace factorseg;

    {
        std::ofstream out(dir / "screening_curve.csv");
        out << "k,n_changepoints,subset_of_star\n";
        for (const auto& entry : report.screening)
            out << entry.k << ',' << entry.locations.size() << ',' << (entry.subset_of_star ? 1 : 0) << '\n';
    }
    {
        std::ofstream out(dir / "kbc.csv");
        out << "segment_start,segment_end";
        for (double c : report.kbc.c_values) out << ",c" << c;
        out << '\n';
        for (std::size_t b = 0; b < report.kbc.k.size(); ++b) {
            out << report.segments[b].s << ',' << report.segments[b].e;
            for (int k : report.kbc.k[b]) out << ',' << k;
            out << '\n';
        }
    }

    // Root-interval DC profiles of the components at k*.
    const TimeSeriesPanel centered_panel = panel.centered ? panel : center(panel);
    WtConfig wt;
    wt.J_star = report.config.J_star;
    wt.mode = report.config.base.panel_mode;
    wt.boundary = report.config.base.boundary;
    wt.row_cap = report.config.base.row_cap;
    const FactorDecomposition dec = decompose(centered_panel, report.k_star, report.config.base.capping);
    const auto write_profile = [&](const Eigen::MatrixXd& component, ComponentKind kind,
                                   const std::string& name) {
        const WaveletPanel wp = build_panel(component, kind, wt);
        const CusumMatrix cm = cusum(wp, wp.t_start, wp.T());
        const Eigen::Index lo = wp.t_start + report.config.d_T;
        const Eigen::Index hi = wp.T() - report.config.d_T;
        const DcResult dc = double_cusum(cm, lo, hi, true);
        std::ofstream out(dir / name);
        out << "b,dc_statistic\n";
        for (Eigen::Index b = lo; b <= hi; ++b) out << b << ',' << dc.per_b(b - lo) << '\n';
    };
    write_profile(dec.common, ComponentKind::common, "dc_profile_common.csv");
    write_profile(dec.idiosyncratic, ComponentKind::idiosyncratic, "dc_profile_idio.csv");
}

int run_detect(const DetectArgs& args, const CLI::App* cmd) {
    using namespace factorseg;

    PipelineConfig cfg;
    bool rows_are_time = false;
    if (!args.config_file.empty()) apply_config_file(load_json(args.config_file), cfg, rows_are_time);

    // CLI flags override config-file values.
    const auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };
    if (given("--rows-are-time")) rows_are_time = args.rows_are_time;
    if (given("--full-panel")) cfg.panel_mode = PanelMode::full;
    if (given("--sequential-scales")) cfg.sequential_scales = args.sequential;
    if (given("--no-capping")) cfg.capping = Capping::disabled();
    if (given("--cap-auto")) cfg.capping = Capping::data_driven();
    if (given("--cap-value")) cfg.capping = Capping::fixed(args.cap_value);
    if (given("--R")) cfg.R = args.R;
    if (given("--alpha")) cfg.alpha = args.alpha;
    if (given("--seed")) cfg.seed = args.seed;
    if (given("--d-T")) cfg.d_T = args.d_T;
    if (given("--min-gap")) cfg.min_gap = args.min_gap;
    if (given("--J-star")) cfg.J_star = args.J_star;
    if (given("--tree-height")) cfg.tree_height = args.tree_height;
    if (given("--threads")) cfg.threads = args.threads;
    if (given("--max-candidates")) cfg.max_candidates = args.max_candidates;
    if (given("--retain-replicates")) cfg.retain_replicates = args.retain_replicates;

    if (!fs::exists(args.input)) {
        std::cerr << "error: input file '" << args.input << "' does not exist\n";
        return kExitUsage;
    }
    fs::create_directories(args.out_dir);

    const TimeSeriesPanel panel = load_csv(
        args.input, rows_are_time ? Orientation::rows_are_time : Orientation::rows_are_series);
    const DetectionReport report = detect(panel, cfg);

    json body = report_to_json(report);
    body["generated_at"] = iso_timestamp();  // not part of the canonical body
    write_text(fs::path(args.out_dir) / "report.json", body.dump(2) + "\n");
    write_plot_data(fs::path(args.out_dir), panel, report);

    std::cout << "k* = " << report.k_star << ", " << report.common_points.points.size()
              << " common and " << report.idio_points.points.size()
              << " idiosyncratic change-point(s); report written to "
              << (fs::path(args.out_dir) / "report.json").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string scenario = "null";
    long n = 100;
    long T = 200;
    int q = 5;
    double phi = 1.0;
    double sigma = std::sqrt(2.0);
    double varrho = 1.0;
    std::uint64_t seed = 0;
    std::string out_prefix = "sim";
};

int run_simulate(const SimulateArgs& args) {
    using namespace factorseg;
    ScenarioSpec spec;
    spec.scenario = scenario_from_string(args.scenario);
    spec.n = args.n;
    spec.T = args.T;
    spec.q = args.q;
    spec.phi = args.phi;
    spec.sigma = args.sigma;
    spec.varrho = args.varrho;
    spec.seed = args.seed;

    const GeneratedDataset ds = generate(spec);
    const std::string csv_path = args.out_prefix + ".csv";
    save_csv(ds.panel, csv_path);

    json truth;
    truth["scenario"] = args.scenario;
    truth["n"] = spec.n;
    truth["T"] = spec.T;
    truth["q"] = spec.q;
    truth["phi"] = spec.phi;
    truth["sigma"] = spec.sigma;
    truth["varrho"] = spec.varrho;
    truth["seed"] = spec.seed;
    truth["theta"] = ds.theta;
    truth["changepoints"] = json::array();
    for (const auto& t : ds.truth) {
        truth["changepoints"].push_back(
            {{"location", t.location},
             {"origin", t.origin == ComponentKind::common ? "common" : "idiosyncratic"},
             {"kind", t.kind}});
    }
    write_text(args.out_prefix + "_truth.json", truth.dump(2) + "\n");
    std::cout << "wrote " << csv_path << " and " << args.out_prefix << "_truth.json\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchRow {
    std::string test;
    std::string component;
    int detections = 0;
    std::vector<double> abs_err;
};

/// First-iteration protocol: for each factor-number candidate the root
/// interval of the component panel is tested once; a change-point is
/// declared if any candidate rejects, located at the largest rejecting
/// candidate. MAX/AVG replace the DC statistic by their aggregations on the
/// same CUSUM matrices; DC-NFA skips the factor analysis entirely.
int run_benchmark(const std::string& grid_file, const std::string& out_dir) {
    using namespace factorseg;
    const json grid = load_json(grid_file);
    fs::create_directories(out_dir);

    std::ofstream out(fs::path(out_dir) / "benchmark.csv");
    out << "scenario,n,T,q,phi,sigma,varrho,test,component,seeds,detections,detect_rate,median_abs_err\n";

    for (const auto& cell : grid.at("cells")) {
        ScenarioSpec base;
        base.scenario = scenario_from_string(cell.at("scenario").get<std::string>());
        base.n = cell.at("n").get<long>();
        base.T = cell.at("T").get<long>();
        if (cell.contains("q")) base.q = cell.at("q").get<int>();
        const auto phis = cell.value("phi", std::vector<double>{1.0});
        const auto sigmas = cell.value("sigma", std::vector<double>{std::sqrt(2.0)});
        const auto varrhos = cell.value("varrho", std::vector<double>{1.0});
        const int n_seeds = cell.value("seeds", 10);
        const int R = cell.value("R", 100);
        const double alpha = cell.value("alpha", 0.05);
        const std::uint64_t master = cell.value("seed", 0);
        const int max_candidates = cell.value("max_candidates", 0);
        const int threads = cell.value("threads", 0);

        for (double phi : phis)
            for (double sigma : sigmas)
                for (double varrho : varrhos) {
                    std::map<std::string, BenchRow> rows;
                    for (const auto& test : {"DC", "MAX", "AVG"})
                        for (const auto& comp : {"common", "idio"})
                            rows[std::string(test) + "/" + comp] = {test, comp, 0, {}};
                    rows["DC-NFA/x"] = {"DC-NFA", "x", 0, {}};

                    for (int s = 0; s < n_seeds; ++s) {
                        ScenarioSpec spec = base;
                        spec.phi = phi;
                        spec.sigma = sigma;
                        spec.varrho = varrho;
                        spec.seed = derive_seed(master, {static_cast<std::uint64_t>(s)});
                        const GeneratedDataset ds = generate(spec);
                        const TimeSeriesPanel panel = center(ds.panel);
                        const Eigen::Index T = panel.T();
                        const Eigen::Index d_T = default_trim(T);
                        WtConfig wt;
                        wt.J_star = scale_count(T);

                        std::vector<Eigen::Index> truth_common, truth_idio, truth_any;
                        for (const auto& t : ds.truth) {
                            truth_any.push_back(t.location);
                            (t.origin == ComponentKind::common ? truth_common : truth_idio)
                                .push_back(t.location);
                        }
                        const auto nearest_err = [](const std::vector<Eigen::Index>& truth,
                                                    Eigen::Index loc) -> std::optional<double> {
                            if (truth.empty()) return std::nullopt;
                            double best = std::abs(static_cast<double>(loc - truth.front()));
                            for (auto t : truth)
                                best = std::min(best, std::abs(static_cast<double>(loc - t)));
                            return best;
                        };

                        struct RootOutcome {
                            bool reject = false;
                            Eigen::Index location = 0;
                        };
                        // Root test of one panel for the three aggregations at once.
                        const auto root_test = [&](const WaveletPanel& wp,
                                                   const std::function<Eigen::MatrixXd(std::uint64_t)>&
                                                       resample,
                                                   std::uint64_t seed_base, ComponentKind kind)
                            -> std::array<RootOutcome, 3> {
                            const Eigen::Index lo = wp.t_start + d_T;
                            const Eigen::Index hi = wp.T() - d_T;
                            const CusumMatrix cm = cusum(wp, wp.t_start, wp.T());
                            const DcResult dc = double_cusum(cm, lo, hi);
                            const BaselineStats bl = baseline_reducers(cm, lo, hi);

                            std::vector<double> null_dc(static_cast<std::size_t>(R)),
                                null_max(static_cast<std::size_t>(R)), null_avg(static_cast<std::size_t>(R));
                            parallel_for(
                                R,
                                [&](std::int64_t rep) {
                                    const Eigen::MatrixXd comp = resample(
                                        derive_seed(seed_base, {static_cast<std::uint64_t>(rep)}));
                                    const WaveletPanel bp = build_panel(comp, kind, wt);
                                    const CusumMatrix bcm = cusum(bp, bp.t_start, bp.T());
                                    null_dc[static_cast<std::size_t>(rep)] =
                                        double_cusum(bcm, lo, hi).statistic;
                                    const BaselineStats bbl = baseline_reducers(bcm, lo, hi);
                                    null_max[static_cast<std::size_t>(rep)] = bbl.max_stat;
                                    null_avg[static_cast<std::size_t>(rep)] = bbl.avg_stat;
                                },
                                threads);
                            const auto quantile = [&](std::vector<double>& v) {
                                std::sort(v.begin(), v.end());
                                return factorseg::detail::interpolated_quantile(v, 1.0 - alpha);
                            };
                            std::array<RootOutcome, 3> res;
                            res[0] = {dc.statistic > quantile(null_dc), dc.location};
                            res[1] = {bl.max_stat > quantile(null_max), bl.max_location};
                            res[2] = {bl.avg_stat > quantile(null_avg), bl.avg_location};
                            return res;
                        };

                        const ScreeningRange sr = screening_range(panel, max_candidates);
                        std::map<int, FactorDecomposition> decs;
                        std::array<std::pair<int, RootOutcome>, 3> best_common{};  // per test: k*, outcome
                        for (auto& b : best_common) b.first = -1;
                        for (int k : sr.candidates) {
                            FactorDecomposition dec = decompose(panel, k);
                            Eigen::VectorXd p_common(dec.k);
                            for (int jf = 0; jf < dec.k; ++jf)
                                p_common(jf) = factorseg::detail::safe_block_length(
                                    dec.factors.row(jf).transpose(), BlockHorizon::panel_T15);
                            const WaveletPanel wp = build_panel(dec.common, ComponentKind::common, wt);
                            SbConfig sb;
                            sb.p_common = p_common;
                            const auto resample = [&dec, sb](std::uint64_t rep_seed) {
                                return resample_component(dec, ComponentKind::common, sb, rep_seed);
                            };
                            const auto outcomes = root_test(
                                wp, resample,
                                derive_seed(spec.seed, {11, static_cast<std::uint64_t>(k)}),
                                ComponentKind::common);
                            // Largest k attaining the max cardinality: with the
                            // root-only test, the largest rejecting k when any
                            // rejects, the largest candidate otherwise.
                            for (std::size_t t = 0; t < 3; ++t)
                                if (outcomes[t].reject || !best_common[t].second.reject)
                                    best_common[t] = {k, outcomes[t]};
                            decs.emplace(k, std::move(dec));
                        }

                        static const char* test_names[3] = {"DC", "MAX", "AVG"};
                        for (std::size_t t = 0; t < 3; ++t) {
                            auto& row = rows[std::string(test_names[t]) + "/common"];
                            if (best_common[t].second.reject) {
                                ++row.detections;
                                if (auto err = nearest_err(truth_common, best_common[t].second.location))
                                    row.abs_err.push_back(*err);
                            }
                            // Idiosyncratic chain at this test's selected k.
                            const int k_star = best_common[t].first;
                            const FactorDecomposition& dec = decs.at(k_star);
                            const WaveletPanel wp =
                                build_panel(dec.idiosyncratic, ComponentKind::idiosyncratic, wt);
                            const double p_idio = factorseg::detail::pooled_idio_block_length(dec);
                            SbConfig sb;
                            sb.p_idio = p_idio;
                            const auto resample = [&dec, sb](std::uint64_t rep_seed) {
                                return resample_component(dec, ComponentKind::idiosyncratic, sb, rep_seed);
                            };
                            const auto outcomes = root_test(
                                wp, resample,
                                derive_seed(spec.seed, {12, static_cast<std::uint64_t>(k_star),
                                                        static_cast<std::uint64_t>(t)}),
                                ComponentKind::idiosyncratic);
                            auto& irow = rows[std::string(test_names[t]) + "/idio"];
                            if (outcomes[t].reject) {
                                ++irow.detections;
                                if (auto err = nearest_err(truth_idio, outcomes[t].location))
                                    irow.abs_err.push_back(*err);
                            }
                        }

                        // DC-NFA: wavelet transform of the raw panel, jointly resampled.
                        {
                            const WaveletPanel wp =
                                build_panel(panel.values, ComponentKind::common, wt);
                            double p_inv_acc = 0.0;
                            for (Eigen::Index i = 0; i < panel.n(); ++i)
                                p_inv_acc += 1.0 / factorseg::detail::safe_block_length(
                                                       panel.values.row(i).transpose(),
                                                       BlockHorizon::panel_T15);
                            const double p_x = static_cast<double>(panel.n()) / p_inv_acc;
                            const Eigen::MatrixXd& raw = panel.values;
                            const auto resample = [&raw, p_x](std::uint64_t rep_seed) {
                                Rng rng(derive_seed(rep_seed, {0}));
                                return sb_resample(raw, p_x, rng);
                            };
                            const auto outcomes =
                                root_test(wp, resample, derive_seed(spec.seed, {13}),
                                          ComponentKind::common);
                            auto& row = rows["DC-NFA/x"];
                            if (outcomes[0].reject) {
                                ++row.detections;
                                if (auto err = nearest_err(truth_any, outcomes[0].location))
                                    row.abs_err.push_back(*err);
                            }
                        }
                    }

                    for (auto& [key, row] : rows) {
                        double med = -1.0;
                        if (!row.abs_err.empty()) {
                            std::sort(row.abs_err.begin(), row.abs_err.end());
                            med = row.abs_err[row.abs_err.size() / 2];
                        }
                        out << to_string(base.scenario) << ',' << base.n << ',' << base.T << ','
                            << base.q << ',' << phi << ',' << sigma << ',' << varrho << ','
                            << row.test << ',' << row.component << ',' << n_seeds << ','
                            << row.detections << ','
                            << static_cast<double>(row.detections) / n_seeds << ','
                            << (med < 0.0 ? std::string("") : std::to_string(med)) << '\n';
                    }
                }
    }
    std::cout << "benchmark table written to " << (fs::path(out_dir) / "benchmark.csv").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report

int run_report(const std::string& in_file, const std::string& format, const std::string& out_dir) {
    using namespace factorseg;
    json j = load_json(in_file);
    j.erase("generated_at");
    const DetectionReport report = report_from_json(j);

    const auto points_csv = [&](const ChangePointSet& set) {
        std::string s = "location,level,node,statistic,threshold\n";
        for (const auto& p : set.points)
            s += std::to_string(p.location) + ',' + std::to_string(p.level) + ',' +
                 std::to_string(p.node) + ',' + std::to_string(p.statistic) + ',' +
                 std::to_string(p.threshold) + '\n';
        return s;
    };

    if (format == "csv") {
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "common_changepoints.csv", points_csv(report.common_points));
        write_text(fs::path(out_dir) / "idio_changepoints.csv", points_csv(report.idio_points));
        std::string segs = "start,end,r_hat,skipped,classification\n";
        for (std::size_t i = 0; i < report.segments.size(); ++i) {
            const auto& seg = report.segments[i];
            std::string cls;
            for (const auto& brk : report.breaks)
                if (brk.location == seg.s - 1) cls = to_string(brk.kind);
            segs += std::to_string(seg.s) + ',' + std::to_string(seg.e) + ',' +
                    std::to_string(seg.r_hat) + ',' + (seg.skipped ? "1" : "0") + ',' + cls + '\n';
        }
        write_text(fs::path(out_dir) / "segments.csv", segs);
        std::cout << "tables written to " << out_dir << "\n";
    } else if (format == "md") {
        std::cout << "# Detection report\n\nk* = " << report.k_star << "\n\n";
        std::cout << "## Common change-points\n\n| location | level | statistic | threshold |\n"
                  << "|---|---|---|---|\n";
        for (const auto& p : report.common_points.points)
            std::cout << "| " << p.location << " | " << p.level << " | " << p.statistic << " | "
                      << p.threshold << " |\n";
        std::cout << "\n## Idiosyncratic change-points\n\n| location | level | statistic | threshold |\n"
                  << "|---|---|---|---|\n";
        for (const auto& p : report.idio_points.points)
            std::cout << "| " << p.location << " | " << p.level << " | " << p.statistic << " | "
                      << p.threshold << " |\n";
        std::cout << "\n## Segments\n\n| start | end | r_hat | classification |\n|---|---|---|---|\n";
        for (const auto& seg : report.segments) {
            std::string cls = "-";
            for (const auto& brk : report.breaks)
                if (brk.location == seg.s - 1) cls = to_string(brk.kind);
            std::cout << "| " << seg.s << " | " << seg.e << " | "
                      << (seg.skipped ? std::string("-") : std::to_string(seg.r_hat)) << " | " << cls
                      << " |\n";
        }
    } else {
        std::cerr << "error: unknown format '" << format << "'\n";
        return kExitUsage;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Change-point detection in the second-order structure of high-dimensional "
                 "factor-model time series"};
    app.require_subcommand(1);

    DetectArgs det;
    auto* cmd_detect = app.add_subcommand("detect", "Detect change-points in a CSV panel");
    cmd_detect->add_option("--input", det.input, "Input CSV panel")->required();
    cmd_detect->add_option("--config", det.config_file, "JSON config file");
    cmd_detect->add_flag("--rows-are-time", det.rows_are_time, "Input rows are time points");
    cmd_detect->add_flag("--full-panel", det.full_panel, "Use the full (cross-pair) wavelet panel");
    cmd_detect->add_flag("--sequential-scales", det.sequential, "Traverse wavelet scales sequentially");
    cmd_detect->add_flag("--no-capping", det.no_capping, "Disable eigenvector capping (default)");
    cmd_detect->add_flag("--cap-auto", det.cap_auto, "Data-driven capping constant");
    cmd_detect->add_option("--cap-value", det.cap_value, "Fixed capping constant");
    cmd_detect->add_option("--R", det.R, "Bootstrap replicates");
    cmd_detect->add_option("--alpha", det.alpha, "Bootstrap quantile level");
    cmd_detect->add_option("--seed", det.seed, "RNG seed");
    cmd_detect->add_option("--d-T", det.d_T, "Trim width override");
    cmd_detect->add_option("--min-gap", det.min_gap, "Minimum gap between change-points");
    cmd_detect->add_option("--J-star", det.J_star, "Number of wavelet scales");
    cmd_detect->add_option("--tree-height", det.tree_height, "Bootstrap tree height");
    cmd_detect->add_option("--threads", det.threads, "Worker threads (0 = auto)");
    cmd_detect->add_option("--max-candidates", det.max_candidates, "Cap on screening candidates");
    cmd_detect->add_flag("--retain-replicates", det.retain_replicates, "Keep bootstrap statistics");
    cmd_detect->add_option("--out", det.out_dir, "Output directory");

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Generate a scenario dataset");
    cmd_sim->add_option("--scenario", sim.scenario, "null|S1|S2|S3|S4|S5|M1|M2")->required();
    cmd_sim->add_option("--n", sim.n, "Cross-sectional dimension");
    cmd_sim->add_option("--T", sim.T, "Series length");
    cmd_sim->add_option("--q", sim.q, "Base factor count");
    cmd_sim->add_option("--phi", sim.phi, "Variance-ratio parameter");
    cmd_sim->add_option("--sigma", sim.sigma, "Break magnitude");
    cmd_sim->add_option("--varrho", sim.varrho, "Affected fraction");
    cmd_sim->add_option("--seed", sim.seed, "RNG seed");
    cmd_sim->add_option("--out", sim.out_prefix, "Output prefix");

    std::string grid_file, bench_out = "bench";
    auto* cmd_bench = app.add_subcommand("benchmark", "Run a scenario sweep of DC/MAX/AVG/DC-NFA tests");
    cmd_bench->add_option("--grid", grid_file, "Sweep grid JSON")->required();
    cmd_bench->add_option("--out", bench_out, "Output directory");

    std::string rep_in, rep_format = "md", rep_out = "report_tables";
    auto* cmd_rep = app.add_subcommand("report", "Render a detection report");
    cmd_rep->add_option("--in", rep_in, "report.json path")->required();
    cmd_rep->add_option("--format", rep_format, "csv or md");
    cmd_rep->add_option("--out", rep_out, "Output directory for csv format");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_detect->parsed()) return run_detect(det, cmd_detect);
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_bench->parsed()) return run_benchmark(grid_file, bench_out);
        if (cmd_rep->parsed()) return run_report(rep_in, rep_format, rep_out);
    } catch (const factorseg::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const factorseg::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const factorseg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAnalysis;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAnalysis;
    }
    return kExitUsage;
}
