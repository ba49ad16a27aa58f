#pragma once

#include <Eigen/Dense>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "factorseg/errors.hpp"

namespace factorseg {

enum class Orientation { rows_are_series, rows_are_time };

/// Observed n x T panel. Columns are time slices x_t (Eigen's column-major
/// storage keeps them contiguous, which the covariance and bootstrap loops
/// rely on). Immutable by convention after construction: operations return
/// new panels.
struct TimeSeriesPanel {
    Eigen::MatrixXd values;  // n x T
    bool centered = false;
    std::vector<std::string> series_labels;  // empty when unknown

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index T() const { return values.cols(); }
};

/// Wraps a matrix as a panel, rejecting non-finite entries.
inline TimeSeriesPanel panel_from_matrix(Eigen::MatrixXd values, bool centered = false,
                                         std::vector<std::string> labels = {}) {
    if (!values.allFinite()) throw ParseError("panel contains non-finite entries");
    TimeSeriesPanel p;
    p.values = std::move(values);
    p.centered = centered;
    p.series_labels = std::move(labels);
    return p;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline bool parse_cell(const std::string& raw, double& out) {
    std::size_t a = 0, b = raw.size();
    while (a < b && std::isspace(static_cast<unsigned char>(raw[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(raw[b - 1]))) --b;
    if (a == b) return false;
    const std::string tok = raw.substr(a, b - a);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) return false;
    if (!std::isfinite(v)) return false;  // NaN/Inf cells are rejected, not ingested
    return (out = v, true);
}

}  // namespace detail

/// Loads a rectangular numeric CSV ('.' decimal separator, scientific
/// notation accepted, optional single header line). The header, when
/// present, provides series labels under rows-are-time orientation; under
/// rows-are-series it is skipped.
inline TimeSeriesPanel load_csv(const std::string& path, Orientation orientation) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");

    std::vector<std::vector<double>> rows;
    std::vector<std::string> header;
    std::string line;
    std::size_t file_row = 0;
    bool saw_data = false;
    while (std::getline(in, line)) {
        ++file_row;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        std::vector<double> parsed(cells.size());
        bool all_numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!detail::parse_cell(cells[c], parsed[c])) {
                all_numeric = false;
                bad_col = c;
                break;
            }
        }
        if (!all_numeric) {
            if (!saw_data && rows.empty() && header.empty()) {
                header = cells;  // single leading header line
                continue;
            }
            throw ParseError("non-numeric cell at row " + std::to_string(file_row) + ", col " +
                             std::to_string(bad_col + 1) + " of '" + path + "'");
        }
        if (!rows.empty() && parsed.size() != rows.front().size())
            throw FormatError("ragged row " + std::to_string(file_row) + " in '" + path + "': expected " +
                              std::to_string(rows.front().size()) + " cells, got " +
                              std::to_string(parsed.size()));
        if (!header.empty() && parsed.size() != header.size())
            throw FormatError("row " + std::to_string(file_row) + " does not match header width in '" + path + "'");
        rows.push_back(std::move(parsed));
        saw_data = true;
    }
    if (rows.empty()) throw FormatError("no data rows in '" + path + "'");

    const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index nc = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(nr, nc);
    for (Eigen::Index i = 0; i < nr; ++i)
        for (Eigen::Index j = 0; j < nc; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

    TimeSeriesPanel p;
    if (orientation == Orientation::rows_are_series) {
        p.values = std::move(m);
    } else {
        p.values = m.transpose();
        if (!header.empty()) {
            p.series_labels.reserve(header.size());
            for (auto& h : header) p.series_labels.push_back(h);
        }
    }
    if (p.n() < 2 || p.T() < 8)
        throw DimensionError("panel requires n >= 2 and T >= 8, got n=" + std::to_string(p.n()) +
                             ", T=" + std::to_string(p.T()));
    return p;
}

/// Writes rows-are-series CSV at full precision so a reload round-trips
/// values bit-exactly. Labels are not written.
inline void save_csv(const TimeSeriesPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path + "'");
    char buf[40];
    for (Eigen::Index i = 0; i < panel.n(); ++i) {
        for (Eigen::Index t = 0; t < panel.T(); ++t) {
            std::snprintf(buf, sizeof(buf), "%.17g", panel.values(i, t));
            if (t) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

/// Subtracts each row's sample mean. Idempotent.
inline TimeSeriesPanel center(const TimeSeriesPanel& panel) {
    TimeSeriesPanel out = panel;
    const Eigen::VectorXd means = out.values.rowwise().mean();
    out.values.colwise() -= means;
    out.centered = true;
    return out;
}

}  // namespace factorseg
