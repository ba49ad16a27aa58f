// Independent reference implementations used to cross-check the library.
// Everything here is deliberately naive: direct formula evaluation, full
// enumeration, textbook algorithms. None of it shares code with the
// implementation paths it verifies.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

/// CUSUM value from the displayed formula, one (row, b) at a time, with
/// fresh mean computations.
inline double cusum_value(const Eigen::VectorXd& y, double sigma, int s, int b, int e) {
    double left = 0.0, right = 0.0;
    for (int t = s; t <= b; ++t) left += y(t - 1);
    for (int t = b + 1; t <= e; ++t) right += y(t - 1);
    const double nl = b - s + 1, nr = e - b, len = e - s + 1;
    return std::sqrt(nl * nr / len) * (left / nl - right / nr) / sigma;
}

struct DcOracle {
    double statistic;
    int location;
    int m;
};

/// Exhaustive Double CUSUM: for every split point sort the |CUSUM| column
/// and evaluate the contrast at every m. The partial sums use the
/// complement identity (tail = total - head) with left-to-right
/// accumulation, which makes the enumeration bit-comparable with prefix-sum
/// implementations of the same formula.
inline DcOracle double_cusum_bruteforce(const Eigen::MatrixXd& cusums, int s, int b_lo, int b_hi) {
    const int N = static_cast<int>(cusums.rows());
    DcOracle best{-std::numeric_limits<double>::infinity(), b_lo, 1};
    for (int b = b_lo; b <= b_hi; ++b) {
        std::vector<double> a(static_cast<std::size_t>(N));
        for (int r = 0; r < N; ++r) a[static_cast<std::size_t>(r)] = std::abs(cusums(r, b - s));
        std::sort(a.begin(), a.end(), std::greater<double>());
        double total = 0.0;
        for (int r = 0; r < N; ++r) total += a[static_cast<std::size_t>(r)];
        for (int m = 1; m <= N; ++m) {
            double head = 0.0;
            for (int r = 0; r < m; ++r) head += a[static_cast<std::size_t>(r)];
            const double md = m, two_n = 2.0 * N;
            const double d = std::sqrt(md * (two_n - md) / two_n) *
                             (head / md - (total - head) / (two_n - md));
            if (d > best.statistic) best = {d, b, m};
        }
    }
    return best;
}

/// Same enumeration with the tail summed directly (different rounding);
/// used for tolerance-based cross-checks.
inline double double_cusum_bruteforce_direct(const Eigen::MatrixXd& cusums, int s, int b_lo, int b_hi) {
    const int N = static_cast<int>(cusums.rows());
    double best = -std::numeric_limits<double>::infinity();
    for (int b = b_lo; b <= b_hi; ++b) {
        std::vector<double> a(static_cast<std::size_t>(N));
        for (int r = 0; r < N; ++r) a[static_cast<std::size_t>(r)] = std::abs(cusums(r, b - s));
        std::sort(a.begin(), a.end(), std::greater<double>());
        for (int m = 1; m <= N; ++m) {
            double head = 0.0, tail = 0.0;
            for (int r = 0; r < m; ++r) head += a[static_cast<std::size_t>(r)];
            for (int r = m; r < N; ++r) tail += a[static_cast<std::size_t>(r)];
            const double md = m, two_n = 2.0 * N;
            const double d = std::sqrt(md * (two_n - md) / two_n) * (head / md - tail / (two_n - md));
            best = std::max(best, d);
        }
    }
    return best;
}

struct BaselineOracle {
    double max_stat;
    double avg_stat;
};

inline BaselineOracle baselines_bruteforce(const Eigen::MatrixXd& cusums, int s, int b_lo, int b_hi) {
    const int N = static_cast<int>(cusums.rows());
    BaselineOracle best{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int b = b_lo; b <= b_hi; ++b) {
        double mx = 0.0, sum = 0.0;
        for (int r = 0; r < N; ++r) {
            const double v = std::abs(cusums(r, b - s));
            mx = std::max(mx, v);
            sum += v;
        }
        best.max_stat = std::max(best.max_stat, mx);
        best.avg_stat = std::max(best.avg_stat, sum / N);
    }
    return best;
}

/// Cyclic Jacobi eigensolver for symmetric matrices: an implementation of
/// the classical rotation algorithm, independent of any library solver.
/// Returns eigenvalues in non-increasing order with their vectors.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    const int n = static_cast<int>(a.rows());
    vectors = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = vectors(i, p), viq = vectors(i, q);
                    vectors(i, p) = c * vip - s * viq;
                    vectors(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
    values.resize(n);
    Eigen::MatrixXd sorted(n, n);
    for (int i = 0; i < n; ++i) {
        values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        sorted.col(i) = vectors.col(order[static_cast<std::size_t>(i)]);
    }
    vectors = sorted;
}

/// Bai-Ng criterion evaluated the expensive way: explicit k-factor PCA
/// reconstruction and residual sum over the interval.
inline int bai_ng_bruteforce(const Eigen::MatrixXd& x, int s, int e, int r_max,
                             const std::function<double(int, int)>& penalty) {
    const int n = static_cast<int>(x.rows());
    const int len = e - s + 1;
    const Eigen::MatrixXd block = x.middleCols(s - 1, len);
    const Eigen::MatrixXd cov = (block * block.transpose()) / static_cast<double>(len);
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    jacobi_eigen(cov, values, vectors);

    int best_k = 1;
    double best_ic = std::numeric_limits<double>::infinity();
    const double floor = std::max(1e-15 * block.squaredNorm() / static_cast<double>(n * len), 1e-308);
    for (int k = 1; k <= r_max; ++k) {
        const Eigen::MatrixXd w = vectors.leftCols(k);
        const Eigen::MatrixXd resid = block - w * (w.transpose() * block);
        const double v = std::max(resid.squaredNorm() / static_cast<double>(n * len), floor);
        const double ic = std::log(v) + k * penalty(n, len);
        if (ic < best_ic) {
            best_ic = ic;
            best_k = k;
        }
    }
    return best_k;
}

}  // namespace oracles
