#pragma once

#include <cmath>
#include <vector>

namespace u2f::testing {

// Straight-line textbook forms, kept deliberately different in shape from
// the library versions.
inline double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

inline std::vector<double> oracle_ranks(const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double less = 0, equal = 0;
        for (double v : x) {
            less += v < x[i];
            equal += v == x[i];
        }
        r[i] = less + (equal + 1) / 2.0;
    }
    return r;
}

inline double oracle_kappa(const std::vector<std::vector<int>>& m) {
    const double N = static_cast<double>(m.size());
    const std::size_t k = m[0].size();
    double n = 0;
    for (int v : m[0]) n += v;
    double pbar = 0;
    std::vector<double> pj(k, 0.0);
    for (const auto& row : m) {
        double s = 0;
        for (std::size_t j = 0; j < k; ++j) {
            s += row[j] * (row[j] - 1.0);
            pj[j] += row[j];
        }
        pbar += s / (n * (n - 1));
    }
    pbar /= N;
    double pe = 0;
    for (double p : pj) pe += (p / (N * n)) * (p / (N * n));
    return (pbar - pe) / (1 - pe);
}

} // namespace u2f::testing
