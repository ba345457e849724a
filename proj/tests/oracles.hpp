// Brute-force reference implementations of every statistic, written
// straight from the definitions and kept independent of the library's
// algorithms: kappa's expected disagreement comes from all-pairs
// enumeration, ranks from counting, tau-b from O(n^2) pair counting.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracles {

// kappa_w = 1 - mean_t w(a_t, b_t) / mean_{s,t} w(a_s, b_t): the expected
// weighted disagreement under independence is the average over all n^2
// rater-a/rater-b pairings.
inline double weighted_kappa(std::span<const int> a, std::span<const int> b,
                             int k) {
    const std::size_t n = a.size();
    auto weight = [&](int x, int y) {
        return std::abs(x - y) / static_cast<double>(k - 1);
    };
    double observed = 0.0;
    for (std::size_t t = 0; t < n; ++t) observed += weight(a[t], b[t]);
    observed /= static_cast<double>(n);
    double expected = 0.0;
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t) expected += weight(a[s], b[t]);
    expected /= static_cast<double>(n) * static_cast<double>(n);
    if (expected == 0.0) return 1.0;
    return 1.0 - observed / expected;
}

// Raw-moment form: (E[xy]-E[x]E[y]) / sqrt((E[x^2]-E[x]^2)(E[y^2]-E[y]^2)).
inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sx += a[i];
        sy += b[i];
        sxx += a[i] * a[i];
        syy += b[i] * b[i];
        sxy += a[i] * b[i];
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    if (vx <= 0.0 || vy <= 0.0)
        throw std::runtime_error("oracle pearson: constant input");
    return cov / std::sqrt(vx * vy);
}

// Average rank by counting: rank_i = #smaller + (#equal + 1) / 2.
inline std::vector<double> counting_ranks(std::span<const double> v) {
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t smaller = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++smaller;
            if (v[j] == v[i]) ++equal;
        }
        ranks[i] = static_cast<double>(smaller) +
                   (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return ranks;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = counting_ranks(a);
    const auto rb = counting_ranks(b);
    return pearson(ra, rb);
}

// tau-b from explicit pair enumeration.
inline double kendall_tau(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    std::int64_t concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) {
                ++ties_a;
                ++ties_b;
            } else if (da == 0.0) {
                ++ties_a;
            } else if (db == 0.0) {
                ++ties_b;
            } else if (da * db > 0.0) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const auto n64 = static_cast<std::int64_t>(n);
    const std::int64_t n0 = n64 * (n64 - 1) / 2;
    const double denom = std::sqrt(static_cast<double>(n0 - ties_a)) *
                         std::sqrt(static_cast<double>(n0 - ties_b));
    if (denom == 0.0)
        throw std::runtime_error("oracle kendall: all ties");
    return static_cast<double>(concordant - discordant) / denom;
}

inline std::vector<double> to_doubles(std::span<const int> v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace oracles
