#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace qaeval::stats {

// Rows are rater-a scores (SME), columns rater-b scores (judge).
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, 6>, 6> counts{};

    std::int64_t total() const;
    std::int64_t trace() const;
};

struct AgreementReport {
    double kappa_w = 0.0;      // linear-weighted Cohen's kappa
    double pearson_r = 0.0;
    double spearman_rho = 0.0;
    double kendall_tau = 0.0;  // tau-b
    double exact_pct = 0.0;
    double within1_pct = 0.0;
    ConfusionMatrix confusion;
    std::size_t n = 0;
};

struct ScoreDistribution {
    std::map<int, std::int64_t> histogram;  // integer bucket 0..5 -> count
    std::map<int, double> pct_at_least;     // threshold -> percentage
    double mean = 0.0;
    std::size_t n = 0;
};

enum class KappaWeighting { linear };

// kappa_w = 1 - sum(w*O) / sum(w*E), linear weights w_ij = |i-j|/(k-1).
// Scores must lie in 0..k-1. When both raters are constant and agree the
// expected disagreement is zero; that degenerate case is defined as 1.0
// and flagged via `degenerate` when provided.
double weighted_kappa(std::span<const int> a, std::span<const int> b, int k,
                      KappaWeighting weighting = KappaWeighting::linear,
                      bool* degenerate = nullptr);

// Sample Pearson correlation. Throws on constant input.
double pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of average ranks (ties share the mean of the rank
// positions they occupy).
double spearman(std::span<const double> a, std::span<const double> b);

// Kendall tau-b with tie corrections; O(n log n) via merge-sort inversion
// counting. Throws when either vector is all ties.
double kendall_tau(std::span<const double> a, std::span<const double> b);

// 1-based average ranks, ties averaged.
std::vector<double> average_ranks(std::span<const double> v);

struct ExactWithin {
    double exact_pct = 0.0;
    double within_pct = 0.0;
};

ExactWithin exact_and_within(std::span<const int> a, std::span<const int> b,
                             int radius = 1);

ConfusionMatrix confusion(std::span<const int> a, std::span<const int> b,
                          int k = 6);

// Histogram over integer buckets (real-valued scores bucketed by
// round_score); pct_at_least and mean are computed on unrounded values.
ScoreDistribution distribution(std::span<const double> scores,
                               std::span<const int> thresholds);
ScoreDistribution distribution(std::span<const double> scores);  // {3,4}

// Fixed rounding rule for real-valued means: nearest integer, halves away
// from zero.
int round_score(double v);

// Convenience overloads for integer score vectors.
double pearson(std::span<const int> a, std::span<const int> b);
double spearman(std::span<const int> a, std::span<const int> b);
double kendall_tau(std::span<const int> a, std::span<const int> b);

// Full agreement report for one pairing of integer score vectors (k = 6).
AgreementReport agreement_report(std::span<const int> a,
                                 std::span<const int> b);

nlohmann::json to_json(const AgreementReport& report);
nlohmann::json to_json(const ScoreDistribution& dist);
std::string distribution_csv(const ScoreDistribution& dist);
std::string agreement_csv(const AgreementReport& report);

// 6x6 heatmap with annotated counts.
std::string confusion_svg(const ConfusionMatrix& m);

}  // namespace qaeval::stats
