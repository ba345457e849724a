#include "qaeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qaeval/errors.hpp"

namespace qaeval::stats {

namespace {

void require_paired(std::size_t na, std::size_t nb, std::size_t min_n) {
    if (na != nb)
        fail(ErrorKind::validation,
             "score vectors differ in length: " + std::to_string(na) + " vs " +
                 std::to_string(nb));
    if (na < min_n)
        fail(ErrorKind::validation,
             "need at least " + std::to_string(min_n) + " paired scores, got " +
                 std::to_string(na));
}

std::vector<double> to_doubles(std::span<const int> v) {
    return std::vector<double>(v.begin(), v.end());
}

// Counts inversions of `v` in place (merge sort); equal elements are not
// inversions.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& tmp,
                              std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t inv = count_inversions(v, tmp, lo, mid) +
                       count_inversions(v, tmp, mid, hi);
    std::size_t i = lo, j = mid, out = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += static_cast<std::int64_t>(mid - i);
            tmp[out++] = v[j++];
        } else {
            tmp[out++] = v[i++];
        }
    }
    while (i < mid) tmp[out++] = v[i++];
    while (j < hi) tmp[out++] = v[j++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
              tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

std::int64_t tie_pair_count(std::vector<double> sorted) {
    std::int64_t pairs = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        std::int64_t t = static_cast<std::int64_t>(j - i + 1);
        pairs += t * (t - 1) / 2;
        i = j + 1;
    }
    return pairs;
}

}  // namespace

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
        for (auto c : row) t += c;
    return t;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
}

double weighted_kappa(std::span<const int> a, std::span<const int> b, int k,
                      KappaWeighting weighting, bool* degenerate) {
    (void)weighting;  // only linear is defined
    require_paired(a.size(), b.size(), 2);
    if (k < 2) fail(ErrorKind::validation, "category count must be >= 2");
    if (degenerate) *degenerate = false;

    const auto n = static_cast<double>(a.size());
    std::vector<double> observed(static_cast<std::size_t>(k) * k, 0.0);
    std::vector<double> row(k, 0.0), col(k, 0.0);
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a[t] < 0 || a[t] >= k || b[t] < 0 || b[t] >= k)
            fail(ErrorKind::validation,
                 "score out of range 0.." + std::to_string(k - 1) +
                     " at index " + std::to_string(t));
        observed[static_cast<std::size_t>(a[t]) * k + b[t]] += 1.0;
        row[a[t]] += 1.0;
        col[b[t]] += 1.0;
    }

    double weighted_observed = 0.0;
    double weighted_expected = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const double w = std::abs(i - j) / static_cast<double>(k - 1);
            weighted_observed += w * observed[static_cast<std::size_t>(i) * k + j] / n;
            weighted_expected += w * (row[i] / n) * (col[j] / n);
        }
    }

    if (weighted_expected == 0.0) {
        // Both raters constant and equal: perfect but uninformative.
        if (degenerate) *degenerate = true;
        return 1.0;
    }
    return 1.0 - weighted_observed / weighted_expected;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    require_paired(a.size(), b.size(), 2);
    const auto n = static_cast<double>(a.size());
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0)
        fail(ErrorKind::validation, "pearson undefined for constant input");
    return cov / std::sqrt(var_a * var_b);
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> ranks(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        // positions i..j (0-based) share the mean of 1-based ranks i+1..j+1
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    require_paired(a.size(), b.size(), 2);
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    return pearson(ra, rb);
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
    require_paired(a.size(), b.size(), 2);
    const auto n = static_cast<std::int64_t>(a.size());

    std::vector<std::size_t> order(a.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (a[x] != a[y]) return a[x] < a[y];
        return b[x] < b[y];
    });

    // Pairs tied in a, in b, and in both.
    std::int64_t n1 = tie_pair_count(std::vector<double>(a.begin(), a.end()));
    std::int64_t n2 = tie_pair_count(std::vector<double>(b.begin(), b.end()));
    std::int64_t n3 = 0;
    {
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && a[order[j + 1]] == a[order[i]] &&
                   b[order[j + 1]] == b[order[i]])
                ++j;
            std::int64_t t = static_cast<std::int64_t>(j - i + 1);
            n3 += t * (t - 1) / 2;
            i = j + 1;
        }
    }

    const std::int64_t n0 = n * (n - 1) / 2;
    if (n0 == n1 || n0 == n2)
        fail(ErrorKind::validation, "kendall tau-b undefined: all ties in one vector");

    // After sorting by (a, b), inversions in b are exactly the discordant
    // pairs: ties in a contribute none (b ascending within a group), ties
    // in b are not counted as inversions.
    std::vector<double> b_sorted(a.size());
    for (std::size_t i = 0; i < order.size(); ++i) b_sorted[i] = b[order[i]];
    std::vector<double> tmp(b_sorted.size());
    const std::int64_t discordant =
        count_inversions(b_sorted, tmp, 0, b_sorted.size());

    // concordant + discordant = pairs untied in both vectors
    const std::int64_t untied = n0 - n1 - n2 + n3;
    const std::int64_t concordant = untied - discordant;
    const double num = static_cast<double>(concordant - discordant);
    const double den = std::sqrt(static_cast<double>(n0 - n1)) *
                       std::sqrt(static_cast<double>(n0 - n2));
    return num / den;
}

double pearson(std::span<const int> a, std::span<const int> b) {
    return pearson(std::span<const double>(to_doubles(a)),
                   std::span<const double>(to_doubles(b)));
}

double spearman(std::span<const int> a, std::span<const int> b) {
    return spearman(std::span<const double>(to_doubles(a)),
                    std::span<const double>(to_doubles(b)));
}

double kendall_tau(std::span<const int> a, std::span<const int> b) {
    return kendall_tau(std::span<const double>(to_doubles(a)),
                       std::span<const double>(to_doubles(b)));
}

ExactWithin exact_and_within(std::span<const int> a, std::span<const int> b,
                             int radius) {
    require_paired(a.size(), b.size(), 1);
    std::int64_t exact = 0, within = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++exact;
        if (std::abs(a[i] - b[i]) <= radius) ++within;
    }
    const auto n = static_cast<double>(a.size());
    return {100.0 * static_cast<double>(exact) / n,
            100.0 * static_cast<double>(within) / n};
}

ConfusionMatrix confusion(std::span<const int> a, std::span<const int> b,
                          int k) {
    require_paired(a.size(), b.size(), 1);
    if (k < 1 || k > 6)
        fail(ErrorKind::validation, "confusion matrix supports 1..6 categories");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 0 || a[i] >= k || b[i] < 0 || b[i] >= k)
            fail(ErrorKind::validation,
                 "score out of range 0.." + std::to_string(k - 1) +
                     " at index " + std::to_string(i));
        ++m.counts[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
    }
    return m;
}

int round_score(double v) {
    return static_cast<int>(std::lround(v));  // halves away from zero
}

ScoreDistribution distribution(std::span<const double> scores,
                               std::span<const int> thresholds) {
    if (scores.empty())
        fail(ErrorKind::validation, "distribution needs at least one score");
    ScoreDistribution d;
    d.n = scores.size();
    for (int bucket = 0; bucket <= 5; ++bucket) d.histogram[bucket] = 0;
    double sum = 0.0;
    for (double s : scores) {
        if (s < 0.0 || s > 5.0)
            fail(ErrorKind::validation,
                 "score outside [0,5]: " + std::to_string(s));
        sum += s;
        ++d.histogram[round_score(s)];
    }
    d.mean = sum / static_cast<double>(d.n);
    for (int t : thresholds) {
        std::int64_t at_least = 0;
        for (double s : scores)
            if (s >= static_cast<double>(t)) ++at_least;
        d.pct_at_least[t] =
            100.0 * static_cast<double>(at_least) / static_cast<double>(d.n);
    }
    return d;
}

ScoreDistribution distribution(std::span<const double> scores) {
    static const int kDefault[] = {3, 4};
    return distribution(scores, kDefault);
}

AgreementReport agreement_report(std::span<const int> a,
                                 std::span<const int> b) {
    AgreementReport r;
    r.n = a.size();
    r.kappa_w = weighted_kappa(a, b, 6);
    r.pearson_r = pearson(a, b);
    r.spearman_rho = spearman(a, b);
    r.kendall_tau = kendall_tau(a, b);
    const ExactWithin ew = exact_and_within(a, b, 1);
    r.exact_pct = ew.exact_pct;
    r.within1_pct = ew.within_pct;
    r.confusion = confusion(a, b, 6);
    return r;
}

nlohmann::json to_json(const AgreementReport& report) {
    nlohmann::json confusion_rows = nlohmann::json::array();
    for (const auto& row : report.confusion.counts)
        confusion_rows.push_back(row);
    return nlohmann::json{
        {"kappa_w", report.kappa_w},
        {"pearson_r", report.pearson_r},
        {"spearman_rho", report.spearman_rho},
        {"kendall_tau", report.kendall_tau},
        {"exact_pct", report.exact_pct},
        {"within1_pct", report.within1_pct},
        {"confusion", confusion_rows},
        {"n", report.n},
    };
}

nlohmann::json to_json(const ScoreDistribution& dist) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [bucket, count] : dist.histogram)
        hist[std::to_string(bucket)] = count;
    nlohmann::json at_least = nlohmann::json::object();
    for (const auto& [threshold, pct] : dist.pct_at_least)
        at_least[std::to_string(threshold)] = pct;
    return nlohmann::json{
        {"histogram", hist},
        {"pct_at_least", at_least},
        {"mean", dist.mean},
        {"n", dist.n},
    };
}

std::string distribution_csv(const ScoreDistribution& dist) {
    std::ostringstream out;
    out << "bucket,count\n";
    for (const auto& [bucket, count] : dist.histogram)
        out << bucket << "," << count << "\n";
    char buf[64];
    for (const auto& [threshold, pct] : dist.pct_at_least) {
        std::snprintf(buf, sizeof(buf), "%.2f", pct);
        out << "pct_at_least_" << threshold << "," << buf << "\n";
    }
    std::snprintf(buf, sizeof(buf), "%.6f", dist.mean);
    out << "mean," << buf << "\n";
    out << "n," << dist.n << "\n";
    return out.str();
}

std::string agreement_csv(const AgreementReport& report) {
    std::ostringstream out;
    char buf[64];
    out << "statistic,value\n";
    auto row = [&](const char* name, double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        out << name << "," << buf << "\n";
    };
    row("kappa_w", report.kappa_w);
    row("pearson_r", report.pearson_r);
    row("spearman_rho", report.spearman_rho);
    row("kendall_tau", report.kendall_tau);
    row("exact_pct", report.exact_pct);
    row("within1_pct", report.within1_pct);
    out << "n," << report.n << "\n";
    return out.str();
}

std::string confusion_svg(const ConfusionMatrix& m) {
    const int cell = 60;
    const int margin = 70;
    const int grid = 6 * cell;
    const int width = margin + grid + 20;
    const int height = margin + grid + 20;

    std::int64_t max_count = 1;
    for (const auto& row : m.counts)
        for (auto c : row) max_count = std::max(max_count, c);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    svg << "<text x=\"" << margin + grid / 2 << "\" y=\"20\" "
        << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << "judge score</text>\n";
    svg << "<text x=\"16\" y=\"" << margin + grid / 2 << "\" "
        << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << margin + grid / 2 << ")\">"
        << "SME score</text>\n";

    for (int i = 0; i < 6; ++i) {
        // row = SME score i, drawn top-down from 5 to 0 so the diagonal
        // reads bottom-left to top-right like a scatter plot
        const int row = 5 - i;
        for (int j = 0; j < 6; ++j) {
            const std::int64_t count = m.counts[static_cast<std::size_t>(row)]
                                               [static_cast<std::size_t>(j)];
            const double intensity =
                static_cast<double>(count) / static_cast<double>(max_count);
            const int shade = 255 - static_cast<int>(intensity * 205.0);
            const int x = margin + j * cell;
            const int y = margin - 30 + i * cell;
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ","
                << shade << ",255)\" stroke=\"#888\"/>\n";
            svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 5
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                << "font-size=\"14\">" << count << "</text>\n";
        }
        svg << "<text x=\"" << margin - 12 << "\" y=\""
            << margin - 30 + i * cell + cell / 2 + 5
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
            << "font-size=\"12\">" << row << "</text>\n";
    }
    for (int j = 0; j < 6; ++j) {
        svg << "<text x=\"" << margin + j * cell + cell / 2 << "\" y=\""
            << margin - 30 + grid + 16
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            << "font-size=\"12\">" << j << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace qaeval::stats
