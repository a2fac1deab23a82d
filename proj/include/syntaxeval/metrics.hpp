#pragma once

// Similarity between traversal label sequences. Jaccard and Dice compare the
// label sets, Levenshtein compares the sequences. Empty vs empty is 1.

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace syntaxeval::metrics {

struct SimilarityScores {
    double jaccard = 0.0;
    double levenshtein = 0.0;
    double sorensen_dice = 0.0;
    friend bool operator==(const SimilarityScores&, const SimilarityScores&) = default;
};

namespace detail {

template <typename T>
std::vector<T> sorted_set(const std::vector<T>& v) {
    std::vector<T> s(v);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

template <typename T>
std::size_t intersection_size(const std::vector<T>& a, const std::vector<T>& b) {
    std::size_t n = 0;
    for (auto i = a.begin(), j = b.begin(); i != a.end() && j != b.end();) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n, ++i, ++j;
        }
    }
    return n;
}

}  // namespace detail

template <typename T>
double jaccard(const std::vector<T>& a, const std::vector<T>& b) {
    const auto sa = detail::sorted_set(a), sb = detail::sorted_set(b);
    if (sa.empty() && sb.empty()) return 1.0;
    const auto inter = detail::intersection_size(sa, sb);
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

template <typename T>
double sorensen_dice(const std::vector<T>& a, const std::vector<T>& b) {
    const auto sa = detail::sorted_set(a), sb = detail::sorted_set(b);
    if (sa.empty() && sb.empty()) return 1.0;
    const auto inter = detail::intersection_size(sa, sb);
    return 2.0 * static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size());
}

// unit-cost insert/delete/substitute, two-row DP after trimming the common prefix and suffix
template <typename T>
std::size_t edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
    std::size_t lo = 0;
    std::size_t ea = a.size(), eb = b.size();
    while (lo < ea && lo < eb && a[lo] == b[lo]) ++lo;
    while (ea > lo && eb > lo && a[ea - 1] == b[eb - 1]) --ea, --eb;
    const std::size_t n = ea - lo, m = eb - lo;
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<std::size_t> row(m + 1);
    for (std::size_t j = 0; j <= m; ++j) row[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t up = row[j];
            const std::size_t sub = diag + (a[lo + i - 1] == b[lo + j - 1] ? 0 : 1);
            row[j] = std::min({up + 1, row[j - 1] + 1, sub});
            diag = up;
        }
    }
    return row[m];
}

template <typename T>
double levenshtein_norm(const std::vector<T>& a, const std::vector<T>& b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

template <typename T>
SimilarityScores score_labels(const std::vector<T>& a, const std::vector<T>& b) {
    return {jaccard(a, b), levenshtein_norm(a, b), sorensen_dice(a, b)};
}

// parses both sources and compares their traversal labels
[[nodiscard]] SimilarityScores score_sample(std::string_view ground_source, std::string_view predicted_source);

// traversal labels as views into the grammar's static tables
[[nodiscard]] std::vector<std::string_view> label_views(std::string_view source);

}  // namespace syntaxeval::metrics
