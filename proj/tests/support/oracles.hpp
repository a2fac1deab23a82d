#pragma once

// Definitional versions of the similarity metrics, written from the textbook
// formulas and sharing no code with the library.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace testsupport {

using Labels = std::vector<std::string>;

// lev(i, j) on suffixes a[i:], b[j:], memoised
inline std::size_t recursive_levenshtein(const Labels& a, const Labels& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> lev = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        const auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t d;
        if (a[i] == b[j]) {
            d = lev(i + 1, j + 1);
        } else {
            d = 1 + std::min({lev(i + 1, j), lev(i, j + 1), lev(i + 1, j + 1)});
        }
        memo[key] = d;
        return d;
    };
    return lev(0, 0);
}

inline double oracle_levenshtein_similarity(const Labels& a, const Labels& b) {
    if (a.empty() && b.empty()) return 1.0;
    return 1.0 - static_cast<double>(recursive_levenshtein(a, b)) / static_cast<double>(std::max(a.size(), b.size()));
}

inline double oracle_jaccard(const Labels& a, const Labels& b) {
    const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::set<std::string> inter, uni;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(inter, inter.end()));
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(uni, uni.end()));
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

inline double oracle_dice(const Labels& a, const Labels& b) {
    const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::set<std::string> inter;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(inter, inter.end()));
    return 2.0 * static_cast<double>(inter.size()) / static_cast<double>(sa.size() + sb.size());
}

// every sequence of length 0..max_len over the alphabet
inline std::vector<Labels> all_sequences(const Labels& alphabet, std::size_t max_len) {
    std::vector<Labels> out{{}};
    std::vector<Labels> frontier{{}};
    for (std::size_t len = 1; len <= max_len; ++len) {
        std::vector<Labels> next;
        for (const auto& s : frontier) {
            for (const auto& c : alphabet) {
                auto t = s;
                t.push_back(c);
                next.push_back(std::move(t));
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

}  // namespace testsupport
