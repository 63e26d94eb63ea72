#pragma once

// Independent brute-force oracles for the metric tests. These deliberately
// avoid the library's implementations: n-gram counts use naive O(n^2)
// enumeration and the LCS uses a full DP table.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace oracles {

using Tokens = std::vector<std::string>;

struct Prf {
    double precision = 0, recall = 0, f = 0;
};

inline Prf prf(double matches, double pred_total, double ref_total) {
    Prf out;
    out.precision = pred_total > 0 ? matches / pred_total : 0.0;
    out.recall = ref_total > 0 ? matches / ref_total : 0.0;
    out.f = (out.precision + out.recall) > 0
                ? 2 * out.precision * out.recall / (out.precision + out.recall)
                : 0.0;
    return out;
}

// Clipped n-gram overlap by exhaustive enumeration.
inline Prf rouge_n_bruteforce(const Tokens& pred, const Tokens& ref, int n) {
    auto grams = [n](const Tokens& t) {
        std::vector<Tokens> out;
        for (size_t i = 0; i + n <= t.size(); ++i)
            out.emplace_back(t.begin() + i, t.begin() + i + n);
        return out;
    };
    const auto pg = grams(pred);
    const auto rg = grams(ref);
    std::map<Tokens, int> pc, rc;
    for (const auto& g : pg) ++pc[g];
    for (const auto& g : rg) ++rc[g];
    double matches = 0;
    for (const auto& [g, c] : pc) {
        auto it = rc.find(g);
        if (it != rc.end()) matches += std::min(c, it->second);
    }
    return prf(matches, static_cast<double>(pg.size()), static_cast<double>(rg.size()));
}

// Full-table LCS DP.
inline Prf rouge_l_bruteforce(const Tokens& pred, const Tokens& ref) {
    const size_t m = pred.size(), n = ref.size();
    if (m == 0 || n == 0) return prf(0, static_cast<double>(m), static_cast<double>(n));
    std::vector<std::vector<int>> dp(m + 1, std::vector<int>(n + 1, 0));
    for (size_t i = 1; i <= m; ++i)
        for (size_t j = 1; j <= n; ++j)
            dp[i][j] = pred[i - 1] == ref[j - 1] ? dp[i - 1][j - 1] + 1
                                                 : std::max(dp[i - 1][j], dp[i][j - 1]);
    return prf(dp[m][n], static_cast<double>(m), static_cast<double>(n));
}

// Fractional ranking by explicit position counting: rank(x) = number of
// strictly better values + (1 + number of ties) / 2... computed as the mean
// of occupied positions.
inline std::vector<double> rank_aggregate_bruteforce(
    const std::vector<std::vector<double>>& cells, const std::vector<bool>& higher_better) {
    const size_t n = cells.size();
    const size_t k = cells.empty() ? 0 : cells[0].size();
    std::vector<double> sums(n, 0.0);
    for (size_t col = 0; col < k; ++col) {
        for (size_t i = 0; i < n; ++i) {
            int better = 0, ties = 0;
            for (size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double vi = cells[i][col], vj = cells[j][col];
                if (vj == vi) ++ties;
                else if (higher_better[col] ? vj > vi : vj < vi) ++better;
            }
            // tied block occupies positions better+1 .. better+1+ties
            sums[i] += better + 1 + ties / 2.0;
        }
    }
    for (auto& s : sums) s /= static_cast<double>(k);
    return sums;
}

} // namespace oracles
