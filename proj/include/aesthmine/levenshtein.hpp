#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string_view>
#include <vector>

namespace aesthmine {

/// Unit-cost edit distance (insert, delete, substitute) over bytes, using a
/// single rolling row of the dynamic-programming table.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    if (b.empty()) return a.size();

    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i + 1;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const std::size_t up = row[j + 1];
            const std::size_t sub = diag + (a[i] == b[j] ? 0 : 1);
            row[j + 1] = std::min({up + 1, row[j] + 1, sub});
            diag = up;
        }
    }
    return row[b.size()];
}

}  // namespace aesthmine
