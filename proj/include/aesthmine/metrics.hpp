#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "aesthmine/error.hpp"

namespace aesthmine {

class UndefinedCorrelation : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

/// 1-based ranks; tied values share the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && xs[order[j]] == xs[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) throw UndefinedCorrelation("correlation undefined: zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Spearman's rank correlation with average ranks for ties.
inline double spearman_rho(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ArgumentError("spearman_rho: length mismatch");
    if (a.size() < 2) throw UndefinedCorrelation("spearman_rho needs at least two observations");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ordered correctly, ties counting one half.
inline double compute_auc(std::span<const double> pos, std::span<const double> neg) {
    if (pos.empty() || neg.empty()) throw ArgumentError("compute_auc needs positive and negative scores");
    std::vector<std::pair<double, bool>> all;
    all.reserve(pos.size() + neg.size());
    for (double s : pos) all.emplace_back(s, true);
    for (double s : neg) all.emplace_back(s, false);
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    double correct = 0.0;
    double neg_below = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        double p = 0.0, q = 0.0;
        while (j < all.size() && all[j].first == all[i].first) {
            (all[j].second ? p : q) += 1.0;
            ++j;
        }
        correct += p * neg_below + 0.5 * p * q;
        neg_below += q;
        i = j;
    }
    return correct / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

}  // namespace aesthmine
