#pragma once

// Normalized spectral clustering (Ng, Jordan and Weiss): embed items with
// the top-k eigenvectors of D^-1/2 S D^-1/2, normalize rows, run k-means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "aesthmine/detail/random.hpp"
#include "aesthmine/error.hpp"

namespace aesthmine {

struct KMeansOptions {
    std::size_t restarts = 20;
    std::size_t max_iter = 300;
};

struct KMeansResult {
    std::vector<std::size_t> labels;
    double inertia = 0.0;
};

namespace detail {

inline double squared_distance(const Eigen::MatrixXd& X, Eigen::Index i, const Eigen::MatrixXd& C, Eigen::Index c) {
    return (X.row(i) - C.row(c)).squaredNorm();
}

/// Relabels clusters in order of first appearance.
inline std::vector<std::size_t> canonical_labels(const std::vector<std::size_t>& labels) {
    std::vector<std::size_t> map(labels.size() + 1, std::numeric_limits<std::size_t>::max());
    std::vector<std::size_t> out(labels.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& m = map[labels[i]];
        if (m == std::numeric_limits<std::size_t>::max()) m = next++;
        out[i] = m;
    }
    return out;
}

inline KMeansResult kmeans_once(const Eigen::MatrixXd& X, std::size_t k, Rng& rng, std::size_t max_iter) {
    const auto n = static_cast<std::size_t>(X.rows());
    Eigen::MatrixXd C(static_cast<Eigen::Index>(k), X.cols());

    // k-means++ seeding
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    C.row(0) = X.row(static_cast<Eigen::Index>(first));
    for (std::size_t c = 1; c < k; ++c) {
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], squared_distance(X, static_cast<Eigen::Index>(i), C, static_cast<Eigen::Index>(c - 1)));
        long pick = rng.categorical(d2);
        if (pick < 0) pick = static_cast<long>(rng.below(n));
        C.row(static_cast<Eigen::Index>(c)) = X.row(pick);
    }

    std::vector<std::size_t> labels(n, 0);
    std::vector<double> dist(n, 0.0);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(X, static_cast<Eigen::Index>(i), C, static_cast<Eigen::Index>(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (labels[i] != best) changed = true;
            labels[i] = best;
            dist[i] = best_d;
        }
        if (!changed) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(C.rows(), C.cols());
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(static_cast<Eigen::Index>(labels[i])) += X.row(static_cast<Eigen::Index>(i));
            ++sizes[labels[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) {
                C.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
                continue;
            }
            // Empty cluster: move it onto the point farthest from its center.
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (dist[i] > dist[far]) far = i;
            C.row(static_cast<Eigen::Index>(c)) = X.row(static_cast<Eigen::Index>(far));
            dist[far] = 0.0;
        }
    }
    KMeansResult r;
    r.labels = std::move(labels);
    for (std::size_t i = 0; i < n; ++i) r.inertia += dist[i];
    return r;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeds; the restart with the lowest
/// inertia wins (earliest on ties). Deterministic for a fixed seed.
inline KMeansResult kmeans(const Eigen::MatrixXd& X, std::size_t k, std::uint64_t seed, const KMeansOptions& opts = {}) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (k == 0 || k > n) throw ArgumentError("kmeans: k must be in [1, n]");
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(1, opts.restarts); ++r) {
        detail::Rng rng(detail::mix_seed(seed, r));
        auto res = detail::kmeans_once(X, k, rng, opts.max_iter);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    best.labels = detail::canonical_labels(best.labels);
    return best;
}

struct SpectralResult {
    /// Cluster id per item, numbered in order of first appearance.
    std::vector<std::size_t> labels;
    std::size_t n_clusters = 0;
    /// Items with zero similarity mass; each got a cluster of its own.
    std::vector<std::size_t> isolated;
};

inline SpectralResult spectral_cluster(const Eigen::MatrixXd& S, std::size_t k, std::uint64_t seed,
                                       const KMeansOptions& opts = {}) {
    const auto n = static_cast<std::size_t>(S.rows());
    if (S.rows() != S.cols()) throw ArgumentError("spectral_cluster: similarity matrix must be square");
    if (n == 0) throw ArgumentError("spectral_cluster: empty similarity matrix");
    if (k == 0 || k > n) throw ArgumentError("spectral_cluster: k must be in [1, n]");
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double a = S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (!std::isfinite(a) || a < 0.0) throw ArgumentError("spectral_cluster: similarities must be finite and non-negative");
            if (std::abs(a - S(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i))) > 1e-12 * scale)
                throw ArgumentError("spectral_cluster: similarity matrix must be symmetric");
        }

    SpectralResult out;
    out.labels.assign(n, 0);
    std::vector<std::size_t> connected;
    const Eigen::VectorXd degree = S.rowwise().sum();
    for (std::size_t i = 0; i < n; ++i) {
        if (degree(static_cast<Eigen::Index>(i)) > 0.0)
            connected.push_back(i);
        else
            out.isolated.push_back(i);
    }

    std::vector<std::size_t> raw(n, 0);
    std::size_t next_label = 0;
    const std::size_t k_rest = connected.empty() ? 0
                                                 : std::clamp<std::size_t>(k > out.isolated.size() ? k - out.isolated.size() : 1,
                                                                           1, connected.size());
    if (k_rest == 1) {
        for (auto i : connected) raw[i] = 0;
        next_label = connected.empty() ? 0 : 1;
    } else if (k_rest > 1) {
        const auto m = static_cast<Eigen::Index>(connected.size());
        Eigen::MatrixXd L(m, m);
        Eigen::VectorXd inv_sqrt(m);
        for (Eigen::Index a = 0; a < m; ++a) inv_sqrt(a) = 1.0 / std::sqrt(degree(static_cast<Eigen::Index>(connected[a])));
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b)
                L(a, b) = inv_sqrt(a) * S(static_cast<Eigen::Index>(connected[a]), static_cast<Eigen::Index>(connected[b])) * inv_sqrt(b);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L);
        if (eig.info() != Eigen::Success) throw NumericError("spectral_cluster: eigen-decomposition failed");
        // Eigenvalues come back ascending; keep the k largest.
        Eigen::MatrixXd U = eig.eigenvectors().rightCols(static_cast<Eigen::Index>(k_rest));
        for (Eigen::Index a = 0; a < m; ++a) {
            const double norm = U.row(a).norm();
            if (norm > 0.0) U.row(a) /= norm;
        }
        auto km = kmeans(U, k_rest, seed, opts);
        for (std::size_t a = 0; a < connected.size(); ++a) raw[connected[a]] = km.labels[a];
        next_label = k_rest;
    }
    for (auto i : out.isolated) raw[i] = next_label++;
    out.labels = detail::canonical_labels(raw);
    out.n_clusters = next_label;
    return out;
}

}  // namespace aesthmine
