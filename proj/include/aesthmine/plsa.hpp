#pragma once

// Probabilistic latent semantic analysis over raw term counts, fit by EM.
// Used as the unsupervised comparison point for attribute discovery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aesthmine/detail/parallel.hpp"
#include "aesthmine/detail/random.hpp"
#include "aesthmine/error.hpp"
#include "aesthmine/text.hpp"

namespace aesthmine {

struct PlsaOptions {
    std::size_t topics = 50;
    std::size_t iters = 200;
    std::uint64_t seed = 0;
    /// Stop once the log-likelihood gain per token drops below this.
    double min_gain_per_token = 1e-6;
    unsigned jobs = 1;
};

struct PlsaModel {
    std::size_t topics = 0;
    std::size_t vocab_size = 0;
    std::size_t documents = 0;
    /// topics x vocab_size, row-major; rows sum to one.
    std::vector<double> word_given_topic;
    /// documents x topics, row-major; rows sum to one.
    std::vector<double> topic_given_doc;
    /// Log-likelihood of the initial parameters, then after each iteration.
    std::vector<double> loglik_trace;

    double p_word(std::size_t z, std::size_t w) const { return word_given_topic[z * vocab_size + w]; }
    double p_topic(std::size_t d, std::size_t z) const { return topic_given_doc[d * topics + z]; }
};

/// Starting point for EM; both matrices row-stochastic.
struct PlsaInit {
    std::vector<double> word_given_topic;
    std::vector<double> topic_given_doc;
};

namespace detail {

inline void check_counts(const DocumentMatrix& X) {
    for (const auto& row : X.rows)
        for (double v : row.values)
            if (!(v >= 0.0) || v != std::floor(v)) throw ArgumentError("pLSA needs non-negative integer counts");
}

inline void normalize_rows(std::vector<double>& m, std::size_t cols) {
    for (std::size_t r = 0; r * cols < m.size(); ++r) {
        KahanSum s;
        for (std::size_t c = 0; c < cols; ++c) s.add(m[r * cols + c]);
        const double total = s.value();
        for (std::size_t c = 0; c < cols; ++c)
            m[r * cols + c] = total > 0.0 ? m[r * cols + c] / total : 1.0 / static_cast<double>(cols);
    }
}

}  // namespace detail

inline PlsaInit random_plsa_init(std::size_t documents, std::size_t vocab_size, std::size_t topics, std::uint64_t seed) {
    detail::Rng rng(seed);
    PlsaInit init;
    init.word_given_topic.resize(topics * vocab_size);
    init.topic_given_doc.resize(documents * topics);
    for (auto& v : init.word_given_topic) v = 0.5 + rng.uniform();
    for (auto& v : init.topic_given_doc) v = 0.5 + rng.uniform();
    detail::normalize_rows(init.word_given_topic, vocab_size);
    detail::normalize_rows(init.topic_given_doc, topics);
    return init;
}

/// sum_d sum_w n(d,w) log sum_z p(z|d) p(w|z).
inline double plsa_log_likelihood(const DocumentMatrix& X, const PlsaModel& m) {
    detail::KahanSum ll;
    for (std::size_t d = 0; d < X.size(); ++d) {
        const auto& row = X.rows[d];
        for (std::size_t k = 0; k < row.nnz(); ++k) {
            double p = 0.0;
            for (std::size_t z = 0; z < m.topics; ++z) p += m.p_topic(d, z) * m.p_word(z, row.indices[k]);
            ll.add(row.values[k] * std::log(p));
        }
    }
    return ll.value();
}

inline PlsaModel fit_plsa(const DocumentMatrix& X, PlsaInit init, const PlsaOptions& opts) {
    if (X.size() == 0 || X.dim == 0) throw ArgumentError("fit_plsa: empty matrix");
    if (opts.topics < 1) throw ArgumentError("fit_plsa: need at least one topic");
    detail::check_counts(X);
    const std::size_t K = opts.topics, V = X.dim, N = X.size();
    if (init.word_given_topic.size() != K * V || init.topic_given_doc.size() != N * K)
        throw ArgumentError("fit_plsa: initial parameters have the wrong shape");

    PlsaModel m;
    m.topics = K;
    m.vocab_size = V;
    m.documents = N;
    m.word_given_topic = std::move(init.word_given_topic);
    m.topic_given_doc = std::move(init.topic_given_doc);

    std::vector<std::size_t> offset(N + 1, 0);
    double tokens = 0.0;
    for (std::size_t d = 0; d < N; ++d) {
        offset[d + 1] = offset[d] + X.rows[d].nnz();
        for (double v : X.rows[d].values) tokens += v;
    }
    std::vector<double> denom(offset[N]);

    // Mixture probability of every observed (d, w) pair; returns the
    // log-likelihood of the current parameters as a by-product.
    auto expectation = [&] {
        std::vector<double> doc_ll(N, 0.0);
        detail::parallel_for(N, opts.jobs, [&](std::size_t d) {
            const auto& row = X.rows[d];
            detail::KahanSum ll;
            for (std::size_t k = 0; k < row.nnz(); ++k) {
                double p = 0.0;
                for (std::size_t z = 0; z < K; ++z) p += m.p_topic(d, z) * m.p_word(z, row.indices[k]);
                denom[offset[d] + k] = p;
                ll.add(row.values[k] * std::log(p));
            }
            doc_ll[d] = ll.value();
        });
        detail::KahanSum total;
        for (double v : doc_ll) total.add(v);
        return total.value();
    };

    m.loglik_trace.push_back(expectation());
    std::vector<double> next_word(K * V), next_topic(N * K);
    for (std::size_t it = 0; it < opts.iters; ++it) {
        // p(w|z): one topic per task, documents always visited in order.
        detail::parallel_for(K, opts.jobs, [&](std::size_t z) {
            std::vector<detail::KahanSum> acc(V);
            for (std::size_t d = 0; d < N; ++d) {
                const auto& row = X.rows[d];
                const double pz = m.p_topic(d, z);
                for (std::size_t k = 0; k < row.nnz(); ++k) {
                    const double q = denom[offset[d] + k];
                    if (q > 0.0) acc[row.indices[k]].add(row.values[k] * pz * m.p_word(z, row.indices[k]) / q);
                }
            }
            for (std::size_t w = 0; w < V; ++w) next_word[z * V + w] = acc[w].value();
        });
        // p(z|d)
        detail::parallel_for(N, opts.jobs, [&](std::size_t d) {
            const auto& row = X.rows[d];
            for (std::size_t z = 0; z < K; ++z) {
                detail::KahanSum acc;
                const double pz = m.p_topic(d, z);
                for (std::size_t k = 0; k < row.nnz(); ++k) {
                    const double q = denom[offset[d] + k];
                    if (q > 0.0) acc.add(row.values[k] * pz * m.p_word(z, row.indices[k]) / q);
                }
                next_topic[d * K + z] = acc.value();
            }
        });
        detail::normalize_rows(next_word, V);
        detail::normalize_rows(next_topic, K);
        std::swap(m.word_given_topic, next_word);
        std::swap(m.topic_given_doc, next_topic);

        m.loglik_trace.push_back(expectation());
        const double gain = m.loglik_trace.back() - m.loglik_trace[m.loglik_trace.size() - 2];
        if (tokens > 0.0 && gain / tokens < opts.min_gain_per_token) break;
    }
    return m;
}

inline PlsaModel fit_plsa(const DocumentMatrix& X, const PlsaOptions& opts) {
    if (X.size() == 0 || X.dim == 0) throw ArgumentError("fit_plsa: empty matrix");
    return fit_plsa(X, random_plsa_init(X.size(), X.dim, opts.topics, opts.seed), opts);
}

/// Most probable terms of topic z, ties broken by term text.
inline std::vector<std::pair<std::string, double>> top_terms(const PlsaModel& m, const Vocabulary& vocab,
                                                             std::size_t z, std::size_t count) {
    if (z >= m.topics) throw ArgumentError("top_terms: topic index out of range");
    if (vocab.size() != m.vocab_size) throw ArgumentError("top_terms: vocabulary does not match model");
    std::vector<std::pair<std::string, double>> all;
    all.reserve(m.vocab_size);
    for (std::size_t w = 0; w < m.vocab_size; ++w) all.emplace_back(vocab.term(w).text(), m.p_word(z, w));
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (all.size() > count) all.resize(count);
    return all;
}

inline nlohmann::json plsa_summary(const PlsaModel& m, const Vocabulary& vocab, std::size_t terms_per_topic = 20) {
    auto topics = nlohmann::json::array();
    for (std::size_t z = 0; z < m.topics; ++z) {
        auto terms = nlohmann::json::array();
        for (const auto& [t, p] : top_terms(m, vocab, z, terms_per_topic)) terms.push_back({{"term", t}, {"p", p}});
        topics.push_back({{"topic", z}, {"terms", std::move(terms)}});
    }
    return {{"topics", std::move(topics)}, {"iterations", m.loglik_trace.size() - 1},
            {"loglik", m.loglik_trace.back()}};
}

}  // namespace aesthmine
