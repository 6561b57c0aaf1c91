#pragma once

// Textual attribute discovery: pick the strongest positive and negative
// bigrams of the regression, group synonyms by spectral clustering on the
// edit distance of their second words, name each group and collect the
// images whose comments mention any member.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "aesthmine/corpus.hpp"
#include "aesthmine/detail/parallel.hpp"
#include "aesthmine/detail/random.hpp"
#include "aesthmine/elastic_net.hpp"
#include "aesthmine/levenshtein.hpp"
#include "aesthmine/spectral.hpp"
#include "aesthmine/text.hpp"

namespace aesthmine {

enum class Polarity { Beautiful, Ugly };

inline const char* to_string(Polarity p) { return p == Polarity::Beautiful ? "beautiful" : "ugly"; }

inline Polarity parse_polarity(std::string_view s) {
    const auto l = detail::to_lower(s);
    if (l == "beautiful") return Polarity::Beautiful;
    if (l == "ugly") return Polarity::Ugly;
    throw ParseError("unknown polarity \"" + std::string(s) + "\"");
}

struct CandidateTerm {
    Term term;
    double weight = 0.0;
    Polarity polarity = Polarity::Beautiful;

    bool operator==(const CandidateTerm&) const = default;
};

struct CandidateSelection {
    std::vector<CandidateTerm> beautiful;  // weight descending
    std::vector<CandidateTerm> ugly;       // weight ascending
    bool beautiful_shortfall = false;
    bool ugly_shortfall = false;
};

/// Top k bigrams by weight for each sign; unigrams and zero weights never
/// qualify. Ties are broken by term text.
inline CandidateSelection select_candidates(const ElasticNetModel& model, const Vocabulary& vocab, std::size_t k) {
    if (model.beta.size() != vocab.size()) throw ArgumentError("select_candidates: model and vocabulary sizes differ");
    CandidateSelection sel;
    for (std::size_t j = 0; j < vocab.size(); ++j) {
        const double b = model.beta[j];
        if (b == 0.0 || vocab.term(j).kind != TermKind::Bigram) continue;
        (b > 0 ? sel.beautiful : sel.ugly)
            .push_back({vocab.term(j), b, b > 0 ? Polarity::Beautiful : Polarity::Ugly});
    }
    auto by_strength = [](const CandidateTerm& a, const CandidateTerm& b) {
        const double x = std::abs(a.weight), y = std::abs(b.weight);
        if (x != y) return x > y;
        return a.term < b.term;
    };
    for (auto* list : {&sel.beautiful, &sel.ugly}) {
        std::sort(list->begin(), list->end(), by_strength);
        if (list->size() > k) list->resize(k);
    }
    sel.beautiful_shortfall = sel.beautiful.size() < k;
    sel.ugly_shortfall = sel.ugly.size() < k;
    return sel;
}

/// S_ij = exp(-levenshtein(second_i, second_j) / sigma); first words ignored.
inline Eigen::MatrixXd similarity_matrix(const std::vector<CandidateTerm>& cands, double sigma = 1.0,
                                         unsigned jobs = 1) {
    if (!(sigma > 0.0)) throw ArgumentError("similarity_matrix: sigma must be positive");
    for (const auto& c : cands)
        if (c.polarity != cands.front().polarity)
            throw ArgumentError("similarity_matrix: candidates must share one polarity");
    const auto n = static_cast<Eigen::Index>(cands.size());
    Eigen::MatrixXd S(n, n);
    detail::parallel_for(cands.size(), jobs, [&](std::size_t i) {
        const auto a = static_cast<Eigen::Index>(i);
        S(a, a) = 1.0;
        for (Eigen::Index b = 0; b < n; ++b) {
            if (b == a) continue;
            const auto d = levenshtein(cands[i].term.second, cands[static_cast<std::size_t>(b)].term.second);
            S(a, b) = std::exp(-static_cast<double>(d) / sigma);
        }
    });
    return S;
}

struct AttributeCluster {
    std::vector<CandidateTerm> members;
    Term label;
    Polarity polarity = Polarity::Beautiful;
};

/// Spectral clustering of one polarity's candidates into at most
/// `n_clusters` groups. Clusters come out ordered by their first member in
/// candidate order; labels are left to name_clusters.
inline std::vector<AttributeCluster> cluster_candidates(const std::vector<CandidateTerm>& cands, std::size_t n_clusters,
                                                        double sigma, std::uint64_t seed, unsigned jobs = 1) {
    if (cands.empty()) return {};
    const auto S = similarity_matrix(cands, sigma, jobs);
    const auto res = spectral_cluster(S, std::min(n_clusters, cands.size()), seed);
    std::vector<AttributeCluster> clusters(res.n_clusters);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        auto& c = clusters[res.labels[i]];
        c.polarity = cands[i].polarity;
        c.members.push_back(cands[i]);
    }
    std::erase_if(clusters, [](const auto& c) { return c.members.empty(); });
    for (auto& c : clusters) c.label = c.members.front().term;
    return clusters;
}

enum class NamingMode { MaxWeight, Random };

/// MaxWeight labels each cluster with its largest-|weight| member (ties to
/// the lexicographically smaller bigram); Random draws a member uniformly.
inline std::vector<AttributeCluster> name_clusters(std::vector<AttributeCluster> clusters,
                                                   NamingMode mode = NamingMode::MaxWeight, std::uint64_t seed = 0) {
    detail::Rng rng(seed);
    for (auto& c : clusters) {
        if (c.members.empty()) throw ArgumentError("name_clusters: empty cluster");
        if (mode == NamingMode::Random) {
            c.label = c.members[static_cast<std::size_t>(rng.below(c.members.size()))].term;
            continue;
        }
        const CandidateTerm* best = &c.members.front();
        for (const auto& m : c.members) {
            const double a = std::abs(m.weight), b = std::abs(best->weight);
            if (a > b || (a == b && m.term.text() < best->term.text())) best = &m;
        }
        c.label = best->term;
    }
    return clusters;
}

struct TextualAttribute {
    AttributeCluster cluster;
    /// Sorted image ids.
    std::vector<std::string> positive_ids;

    std::string label() const { return cluster.label.text(); }
    Polarity polarity() const { return cluster.polarity; }
};

/// An image supports an attribute when one of its comments contains any
/// member bigram as consecutive tokens.
inline std::vector<TextualAttribute> assign_positive_images(const std::vector<AttributeCluster>& clusters,
                                                            const Corpus& corpus, const TokenizerOptions& opts = {}) {
    std::unordered_map<std::string, std::vector<std::size_t>> owners;  // bigram -> cluster indices
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (const auto& m : clusters[c].members) owners[m.term.text()].push_back(c);

    std::vector<std::set<std::string>> positives(clusters.size());
    for (const auto& rec : corpus) {
        const auto counts = document_term_counts(rec, VocabularyKind::Bigram, opts);
        for (const auto& [bigram, n] : counts) {
            auto it = owners.find(bigram);
            if (it == owners.end()) continue;
            for (auto c : it->second) positives[c].insert(rec.image_id);
        }
    }
    std::vector<TextualAttribute> out;
    out.reserve(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c)
        out.push_back({clusters[c], std::vector<std::string>(positives[c].begin(), positives[c].end())});
    return out;
}

// ---------------------------------------------------------------------------
// Attribute file: one JSON object per line,
//   {"label": "...", "polarity": "beautiful|ugly",
//    "members": [{"term": "...", "beta": x}, ...], "positives": [ids...]}

inline nlohmann::json to_json(const TextualAttribute& a) {
    auto members = nlohmann::json::array();
    for (const auto& m : a.cluster.members) members.push_back({{"term", m.term.text()}, {"beta", m.weight}});
    return {{"label", a.label()},
            {"polarity", to_string(a.polarity())},
            {"members", std::move(members)},
            {"positives", a.positive_ids}};
}

inline TextualAttribute attribute_from_json(const nlohmann::json& j) {
    TextualAttribute a;
    a.cluster.polarity = parse_polarity(j.at("polarity").get<std::string>());
    a.cluster.label = Term::from_text(j.at("label").get<std::string>());
    for (const auto& m : j.at("members"))
        a.cluster.members.push_back(
            {Term::from_text(m.at("term").get<std::string>()), m.at("beta").get<double>(), a.cluster.polarity});
    a.positive_ids = j.at("positives").get<std::vector<std::string>>();
    return a;
}

inline void write_attributes(const std::string& path, const std::vector<TextualAttribute>& attrs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write attributes: " + path);
    for (const auto& a : attrs) out << to_json(a).dump() << '\n';
}

inline std::vector<TextualAttribute> read_attributes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read attributes: " + path);
    std::vector<TextualAttribute> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            out.push_back(attribute_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return out;
}

/// Full mining step for both polarities: candidates, clusters, names and
/// supporting images. Beautiful attributes come first.
struct MiningOptions {
    std::size_t k_per_polarity = 1500;
    std::size_t clusters_per_polarity = 100;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    NamingMode naming = NamingMode::MaxWeight;
    unsigned jobs = 1;
};

inline std::vector<TextualAttribute> mine_attributes(const ElasticNetModel& model, const Vocabulary& vocab,
                                                     const Corpus& corpus, const MiningOptions& opts) {
    const auto sel = select_candidates(model, vocab, opts.k_per_polarity);
    std::vector<AttributeCluster> all;
    std::uint64_t salt = 0;
    for (const auto* list : {&sel.beautiful, &sel.ugly}) {
        auto clusters = cluster_candidates(*list, opts.clusters_per_polarity, opts.sigma,
                                           detail::mix_seed(opts.seed, salt), opts.jobs);
        clusters = name_clusters(std::move(clusters), opts.naming, detail::mix_seed(opts.seed, 100 + salt));
        ++salt;
        all.insert(all.end(), clusters.begin(), clusters.end());
    }
    return assign_positive_images(all, corpus);
}

}  // namespace aesthmine
