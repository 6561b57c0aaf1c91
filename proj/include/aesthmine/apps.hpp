#pragma once

// Uses of the attribute bank: aesthetic preference prediction on attribute
// vectors, attribute tagging, AND-fused retrieval and attribute-space
// nearest neighbours.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aesthmine/classifier.hpp"
#include "aesthmine/corpus.hpp"
#include "aesthmine/detail/parallel.hpp"
#include "aesthmine/detail/strings.hpp"
#include "aesthmine/error.hpp"
#include "aesthmine/features.hpp"
#include "aesthmine/metrics.hpp"
#include "aesthmine/scorestats.hpp"

namespace aesthmine {

struct PreferenceModel {
    LinearClassifier classifier;
    double delta = 0.0;
    double auc = 0.5;
    std::size_t train_beautiful = 0;
    std::size_t train_bad = 0;
    SgdOptions train_meta;

    double score(const AttributeVector& v) const { return classifier.score(v.values); }
    double probability(const AttributeVector& v) const { return classifier.probability(v.values); }
};

/// Logistic preference model over attribute vectors. Images inside the
/// delta gap are ignored; the validation AUC uses the validation images
/// that receive a label.
inline PreferenceModel train_preference_classifier(const AttributeBank& bank, const Corpus& corpus,
                                                   const FeatureMap& features, const DataSplit& split, double delta,
                                                   const SgdOptions& hp, unsigned jobs = 1) {
    const auto labels = binarize_labels(corpus, delta);

    auto collect = [&](const std::vector<std::string>& ids) {
        std::vector<std::string> kept;
        for (const auto& id : ids) {
            auto l = labels.find(id);
            if (l == labels.end() || l->second == AestheticLabel::Discarded) continue;
            if (!features.count(id)) continue;
            kept.push_back(id);
        }
        std::vector<AttributeVector> vecs(kept.size());
        detail::parallel_for(kept.size(), jobs, [&](std::size_t i) { vecs[i] = embed(bank, features.at(kept[i])); });
        return std::make_pair(kept, vecs);
    };

    const auto [train_ids, train_vecs] = collect(split.train_ids);
    PreferenceModel pm;
    pm.delta = delta;
    pm.train_meta = hp;
    std::vector<LabeledExample> data;
    for (std::size_t i = 0; i < train_ids.size(); ++i) {
        const bool good = labels.at(train_ids[i]) == AestheticLabel::Beautiful;
        (good ? pm.train_beautiful : pm.train_bad) += 1;
        data.push_back({train_vecs[i].values, good ? 1 : -1});
    }
    const auto delta_text = detail::format_double(delta);
    if (pm.train_beautiful == 0 || pm.train_bad == 0)
        throw ArgumentError("preference training at delta=" + delta_text + " leaves only " +
                            (pm.train_beautiful == 0 ? "bad" : "beautiful") + " images in the training split");
    pm.classifier = train_logistic_sgd(data, bank.size(), hp);

    const auto [val_ids, val_vecs] = collect(split.validation_ids);
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < val_ids.size(); ++i)
        (labels.at(val_ids[i]) == AestheticLabel::Beautiful ? pos : neg).push_back(pm.score(val_vecs[i]));
    if (pos.empty() || neg.empty())
        throw ArgumentError("preference validation at delta=" + delta_text + " lacks beautiful or bad images");
    pm.auc = compute_auc(pos, neg);
    return pm;
}

inline nlohmann::json to_json(const PreferenceModel& m) {
    return {{"delta", m.delta},
            {"auc", m.auc},
            {"train_beautiful", m.train_beautiful},
            {"train_bad", m.train_bad},
            {"train_meta",
             {{"eta0", m.train_meta.eta0},
              {"lambda", m.train_meta.lambda},
              {"epochs", m.train_meta.epochs},
              {"seed", m.train_meta.seed}}},
            {"bias", m.classifier.bias},
            {"weights", m.classifier.weights}};
}

inline PreferenceModel preference_from_json(const nlohmann::json& j) {
    PreferenceModel m;
    m.delta = j.at("delta").get<double>();
    m.auc = j.at("auc").get<double>();
    m.train_beautiful = j.value("train_beautiful", std::size_t{0});
    m.train_bad = j.value("train_bad", std::size_t{0});
    if (j.contains("train_meta")) {
        const auto& t = j["train_meta"];
        m.train_meta.eta0 = t.value("eta0", m.train_meta.eta0);
        m.train_meta.lambda = t.value("lambda", m.train_meta.lambda);
        m.train_meta.epochs = t.value("epochs", m.train_meta.epochs);
        m.train_meta.seed = t.value("seed", m.train_meta.seed);
    }
    m.classifier.bias = j.at("bias").get<double>();
    m.classifier.weights = j.at("weights").get<std::vector<double>>();
    return m;
}

inline PreferenceModel load_preference(const std::string& path) {
    try {
        return preference_from_json(read_json_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Labels of the m most probable bank attributes, ties by bank rank.
inline std::vector<std::string> tag_image(const AttributeBank& bank, const FeatureVector& x, std::size_t m) {
    if (m > bank.size()) throw ArgumentError("tag_image: m exceeds the bank size");
    const auto v = embed(bank, x);
    std::vector<std::size_t> order(v.values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v.values[a] > v.values[b]; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < m; ++i) out.push_back(bank.at(order[i]).label);
    return out;
}

// ---------------------------------------------------------------------------
// Retrieval

/// Attribute vectors plus semantic probabilities for a set of images.
/// Columns: bank attributes in bank order, then semantic models.
struct RetrievalIndex {
    std::vector<std::string> ids;  // sorted
    std::vector<std::string> attribute_labels;
    std::vector<std::string> semantic_labels;
    std::vector<std::vector<double>> attributes;  // per image
    std::vector<std::vector<double>> semantic;    // per image

    std::size_t size() const { return ids.size(); }

    std::optional<std::size_t> position(const std::string& id) const {
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || *it != id) return std::nullopt;
        return static_cast<std::size_t>(it - ids.begin());
    }
};

inline RetrievalIndex build_index(const AttributeBank& bank, const FeatureMap& features, unsigned jobs = 1) {
    RetrievalIndex idx;
    for (const auto& [id, fv] : features) idx.ids.push_back(id);  // std::map keeps them sorted
    for (std::size_t i = 0; i < bank.size(); ++i) idx.attribute_labels.push_back(bank.at(i).label);
    for (const auto& m : bank.semantic) idx.semantic_labels.push_back(m.label);
    idx.attributes.resize(idx.ids.size());
    idx.semantic.resize(idx.ids.size());
    detail::parallel_for(idx.ids.size(), jobs, [&](std::size_t i) {
        const auto& fv = features.at(idx.ids[i]);
        idx.attributes[i] = embed(bank, fv).values;
        for (const auto& m : bank.semantic) idx.semantic[i].push_back(m.probability(fv.values));
    });
    return idx;
}

struct QuerySpec {
    std::vector<std::string> attribute_terms;
    std::vector<std::string> semantic_terms;
    std::size_t top_k = 20;
};

namespace detail {

inline std::optional<std::size_t> find_label(const std::vector<std::string>& labels, const std::string& term) {
    const auto t = to_lower(term);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (to_lower(labels[i]) == t) return i;
    return std::nullopt;
}

inline std::string known_labels(const RetrievalIndex& idx) {
    std::string s;
    for (const auto* list : {&idx.attribute_labels, &idx.semantic_labels})
        for (const auto& l : *list) {
            if (!s.empty()) s += ", ";
            s += l;
        }
    return s;
}

}  // namespace detail

/// Splits "a AND b AND c" into terms; AND is matched as a whole word in any
/// case. Each term is resolved against attribute labels first, then
/// semantic labels.
inline QuerySpec parse_query(std::string_view text, const RetrievalIndex& idx, std::size_t top_k = 20) {
    std::vector<std::string> terms;
    std::string current;
    for (const auto& word : detail::split_ws(text)) {
        if (detail::to_lower(word) == "and") {
            if (current.empty()) throw QueryError("empty term in query \"" + std::string(text) + "\"");
            terms.push_back(current);
            current.clear();
            continue;
        }
        if (!current.empty()) current += ' ';
        current += word;
    }
    if (current.empty()) throw QueryError("empty term in query \"" + std::string(text) + "\"");
    terms.push_back(current);

    QuerySpec q;
    q.top_k = top_k;
    for (const auto& t : terms) {
        if (detail::find_label(idx.attribute_labels, t))
            q.attribute_terms.push_back(t);
        else if (detail::find_label(idx.semantic_labels, t))
            q.semantic_terms.push_back(t);
        else
            throw QueryError("unknown query term \"" + t + "\"; known labels: " + detail::known_labels(idx));
    }
    return q;
}

struct RankedImage {
    std::string id;
    double score = 0.0;

    bool operator==(const RankedImage&) const = default;
};

/// Product of the query terms' probabilities, descending, ties by id.
inline std::vector<RankedImage> retrieve(const QuerySpec& q, const RetrievalIndex& idx) {
    if (q.attribute_terms.empty() && q.semantic_terms.empty()) throw QueryError("query has no terms");
    std::vector<std::size_t> attr_cols, sem_cols;
    for (const auto& t : q.attribute_terms) {
        auto c = detail::find_label(idx.attribute_labels, t);
        if (!c) throw QueryError("unknown attribute \"" + t + "\"; known labels: " + detail::known_labels(idx));
        attr_cols.push_back(*c);
    }
    for (const auto& t : q.semantic_terms) {
        auto c = detail::find_label(idx.semantic_labels, t);
        if (!c) throw QueryError("unknown semantic label \"" + t + "\"; known labels: " + detail::known_labels(idx));
        sem_cols.push_back(*c);
    }
    // Fixed multiplication order, so permuting the query cannot move a bit.
    std::sort(attr_cols.begin(), attr_cols.end());
    std::sort(sem_cols.begin(), sem_cols.end());
    std::vector<RankedImage> out;
    out.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        double p = 1.0;
        for (auto c : attr_cols) p *= idx.attributes[i][c];
        for (auto c : sem_cols) p *= idx.semantic[i][c];
        out.push_back({idx.ids[i], p});
    }
    std::sort(out.begin(), out.end(), [](const RankedImage& a, const RankedImage& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (out.size() > q.top_k) out.resize(q.top_k);
    return out;
}

/// Euclidean neighbours in attribute space, query excluded, ties by id.
inline std::vector<RankedImage> nearest_neighbors(const RetrievalIndex& idx, const std::string& query_id,
                                                  std::size_t m) {
    const auto q = idx.position(query_id);
    if (!q) throw QueryError("unknown image id \"" + query_id + "\"");
    const auto& qv = idx.attributes[*q];
    std::vector<RankedImage> out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i == *q) continue;
        double d2 = 0.0;
        for (std::size_t k = 0; k < qv.size(); ++k) {
            const double d = idx.attributes[i][k] - qv[k];
            d2 += d * d;
        }
        out.push_back({idx.ids[i], std::sqrt(d2)});
    }
    std::sort(out.begin(), out.end(), [](const RankedImage& a, const RankedImage& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.id < b.id;
    });
    if (out.size() > m) out.resize(m);
    return out;
}

}  // namespace aesthmine
