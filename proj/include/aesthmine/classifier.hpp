#pragma once

// Visual attribute models: one-vs-rest L2-regularized logistic regression
// trained by SGD on generic image features, ranked by validation AUC.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "aesthmine/attribmine.hpp"
#include "aesthmine/corpus.hpp"
#include "aesthmine/detail/parallel.hpp"
#include "aesthmine/detail/random.hpp"
#include "aesthmine/error.hpp"
#include "aesthmine/features.hpp"
#include "aesthmine/metrics.hpp"

namespace aesthmine {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(-m)) without overflow.
inline double log1p_exp_neg(double m) {
    if (m > 0.0) return std::log1p(std::exp(-m));
    return -m + std::log1p(std::exp(m));
}

struct LinearClassifier {
    std::vector<double> weights;
    double bias = 0.0;

    double score(std::span<const double> x) const {
        if (x.size() != weights.size())
            throw ArgumentError("classifier expects " + std::to_string(weights.size()) + " features, got " +
                                std::to_string(x.size()));
        double s = bias;
        for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
        return s;
    }

    double probability(std::span<const double> x) const { return sigmoid(score(x)); }
};

/// Weighted per-example objective for a label y in {-1, +1}:
///   weight * log(1 + exp(-y (w'x + b))) + lambda/2 ||w||^2.
inline double logistic_loss(const LinearClassifier& c, std::span<const double> x, int y, double weight,
                            double lambda) {
    double reg = 0.0;
    for (double w : c.weights) reg += w * w;
    return weight * log1p_exp_neg(y * c.score(x)) + 0.5 * lambda * reg;
}

/// Gradient of logistic_loss; the bias gradient is the last entry.
inline std::vector<double> logistic_gradient(const LinearClassifier& c, std::span<const double> x, int y,
                                             double weight, double lambda) {
    const double g = -weight * y * sigmoid(-y * c.score(x));
    std::vector<double> grad(c.weights.size() + 1);
    for (std::size_t i = 0; i < c.weights.size(); ++i) grad[i] = g * x[i] + lambda * c.weights[i];
    grad.back() = g;
    return grad;
}

struct SgdOptions {
    double eta0 = 0.1;
    double lambda = 1e-5;
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    /// Scale positive examples by N_neg / N_pos.
    bool balance_classes = true;
};

struct LabeledExample {
    std::span<const double> x;
    int y = 1;  // +1 or -1
};

/// Plain SGD with step eta_t = eta0 / (1 + eta0 lambda t), a fresh seeded
/// shuffle per epoch, unregularized bias, zero initialization.
inline LinearClassifier train_logistic_sgd(const std::vector<LabeledExample>& data, std::size_t dim,
                                           const SgdOptions& opts) {
    LinearClassifier c;
    c.weights.assign(dim, 0.0);
    std::size_t n_pos = 0;
    for (const auto& e : data) {
        if (e.x.size() != dim) throw ArgumentError("training example has the wrong dimension");
        if (e.y > 0) ++n_pos;
    }
    const std::size_t n_neg = data.size() - n_pos;
    const double pos_weight =
        opts.balance_classes && n_pos > 0 && n_neg > 0 ? static_cast<double>(n_neg) / static_cast<double>(n_pos) : 1.0;

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::uint64_t t = 0;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        detail::Rng rng(detail::mix_seed(opts.seed, epoch));
        rng.shuffle(order);
        for (auto i : order) {
            const auto& e = data[i];
            const double eta = opts.eta0 / (1.0 + opts.eta0 * opts.lambda * static_cast<double>(t));
            const double weight = e.y > 0 ? pos_weight : 1.0;
            const double g = -weight * e.y * sigmoid(-e.y * c.score(e.x));
            const double shrink = 1.0 - eta * opts.lambda;
            for (std::size_t k = 0; k < dim; ++k) c.weights[k] = shrink * c.weights[k] - eta * g * e.x[k];
            c.bias -= eta * g;
            ++t;
        }
    }
    return c;
}

enum class ModelKind { Beautiful, Ugly, Semantic };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Beautiful: return "beautiful";
        case ModelKind::Ugly: return "ugly";
        case ModelKind::Semantic: return "semantic";
    }
    return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
    if (s == "beautiful") return ModelKind::Beautiful;
    if (s == "ugly") return ModelKind::Ugly;
    if (s == "semantic") return ModelKind::Semantic;
    throw ParseError("unknown model kind \"" + std::string(s) + "\"");
}

inline ModelKind model_kind(Polarity p) { return p == Polarity::Beautiful ? ModelKind::Beautiful : ModelKind::Ugly; }

struct AttributeModel {
    std::string label;
    ModelKind kind = ModelKind::Beautiful;
    LinearClassifier classifier;
    /// Validation AUC.
    double auc = 0.5;
    SgdOptions train_meta;
    std::size_t train_positives = 0;
    std::size_t train_negatives = 0;

    double probability(std::span<const double> x) const { return classifier.probability(x); }
};

inline double predict_probability(const AttributeModel& m, const FeatureVector& x) {
    return m.classifier.probability(x.values);
}

class UntrainableAttribute : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

/// One-vs-rest model for the images in `positives`: every other training
/// image with features is a negative. Validation AUC needs both classes in
/// the validation split.
inline AttributeModel train_binary_model(const std::string& label, ModelKind kind,
                                         const std::unordered_set<std::string>& positives, const FeatureMap& features,
                                         const DataSplit& split, const SgdOptions& hp) {
    std::vector<LabeledExample> train;
    std::size_t dim = 0;
    bool have_dim = false;
    for (const auto& id : split.train_ids) {
        auto it = features.find(id);
        if (it == features.end()) continue;
        if (!have_dim) {
            dim = it->second.dim();
            have_dim = true;
        }
        train.push_back({it->second.values, positives.count(id) ? 1 : -1});
    }
    AttributeModel m;
    m.label = label;
    m.kind = kind;
    m.train_meta = hp;
    for (const auto& e : train) (e.y > 0 ? m.train_positives : m.train_negatives) += 1;
    if (m.train_positives == 0) throw UntrainableAttribute("attribute \"" + label + "\" has no training positives");
    m.classifier = train_logistic_sgd(train, dim, hp);

    std::vector<double> pos, neg;
    for (const auto& id : split.validation_ids) {
        auto it = features.find(id);
        if (it == features.end()) continue;
        (positives.count(id) ? pos : neg).push_back(m.classifier.score(it->second.values));
    }
    if (pos.empty() || neg.empty())
        throw UntrainableAttribute("attribute \"" + label + "\" lacks validation positives or negatives");
    m.auc = compute_auc(pos, neg);
    return m;
}

inline AttributeModel train_attribute_classifier(const TextualAttribute& attr, const FeatureMap& features,
                                                 const DataSplit& split, const SgdOptions& hp) {
    const std::unordered_set<std::string> positives(attr.positive_ids.begin(), attr.positive_ids.end());
    return train_binary_model(attr.label(), model_kind(attr.polarity()), positives, features, split, hp);
}

struct TrainingFailure {
    std::string label;
    std::string reason;
};

struct TrainingOutcome {
    std::vector<AttributeModel> models;
    std::vector<TrainingFailure> dropped;
};

/// Trains every attribute independently (in parallel); attributes that
/// cannot be trained are dropped with a reason. Each attribute's seed stream
/// is keyed by its label, so results depend on neither scheduling nor list
/// order.
inline TrainingOutcome train_attribute_models(const std::vector<TextualAttribute>& attrs, const FeatureMap& features,
                                              const DataSplit& split, const SgdOptions& hp, unsigned jobs = 1) {
    std::vector<std::optional<AttributeModel>> slots(attrs.size());
    std::vector<std::string> errors(attrs.size());
    detail::parallel_for(attrs.size(), jobs, [&](std::size_t i) {
        SgdOptions local = hp;
        local.seed = detail::mix_seed(hp.seed, std::string_view(attrs[i].label()));
        try {
            slots[i] = train_attribute_classifier(attrs[i], features, split, local);
        } catch (const UntrainableAttribute& e) {
            errors[i] = e.what();
        }
    });
    TrainingOutcome out;
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (slots[i])
            out.models.push_back(std::move(*slots[i]));
        else
            out.dropped.push_back({attrs[i].label(), errors[i]});
    }
    return out;
}

/// Semantic classifiers, one per tag present in the corpus.
inline TrainingOutcome train_semantic_models(const Corpus& corpus, const FeatureMap& features, const DataSplit& split,
                                             const SgdOptions& hp, unsigned jobs = 1) {
    std::map<std::string, std::unordered_set<std::string>> tagged;
    for (const auto& r : corpus)
        for (const auto& t : r.semantic_tags) tagged[t].insert(r.image_id);
    std::vector<std::pair<std::string, std::unordered_set<std::string>>> tags(tagged.begin(), tagged.end());
    std::vector<std::optional<AttributeModel>> slots(tags.size());
    std::vector<std::string> errors(tags.size());
    detail::parallel_for(tags.size(), jobs, [&](std::size_t i) {
        SgdOptions local = hp;
        local.seed = detail::mix_seed(hp.seed, std::string_view("semantic:" + tags[i].first));
        try {
            slots[i] = train_binary_model(tags[i].first, ModelKind::Semantic, tags[i].second, features, split, local);
        } catch (const UntrainableAttribute& e) {
            errors[i] = e.what();
        }
    });
    TrainingOutcome out;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (slots[i])
            out.models.push_back(std::move(*slots[i]));
        else
            out.dropped.push_back({tags[i].first, errors[i]});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bank

struct AttributeBank {
    std::vector<AttributeModel> beautiful;  // AUC descending
    std::vector<AttributeModel> ugly;       // AUC descending
    std::vector<AttributeModel> semantic;   // retrieval only; not embedded
    std::size_t k_per_polarity = 0;
    bool beautiful_shortfall = false;
    bool ugly_shortfall = false;

    /// Length of the attribute vector: beautiful models then ugly models.
    std::size_t size() const { return beautiful.size() + ugly.size(); }

    const AttributeModel& at(std::size_t i) const {
        return i < beautiful.size() ? beautiful[i] : ugly[i - beautiful.size()];
    }

    std::size_t feature_dim() const {
        if (!beautiful.empty()) return beautiful.front().classifier.weights.size();
        if (!ugly.empty()) return ugly.front().classifier.weights.size();
        return semantic.empty() ? 0 : semantic.front().classifier.weights.size();
    }
};

/// Keeps the k best models of each polarity by validation AUC (ties by
/// label). Semantic models pass through sorted by label.
inline AttributeBank build_attribute_bank(std::vector<AttributeModel> models, std::size_t k_per_polarity) {
    AttributeBank bank;
    bank.k_per_polarity = k_per_polarity;
    for (auto& m : models) {
        switch (m.kind) {
            case ModelKind::Beautiful: bank.beautiful.push_back(std::move(m)); break;
            case ModelKind::Ugly: bank.ugly.push_back(std::move(m)); break;
            case ModelKind::Semantic: bank.semantic.push_back(std::move(m)); break;
        }
    }
    if (bank.beautiful.empty() || bank.ugly.empty())
        throw ArgumentError("build_attribute_bank needs at least one beautiful and one ugly model");
    auto by_auc = [](const AttributeModel& a, const AttributeModel& b) {
        if (a.auc != b.auc) return a.auc > b.auc;
        return a.label < b.label;
    };
    std::sort(bank.beautiful.begin(), bank.beautiful.end(), by_auc);
    std::sort(bank.ugly.begin(), bank.ugly.end(), by_auc);
    std::sort(bank.semantic.begin(), bank.semantic.end(),
              [](const auto& a, const auto& b) { return a.label < b.label; });
    bank.beautiful_shortfall = bank.beautiful.size() < k_per_polarity;
    bank.ugly_shortfall = bank.ugly.size() < k_per_polarity;
    if (bank.beautiful.size() > k_per_polarity) bank.beautiful.resize(k_per_polarity);
    if (bank.ugly.size() > k_per_polarity) bank.ugly.resize(k_per_polarity);
    return bank;
}

struct AttributeVector {
    std::vector<double> values;
};

inline AttributeVector embed(const AttributeBank& bank, std::span<const double> x) {
    AttributeVector v;
    v.values.reserve(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) v.values.push_back(bank.at(i).probability(x));
    return v;
}

inline AttributeVector embed(const AttributeBank& bank, const FeatureVector& x) { return embed(bank, x.values); }

// ---------------------------------------------------------------------------
// Persistence: one JSON document with every model's label, kind, AUC,
// training settings, bias and weights.

inline nlohmann::json to_json(const AttributeModel& m) {
    return {{"label", m.label},
            {"kind", to_string(m.kind)},
            {"auc", m.auc},
            {"train_positives", m.train_positives},
            {"train_negatives", m.train_negatives},
            {"train_meta",
             {{"eta0", m.train_meta.eta0},
              {"lambda", m.train_meta.lambda},
              {"epochs", m.train_meta.epochs},
              {"seed", m.train_meta.seed},
              {"balance_classes", m.train_meta.balance_classes}}},
            {"bias", m.classifier.bias},
            {"weights", m.classifier.weights}};
}

inline AttributeModel model_from_json(const nlohmann::json& j) {
    AttributeModel m;
    m.label = j.at("label").get<std::string>();
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.auc = j.at("auc").get<double>();
    m.train_positives = j.value("train_positives", std::size_t{0});
    m.train_negatives = j.value("train_negatives", std::size_t{0});
    if (j.contains("train_meta")) {
        const auto& t = j["train_meta"];
        m.train_meta.eta0 = t.value("eta0", m.train_meta.eta0);
        m.train_meta.lambda = t.value("lambda", m.train_meta.lambda);
        m.train_meta.epochs = t.value("epochs", m.train_meta.epochs);
        m.train_meta.seed = t.value("seed", m.train_meta.seed);
        m.train_meta.balance_classes = t.value("balance_classes", m.train_meta.balance_classes);
    }
    m.classifier.bias = j.at("bias").get<double>();
    m.classifier.weights = j.at("weights").get<std::vector<double>>();
    return m;
}

inline nlohmann::json to_json(const AttributeBank& bank) {
    auto list = [](const std::vector<AttributeModel>& ms) {
        auto a = nlohmann::json::array();
        for (const auto& m : ms) a.push_back(to_json(m));
        return a;
    };
    return {{"k_per_polarity", bank.k_per_polarity},
            {"beautiful_shortfall", bank.beautiful_shortfall},
            {"ugly_shortfall", bank.ugly_shortfall},
            {"beautiful", list(bank.beautiful)},
            {"ugly", list(bank.ugly)},
            {"semantic", list(bank.semantic)}};
}

inline AttributeBank bank_from_json(const nlohmann::json& j) {
    AttributeBank bank;
    bank.k_per_polarity = j.at("k_per_polarity").get<std::size_t>();
    bank.beautiful_shortfall = j.value("beautiful_shortfall", false);
    bank.ugly_shortfall = j.value("ugly_shortfall", false);
    for (const auto& m : j.at("beautiful")) bank.beautiful.push_back(model_from_json(m));
    for (const auto& m : j.at("ugly")) bank.ugly.push_back(model_from_json(m));
    for (const auto& m : j.value("semantic", nlohmann::json::array())) bank.semantic.push_back(model_from_json(m));
    return bank;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(1) << '\n';
}

inline void save_bank(const std::string& path, const AttributeBank& bank) { write_json_file(path, to_json(bank)); }

inline AttributeBank load_bank(const std::string& path) {
    try {
        return bank_from_json(read_json_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace aesthmine
