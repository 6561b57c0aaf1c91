#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace aesthmine;
using testsupport::toy_model;

namespace {

/// Central-difference gradient of logistic_loss, bias last.
std::vector<double> numeric_gradient(LinearClassifier c, const std::vector<double>& x, int y, double weight,
                                     double lambda, double h = 1e-6) {
    std::vector<double> g(c.weights.size() + 1);
    for (std::size_t i = 0; i <= c.weights.size(); ++i) {
        double& p = i < c.weights.size() ? c.weights[i] : c.bias;
        const double keep = p;
        p = keep + h;
        const double up = logistic_loss(c, x, y, weight, lambda);
        p = keep - h;
        const double down = logistic_loss(c, x, y, weight, lambda);
        p = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// 1-D features: positives at +1..+2, negatives at -2..-1.
struct Separable {
    FeatureMap features;
    DataSplit split;
    std::unordered_set<std::string> positives;
};

Separable separable(std::size_t n, std::uint64_t seed) {
    detail::Rng rng(seed);
    Separable s;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "s" + std::to_string(1000 + i);
        const bool pos = i % 2 == 0;
        const double v = (pos ? 1.0 : -1.0) * rng.uniform(1.0, 2.0);
        s.features[id] = {{v, rng.normal(0.0, 0.1)}, kPrecomputedExtractor};
        if (pos) s.positives.insert(id);
        (i % 4 < 2 ? s.split.train_ids : s.split.validation_ids).push_back(id);
    }
    return s;
}

}  // namespace

TEST(Sigmoid, ValuesAndStability) {
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(sigmoid(std::log(3.0)), 0.75, 1e-15);
    EXPECT_EQ(sigmoid(-1000.0), 0.0);
    EXPECT_EQ(sigmoid(1000.0), 1.0);
    EXPECT_NEAR(log1p_exp_neg(-800.0), 800.0, 1e-9);
    EXPECT_NEAR(log1p_exp_neg(0.0), std::log(2.0), 1e-15);
}

TEST(LogisticGradient, MatchesCentralDifferences) {
    detail::Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        LinearClassifier c;
        const std::size_t d = 1 + rng.below(8);
        std::vector<double> x(d);
        for (auto& v : x) v = rng.normal();
        c.weights.resize(d);
        for (auto& w : c.weights) w = rng.normal();
        c.bias = rng.normal();
        const int y = rng.bernoulli(0.5) ? 1 : -1;
        const double weight = rng.uniform(0.5, 3.0), lambda = rng.uniform(0.0, 0.5);
        const auto g = logistic_gradient(c, x, y, weight, lambda);
        const auto n = numeric_gradient(c, x, y, weight, lambda);
        for (std::size_t i = 0; i < g.size(); ++i)
            EXPECT_LT(std::abs(g[i] - n[i]) / std::max(1e-8, std::max(std::abs(g[i]), std::abs(n[i]))), 1e-4);
    }
}

TEST(Sgd, ZeroEpochsGivesHalf) {
    const std::vector<double> a{1.0, 2.0};
    SgdOptions o;
    o.epochs = 0;
    const auto c = train_logistic_sgd({{a, 1}, {a, -1}}, 2, o);
    EXPECT_DOUBLE_EQ(c.probability(a), 0.5);
}

TEST(Sgd, DeterministicForSeed) {
    detail::Rng rng(3);
    std::vector<std::vector<double>> xs(50, std::vector<double>(4));
    std::vector<LabeledExample> data;
    for (auto& x : xs) {
        for (auto& v : x) v = rng.normal();
        data.push_back({x, x[0] > 0 ? 1 : -1});
    }
    SgdOptions o;
    o.seed = 9;
    EXPECT_EQ(train_logistic_sgd(data, 4, o).weights, train_logistic_sgd(data, 4, o).weights);
    auto other = o;
    other.seed = 10;
    EXPECT_NE(train_logistic_sgd(data, 4, o).weights, train_logistic_sgd(data, 4, other).weights);
}

TEST(Sgd, DimensionMismatchThrows) {
    const std::vector<double> a{1.0, 2.0};
    EXPECT_THROW(train_logistic_sgd({{a, 1}}, 3, {}), ArgumentError);
    LinearClassifier c;
    c.weights = {1.0};
    EXPECT_THROW(c.score(a), ArgumentError);
}

TEST(BinaryModel, SeparableDataReachesAucOne) {
    const auto s = separable(200, 4);
    SgdOptions hp;
    hp.epochs = 5;
    const auto m = train_binary_model("toy", ModelKind::Beautiful, s.positives, s.features, s.split, hp);
    EXPECT_DOUBLE_EQ(m.auc, 1.0);
    EXPECT_EQ(m.train_positives + m.train_negatives, s.split.train_ids.size());
}

TEST(BinaryModel, UntrainableCases) {
    auto s = separable(40, 5);
    EXPECT_THROW(train_binary_model("none", ModelKind::Ugly, {}, s.features, s.split, {}), UntrainableAttribute);
    std::unordered_set<std::string> train_only;
    for (const auto& id : s.split.train_ids)
        if (s.positives.count(id)) train_only.insert(id);
    EXPECT_THROW(train_binary_model("val", ModelKind::Ugly, train_only, s.features, s.split, {}),
                 UntrainableAttribute);
}

TEST(AttributeModels, IndependentOfJobsAndOrder) {
    const auto corpus = generate_synthetic_corpus({.images = 200, .seed = 3, .feature_dim = 16});
    FeatureMap features;
    for (const auto& r : corpus) features[r.image_id] = {*r.features, kPrecomputedExtractor};
    const auto split = split_corpus(corpus, {0.6, 0.2, 0.2}, 3);
    std::vector<TextualAttribute> attrs;
    for (const auto& p : planted_attributes()) {
        AttributeCluster c;
        c.polarity = p.beautiful ? Polarity::Beautiful : Polarity::Ugly;
        c.members = {{Term::from_text(p.phrases[0]), p.beautiful ? 1.0 : -1.0, c.polarity}};
        c.label = c.members[0].term;
        attrs.push_back({c, {}});
    }
    attrs = assign_positive_images([&] {
        std::vector<AttributeCluster> cs;
        for (const auto& a : attrs) cs.push_back(a.cluster);
        return cs;
    }(), corpus);
    SgdOptions hp;
    hp.seed = 12;
    const auto one = train_attribute_models(attrs, features, split, hp, 1);
    const auto four = train_attribute_models(attrs, features, split, hp, 4);
    ASSERT_EQ(one.models.size(), four.models.size());
    for (std::size_t i = 0; i < one.models.size(); ++i)
        EXPECT_EQ(one.models[i].classifier.weights, four.models[i].classifier.weights);
    auto reversed = attrs;
    std::reverse(reversed.begin(), reversed.end());
    const auto rev = train_attribute_models(reversed, features, split, hp, 2);
    for (const auto& m : one.models) {
        auto it = std::find_if(rev.models.begin(), rev.models.end(), [&](const auto& r) { return r.label == m.label; });
        ASSERT_NE(it, rev.models.end());
        EXPECT_EQ(it->classifier.weights, m.classifier.weights);
    }
}

TEST(AttributeBank, SortsTruncatesAndBreaksTiesByLabel) {
    std::vector<AttributeModel> ms{
        toy_model("b2", ModelKind::Beautiful, {1}, 0, 0.7), toy_model("b1", ModelKind::Beautiful, {1}, 0, 0.7),
        toy_model("b3", ModelKind::Beautiful, {1}, 0, 0.9), toy_model("u1", ModelKind::Ugly, {1}, 0, 0.6),
        toy_model("tag", ModelKind::Semantic, {1}, 0, 0.8)};
    const auto bank = build_attribute_bank(ms, 2);
    ASSERT_EQ(bank.beautiful.size(), 2u);
    EXPECT_EQ(bank.beautiful[0].label, "b3");
    EXPECT_EQ(bank.beautiful[1].label, "b1");
    EXPECT_EQ(bank.size(), 3u);
    EXPECT_FALSE(bank.beautiful_shortfall);
    EXPECT_TRUE(bank.ugly_shortfall);
    EXPECT_EQ(bank.semantic.size(), 1u);
    EXPECT_EQ(bank.at(2).label, "u1");
    EXPECT_THROW(build_attribute_bank({ms[0]}, 2), ArgumentError);
}

TEST(AttributeBank, EmbedAndPersistence) {
    testsupport::TempDir dir;
    auto bank = build_attribute_bank({toy_model("good light", ModelKind::Beautiful, {testsupport::logit(0.8), 0}),
                                      toy_model("too dark", ModelKind::Ugly, {0, 1}, -1.0)},
                                     5);
    const std::vector<double> x{1.0, 1.0};
    const auto v = embed(bank, x);
    ASSERT_EQ(v.values.size(), 2u);
    EXPECT_NEAR(v.values[0], 0.8, 1e-12);
    EXPECT_DOUBLE_EQ(v.values[1], 0.5);
    EXPECT_THROW(embed(bank, std::vector<double>{1.0}), ArgumentError);

    save_bank(dir.file("bank.json"), bank);
    const auto back = load_bank(dir.file("bank.json"));
    EXPECT_EQ(back.size(), bank.size());
    EXPECT_EQ(back.at(0).classifier.weights, bank.at(0).classifier.weights);
    EXPECT_EQ(embed(back, x).values, v.values);
    testsupport::write_text(dir.file("bad.json"), "{\"beautiful\": []}");
    EXPECT_THROW(load_bank(dir.file("bad.json")), ParseError);
}
