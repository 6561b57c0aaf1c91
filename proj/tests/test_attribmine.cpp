#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"

using namespace aesthmine;
using testsupport::make_record;
using testsupport::votes_at;

namespace {

std::string random_word(detail::Rng& rng, std::size_t max_len) {
    std::string w;
    const auto len = rng.below(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng.below(4)));
    return w;
}

CandidateTerm cand(const std::string& a, const std::string& b, double w) {
    return {Term::bigram(a, b), w, w >= 0 ? Polarity::Beautiful : Polarity::Ugly};
}

Eigen::MatrixXd two_blocks(std::size_t a, std::size_t b, double within, double across) {
    const auto n = static_cast<Eigen::Index>(a + b);
    Eigen::MatrixXd S(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const bool same = (i < static_cast<Eigen::Index>(a)) == (j < static_cast<Eigen::Index>(a));
            S(i, j) = same ? within : across;
        }
    return S;
}

}  // namespace

TEST(Levenshtein, Examples) {
    EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
    EXPECT_EQ(levenshtein("color", "colour"), 1u);
    EXPECT_EQ(levenshtein("", "abc"), 3u);
    EXPECT_EQ(levenshtein("same", "same"), 0u);
}

TEST(Levenshtein, MetricPropertiesAgainstFullTable) {
    detail::Rng rng(1);
    for (int t = 0; t < 300; ++t) {
        const auto a = random_word(rng, 8), b = random_word(rng, 8), c = random_word(rng, 8);
        const auto ab = levenshtein(a, b);
        EXPECT_EQ(ab, testsupport::levenshtein_table(a, b));
        EXPECT_EQ(ab, levenshtein(b, a));
        EXPECT_EQ(ab == 0, a == b);
        EXPECT_LE(ab, levenshtein(a, c) + levenshtein(c, b));
        EXPECT_LE(ab, std::max(a.size(), b.size()));
    }
}

TEST(SimilarityMatrix, UsesSecondWordOnly) {
    const std::vector<CandidateTerm> c{cand("great", "colors", 1), cand("vibrant", "colors", 1),
                                       cand("great", "colours", 1)};
    const auto S = similarity_matrix(c);
    EXPECT_DOUBLE_EQ(S(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(S(0, 2), std::exp(-1.0));
    EXPECT_DOUBLE_EQ(S(0, 0), 1.0);
    EXPECT_TRUE(S.isApprox(S.transpose()));
    const auto wide = similarity_matrix({cand("x", "light", 1), cand("x", "lights", 1), cand("x", "night", 1)}, 0.5);
    EXPECT_DOUBLE_EQ(wide(0, 1), std::exp(-2.0));
    EXPECT_THROW(similarity_matrix(c, 0.0), ArgumentError);
    EXPECT_THROW(similarity_matrix({cand("a", "b", 1), cand("a", "c", -1)}), ArgumentError);
}

TEST(SimilarityMatrix, StableAcrossJobCounts) {
    const auto g = testsupport::planted_groups(20, 3);
    EXPECT_EQ(similarity_matrix(g.candidates, 1.0, 1), similarity_matrix(g.candidates, 1.0, 4));
}

TEST(SpectralCluster, BlockDiagonalRecovered) {
    const auto S = two_blocks(5, 7, 1.0, 0.0);
    const auto r = spectral_cluster(S, 2, 1);
    EXPECT_EQ(r.n_clusters, 2u);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(r.labels[i], i < 5 ? 0u : 1u);
}

TEST(SpectralCluster, NearBlockDiagonalRecovered) {
    const auto r = spectral_cluster(two_blocks(6, 6, 0.9, 0.05), 2, 2);
    std::set<std::size_t> left(r.labels.begin(), r.labels.begin() + 6), right(r.labels.begin() + 6, r.labels.end());
    EXPECT_EQ(left.size(), 1u);
    EXPECT_EQ(right.size(), 1u);
    EXPECT_NE(*left.begin(), *right.begin());
}

TEST(SpectralCluster, SingleClusterAndScaleInvariance) {
    detail::Rng rng(3);
    const auto g = testsupport::planted_groups(15, 9);
    const auto S = similarity_matrix(g.candidates);
    const auto one = spectral_cluster(S, 1, 5);
    EXPECT_EQ(std::set<std::size_t>(one.labels.begin(), one.labels.end()).size(), 1u);
    const Eigen::MatrixXd scaled = 10.0 * S;
    EXPECT_EQ(spectral_cluster(S, 15, 5).labels, spectral_cluster(scaled, 15, 5).labels);
}

TEST(SpectralCluster, IsolatedItemsGetSingletons) {
    Eigen::MatrixXd S = two_blocks(3, 3, 1.0, 0.0);
    S.row(5).setZero();
    S.col(5).setZero();
    const auto r = spectral_cluster(S, 3, 1);
    EXPECT_EQ(r.isolated, (std::vector<std::size_t>{5}));
    EXPECT_EQ(r.n_clusters, 3u);
    EXPECT_EQ(std::count(r.labels.begin(), r.labels.end(), r.labels[5]), 1);
}

TEST(SpectralCluster, RejectsInvalidInput) {
    Eigen::MatrixXd S = two_blocks(2, 2, 1.0, 0.0);
    EXPECT_THROW(spectral_cluster(S, 0, 1), ArgumentError);
    EXPECT_THROW(spectral_cluster(S, 5, 1), ArgumentError);
    S(0, 1) = 0.5;
    EXPECT_THROW(spectral_cluster(S, 2, 1), ArgumentError);
    S(0, 1) = S(1, 0) = -1.0;
    EXPECT_THROW(spectral_cluster(S, 2, 1), ArgumentError);
}

TEST(SelectCandidates, TopKPerSignBigramsOnly) {
    Vocabulary v({Term::bigram("great", "colors"), Term::bigram("too", "dark"), Term::unigram("sharp"),
                  Term::bigram("nice", "light"), Term::bigram("bad", "focus"), Term::bigram("meh", "thing")},
                 {2, 2, 2, 2, 2, 2}, {1, 1, 1, 1, 1, 1}, 1);
    ElasticNetModel m;
    m.beta.assign(v.size(), 0.0);
    m.beta[*v.index_of("great colors")] = 0.9;
    m.beta[*v.index_of("nice light")] = 0.4;
    m.beta[*v.index_of("too dark")] = -0.7;
    m.beta[*v.index_of("bad focus")] = -0.2;
    m.beta[*v.index_of("sharp")] = 5.0;
    const auto one = select_candidates(m, v, 1);
    ASSERT_EQ(one.beautiful.size(), 1u);
    EXPECT_EQ(one.beautiful[0].term.text(), "great colors");
    ASSERT_EQ(one.ugly.size(), 1u);
    EXPECT_EQ(one.ugly[0].term.text(), "too dark");
    EXPECT_FALSE(one.beautiful_shortfall);

    const auto many = select_candidates(m, v, 5);
    EXPECT_EQ(many.beautiful.size(), 2u);
    EXPECT_EQ(many.ugly.size(), 2u);
    EXPECT_EQ(many.ugly[1].term.text(), "bad focus");
    EXPECT_TRUE(many.beautiful_shortfall);
    EXPECT_TRUE(many.ugly_shortfall);
}

TEST(NameClusters, MaxWeightWithTies) {
    AttributeCluster c;
    c.members = {cand("vibrant", "colors", 0.5), cand("great", "colors", 0.5), cand("nice", "colors", 0.2)};
    const auto named = name_clusters({c});
    EXPECT_EQ(named[0].label.text(), "great colors");
    AttributeCluster u;
    u.polarity = Polarity::Ugly;
    u.members = {cand("too", "dark", -0.3), cand("very", "dark", -0.8)};
    EXPECT_EQ(name_clusters({u})[0].label.text(), "very dark");
}

TEST(NameClusters, RandomModeDrawsAMember) {
    AttributeCluster c;
    c.members = {cand("a", "x", 1), cand("b", "x", 2), cand("c", "x", 3)};
    std::set<std::string> seen;
    for (std::uint64_t s = 0; s < 40; ++s) {
        const auto label = name_clusters({c}, NamingMode::Random, s)[0].label.text();
        seen.insert(label);
        EXPECT_EQ(label, name_clusters({c}, NamingMode::Random, s)[0].label.text());
    }
    EXPECT_EQ(seen.size(), 3u);
    EXPECT_THROW(name_clusters({AttributeCluster{}}), ArgumentError);
}

TEST(AssignPositives, ContainmentOrderAndUnion) {
    Corpus corpus;
    corpus.add(make_record("i1", votes_at(7), {"Colors are great, great colors!"}));
    corpus.add(make_record("i2", votes_at(6), {"colors great"}));
    corpus.add(make_record("i3", votes_at(8), {"so vibrant colors"}));
    corpus.add(make_record("i4", votes_at(3), {"great", "colors"}));
    AttributeCluster a;
    a.members = {cand("great", "colors", 1)};
    const auto one = assign_positive_images({a}, corpus);
    EXPECT_EQ(one[0].positive_ids, (std::vector<std::string>{"i1"}));

    AttributeCluster both;
    both.members = {cand("great", "colors", 1), cand("vibrant", "colors", 0.5)};
    const auto two = assign_positive_images({both}, corpus);
    EXPECT_EQ(two[0].positive_ids, (std::vector<std::string>{"i1", "i3"}));
}

TEST(AssignPositives, UnionOfMemberSupports) {
    Corpus corpus;
    for (int i = 0; i < 3; ++i) corpus.add(make_record("a" + std::to_string(i), votes_at(7), {"great colors"}));
    for (int i = 0; i < 4; ++i) corpus.add(make_record("b" + std::to_string(i), votes_at(7), {"vibrant colors"}));
    corpus.add(make_record("c0", votes_at(7), {"nice light"}));
    AttributeCluster c;
    c.members = {cand("great", "colors", 1), cand("vibrant", "colors", 1)};
    EXPECT_EQ(assign_positive_images({c}, corpus)[0].positive_ids.size(), 7u);
}

TEST(AttributeIo, RoundTrip) {
    testsupport::TempDir dir;
    AttributeCluster c;
    c.polarity = Polarity::Ugly;
    c.members = {cand("too", "dark", -0.8), cand("very", "dark", -0.3)};
    c.label = c.members[0].term;
    const std::vector<TextualAttribute> attrs{{c, {"x1", "x2"}}};
    write_attributes(dir.file("a.jsonl"), attrs);
    const auto back = read_attributes(dir.file("a.jsonl"));
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].label(), "too dark");
    EXPECT_EQ(back[0].polarity(), Polarity::Ugly);
    EXPECT_EQ(back[0].positive_ids, attrs[0].positive_ids);
    EXPECT_DOUBLE_EQ(back[0].cluster.members[1].weight, -0.3);
    testsupport::write_text(dir.file("bad.jsonl"), "{}\n");
    EXPECT_THROW(read_attributes(dir.file("bad.jsonl")), ParseError);
}

TEST(ClusterCandidates, PlantedGroupsAreRecovered) {
    const auto g = testsupport::planted_groups(30, 17);
    const auto clusters = cluster_candidates(g.candidates, g.groups, 1.0, 4);
    std::vector<std::size_t> labels(g.candidates.size());
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (const auto& m : clusters[c].members)
            for (std::size_t i = 0; i < g.candidates.size(); ++i)
                if (g.candidates[i].term == m.term) labels[i] = c;
    EXPECT_GE(testsupport::purity(labels, g.group), 0.9);
}
