#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "support.hpp"

using namespace aesthmine;
using testsupport::make_record;
using testsupport::votes_at;

namespace {

LoadResult parse(const std::string& text, LoadOptions opts = {}) {
    std::istringstream in(text);
    return parse_corpus(in, opts);
}

const char* kValid =
    R"({"id":"a","scores":[0,0,0,1,2,3,2,1,0,0],"comments":[{"text":"nice shot","phase":"during"}],"semantic_tags":["landscape"],"style_tags":[]})"
    "\n"
    R"({"id":"b","scores":[1,0,0,0,0,0,0,0,0,1],"comments":[],"semantic_tags":[],"style_tags":["hdr"],"challenge":"c1"})"
    "\n"
    R"({"id":"c","scores":[0,0,0,0,5,0,0,0,0,0],"comments":[{"text":"too dark","phase":"after","author":"u9"}],"semantic_tags":[],"style_tags":[],"features":[0.5,1.5],"pixels":"img/c.ppm"})"
    "\n";

}  // namespace

TEST(ScoreDistribution, MeanAndVarianceMatchExpandedVotes) {
    detail::Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        ScoreDistribution d;
        std::vector<double> votes;
        for (std::size_t i = 0; i < 10; ++i) {
            d.counts[i] = static_cast<std::uint32_t>(rng.below(7));
            for (std::uint32_t k = 0; k < d.counts[i]; ++k) votes.push_back(static_cast<double>(i + 1));
        }
        if (votes.empty()) continue;
        double s = 0.0;
        for (double v : votes) s += v;
        const double mu = s / static_cast<double>(votes.size());
        double ss = 0.0;
        for (double v : votes) ss += (v - mu) * (v - mu);
        EXPECT_NEAR(d.mean(), mu, 1e-12);
        EXPECT_NEAR(d.variance(), ss / static_cast<double>(votes.size()), 1e-12);
        EXPECT_GE(d.mean(), 1.0);
        EXPECT_LE(d.mean(), 10.0);
    }
}

TEST(LoadCorpus, ThreeValidLines) {
    auto r = parse(kValid);
    EXPECT_EQ(r.corpus.size(), 3u);
    EXPECT_TRUE(r.rejects.empty());
    const auto* c = r.corpus.find("c");
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->comments.at(0).phase, Phase::AfterChallenge);
    EXPECT_EQ(c->comments.at(0).author_id, "u9");
    EXPECT_EQ(*c->features, (std::vector<double>{0.5, 1.5}));
    EXPECT_EQ(*c->pixels, "img/c.ppm");
    EXPECT_EQ(r.corpus.find("b")->challenge_id, "c1");
    EXPECT_TRUE(r.corpus.find("a")->semantic_tags.count("landscape"));
}

TEST(LoadCorpus, ShortScoreArrayIsRejectedWithReason) {
    auto r = parse(std::string(kValid) + R"({"id":"d","scores":[1,1,1,1,1,1,1,1,1]})" + "\n");
    EXPECT_EQ(r.corpus.size(), 3u);
    ASSERT_EQ(r.rejects.size(), 1u);
    EXPECT_EQ(r.rejects.entries[0].reason, "score array length ≠ 10");
    EXPECT_EQ(r.rejects.entries[0].image_id, "d");
    EXPECT_EQ(r.rejects.entries[0].line, 4u);
}

TEST(LoadCorpus, DuplicateIdThrows) {
    const std::string line = R"({"id":"a1","scores":[0,0,0,0,1,0,0,0,0,0]})";
    EXPECT_THROW(parse(line + "\n" + line + "\n"), ValidationError);
}

TEST(LoadCorpus, MalformedLineNamesLineNumber) {
    try {
        parse(std::string(kValid) + "{not json\n");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
    LoadOptions lenient;
    lenient.schema_check = false;
    auto r = parse(std::string(kValid) + "{not json\n", lenient);
    EXPECT_EQ(r.corpus.size(), 3u);
    EXPECT_EQ(r.rejects.size(), 1u);
}

TEST(LoadCorpus, EmptyCommentAndMinVotesAreRejected) {
    LoadOptions opts;
    opts.min_votes = 3;
    auto r = parse(R"({"id":"x","scores":[0,0,0,0,1,1,0,0,0,0]})"
                   "\n"
                   R"({"id":"y","scores":[0,0,0,0,5,0,0,0,0,0],"comments":[{"text":"   "}]})"
                   "\n",
                   opts);
    EXPECT_EQ(r.corpus.size(), 0u);
    EXPECT_EQ(r.rejects.size(), 2u);
}

TEST(LoadCorpus, MissingFileIsIoError) { EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), IoError); }

TEST(LoadCorpus, RoundTripIsIdentity) {
    const auto first = parse(kValid).corpus;
    std::ostringstream out;
    write_corpus(out, first);
    const auto second = parse(out.str()).corpus;
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i], second[i]);
}

TEST(SplitCorpus, TenRecordsSixTwoTwo) {
    Corpus c;
    for (int i = 0; i < 10; ++i) c.add(make_record("r" + std::to_string(i), votes_at(5)));
    const auto s = split_corpus(c, {0.6, 0.2, 0.2}, 7);
    EXPECT_EQ(s.train_ids.size(), 6u);
    EXPECT_EQ(s.validation_ids.size(), 2u);
    EXPECT_EQ(s.test_ids.size(), 2u);
    std::set<std::string> all;
    for (const auto* v : {&s.train_ids, &s.validation_ids, &s.test_ids}) all.insert(v->begin(), v->end());
    EXPECT_EQ(all.size(), 10u);
    EXPECT_EQ(s, split_corpus(c, {0.6, 0.2, 0.2}, 7));
    EXPECT_NE(s, split_corpus(c, {0.6, 0.2, 0.2}, 8));
}

TEST(SplitCorpus, SeventyThousandRecords) {
    Corpus c;
    for (int i = 0; i < 70000; ++i) c.add(make_record("r" + std::to_string(i), votes_at(5, 1)));
    const auto s = split_corpus(c, {3.0 / 7.0, 1.0 / 7.0, 3.0 / 7.0}, 1);
    EXPECT_EQ(s.train_ids.size(), 30000u);
    EXPECT_EQ(s.validation_ids.size(), 10000u);
    EXPECT_EQ(s.test_ids.size(), 30000u);
}

TEST(SplitCorpus, RejectsBadFractions) {
    Corpus c;
    c.add(make_record("a", votes_at(5)));
    EXPECT_THROW(split_corpus(c, {0.5, 0.2, 0.2}, 1), ArgumentError);
    EXPECT_THROW(split_corpus(c, {1.0, 0.0, 0.0}, 1), ArgumentError);
    EXPECT_THROW(split_corpus(Corpus{}, {0.6, 0.2, 0.2}, 1), ArgumentError);
}

TEST(SplitCorpus, IndependentOfInsertionOrder) {
    Corpus a, b;
    for (int i = 0; i < 30; ++i) a.add(make_record("r" + std::to_string(i), votes_at(5)));
    for (int i = 29; i >= 0; --i) b.add(make_record("r" + std::to_string(i), votes_at(5)));
    EXPECT_EQ(split_corpus(a, {0.5, 0.25, 0.25}, 3), split_corpus(b, {0.5, 0.25, 0.25}, 3));
}

TEST(CommentStatistics, HandCountedExample) {
    Corpus c;
    c.add(make_record("a", votes_at(6), {"nice shot", "too dark here"}, Phase::DuringChallenge));
    const auto rep = comment_statistics(c);
    EXPECT_DOUBLE_EQ(rep.overall.comments_per_image.mean, 2.0);
    EXPECT_DOUBLE_EQ(rep.overall.words_per_comment.mean, 2.5);
    EXPECT_DOUBLE_EQ(rep.overall.words_per_comment.std, 0.5);
    EXPECT_EQ(rep.during.comments, 2u);
    EXPECT_EQ(rep.after.comments, 0u);
    EXPECT_DOUBLE_EQ(rep.after.comments_per_image.mean, 0.0);
    ASSERT_EQ(rep.by_mean_score.size(), 9u);
    EXPECT_EQ(rep.by_mean_score[5].images, 1u);  // [6,7)
    EXPECT_DOUBLE_EQ(rep.by_mean_score[5].mean_comments_per_image, 2.0);
}

TEST(CommentStatistics, EmptyCorpusIsZeroed) {
    const auto rep = comment_statistics(Corpus{});
    EXPECT_EQ(rep.images, 0u);
    EXPECT_EQ(rep.overall.comments, 0u);
    EXPECT_DOUBLE_EQ(rep.overall.comments_per_image.mean, 0.0);
}

TEST(CommentStatistics, TopScoreLandsInLastBin) {
    Corpus c;
    c.add(make_record("a", votes_at(10), {"wow"}));
    EXPECT_EQ(comment_statistics(c).by_mean_score.back().images, 1u);
}
