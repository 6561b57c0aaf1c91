#pragma once

// Corpus data model: images with vote histograms, comments and tags,
// stored one JSON object per line.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "aesthmine/detail/random.hpp"
#include "aesthmine/detail/strings.hpp"
#include "aesthmine/error.hpp"

namespace aesthmine {

inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 10;
inline constexpr std::size_t kScoreBins = 10;

/// Vote histogram on the 1..10 scale; counts[i] holds votes for score i+1.
struct ScoreDistribution {
    std::array<std::uint32_t, kScoreBins> counts{};

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }

    double mean() const {
        const auto n = total();
        if (n == 0) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < kScoreBins; ++i) s += static_cast<double>(i + 1) * counts[i];
        return s / static_cast<double>(n);
    }

    double variance() const {
        const auto n = total();
        if (n == 0) return 0.0;
        const double mu = mean();
        double s = 0.0;
        for (std::size_t i = 0; i < kScoreBins; ++i) {
            const double d = static_cast<double>(i + 1) - mu;
            s += d * d * counts[i];
        }
        return s / static_cast<double>(n);
    }

    /// Vote fractions per bin; all zero for an empty histogram.
    std::array<double, kScoreBins> normalized() const {
        std::array<double, kScoreBins> p{};
        const auto n = total();
        if (n == 0) return p;
        for (std::size_t i = 0; i < kScoreBins; ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
        return p;
    }

    bool operator==(const ScoreDistribution&) const = default;
};

enum class Phase { DuringChallenge, AfterChallenge };

inline const char* to_string(Phase p) { return p == Phase::DuringChallenge ? "during" : "after"; }

inline std::optional<Phase> parse_phase(std::string_view s) {
    const auto l = detail::to_lower(s);
    if (l == "during" || l == "duringchallenge") return Phase::DuringChallenge;
    if (l == "after" || l == "afterchallenge") return Phase::AfterChallenge;
    return std::nullopt;
}

struct CommentRecord {
    std::string text;
    Phase phase = Phase::DuringChallenge;
    std::optional<std::string> author_id;

    bool operator==(const CommentRecord&) const = default;
};

struct ImageRecord {
    std::string image_id;
    ScoreDistribution scores;
    std::vector<CommentRecord> comments;
    std::set<std::string> semantic_tags;
    std::set<std::string> style_tags;
    std::optional<std::string> challenge_id;
    std::optional<std::vector<double>> features;
    std::optional<std::string> pixels;

    double mean_score() const { return scores.mean(); }
    bool has_visual_input() const { return features.has_value() || pixels.has_value(); }

    bool operator==(const ImageRecord&) const = default;
};

/// Immutable-after-load collection of records with id lookup.
class Corpus {
public:
    Corpus() = default;

    explicit Corpus(std::vector<ImageRecord> records) {
        for (auto& r : records) add(std::move(r));
    }

    /// Throws ValidationError on a duplicate id.
    void add(ImageRecord record) {
        if (index_.count(record.image_id))
            throw ValidationError("duplicate image_id \"" + record.image_id + "\"");
        index_.emplace(record.image_id, records_.size());
        records_.push_back(std::move(record));
    }

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const ImageRecord& operator[](std::size_t i) const { return records_[i]; }
    auto begin() const { return records_.begin(); }
    auto end() const { return records_.end(); }
    const std::vector<ImageRecord>& records() const { return records_; }

    const ImageRecord* find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &records_[it->second];
    }

    std::optional<std::size_t> position(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<ImageRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Rejection {
    std::size_t line = 0;
    std::string image_id;
    std::string reason;
};

struct RejectReport {
    std::vector<Rejection> entries;
    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }
};

struct LoadOptions {
    /// When set, a line that is not a JSON object with the required fields
    /// aborts loading with a ParseError; otherwise it is rejected.
    bool schema_check = true;
    std::uint64_t min_votes = 1;
};

struct LoadResult {
    Corpus corpus;
    RejectReport rejects;
};

namespace detail {

struct RecordProblem {
    std::string reason;
    bool syntactic = false;
};

inline std::optional<std::vector<std::string>> string_array(const nlohmann::json& j) {
    if (!j.is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) return std::nullopt;
        out.push_back(e.get<std::string>());
    }
    return out;
}

/// Decodes one record, reporting the first problem found. Syntactic
/// problems are type or structure errors; the rest are validation failures.
inline std::optional<RecordProblem> decode_record(const nlohmann::json& j, ImageRecord& rec,
                                                  std::uint64_t min_votes) {
    if (!j.is_object()) return RecordProblem{"record is not an object", true};
    if (!j.contains("id") || !j["id"].is_string()) return RecordProblem{"missing string field \"id\"", true};
    rec.image_id = j["id"].get<std::string>();
    if (rec.image_id.empty()) return RecordProblem{"empty id", false};

    if (!j.contains("scores") || !j["scores"].is_array())
        return RecordProblem{"missing array field \"scores\"", true};
    const auto& scores = j["scores"];
    for (const auto& s : scores)
        if (!s.is_number_integer()) return RecordProblem{"score entries must be integers", true};
    if (scores.size() != kScoreBins) return RecordProblem{"score array length ≠ 10", false};
    for (std::size_t i = 0; i < kScoreBins; ++i) {
        const auto v = scores[i].get<long long>();
        if (v < 0) return RecordProblem{"negative vote count", false};
        rec.scores.counts[i] = static_cast<std::uint32_t>(v);
    }
    if (rec.scores.total() < min_votes)
        return RecordProblem{"fewer than " + std::to_string(min_votes) + " votes", false};

    if (j.contains("comments")) {
        if (!j["comments"].is_array()) return RecordProblem{"\"comments\" must be an array", true};
        for (const auto& c : j["comments"]) {
            if (!c.is_object() || !c.contains("text") || !c["text"].is_string())
                return RecordProblem{"comment without string \"text\"", true};
            CommentRecord cr;
            cr.text = c["text"].get<std::string>();
            if (trim(cr.text).empty()) return RecordProblem{"empty comment text", false};
            if (c.contains("phase")) {
                if (!c["phase"].is_string()) return RecordProblem{"comment phase must be a string", true};
                auto p = parse_phase(c["phase"].get<std::string>());
                if (!p) return RecordProblem{"unknown comment phase", false};
                cr.phase = *p;
            }
            if (c.contains("author") && !c["author"].is_null()) {
                if (!c["author"].is_string()) return RecordProblem{"comment author must be a string", true};
                cr.author_id = c["author"].get<std::string>();
            }
            rec.comments.push_back(std::move(cr));
        }
    }
    for (const char* field : {"semantic_tags", "style_tags"}) {
        if (!j.contains(field)) continue;
        auto tags = string_array(j[field]);
        if (!tags) return RecordProblem{std::string("\"") + field + "\" must be an array of strings", true};
        auto& dst = std::string(field) == "semantic_tags" ? rec.semantic_tags : rec.style_tags;
        dst.insert(tags->begin(), tags->end());
    }
    if (j.contains("challenge") && !j["challenge"].is_null()) {
        if (!j["challenge"].is_string()) return RecordProblem{"\"challenge\" must be a string", true};
        rec.challenge_id = j["challenge"].get<std::string>();
    }
    if (j.contains("features") && !j["features"].is_null()) {
        if (!j["features"].is_array()) return RecordProblem{"\"features\" must be an array", true};
        std::vector<double> f;
        f.reserve(j["features"].size());
        for (const auto& v : j["features"]) {
            if (!v.is_number()) return RecordProblem{"feature entries must be numbers", true};
            f.push_back(v.get<double>());
        }
        for (double v : f)
            if (!std::isfinite(v)) return RecordProblem{"non-finite feature value", false};
        rec.features = std::move(f);
    }
    if (j.contains("pixels") && !j["pixels"].is_null()) {
        if (!j["pixels"].is_string()) return RecordProblem{"\"pixels\" must be a string", true};
        rec.pixels = j["pixels"].get<std::string>();
    }
    return std::nullopt;
}

}  // namespace detail

inline nlohmann::json to_json(const ImageRecord& r) {
    nlohmann::json j;
    j["id"] = r.image_id;
    j["scores"] = r.scores.counts;
    auto comments = nlohmann::json::array();
    for (const auto& c : r.comments) {
        nlohmann::json cj{{"text", c.text}, {"phase", to_string(c.phase)}};
        if (c.author_id) cj["author"] = *c.author_id;
        comments.push_back(std::move(cj));
    }
    j["comments"] = std::move(comments);
    j["semantic_tags"] = r.semantic_tags;
    j["style_tags"] = r.style_tags;
    if (r.challenge_id) j["challenge"] = *r.challenge_id;
    if (r.features) j["features"] = *r.features;
    if (r.pixels) j["pixels"] = *r.pixels;
    return j;
}

/// Parses a line-delimited corpus. Validation failures go to the reject
/// report; duplicate ids always throw ValidationError.
inline LoadResult parse_corpus(std::istream& in, const LoadOptions& opts = {}) {
    LoadResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            if (opts.schema_check) throw ParseError(std::string("malformed record: ") + e.what(), line_no);
            result.rejects.entries.push_back({line_no, "", "malformed record"});
            continue;
        }
        ImageRecord rec;
        if (auto problem = detail::decode_record(j, rec, opts.min_votes)) {
            if (problem->syntactic && opts.schema_check) throw ParseError(problem->reason, line_no);
            result.rejects.entries.push_back({line_no, rec.image_id, problem->reason});
            continue;
        }
        if (result.corpus.find(rec.image_id))
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate image_id \"" +
                                  rec.image_id + "\"");
        result.corpus.add(std::move(rec));
    }
    return result;
}

inline LoadResult load_corpus(const std::string& path, const LoadOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read corpus file: " + path);
    return parse_corpus(in, opts);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& r : corpus) out << to_json(r).dump() << '\n';
}

inline void save_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file: " + path);
    write_corpus(out, corpus);
}

inline nlohmann::json to_json(const RejectReport& report) {
    auto arr = nlohmann::json::array();
    for (const auto& r : report.entries)
        arr.push_back({{"line", r.line}, {"id", r.image_id}, {"reason", r.reason}});
    return {{"rejected", report.size()}, {"entries", std::move(arr)}};
}

// ---------------------------------------------------------------------------
// Splits

struct DataSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> validation_ids;
    std::vector<std::string> test_ids;

    bool operator==(const DataSplit&) const = default;
};

/// Seeded uniform random split. Validation and test sizes are floor-rounded;
/// the remainder goes to train. Ids are sorted before shuffling so the
/// result does not depend on file order.
inline DataSplit split_corpus(const Corpus& corpus, std::array<double, 3> fractions, std::uint64_t seed) {
    for (double f : fractions)
        if (!(f > 0.0)) throw ArgumentError("split fractions must be positive");
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
        throw ArgumentError("split fractions must sum to 1");
    if (corpus.empty()) throw ArgumentError("cannot split an empty corpus");

    std::vector<std::string> ids;
    ids.reserve(corpus.size());
    for (const auto& r : corpus) ids.push_back(r.image_id);
    std::sort(ids.begin(), ids.end());
    detail::Rng rng(seed);
    rng.shuffle(ids);

    const double n = static_cast<double>(ids.size());
    const auto n_val = static_cast<std::size_t>(std::floor(n * fractions[1] + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * fractions[2] + 1e-9));
    const std::size_t n_train = ids.size() - n_val - n_test;

    DataSplit split;
    split.train_ids.assign(ids.begin(), ids.begin() + n_train);
    split.validation_ids.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    split.test_ids.assign(ids.begin() + n_train + n_val, ids.end());
    return split;
}

inline nlohmann::json to_json(const DataSplit& s) {
    return {{"train", s.train_ids}, {"validation", s.validation_ids}, {"test", s.test_ids}};
}

inline DataSplit split_from_json(const nlohmann::json& j) {
    DataSplit s;
    s.train_ids = j.at("train").get<std::vector<std::string>>();
    s.validation_ids = j.at("validation").get<std::vector<std::string>>();
    s.test_ids = j.at("test").get<std::vector<std::string>>();
    return s;
}

// ---------------------------------------------------------------------------
// Comment statistics

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
    std::size_t count = 0;
};

namespace detail {
inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd m;
    m.count = xs.size();
    if (xs.empty()) return m;
    double s = 0.0;
    for (double x : xs) s += x;
    m.mean = s / static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(v / static_cast<double>(xs.size()));
    return m;
}
}  // namespace detail

struct PhaseCommentStats {
    std::size_t comments = 0;
    MeanStd comments_per_image;
    MeanStd words_per_comment;
};

/// Comment activity for images whose mean score lies in [lo, hi).
struct ScoreBinCommentStats {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t images = 0;
    double mean_comments_per_image = 0.0;
    double mean_words_per_comment = 0.0;
};

struct CommentStatsReport {
    std::size_t images = 0;
    PhaseCommentStats overall;
    PhaseCommentStats during;
    PhaseCommentStats after;
    std::vector<ScoreBinCommentStats> by_mean_score;
};

inline CommentStatsReport comment_statistics(const Corpus& corpus) {
    CommentStatsReport rep;
    rep.images = corpus.size();
    std::vector<double> per_image_all, per_image_during, per_image_after;
    std::vector<double> words_all, words_during, words_after;

    constexpr std::size_t n_bins = kMaxScore - kMinScore;
    std::array<std::size_t, n_bins> bin_images{}, bin_comments{}, bin_words{};

    for (const auto& r : corpus) {
        std::size_t during = 0, after = 0, words_here = 0;
        for (const auto& c : r.comments) {
            const double w = static_cast<double>(detail::split_ws(c.text).size());
            words_all.push_back(w);
            words_here += static_cast<std::size_t>(w);
            if (c.phase == Phase::DuringChallenge) {
                ++during;
                words_during.push_back(w);
            } else {
                ++after;
                words_after.push_back(w);
            }
        }
        per_image_all.push_back(static_cast<double>(r.comments.size()));
        per_image_during.push_back(static_cast<double>(during));
        per_image_after.push_back(static_cast<double>(after));

        if (r.scores.total() > 0) {
            const double mu = r.mean_score();
            auto bin = static_cast<std::size_t>(std::floor(mu - kMinScore));
            if (bin >= n_bins) bin = n_bins - 1;
            ++bin_images[bin];
            bin_comments[bin] += r.comments.size();
            bin_words[bin] += words_here;
        }
    }

    auto fill = [](PhaseCommentStats& p, const std::vector<double>& per_image, const std::vector<double>& words) {
        p.comments = words.size();
        p.comments_per_image = detail::mean_std(per_image);
        p.words_per_comment = detail::mean_std(words);
    };
    fill(rep.overall, per_image_all, words_all);
    fill(rep.during, per_image_during, words_during);
    fill(rep.after, per_image_after, words_after);

    for (std::size_t b = 0; b < n_bins; ++b) {
        ScoreBinCommentStats s;
        s.lo = kMinScore + static_cast<double>(b);
        s.hi = s.lo + 1.0;
        s.images = bin_images[b];
        if (bin_images[b] > 0)
            s.mean_comments_per_image = static_cast<double>(bin_comments[b]) / static_cast<double>(bin_images[b]);
        if (bin_comments[b] > 0)
            s.mean_words_per_comment = static_cast<double>(bin_words[b]) / static_cast<double>(bin_comments[b]);
        rep.by_mean_score.push_back(s);
    }
    return rep;
}

inline nlohmann::json to_json(const CommentStatsReport& rep) {
    auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
    auto phase = [&](const PhaseCommentStats& p) {
        return nlohmann::json{{"comments", p.comments},
                              {"comments_per_image", ms(p.comments_per_image)},
                              {"words_per_comment", ms(p.words_per_comment)}};
    };
    auto bins = nlohmann::json::array();
    for (const auto& b : rep.by_mean_score)
        bins.push_back({{"mean_score_from", b.lo},
                        {"mean_score_to", b.hi},
                        {"images", b.images},
                        {"comments_per_image", b.mean_comments_per_image},
                        {"words_per_comment", b.mean_words_per_comment}});
    return {{"images", rep.images},
            {"overall", phase(rep.overall)},
            {"during", phase(rep.during)},
            {"after", phase(rep.after)},
            {"by_mean_score", std::move(bins)}};
}

}  // namespace aesthmine
