#pragma once

// Generator for small corpora with planted attributes. Every image has a
// latent quality q ~ N(0,1); votes are centred on 5.3 + 1.1 q, attribute
// phrases fire with probability sigmoid(slope * q - 1) (mirrored for ugly
// attributes), and each firing attribute pushes the precomputed feature
// vector along its own fixed direction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "aesthmine/corpus.hpp"
#include "aesthmine/detail/random.hpp"
#include "aesthmine/error.hpp"
#include "aesthmine/features.hpp"

namespace aesthmine {

struct PlantedAttribute {
    std::string name;
    bool beautiful = true;
    /// Synonym bigrams; the second words are within edit distance 1.
    std::vector<std::string> phrases;
};

inline const std::vector<PlantedAttribute>& planted_attributes() {
    static const std::vector<PlantedAttribute> attrs{
        {"colors", true, {"great colors", "beautiful colours", "lovely colors"}},
        {"composition", true, {"nice composition", "great composition", "good compositions"}},
        {"detail", true, {"sharp detail", "great details", "fine detail"}},
        {"light", true, {"beautiful light", "great lights", "lovely light"}},
        {"done", true, {"well done", "nicely done"}},
        {"capture", true, {"great capture", "nicely captured"}},
        {"dark", false, {"too dark", "very dark"}},
        {"blurry", false, {"too blurry", "little blurry"}},
        {"focus", false, {"poor focus", "soft focus", "bad focus"}},
        {"small", false, {"too small", "very small"}},
        {"saturated", false, {"too saturated", "heavily saturated"}},
        {"busy", false, {"too busy", "bit busy"}},
    };
    return attrs;
}

inline const std::vector<std::string>& planted_semantic_tags() {
    static const std::vector<std::string> tags{"landscape", "portrait", "macro", "night"};
    return tags;
}

struct SyntheticCorpusOptions {
    std::size_t images = 1000;
    std::uint64_t seed = 0;
    std::size_t feature_dim = kBuiltinFeatureDim;
    double firing_slope = 2.5;
    double signal = 3.0;
    double noise = 1.0;
    std::size_t filler_comments = 3;
};

namespace detail {

inline std::vector<std::vector<double>> unit_directions(std::size_t count, std::size_t dim, Rng& rng) {
    std::vector<std::vector<double>> dirs(count, std::vector<double>(dim));
    for (auto& d : dirs) {
        double n = 0.0;
        for (auto& v : d) {
            v = rng.normal();
            n += v * v;
        }
        n = std::sqrt(n);
        for (auto& v : d) v /= n;
    }
    return dirs;
}

}  // namespace detail

/// Deterministic for a given options struct. Image ids are "img00000"... so
/// that lexicographic and numeric order agree.
inline Corpus generate_synthetic_corpus(const SyntheticCorpusOptions& opts) {
    if (opts.images == 0) throw ArgumentError("synthetic corpus needs at least one image");
    if (opts.feature_dim == 0) throw ArgumentError("synthetic corpus needs a positive feature dimension");
    static const std::array<const char*, 16> filler_words{
        "photo", "shot", "image", "picture", "entry", "subject", "challenge", "frame",
        "view", "scene", "moment", "idea", "title", "angle", "edit", "theme"};
    static const std::array<const char*, 8> openers{"interesting", "thanks", "see", "like",
                                                    "hmm", "okay", "fits", "voted"};

    const auto& attrs = planted_attributes();
    const auto& tags = planted_semantic_tags();
    detail::Rng setup(detail::mix_seed(opts.seed, 0xD1));
    const auto attr_dirs = detail::unit_directions(attrs.size(), opts.feature_dim, setup);
    const auto tag_dirs = detail::unit_directions(tags.size(), opts.feature_dim, setup);

    Corpus corpus;
    char id[32];
    for (std::size_t i = 0; i < opts.images; ++i) {
        detail::Rng rng(detail::mix_seed(opts.seed, 1000 + i));
        std::snprintf(id, sizeof id, "img%05zu", i);
        ImageRecord rec;
        rec.image_id = id;
        const double q = rng.normal();

        const auto votes = 100 + rng.below(101);
        for (std::uint64_t v = 0; v < votes; ++v) {
            auto s = static_cast<long>(std::lround(rng.normal(5.3 + 1.1 * q, 1.3)));
            s = std::clamp<long>(s, kMinScore, kMaxScore);
            ++rec.scores.counts[static_cast<std::size_t>(s - kMinScore)];
        }

        std::vector<double> x(opts.feature_dim);
        for (auto& v : x) v = opts.noise * rng.normal();
        for (std::size_t a = 0; a < attrs.size(); ++a) {
            const double z = opts.firing_slope * (attrs[a].beautiful ? q : -q) - 1.0;
            if (rng.uniform() >= 1.0 / (1.0 + std::exp(-z))) continue;
            const auto& phrase = attrs[a].phrases[rng.below(attrs[a].phrases.size())];
            rec.comments.push_back({phrase + "!",
                                    rng.bernoulli(0.5) ? Phase::DuringChallenge : Phase::AfterChallenge,
                                    std::nullopt});
            for (std::size_t k = 0; k < x.size(); ++k) x[k] += opts.signal * attr_dirs[a][k];
        }
        for (std::size_t t = 0; t < tags.size(); ++t) {
            if (!rng.bernoulli(0.3)) continue;
            rec.semantic_tags.insert(tags[t]);
            for (std::size_t k = 0; k < x.size(); ++k) x[k] += opts.signal * tag_dirs[t][k];
        }
        for (std::size_t c = 0; c < opts.filler_comments; ++c) {
            const auto* a = filler_words[rng.below(filler_words.size())];
            const auto* b = openers[rng.below(openers.size())];
            rec.comments.push_back({std::string(b) + " " + a + ".", Phase::AfterChallenge, std::nullopt});
        }
        rec.challenge_id = "challenge" + std::to_string(rng.below(5));
        rec.features = std::move(x);
        corpus.add(std::move(rec));
    }
    return corpus;
}

}  // namespace aesthmine
