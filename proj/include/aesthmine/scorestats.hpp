#pragma once

// Score-distribution models: Gaussian, Gamma and reflected Gamma fits to the
// 10-bin vote histograms, RMSE goodness of fit, delta-gap binary labels and
// per-challenge aggregates.

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aesthmine/corpus.hpp"
#include "aesthmine/error.hpp"

namespace aesthmine {

enum class Family { Gaussian, Gamma, ReflectedGamma };
inline constexpr std::array<Family, 3> kFamilies{Family::Gaussian, Family::Gamma, Family::ReflectedGamma};

inline const char* to_string(Family f) {
    switch (f) {
        case Family::Gaussian: return "gaussian";
        case Family::Gamma: return "gamma";
        case Family::ReflectedGamma: return "reflected_gamma";
    }
    return "?";
}

class DegenerateDistribution : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

/// Gamma models live on t = s - (kMinScore - 0.5), so the first bin centre
/// sits at t = 0.5 and the density is finite at every bin for any shape.
/// The reflected family evaluates the Gamma at kMinScore + kMaxScore - s.
inline constexpr double kGammaOrigin = kMinScore - 0.5;

struct FittedDistribution {
    Family family = Family::Gaussian;
    /// Gaussian: mean and standard deviation. Gamma families: shape k and
    /// scale theta.
    double first = 0.0;
    double second = 1.0;

    double density(double s) const {
        if (family == Family::Gaussian) {
            const double z = (s - first) / second;
            return std::exp(-0.5 * z * z) / (second * std::sqrt(2.0 * std::numbers::pi));
        }
        const double mirrored = family == Family::Gamma ? s : static_cast<double>(kMinScore + kMaxScore) - s;
        const double t = mirrored - kGammaOrigin;
        if (t <= 0.0) return 0.0;
        return std::exp((first - 1.0) * std::log(t) - t / second - std::lgamma(first) - first * std::log(second));
    }

    /// Density at bin centres 1..10 renormalized to sum to one.
    std::array<double, kScoreBins> bin_probabilities() const {
        std::array<double, kScoreBins> p{};
        double total = 0.0;
        for (std::size_t i = 0; i < kScoreBins; ++i) {
            p[i] = density(static_cast<double>(kMinScore + static_cast<int>(i)));
            total += p[i];
        }
        if (total > 0.0)
            for (auto& v : p) v /= total;
        return p;
    }
};

namespace detail {

inline std::pair<double, double> pmf_moments(const std::array<double, kScoreBins>& p) {
    double m = 0.0;
    for (std::size_t i = 0; i < kScoreBins; ++i) m += static_cast<double>(i + 1) * p[i];
    double v = 0.0;
    for (std::size_t i = 0; i < kScoreBins; ++i) {
        const double d = static_cast<double>(i + 1) - m;
        v += d * d * p[i];
    }
    return {m, v};
}

inline FittedDistribution from_log_params(Family f, double a, double b) {
    if (f == Family::Gaussian) return {f, a, std::exp(b)};
    return {f, std::exp(a), std::exp(b)};
}

}  // namespace detail

/// Closed-form continuous moment estimates: Gaussian (mu, sigma); Gamma
/// k = m^2/v, theta = v/m on the shifted (or mirrored and shifted) scale.
inline FittedDistribution moment_estimate(const ScoreDistribution& d, Family family) {
    if (d.total() < 2) throw ArgumentError("fit_distribution: need at least two votes");
    const double mu = d.mean();
    const double var = d.variance();
    if (!(var > 0.0)) throw DegenerateDistribution("fit_distribution: all votes share one score (zero variance)");
    if (family == Family::Gaussian) return {family, mu, std::sqrt(var)};
    const double m = family == Family::Gamma ? mu - kGammaOrigin
                                             : static_cast<double>(kMinScore + kMaxScore) - mu - kGammaOrigin;
    if (!(m > 0.0)) throw ArgumentError("fit_distribution: non-positive moment estimate for Gamma");
    return {family, m * m / var, var / m};
}

/// Moment matching against the model as it is compared with data: the
/// parameters are refined until the renormalized 10-bin model has the
/// histogram's mean and variance. Starts from moment_estimate and uses
/// damped Newton steps in log-parameter space. When the histogram's moments
/// are out of the family's reach, the closest match found is returned.
inline FittedDistribution fit_distribution(const ScoreDistribution& d, Family family) {
    const auto start = moment_estimate(d, family);
    const double target_m = d.mean();
    const double target_v = d.variance();

    double a = family == Family::Gaussian ? start.first : std::log(start.first);
    double b = std::log(start.second);
    auto residual = [&](double x, double y) {
        const auto [m, v] = detail::pmf_moments(detail::from_log_params(family, x, y).bin_probabilities());
        return std::array<double, 2>{m - target_m, v - target_v};
    };
    auto norm = [](const std::array<double, 2>& r) { return std::hypot(r[0], r[1]); };

    auto r = residual(a, b);
    for (int it = 0; it < 100 && norm(r) > 1e-13; ++it) {
        constexpr double h = 1e-6;
        const auto ra = residual(a + h, b);
        const auto rb = residual(a, b + h);
        const double j00 = (ra[0] - r[0]) / h, j10 = (ra[1] - r[1]) / h;
        const double j01 = (rb[0] - r[0]) / h, j11 = (rb[1] - r[1]) / h;
        const double det = j00 * j11 - j01 * j10;
        if (!std::isfinite(det) || std::abs(det) < 1e-300) break;
        const double da = -(j11 * r[0] - j01 * r[1]) / det;
        const double db = -(-j10 * r[0] + j00 * r[1]) / det;
        double step = 1.0;
        bool improved = false;
        for (int k = 0; k < 40; ++k, step *= 0.5) {
            const auto rn = residual(a + step * da, b + step * db);
            if (std::isfinite(rn[0]) && std::isfinite(rn[1]) && norm(rn) < norm(r)) {
                a += step * da;
                b += step * db;
                r = rn;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return detail::from_log_params(family, a, b);
}

/// RMSE between vote fractions and the renormalized model over 10 bins.
inline double gof_rmse(const ScoreDistribution& d, const FittedDistribution& f) {
    const auto h = d.normalized();
    const auto p = f.bin_probabilities();
    double s = 0.0;
    for (std::size_t i = 0; i < kScoreBins; ++i) s += (h[i] - p[i]) * (h[i] - p[i]);
    return std::sqrt(s / static_cast<double>(kScoreBins));
}

struct GofReport {
    std::array<FittedDistribution, 3> fits{};
    std::array<double, 3> rmse{};
    Family best_family = Family::Gaussian;
};

inline GofReport goodness_of_fit(const ScoreDistribution& d) {
    GofReport rep;
    for (std::size_t i = 0; i < kFamilies.size(); ++i) {
        rep.fits[i] = fit_distribution(d, kFamilies[i]);
        rep.rmse[i] = gof_rmse(d, rep.fits[i]);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < kFamilies.size(); ++i)
        if (rep.rmse[i] < rep.rmse[best]) best = i;
    rep.best_family = kFamilies[best];
    return rep;
}

/// Average RMSE per family for images binned by mean score, in the layout
/// of a goodness-of-fit table (rows [1,2) .. [9,10], plus the overall mean).
struct GofTable {
    struct Row {
        double lo = 0.0, hi = 0.0;
        std::size_t images = 0;
        std::array<double, 3> mean_rmse{};
    };
    std::vector<Row> rows;
    Row overall;
    std::array<std::size_t, 3> best_counts{};
    std::size_t skipped = 0;
};

inline GofTable gof_table(const Corpus& corpus) {
    GofTable t;
    constexpr std::size_t n_bins = kMaxScore - kMinScore;
    t.rows.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        t.rows[b].lo = kMinScore + static_cast<double>(b);
        t.rows[b].hi = t.rows[b].lo + 1.0;
    }
    t.overall.lo = kMinScore;
    t.overall.hi = kMaxScore;
    for (const auto& r : corpus) {
        GofReport rep;
        try {
            rep = goodness_of_fit(r.scores);
        } catch (const ArgumentError&) {
            ++t.skipped;
            continue;
        }
        auto bin = static_cast<std::size_t>(std::floor(r.mean_score() - kMinScore));
        if (bin >= n_bins) bin = n_bins - 1;
        for (auto* row : {&t.rows[bin], &t.overall}) {
            ++row->images;
            for (std::size_t i = 0; i < 3; ++i) row->mean_rmse[i] += rep.rmse[i];
        }
        ++t.best_counts[static_cast<std::size_t>(rep.best_family)];
    }
    auto finish = [](GofTable::Row& row) {
        if (row.images > 0)
            for (auto& v : row.mean_rmse) v /= static_cast<double>(row.images);
    };
    for (auto& row : t.rows) finish(row);
    finish(t.overall);
    return t;
}

inline nlohmann::json to_json(const GofTable& t) {
    auto row_json = [](const GofTable::Row& r) {
        nlohmann::json j{{"mean_score_from", r.lo}, {"mean_score_to", r.hi}, {"images", r.images}};
        for (std::size_t i = 0; i < 3; ++i) j[to_string(kFamilies[i])] = r.mean_rmse[i];
        return j;
    };
    auto rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back(row_json(r));
    nlohmann::json best;
    for (std::size_t i = 0; i < 3; ++i) best[to_string(kFamilies[i])] = t.best_counts[i];
    return {{"rows", std::move(rows)}, {"overall", row_json(t.overall)}, {"best_family_counts", best},
            {"skipped", t.skipped}};
}

// ---------------------------------------------------------------------------
// delta-gap labels

enum class AestheticLabel { Beautiful, Bad, Discarded };

inline const char* to_string(AestheticLabel l) {
    switch (l) {
        case AestheticLabel::Beautiful: return "beautiful";
        case AestheticLabel::Bad: return "bad";
        case AestheticLabel::Discarded: return "discarded";
    }
    return "?";
}

/// Beautiful when mean >= 5 + delta/2, bad when mean <= 5 - delta/2. The
/// Beautiful test runs first, so at delta = 0 a mean of exactly 5 is
/// Beautiful.
inline AestheticLabel binarize(double mean_score, double delta) {
    if (delta < 0.0) throw ArgumentError("delta must be non-negative");
    const double upper = 5.0 + delta / 2.0;
    const double lower = 5.0 - delta / 2.0;
    if (mean_score >= upper) return AestheticLabel::Beautiful;
    if (mean_score <= lower) return AestheticLabel::Bad;
    return AestheticLabel::Discarded;
}

inline std::map<std::string, AestheticLabel> binarize_labels(const Corpus& corpus, double delta) {
    std::map<std::string, AestheticLabel> out;
    for (const auto& r : corpus) out.emplace(r.image_id, binarize(r.mean_score(), delta));
    return out;
}

// ---------------------------------------------------------------------------
// Challenge aggregates

inline const std::string kNoChallenge = "(none)";

struct ChallengeStats {
    double mean_of_means = 0.0;
    double mean_of_variances = 0.0;
    std::size_t images = 0;
};

inline std::map<std::string, ChallengeStats> challenge_stats(const Corpus& corpus) {
    std::map<std::string, ChallengeStats> out;
    for (const auto& r : corpus) {
        if (r.scores.total() == 0) continue;
        auto& s = out[r.challenge_id.value_or(kNoChallenge)];
        s.mean_of_means += r.mean_score();
        s.mean_of_variances += r.scores.variance();
        ++s.images;
    }
    for (auto& [id, s] : out) {
        s.mean_of_means /= static_cast<double>(s.images);
        s.mean_of_variances /= static_cast<double>(s.images);
    }
    return out;
}

}  // namespace aesthmine
