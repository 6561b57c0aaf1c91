#pragma once

// Helpers shared by the unit and acceptance suites: temporary directories,
// record builders, independent reference solvers and planted-data
// generators.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unistd.h>

#include "aesthmine/aesthmine.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace aesthmine;

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("aesthmine-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ImageRecord make_record(const std::string& id, std::array<std::uint32_t, 10> counts,
                               const std::vector<std::string>& comments = {},
                               Phase phase = Phase::AfterChallenge) {
    ImageRecord r;
    r.image_id = id;
    r.scores.counts = counts;
    for (const auto& c : comments) r.comments.push_back({c, phase, std::nullopt});
    return r;
}

/// Histogram with every vote on one score.
inline std::array<std::uint32_t, 10> votes_at(int score, std::uint32_t n = 10) {
    std::array<std::uint32_t, 10> c{};
    c[static_cast<std::size_t>(score - 1)] = n;
    return c;
}

/// Dense matrix wrapped as a DocumentMatrix (zeros skipped).
inline DocumentMatrix from_dense(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    DocumentMatrix m;
    m.dim = static_cast<std::size_t>(X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        SparseVector row;
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            if (X(i, j) != 0.0) {
                row.indices.push_back(static_cast<std::uint32_t>(j));
                row.values.push_back(X(i, j));
            }
        m.rows.push_back(std::move(row));
        m.image_ids.push_back("r" + std::to_string(i));
        m.targets.push_back(y(i));
    }
    return m;
}

// Dense problem builders

inline Eigen::MatrixXd random_dense(detail::Rng& rng, int n, int d) {
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
    return X;
}

inline Eigen::VectorXd random_vec(detail::Rng& rng, int n, double mean = 0.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = mean + rng.normal();
    return v;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Random orthonormal columns (n x d, d <= n) via QR.
inline Eigen::MatrixXd orthonormal(detail::Rng& rng, int n, int d) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_dense(rng, n, n));
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
}

inline ElasticNetOptions tight() {
    ElasticNetOptions o;
    o.tol = 1e-12;
    o.max_iter = 100000;
    return o;
}


/// Reference elastic-net solver: proximal gradient (ISTA) on
/// ||yc - X b||^2 + l2 ||b||^2 with the l1 term handled by its prox.
/// Shares no code with the coordinate-descent solver.
inline Eigen::VectorXd proximal_gradient_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l1,
                                                     double l2, double tol = 1e-14, int max_iter = 500000) {
    const Eigen::VectorXd yc = y.array() - y.mean();
    const Eigen::MatrixXd G = X.transpose() * X;
    const Eigen::VectorXd c = X.transpose() * yc;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double lipschitz = 2.0 * (es.eigenvalues().maxCoeff() + l2);
    const double step = 1.0 / lipschitz;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd grad = 2.0 * (G * b - c) + 2.0 * l2 * b;
        Eigen::VectorXd z = b - step * grad;
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            const double t = step * l1;
            z(j) = z(j) > t ? z(j) - t : (z(j) < -t ? z(j) + t : 0.0);
        }
        const double change = (z - b).cwiseAbs().maxCoeff();
        b = z;
        if (change < tol) break;
    }
    return b;
}

/// Edit distance by the full (n+1) x (m+1) table, kept separate from the
/// rolling-row implementation under test.
inline std::size_t levenshtein_table(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

/// AUC by enumerating every (positive, negative) pair.
inline double auc_by_pairs(const std::vector<double>& pos, const std::vector<double>& neg) {
    double wins = 0.0;
    for (double p : pos)
        for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Letters-only pseudo word for index i (never a stop word).
inline std::string pseudo_word(std::size_t i, const std::string& prefix = "zq") {
    std::string w = prefix;
    w.push_back(static_cast<char>('a' + (i / 26) % 26));
    w.push_back(static_cast<char>('a' + i % 26));
    return w;
}

// ---------------------------------------------------------------------------
// Planted regression problem: documents whose comments are single bigrams
// drawn uniformly from the pool; the score is 5 plus a weighted count of the
// 20 planted bigrams (or of their tf-idf weights) plus Gaussian noise.

/// What the planted score is linear in.
enum class PlantedSignal { Counts, Tfidf };

struct PlantedRegression {
    Corpus corpus;
    Vocabulary vocab;
    DocumentMatrix X;  // tf-idf with planted targets
    std::vector<double> clean;  // targets before noise, per row of X
    std::vector<std::string> planted;
    DataSplit split;
};

inline PlantedRegression planted_regression(std::size_t docs = 2000, std::size_t n_bigrams = 500,
                                            std::size_t n_planted = 20, double noise = 0.3, std::uint64_t seed = 11,
                                            std::size_t comments_per_doc = 40,
                                            PlantedSignal signal = PlantedSignal::Counts) {
    detail::Rng rng(seed);
    std::vector<std::string> bigrams;
    for (std::size_t i = 0; i < n_bigrams; ++i)
        bigrams.push_back(pseudo_word(i / 20, "zq") + " " + pseudo_word(i % 20, "xv"));
    std::vector<std::size_t> order(n_bigrams);
    for (std::size_t i = 0; i < n_bigrams; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::size_t> planted_idx(order.begin(), order.begin() + static_cast<long>(n_planted));

    PlantedRegression p;
    std::vector<double> weights(n_bigrams, 0.0);
    for (std::size_t k = 0; k < n_planted; ++k) {
        const double mag = rng.uniform(1.5, 3.0);
        weights[planted_idx[k]] = k % 2 == 0 ? mag : -mag;
        p.planted.push_back(bigrams[planted_idx[k]]);
    }
    std::vector<double> count_signal(docs, 0.0);
    for (std::size_t d = 0; d < docs; ++d) {
        ImageRecord r;
        r.image_id = "doc" + std::to_string(100000 + d);
        r.scores.counts[4] = 1;
        for (std::size_t c = 0; c < comments_per_doc; ++c) {
            const auto idx = rng.below(n_bigrams);
            r.comments.push_back({bigrams[idx], Phase::AfterChallenge, std::nullopt});
            count_signal[d] += weights[idx];
        }
        p.corpus.add(std::move(r));
    }
    p.vocab = build_vocabulary(p.corpus, VocabularyKind::Bigram, 1);
    p.X = vectorize_tfidf(p.corpus, p.vocab);
    std::vector<double> column_weight(p.vocab.size(), 0.0);
    for (std::size_t b = 0; b < n_bigrams; ++b)
        if (auto j = p.vocab.index_of(bigrams[b])) column_weight[*j] = weights[b];
    for (std::size_t i = 0; i < p.X.size(); ++i) {
        double s = 5.0;
        const auto& row = p.X.rows[i];
        if (signal == PlantedSignal::Counts)
            s += count_signal[i];
        else
            for (std::size_t k = 0; k < row.nnz(); ++k) s += column_weight[row.indices[k]] * row.values[k];
        p.clean.push_back(s);
        p.X.targets[i] = s + rng.normal(0.0, noise);
    }
    p.split = split_corpus(p.corpus, {0.6, 0.2, 0.2}, seed);
    return p;
}

// ---------------------------------------------------------------------------
// Planted synonym groups: second terms within edit distance 1 inside a
// group and at least 4 between groups.

struct PlantedGroups {
    std::vector<CandidateTerm> candidates;
    std::vector<std::size_t> group;  // per candidate
    std::size_t groups = 0;
};

inline PlantedGroups planted_groups(std::size_t n_groups = 100, std::uint64_t seed = 5) {
    detail::Rng rng(seed);
    std::vector<std::string> bases;
    while (bases.size() < n_groups) {
        std::string w;
        for (int i = 0; i < 8; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
        bool ok = true;
        for (const auto& b : bases)
            if (levenshtein_table(b, w) < 6) {
                ok = false;
                break;
            }
        if (ok) bases.push_back(w);
    }
    static const char* firsts[] = {"great", "nice", "lovely", "good", "beautiful", "fine"};
    static const char* suffixes[] = {"", "s", "x", "z"};
    PlantedGroups p;
    p.groups = n_groups;
    for (std::size_t g = 0; g < n_groups; ++g) {
        const std::size_t members = 2 + rng.below(3);
        for (std::size_t m = 0; m < members; ++m) {
            p.candidates.push_back({Term::bigram(firsts[rng.below(6)], bases[g] + suffixes[m]),
                                    rng.uniform(0.1, 1.0), Polarity::Beautiful});
            p.group.push_back(g);
        }
    }
    return p;
}

/// Fraction of items whose cluster's majority group matches their group.
inline double purity(const std::vector<std::size_t>& labels, const std::vector<std::size_t>& truth) {
    std::map<std::size_t, std::map<std::size_t, std::size_t>> table;
    for (std::size_t i = 0; i < labels.size(); ++i) ++table[labels[i]][truth[i]];
    std::size_t hit = 0;
    for (const auto& [c, counts] : table) {
        std::size_t best = 0;
        for (const auto& [g, n] : counts) best = std::max(best, n);
        hit += best;
    }
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Score histograms drawn from a known family. The bin probabilities are
// computed here from the textbook densities, not through FittedDistribution.

/// Gaussian: (mean, sd). Gamma: (shape, scale) on s - 0.5. Reflected:
/// the Gamma evaluated at 11 - s.
inline std::array<double, 10> family_pmf(Family f, double p1, double p2) {
    std::array<double, 10> p{};
    double total = 0.0;
    for (int s = 1; s <= 10; ++s) {
        double v;
        if (f == Family::Gaussian) {
            const double z = (s - p1) / p2;
            v = std::exp(-0.5 * z * z);
        } else {
            const double t = (f == Family::Gamma ? s : 11 - s) - 0.5;
            v = std::pow(t, p1 - 1.0) * std::exp(-t / p2);
        }
        p[static_cast<std::size_t>(s - 1)] = v;
        total += v;
    }
    for (auto& v : p) v /= total;
    return p;
}

inline ScoreDistribution sample_histogram(const std::array<double, 10>& pmf, std::size_t votes, detail::Rng& rng) {
    ScoreDistribution d;
    for (std::size_t n = 0; n < votes; ++n) {
        double u = rng.uniform(), acc = 0.0;
        std::size_t bin = 9;
        for (std::size_t i = 0; i < 10; ++i) {
            acc += pmf[i];
            if (u < acc) {
                bin = i;
                break;
            }
        }
        ++d.counts[bin];
    }
    return d;
}

/// Parameters for a clearly shaped member of each family.
inline std::array<double, 2> random_family_params(Family f, detail::Rng& rng) {
    if (f == Family::Gaussian) return {rng.uniform(4.5, 6.5), rng.uniform(1.0, 1.6)};
    return {rng.uniform(1.5, 3.0), rng.uniform(0.8, 1.4)};
}

// ---------------------------------------------------------------------------
// pLSA oracle

/// sum_d sum_w n(d,w) log sum_z P(w|z) P(z|d), looping over a dense count
/// table including its zero cells.
inline double brute_force_plsa_loglik(const std::vector<std::vector<double>>& counts, const PlsaModel& m) {
    long double ll = 0.0L;
    for (std::size_t d = 0; d < counts.size(); ++d)
        for (std::size_t w = 0; w < counts[d].size(); ++w) {
            if (counts[d][w] == 0.0) continue;
            long double p = 0.0L;
            for (std::size_t z = 0; z < m.topics; ++z)
                p += static_cast<long double>(m.word_given_topic[z * m.vocab_size + w]) *
                     m.topic_given_doc[d * m.topics + z];
            ll += counts[d][w] * std::log(p);
        }
    return static_cast<double>(ll);
}

inline DocumentMatrix counts_to_matrix(const std::vector<std::vector<double>>& counts) {
    DocumentMatrix m;
    m.dim = counts.empty() ? 0 : counts[0].size();
    for (std::size_t d = 0; d < counts.size(); ++d) {
        SparseVector row;
        for (std::size_t w = 0; w < counts[d].size(); ++w)
            if (counts[d][w] != 0.0) {
                row.indices.push_back(static_cast<std::uint32_t>(w));
                row.values.push_back(counts[d][w]);
            }
        m.rows.push_back(std::move(row));
        m.image_ids.push_back("d" + std::to_string(d));
        m.targets.push_back(0.0);
    }
    return m;
}

inline std::vector<std::vector<double>> random_counts(std::size_t n, std::size_t v, detail::Rng& rng,
                                                      std::size_t max_count = 5) {
    std::vector<std::vector<double>> c(n, std::vector<double>(v, 0.0));
    for (auto& row : c) {
        for (auto& x : row) x = static_cast<double>(rng.below(max_count + 1));
        row[rng.below(v)] += 1.0;  // no empty documents
    }
    return c;
}

/// Two vocabulary halves; each document draws words from one half only.
inline std::vector<std::vector<double>> two_block_counts(std::size_t n, std::size_t v, detail::Rng& rng) {
    std::vector<std::vector<double>> c(n, std::vector<double>(v, 0.0));
    for (std::size_t d = 0; d < n; ++d) {
        const std::size_t lo = d % 2 == 0 ? 0 : v / 2, hi = d % 2 == 0 ? v / 2 : v;
        for (int k = 0; k < 40; ++k) c[d][lo + rng.below(hi - lo)] += 1.0;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Hand-built models

inline AttributeModel toy_model(const std::string& label, ModelKind kind, std::vector<double> weights,
                                double bias = 0.0, double auc = 0.5) {
    AttributeModel m;
    m.label = label;
    m.kind = kind;
    m.auc = auc;
    m.classifier.weights = std::move(weights);
    m.classifier.bias = bias;
    return m;
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace testsupport
