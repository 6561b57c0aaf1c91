#pragma once

// Elastic-net regression of mean scores on text features,
//
//   beta = argmin ||y - ybar - X beta||^2 + lambda1 ||beta||_1 + lambda2 ||beta||^2,
//
// solved by cyclic coordinate descent over the columns of a sparse X. The
// intercept is the training mean of y and is not penalized.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "aesthmine/detail/parallel.hpp"
#include "aesthmine/detail/strings.hpp"
#include "aesthmine/error.hpp"
#include "aesthmine/metrics.hpp"
#include "aesthmine/text.hpp"

namespace aesthmine {

struct ElasticNetOptions {
    double tol = 1e-6;
    std::size_t max_iter = 1000;
};

struct ElasticNetModel {
    std::vector<double> beta;
    double intercept = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    std::size_t nnz = 0;
    bool converged = false;
    std::size_t sweeps = 0;
    double objective = 0.0;
    /// Objective after each full sweep; non-increasing.
    std::vector<double> objective_trace;
};

inline double soft_threshold(double a, double t) {
    if (a > t) return a - t;
    if (a < -t) return a + t;
    return 0.0;
}

namespace detail {

struct ColumnEntry {
    std::uint32_t row;
    double value;
};

/// Column-major copy of the row-sparse document matrix.
inline std::vector<std::vector<ColumnEntry>> to_columns(const DocumentMatrix& X) {
    std::vector<std::vector<ColumnEntry>> cols(X.dim);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const auto& row = X.rows[i];
        for (std::size_t k = 0; k < row.nnz(); ++k) {
            if (row.indices[k] >= X.dim) throw ArgumentError("matrix column index out of range");
            cols[row.indices[k]].push_back({static_cast<std::uint32_t>(i), row.values[k]});
        }
    }
    return cols;
}

inline double elastic_net_objective(const std::vector<double>& residual, const std::vector<double>& beta,
                                    double lambda1, double lambda2) {
    KahanSum loss, l1, l2;
    for (double r : residual) loss.add(r * r);
    for (double b : beta) {
        l1.add(std::abs(b));
        l2.add(b * b);
    }
    return loss.value() + lambda1 * l1.value() + lambda2 * l2.value();
}

inline void check_finite(const DocumentMatrix& X) {
    for (const auto& row : X.rows)
        for (double v : row.values)
            if (!std::isfinite(v)) throw ArgumentError("non-finite value in design matrix");
    for (double y : X.targets)
        if (!std::isfinite(y)) throw ArgumentError("non-finite target value");
}

}  // namespace detail

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    detail::KahanSum s;
    for (double x : v) s.add(x);
    return s.value() / static_cast<double>(v.size());
}

/// Coordinate update: beta_j = soft(x_j'r_j, lambda1/2) / (||x_j||^2 + lambda2)
/// where r_j is the residual with feature j removed.
inline ElasticNetModel fit_elastic_net(const DocumentMatrix& X, double lambda1, double lambda2,
                                       const ElasticNetOptions& opts = {}) {
    if (X.size() == 0 || X.dim == 0) throw ArgumentError("fit_elastic_net: empty design matrix");
    if (X.targets.size() != X.size()) throw ArgumentError("fit_elastic_net: target count differs from row count");
    if (!(opts.tol > 0.0)) throw ArgumentError("fit_elastic_net: tol must be positive");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ArgumentError("fit_elastic_net: lambdas must be non-negative");
    detail::check_finite(X);

    const auto cols = detail::to_columns(X);
    std::vector<double> sq(X.dim, 0.0);
    for (std::size_t j = 0; j < X.dim; ++j)
        for (const auto& e : cols[j]) sq[j] += e.value * e.value;

    ElasticNetModel m;
    m.lambda1 = lambda1;
    m.lambda2 = lambda2;
    m.intercept = mean_of(X.targets);
    m.beta.assign(X.dim, 0.0);
    std::vector<double> r(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) r[i] = X.targets[i] - m.intercept;

    const double half_l1 = 0.5 * lambda1;
    for (m.sweeps = 0; m.sweeps < opts.max_iter;) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < X.dim; ++j) {
            const double denom = sq[j] + lambda2;
            if (denom <= 0.0) continue;
            const double old = m.beta[j];
            double rho = sq[j] * old;
            for (const auto& e : cols[j]) rho += e.value * r[e.row];
            const double updated = soft_threshold(rho, half_l1) / denom;
            const double delta = updated - old;
            if (delta != 0.0) {
                for (const auto& e : cols[j]) r[e.row] -= e.value * delta;
                m.beta[j] = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        ++m.sweeps;
        m.objective_trace.push_back(detail::elastic_net_objective(r, m.beta, lambda1, lambda2));
        if (max_change < opts.tol) {
            m.converged = true;
            break;
        }
    }
    m.objective = m.objective_trace.empty() ? detail::elastic_net_objective(r, m.beta, lambda1, lambda2)
                                            : m.objective_trace.back();
    m.nnz = static_cast<std::size_t>(std::count_if(m.beta.begin(), m.beta.end(), [](double b) { return b != 0.0; }));
    return m;
}

/// Smallest lambda1 for which beta = 0 is optimal: 2 max_j |x_j'(y - ybar)|.
inline double lambda1_max(const DocumentMatrix& X) {
    const double ybar = mean_of(X.targets);
    std::vector<double> g(X.dim, 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double yc = X.targets[i] - ybar;
        const auto& row = X.rows[i];
        for (std::size_t k = 0; k < row.nnz(); ++k) g[row.indices[k]] += row.values[k] * yc;
    }
    double mx = 0.0;
    for (double v : g) mx = std::max(mx, std::abs(v));
    return 2.0 * mx;
}

inline std::vector<double> predict_linear(const ElasticNetModel& model, const DocumentMatrix& X) {
    if (model.beta.size() != X.dim)
        throw ArgumentError("predict_linear: model has " + std::to_string(model.beta.size()) +
                            " weights, matrix has " + std::to_string(X.dim) + " columns");
    std::vector<double> y(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) y[i] = X.rows[i].dot(model.beta) + model.intercept;
    return y;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct GridPoint {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

struct CvReport {
    std::vector<GridPoint> grid;
    /// Validation Spearman rho per grid point; NaN when undefined
    /// (constant predictions).
    std::vector<double> scores;
    std::vector<std::size_t> nnz;
    std::size_t chosen = 0;
    std::size_t chosen_nnz = 0;
    std::size_t nnz_target = 0;
    /// No grid point landed within +/-10% of the nnz target; the chosen
    /// point is then the overall rho maximizer.
    bool outside_nnz_band = false;
    ElasticNetModel model;
};

/// Geometric lambda1 path from lambda1_max down to lambda1_max * min_ratio,
/// crossed with each lambda2.
inline std::vector<GridPoint> make_grid(const DocumentMatrix& X, std::size_t n_lambda1, double min_ratio,
                                        const std::vector<double>& lambda2_values) {
    const double top = lambda1_max(X);
    std::vector<GridPoint> grid;
    for (double l2 : lambda2_values)
        for (std::size_t k = 0; k < n_lambda1; ++k) {
            const double t = n_lambda1 == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n_lambda1 - 1);
            grid.push_back({top * std::pow(min_ratio, t), l2});
        }
    return grid;
}

inline CvReport cross_validate(const DocumentMatrix& train, const DocumentMatrix& val,
                               const std::vector<GridPoint>& grid, std::size_t nnz_target,
                               const ElasticNetOptions& opts = {}, unsigned jobs = 1) {
    if (grid.empty()) throw ArgumentError("cross_validate: empty grid");
    CvReport rep;
    rep.grid = grid;
    rep.nnz_target = nnz_target;
    rep.scores.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    rep.nnz.assign(grid.size(), 0);
    std::vector<ElasticNetModel> models(grid.size());

    detail::parallel_for(grid.size(), jobs, [&](std::size_t g) {
        models[g] = fit_elastic_net(train, grid[g].lambda1, grid[g].lambda2, opts);
        rep.nnz[g] = models[g].nnz;
        const auto pred = predict_linear(models[g], val);
        try {
            rep.scores[g] = spearman_rho(pred, val.targets);
        } catch (const UndefinedCorrelation&) {
        }
    });

    const double band = 0.1 * static_cast<double>(nnz_target);
    auto pick = [&](bool in_band_only) -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            if (std::isnan(rep.scores[g])) continue;
            if (in_band_only &&
                std::abs(static_cast<double>(rep.nnz[g]) - static_cast<double>(nnz_target)) > band)
                continue;
            if (!best || rep.scores[g] > rep.scores[*best]) best = g;
        }
        return best;
    };
    auto chosen = pick(true);
    if (!chosen) {
        rep.outside_nnz_band = true;
        chosen = pick(false);
    }
    rep.chosen = chosen.value_or(0);
    rep.chosen_nnz = rep.nnz[rep.chosen];
    rep.model = std::move(models[rep.chosen]);
    return rep;
}

inline nlohmann::json to_json(const CvReport& rep) {
    auto points = nlohmann::json::array();
    for (std::size_t g = 0; g < rep.grid.size(); ++g) {
        nlohmann::json p{{"lambda1", rep.grid[g].lambda1}, {"lambda2", rep.grid[g].lambda2}, {"nnz", rep.nnz[g]}};
        p["spearman"] = std::isnan(rep.scores[g]) ? nlohmann::json(nullptr) : nlohmann::json(rep.scores[g]);
        points.push_back(std::move(p));
    }
    return {{"grid", std::move(points)},
            {"chosen", rep.chosen},
            {"chosen_nnz", rep.chosen_nnz},
            {"nnz_target", rep.nnz_target},
            {"outside_nnz_band", rep.outside_nnz_band},
            {"converged", rep.model.converged}};
}

/// Grid file: one "lambda1 lambda2" pair per line; '#' starts a comment.
inline std::vector<GridPoint> read_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read grid file: " + path);
    std::vector<GridPoint> grid;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream ls(t);
        GridPoint p;
        if (!(ls >> p.lambda1 >> p.lambda2) || p.lambda1 < 0 || p.lambda2 < 0)
            throw ParseError("expected two non-negative reals", line_no);
        grid.push_back(p);
    }
    if (grid.empty()) throw ParseError("grid file has no points");
    return grid;
}

// ---------------------------------------------------------------------------
// Model file: '#' header lines (intercept, lambda1, lambda2, dim, nnz), then
// one "term<TAB>beta" line per non-zero weight sorted by |beta| descending
// (ties by term text).

struct TermModel {
    Vocabulary vocab;
    ElasticNetModel model;
};

inline void write_term_model(const std::string& path, const ElasticNetModel& m, const Vocabulary& vocab) {
    if (m.beta.size() != vocab.size()) throw ArgumentError("model and vocabulary sizes differ");
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < m.beta.size(); ++j)
        if (m.beta[j] != 0.0) nz.push_back(j);
    std::sort(nz.begin(), nz.end(), [&](auto a, auto b) {
        const double x = std::abs(m.beta[a]), y = std::abs(m.beta[b]);
        if (x != y) return x > y;
        return vocab.term(a).text() < vocab.term(b).text();
    });
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model: " + path);
    out << "# intercept " << detail::format_double(m.intercept) << '\n'
        << "# lambda1 " << detail::format_double(m.lambda1) << '\n'
        << "# lambda2 " << detail::format_double(m.lambda2) << '\n'
        << "# dim " << m.beta.size() << '\n'
        << "# nnz " << nz.size() << '\n';
    for (auto j : nz) out << vocab.term(j).text() << '\t' << detail::format_double(m.beta[j]) << '\n';
}

/// Reads a model file back; the vocabulary holds only the listed terms.
inline TermModel read_term_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read model: " + path);
    ElasticNetModel m;
    std::vector<Term> terms;
    std::vector<double> weights;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto parts = detail::split_ws(line);
            if (parts.size() != 3) continue;
            if (parts[1] == "intercept") m.intercept = std::stod(parts[2]);
            if (parts[1] == "lambda1") m.lambda1 = std::stod(parts[2]);
            if (parts[1] == "lambda2") m.lambda2 = std::stod(parts[2]);
            continue;
        }
        auto parts = detail::split(line, '\t');
        if (parts.size() != 2) throw ParseError("model line must be \"term<TAB>beta\"", line_no);
        terms.push_back(Term::from_text(parts[0]));
        weights.push_back(std::stod(parts[1]));
    }
    std::vector<Term> sorted_terms = terms;
    TermModel tm{Vocabulary(std::move(sorted_terms), std::vector<std::uint64_t>(terms.size(), 0),
                            std::vector<std::uint64_t>(terms.size(), 0), 1),
                 {}};
    m.beta.assign(terms.size(), 0.0);
    for (std::size_t k = 0; k < terms.size(); ++k) m.beta[*tm.vocab.index_of(terms[k].text())] = weights[k];
    m.nnz = static_cast<std::size_t>(std::count_if(m.beta.begin(), m.beta.end(), [](double b) { return b != 0.0; }));
    m.converged = true;
    tm.model = std::move(m);
    return tm;
}

}  // namespace aesthmine
