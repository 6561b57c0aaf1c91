// Command-line driver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aesthmine/aesthmine.hpp"

namespace fs = std::filesystem;
using namespace aesthmine;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    std::string config;
};

template <class F>
void emit(const std::string& path, F&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write(out);
}

void emit_json(const std::string& path, const nlohmann::json& j) {
    emit(path, [&](std::ostream& o) { o << j.dump(1) << '\n'; });
}

Corpus read_corpus(const std::string& path) {
    auto loaded = load_corpus(path);
    if (!loaded.rejects.entries.empty())
        std::cerr << path << ": skipped " << loaded.rejects.entries.size() << " invalid record(s)\n";
    return std::move(loaded.corpus);
}

std::array<double, 3> parse_fractions(const std::string& s) {
    auto parts = detail::split(s, ',');
    if (parts.size() != 3) throw ConfigError("--split expects three comma-separated fractions");
    std::array<double, 3> f{};
    for (std::size_t i = 0; i < 3; ++i) {
        try {
            f[i] = std::stod(parts[i]);
        } catch (const std::exception&) {
            throw ConfigError("--split: \"" + parts[i] + "\" is not a number");
        }
    }
    return f;
}

DataSplit read_split(const std::string& path) {
    try {
        return split_from_json(read_json_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::vector<std::string> read_id_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line))
        if (auto t = detail::trim(line); !t.empty()) ids.emplace_back(t);
    return ids;
}

/// Feature vector for `--image`: a Netpbm file, or an image id looked up in
/// the corpus (precomputed features first, then its pixel file).
FeatureVector image_features(const std::string& image, const std::string& corpus_path) {
    if (fs::is_regular_file(image)) return extract_builtin_features(read_netpbm(image));
    if (corpus_path.empty()) throw ArgumentError("\"" + image + "\" is not a file; pass --corpus to look up ids");
    const auto corpus = read_corpus(corpus_path);
    const auto* rec = corpus.find(image);
    if (!rec) throw QueryError("unknown image id \"" + image + "\"");
    if (rec->features) return {*rec->features, kPrecomputedExtractor};
    if (rec->pixels) {
        fs::path p = *rec->pixels;
        if (p.is_relative()) p = fs::path(corpus_path).parent_path() / p;
        return extract_builtin_features(read_netpbm(p.string()));
    }
    throw ValidationError("image \"" + image + "\" has neither features nor pixels");
}

RetrievalIndex index_for(const std::string& bank_path, const std::string& corpus_path, const std::string& mode,
                         unsigned jobs) {
    const auto bank = load_bank(bank_path);
    const auto corpus = read_corpus(corpus_path);
    return build_index(bank, corpus_features(corpus, mode, fs::path(corpus_path).parent_path(), jobs), jobs);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mine aesthetic attributes from photo comments and learn visual attribute classifiers"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Random seed for every stochastic step");
    app.add_option("--jobs", g.jobs, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_option("--config", g.config, "Pipeline configuration (JSON)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus, write the clean copy, rejects and a split");
    std::string in_corpus, in_out, in_rejects, in_split = "0.7,0.15,0.15", in_split_out;
    std::uint32_t in_min_votes = 1;
    bool in_lenient = false;
    ingest->add_option("--corpus,--input", in_corpus)->required();
    ingest->add_option("--out", in_out, "Clean corpus (JSON lines)");
    ingest->add_option("--rejects,--report", in_rejects, "Reject report (JSON)");
    ingest->add_option("--min-votes", in_min_votes);
    ingest->add_flag("--lenient", in_lenient, "Report malformed lines instead of failing");
    ingest->add_option("--split", in_split, "train,validation,test fractions");
    ingest->add_option("--split-out", in_split_out, "Split file (JSON)");

    // stats
    auto* stats = app.add_subcommand("stats", "Corpus statistics");
    stats->require_subcommand(1);
    stats->fallthrough();
    auto* st_comments = stats->add_subcommand("comments", "Comment counts and lengths");
    auto* st_fit = stats->add_subcommand("fit", "Score distribution fits and goodness of fit");
    auto* st_challenges = stats->add_subcommand("challenges", "Per-challenge score aggregates");
    std::string st_corpus, st_out;
    for (auto* s : {st_comments, st_fit, st_challenges}) {
        s->add_option("--corpus", st_corpus)->required();
        s->add_option("--out", st_out);
    }

    // labels
    auto* labels = app.add_subcommand("labels", "delta-gap beautiful/bad labels");
    std::string lb_corpus, lb_out;
    double lb_delta = 1.0;
    labels->add_option("--corpus", lb_corpus)->required();
    labels->add_option("--delta", lb_delta)->check(CLI::NonNegativeNumber);
    labels->add_option("--out", lb_out);

    // text
    auto* text = app.add_subcommand("text", "Text processing");
    text->require_subcommand(1);
    text->fallthrough();
    auto* vectorize = text->add_subcommand("vectorize", "Build a vocabulary and a document-term matrix");
    std::string tv_corpus, tv_kind = "bi", tv_weighting = "tfidf", tv_subset, tv_vocab, tv_out, tv_vocab_out;
    std::uint64_t tv_min_count = 1;
    vectorize->add_option("--corpus", tv_corpus)->required();
    vectorize->add_option("--kind", tv_kind)->check(CLI::IsMember({"uni", "bi", "both"}));
    vectorize->add_option("--min-count", tv_min_count);
    vectorize->add_option("--weighting", tv_weighting)->check(CLI::IsMember({"tfidf", "counts"}));
    vectorize->add_option("--subset", tv_subset, "File of image ids to keep, one per line");
    vectorize->add_option("--vocab", tv_vocab, "Reuse an existing vocabulary file");
    vectorize->add_option("--out", tv_out, "Matrix file")->required();
    vectorize->add_option("--vocab-out", tv_vocab_out, "Vocabulary file");

    // mine
    auto* mine = app.add_subcommand("mine", "Attribute mining");
    mine->require_subcommand(1);
    mine->fallthrough();
    auto* regress = mine->add_subcommand("regress", "Elastic-net regression with grid search");
    std::string rg_matrix, rg_vocab, rg_split, rg_grid, rg_out, rg_cv_out, rg_lambda2 = "0.01,0.1,1";
    std::size_t rg_nnz = 1000, rg_n_lambda1 = 20, rg_max_iter = 1000;
    double rg_min_ratio = 0.01, rg_tol = 1e-6;
    std::string rg_train, rg_val;
    auto* rg_matrix_opt = regress->add_option("--matrix", rg_matrix, "Matrix holding every split");
    regress->add_option("--split", rg_split, "Split file; rows are selected by id")->needs(rg_matrix_opt);
    auto* rg_train_opt = regress->add_option("--train", rg_train, "Training matrix")->excludes(rg_matrix_opt);
    regress->add_option("--val", rg_val, "Validation matrix")->needs(rg_train_opt);
    regress->add_option("--vocab", rg_vocab)->required();
    regress->add_option("--grid", rg_grid, "File of \"lambda1 lambda2\" lines");
    regress->add_option("--n-lambda1", rg_n_lambda1);
    regress->add_option("--min-ratio", rg_min_ratio);
    regress->add_option("--lambda2", rg_lambda2, "Comma-separated lambda2 values");
    regress->add_option("--nnz-target,--nnz", rg_nnz);
    regress->add_option("--tol", rg_tol);
    regress->add_option("--max-iter", rg_max_iter);
    regress->add_option("--out", rg_out, "Term model file")->required();
    regress->add_option("--cv-out", rg_cv_out, "Grid search report (JSON)");

    auto* cluster = mine->add_subcommand("cluster", "Group candidate bigrams into named attributes");
    std::string cl_model, cl_corpus, cl_out, cl_naming = "max_weight";
    std::size_t cl_k = 1500, cl_clusters = 100;
    double cl_sigma = 1.0;
    cluster->add_option("--model", cl_model, "Term model from mine regress")->required();
    cluster->add_option("--corpus", cl_corpus, "Corpus for positive-image assignment")->required();
    cluster->add_option("--k,--k-per-polarity", cl_k, "Candidates per polarity");
    cluster->add_option("--clusters", cl_clusters, "Clusters per polarity");
    cluster->add_option("--sigma", cl_sigma);
    bool cl_random = false;
    cluster->add_option("--naming", cl_naming)->check(CLI::IsMember({"max_weight", "random"}));
    cluster->add_flag("--name-random", cl_random, "Name clusters by a seeded random member");
    cluster->add_option("--out", cl_out, "Attribute file (JSON lines)")->required();

    auto* plsa = mine->add_subcommand("plsa", "pLSA topics over raw counts");
    std::string pl_matrix, pl_vocab, pl_out;
    std::size_t pl_topics = 50, pl_iters = 200, pl_top = 20;
    plsa->add_option("--matrix", pl_matrix, "Count matrix (text vectorize --weighting counts)")->required();
    plsa->add_option("--vocab", pl_vocab)->required();
    plsa->add_option("--topics", pl_topics);
    plsa->add_option("--iters", pl_iters);
    plsa->add_option("--top", pl_top, "Terms listed per topic");
    plsa->add_option("--out", pl_out);

    // features
    auto* features = app.add_subcommand("features", "Image features");
    features->require_subcommand(1);
    features->fallthrough();
    auto* extract = features->add_subcommand("extract", "Builtin layout features into a feature cache");
    std::string fx_corpus, fx_out;
    extract->add_option("--corpus", fx_corpus)->required();
    extract->add_option("--out", fx_out)->required();

    // attributes
    auto* attributes = app.add_subcommand("attributes", "Visual attribute classifiers");
    attributes->require_subcommand(1);
    attributes->fallthrough();
    auto* train = attributes->add_subcommand("train", "Train one classifier per attribute and build the bank");
    std::string tr_corpus, tr_attrs, tr_features = "precomputed", tr_cache, tr_split, tr_out;
    std::size_t tr_k = 100, tr_epochs = 10;
    double tr_eta0 = 0.1, tr_lambda = 1e-5;
    train->add_option("--corpus", tr_corpus)->required();
    train->add_option("--attributes", tr_attrs)->required();
    train->add_option("--features", tr_features)->check(CLI::IsMember({"builtin", "precomputed"}));
    train->add_option("--feature-cache", tr_cache, "Read features from a cache file instead");
    train->add_option("--split", tr_split)->required();
    train->add_option("--k", tr_k, "Models kept per polarity");
    train->add_option("--eta0", tr_eta0);
    train->add_option("--lambda", tr_lambda);
    train->add_option("--epochs", tr_epochs);
    train->add_option("--out", tr_out, "Bank file (JSON)")->required();

    // bank
    auto* bank_cmd = app.add_subcommand("bank", "List the models of a bank");
    std::string bk_bank;
    bank_cmd->add_option("--bank", bk_bank)->required();

    // predict / tag
    auto* predict = app.add_subcommand("predict", "Beautiful/bad prediction with the top attributes");
    std::string pr_bank, pr_model, pr_image, pr_corpus;
    std::size_t pr_m = 5;
    predict->add_option("--bank", pr_bank)->required();
    predict->add_option("--model", pr_model, "Preference model (JSON)")->required();
    predict->add_option("--image", pr_image, "Image id or Netpbm file")->required();
    predict->add_option("--corpus", pr_corpus);
    predict->add_option("--m", pr_m);

    auto* tag = app.add_subcommand("tag", "Most probable attributes of an image");
    std::string tg_bank, tg_image, tg_corpus;
    std::size_t tg_m = 5;
    tag->add_option("--bank", tg_bank)->required();
    tag->add_option("--image", tg_image)->required();
    tag->add_option("--corpus", tg_corpus);
    tag->add_option("--m", tg_m);

    // retrieve / neighbors
    auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank images for an AND query");
    std::string rt_bank, rt_corpus, rt_query, rt_features = "precomputed", rt_out;
    std::size_t rt_top = 20;
    retrieve_cmd->add_option("--bank", rt_bank)->required();
    retrieve_cmd->add_option("--corpus", rt_corpus)->required();
    retrieve_cmd->add_option("--query", rt_query, "e.g. \"landscape AND great colors\"")->required();
    retrieve_cmd->add_option("--top", rt_top);
    retrieve_cmd->add_option("--features", rt_features)->check(CLI::IsMember({"builtin", "precomputed"}));
    retrieve_cmd->add_option("--out", rt_out);

    auto* neighbors = app.add_subcommand("neighbors", "Nearest images in attribute space");
    std::string nb_bank, nb_corpus, nb_id, nb_features = "precomputed";
    std::size_t nb_m = 5;
    neighbors->add_option("--bank", nb_bank)->required();
    neighbors->add_option("--corpus", nb_corpus)->required();
    neighbors->add_option("--id", nb_id)->required();
    neighbors->add_option("--m", nb_m);
    neighbors->add_option("--features", nb_features)->check(CLI::IsMember({"builtin", "precomputed"}));

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage from a configuration file");
    std::string pp_workdir, pp_corpus;
    bool pp_force = false;
    pipeline->add_option("--workdir", pp_workdir, "Overrides the configured workdir");
    pipeline->add_option("--corpus", pp_corpus, "Overrides the configured corpus");
    pipeline->add_flag("--force", pp_force, "Rerun stages even when cached");

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with planted attributes");
    std::string sy_out;
    std::size_t sy_images = 1000, sy_dim = kBuiltinFeatureDim;
    synth->add_option("--images", sy_images);
    synth->add_option("--dim", sy_dim, "Feature dimension");
    synth->add_option("--out", sy_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*ingest) {
            LoadOptions lo;
            lo.schema_check = !in_lenient;
            lo.min_votes = in_min_votes;
            auto loaded = load_corpus(in_corpus, lo);
            if (!in_out.empty()) save_corpus(in_out, loaded.corpus);
            if (!in_rejects.empty()) write_json_file(in_rejects, to_json(loaded.rejects));
            if (!in_split_out.empty())
                write_json_file(in_split_out, to_json(split_corpus(loaded.corpus, parse_fractions(in_split), g.seed)));
            std::cout << "accepted " << loaded.corpus.size() << " rejected " << loaded.rejects.entries.size()
                      << '\n';
        } else if (*st_comments) {
            emit_json(st_out, to_json(comment_statistics(read_corpus(st_corpus))));
        } else if (*st_fit) {
            emit_json(st_out, to_json(gof_table(read_corpus(st_corpus))));
        } else if (*st_challenges) {
            nlohmann::json j = nlohmann::json::object();
            for (const auto& [id, s] : challenge_stats(read_corpus(st_corpus)))
                j[id] = {{"mean_of_means", s.mean_of_means},
                         {"mean_of_variances", s.mean_of_variances},
                         {"images", s.images}};
            emit_json(st_out, j);
        } else if (*labels) {
            const auto lab = binarize_labels(read_corpus(lb_corpus), lb_delta);
            emit(lb_out, [&](std::ostream& o) {
                for (const auto& [id, l] : lab) o << id << '\t' << to_string(l) << '\n';
            });
        } else if (*vectorize) {
            auto corpus = read_corpus(tv_corpus);
            if (!tv_subset.empty()) {
                Corpus kept;
                for (const auto& id : read_id_list(tv_subset)) {
                    const auto* r = corpus.find(id);
                    if (!r) throw ValidationError("subset id \"" + id + "\" is not in the corpus");
                    kept.add(*r);
                }
                corpus = std::move(kept);
            }
            const auto kind = *parse_vocabulary_kind(tv_kind);
            const auto vocab =
                tv_vocab.empty() ? build_vocabulary(corpus, kind, tv_min_count, g.jobs) : read_vocabulary(tv_vocab);
            const auto m =
                tv_weighting == "tfidf" ? vectorize_tfidf(corpus, vocab, g.jobs) : count_matrix(corpus, vocab, g.jobs);
            write_matrix(tv_out, m);
            if (!tv_vocab_out.empty()) write_vocabulary(tv_vocab_out, vocab);
            std::cout << "documents " << m.size() << " terms " << vocab.size() << " empty rows "
                      << m.empty_rows().size() << '\n';
        } else if (*regress) {
            const auto vocab = read_vocabulary(rg_vocab);
            DocumentMatrix trn, val;
            if (!rg_matrix.empty()) {
                if (rg_split.empty()) throw ConfigError("--matrix needs --split");
                const auto X = read_matrix(rg_matrix);
                const auto split = read_split(rg_split);
                trn = X.select(split.train_ids);
                val = X.select(split.validation_ids);
            } else {
                if (rg_train.empty() || rg_val.empty()) throw ConfigError("pass --matrix with --split, or --train and --val");
                trn = read_matrix(rg_train);
                val = read_matrix(rg_val);
            }
            if (vocab.size() != trn.dim || val.dim != trn.dim)
                throw ValidationError("vocabulary size does not match the matrix dimension");
            std::vector<GridPoint> grid;
            if (!rg_grid.empty()) {
                grid = read_grid(rg_grid);
            } else {
                std::vector<double> l2;
                for (const auto& s : detail::split(rg_lambda2, ',')) l2.push_back(std::stod(s));
                grid = make_grid(trn, rg_n_lambda1, rg_min_ratio, l2);
            }
            ElasticNetOptions eo;
            eo.tol = rg_tol;
            eo.max_iter = rg_max_iter;
            const auto cv = cross_validate(trn, val, grid, rg_nnz, eo, g.jobs);
            if (!cv.model.converged) throw NumericError("elastic net did not converge at the chosen grid point");
            write_term_model(rg_out, cv.model, vocab);
            if (!rg_cv_out.empty()) write_json_file(rg_cv_out, to_json(cv));
            std::cout << "chosen lambda1 " << cv.grid[cv.chosen].lambda1 << " lambda2 " << cv.grid[cv.chosen].lambda2
                      << " nnz " << cv.chosen_nnz << " spearman " << cv.scores[cv.chosen]
                      << (cv.outside_nnz_band ? " (outside nnz band)" : "") << '\n';
        } else if (*cluster) {
            const auto tm = read_term_model(cl_model);
            MiningOptions mo;
            mo.k_per_polarity = cl_k;
            mo.clusters_per_polarity = cl_clusters;
            mo.sigma = cl_sigma;
            mo.seed = g.seed;
            mo.naming = cl_random || cl_naming == "random" ? NamingMode::Random : NamingMode::MaxWeight;
            mo.jobs = g.jobs;
            const auto attrs = mine_attributes(tm.model, tm.vocab, read_corpus(cl_corpus), mo);
            write_attributes(cl_out, attrs);
            std::cout << "attributes " << attrs.size() << '\n';
        } else if (*plsa) {
            const auto X = read_matrix(pl_matrix);
            const auto vocab = read_vocabulary(pl_vocab);
            PlsaOptions po;
            po.topics = pl_topics;
            po.iters = pl_iters;
            po.seed = g.seed;
            po.jobs = g.jobs;
            emit_json(pl_out, plsa_summary(fit_plsa(X, po), vocab, pl_top));
        } else if (*extract) {
            const auto fm = corpus_features(read_corpus(fx_corpus), "builtin", fs::path(fx_corpus).parent_path(), g.jobs);
            write_feature_cache(fx_out, fm);
            std::cout << "images " << fm.size() << '\n';
        } else if (*train) {
            const auto corpus = read_corpus(tr_corpus);
            const auto fm = tr_cache.empty()
                                ? corpus_features(corpus, tr_features, fs::path(tr_corpus).parent_path(), g.jobs)
                                : read_feature_cache(tr_cache);
            const auto split = read_split(tr_split);
            SgdOptions hp;
            hp.eta0 = tr_eta0;
            hp.lambda = tr_lambda;
            hp.epochs = tr_epochs;
            hp.seed = g.seed;
            auto outcome = train_attribute_models(read_attributes(tr_attrs), fm, split, hp, g.jobs);
            auto semantic = train_semantic_models(corpus, fm, split, hp, g.jobs);
            for (const auto* list : {&outcome.dropped, &semantic.dropped})
                for (const auto& d : *list) std::cerr << "dropped " << d.label << ": " << d.reason << '\n';
            auto models = std::move(outcome.models);
            for (auto& m : semantic.models) models.push_back(std::move(m));
            const auto bank = build_attribute_bank(std::move(models), tr_k);
            save_bank(tr_out, bank);
            std::cout << "beautiful " << bank.beautiful.size() << " ugly " << bank.ugly.size() << " semantic "
                      << bank.semantic.size() << '\n';
        } else if (*bank_cmd) {
            const auto bank = load_bank(bk_bank);
            for (const auto* list : {&bank.beautiful, &bank.ugly, &bank.semantic})
                for (std::size_t i = 0; i < list->size(); ++i)
                    std::cout << to_string((*list)[i].kind) << '\t' << i + 1 << '\t' << (*list)[i].label << '\t'
                              << detail::format_double((*list)[i].auc) << '\n';
        } else if (*predict) {
            const auto bank = load_bank(pr_bank);
            const auto pm = load_preference(pr_model);
            const auto x = image_features(pr_image, pr_corpus);
            const double p = pm.probability(embed(bank, x));
            std::cout << (p >= 0.5 ? "beautiful" : "bad") << '\t' << detail::format_double(p) << '\n';
            for (const auto& t : tag_image(bank, x, std::min(pr_m, bank.size()))) std::cout << t << '\n';
        } else if (*tag) {
            const auto bank = load_bank(tg_bank);
            for (const auto& t : tag_image(bank, image_features(tg_image, tg_corpus), tg_m)) std::cout << t << '\n';
        } else if (*retrieve_cmd) {
            const auto idx = index_for(rt_bank, rt_corpus, rt_features, g.jobs);
            const auto hits = retrieve(parse_query(rt_query, idx, rt_top), idx);
            emit(rt_out, [&](std::ostream& o) {
                for (std::size_t i = 0; i < hits.size(); ++i)
                    o << i + 1 << '\t' << hits[i].id << '\t' << detail::format_double(hits[i].score) << '\n';
            });
        } else if (*neighbors) {
            const auto idx = index_for(nb_bank, nb_corpus, nb_features, g.jobs);
            const auto hits = nearest_neighbors(idx, nb_id, nb_m);
            for (std::size_t i = 0; i < hits.size(); ++i)
                std::cout << i + 1 << '\t' << hits[i].id << '\t' << detail::format_double(hits[i].score) << '\n';
        } else if (*pipeline) {
            if (g.config.empty()) throw ConfigError("pipeline needs --config");
            auto cfg = load_config(g.config);
            if (!pp_workdir.empty()) cfg.workdir = pp_workdir;
            if (!pp_corpus.empty()) cfg.corpus = pp_corpus;
            if (app.get_option("--seed")->count()) cfg.seed = g.seed;
            if (app.get_option("--jobs")->count()) cfg.jobs = g.jobs;
            PipelineOptions po;
            po.force = pp_force;
            po.on_stage = [](const StageRecord& r) { std::cout << r.stage << '\t' << r.status << '\n'; };
            const auto rep = run_pipeline(cfg, po);
            std::cout << "preference auc " << detail::format_double(rep.preference_auc) << '\n';
        } else if (*synth) {
            SyntheticCorpusOptions so;
            so.images = sy_images;
            so.seed = g.seed;
            so.feature_dim = sy_dim;
            save_corpus(sy_out, generate_synthetic_corpus(so));
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
