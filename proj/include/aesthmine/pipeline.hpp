#pragma once

// End-to-end driver: ingest -> vectorize -> regress -> candidates -> cluster
// -> assign -> train -> bank -> preference. Each stage writes its artifacts
// into the work directory and appends a manifest line. A stage is skipped
// when its key (hash of its settings and input artifacts) matches the last
// manifest entry and its outputs still have the recorded hashes.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "aesthmine/apps.hpp"
#include "aesthmine/attribmine.hpp"
#include "aesthmine/classifier.hpp"
#include "aesthmine/corpus.hpp"
#include "aesthmine/elastic_net.hpp"
#include "aesthmine/error.hpp"
#include "aesthmine/features.hpp"
#include "aesthmine/image.hpp"
#include "aesthmine/text.hpp"

namespace aesthmine {

namespace fs = std::filesystem;

inline std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    std::ostringstream out;
    for (unsigned i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return out.str();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string file_sha256(const std::string& path) { return sha256_hex(read_file(path)); }

// ---------------------------------------------------------------------------
// Configuration

struct PipelineConfig {
    std::string corpus;
    std::string workdir;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    std::array<double, 3> split{0.7, 0.15, 0.15};

    VocabularyKind text_kind = VocabularyKind::Bigram;
    std::uint64_t min_count = 2;

    /// Explicit (lambda1, lambda2) grid; when empty a geometric lambda1
    /// path is crossed with `lambda2`.
    std::vector<GridPoint> grid;
    std::size_t n_lambda1 = 20;
    double min_ratio = 0.01;
    std::vector<double> lambda2{0.01, 0.1, 1.0};
    std::size_t nnz_target = 100;
    double tol = 1e-6;
    std::size_t max_iter = 1000;

    std::size_t candidates_per_polarity = 1500;
    std::size_t clusters_per_polarity = 100;
    double sigma = 1.0;
    NamingMode naming = NamingMode::MaxWeight;

    std::string features = "precomputed";  // or "builtin"
    double eta0 = 0.1;
    double reg_lambda = 1e-5;
    std::size_t epochs = 10;
    std::size_t bank_k_per_polarity = 100;

    double delta = 1.0;
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline const char* naming_name(NamingMode m) { return m == NamingMode::MaxWeight ? "max_weight" : "random"; }

inline const char* kind_name(VocabularyKind k) {
    switch (k) {
        case VocabularyKind::Unigram: return "uni";
        case VocabularyKind::Bigram: return "bi";
        case VocabularyKind::Both: return "both";
    }
    return "?";
}

}  // namespace detail

/// Relative paths in the document are resolved against `base_dir`.
inline PipelineConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir = {}) {
    PipelineConfig c;
    try {
        if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
        c.corpus = j.at("corpus").get<std::string>();
        c.workdir = j.at("workdir").get<std::string>();
        detail::read_opt(j, "seed", c.seed);
        detail::read_opt(j, "jobs", c.jobs);
        if (j.contains("split")) {
            auto v = j["split"].get<std::vector<double>>();
            if (v.size() != 3) throw ConfigError("split must list three fractions");
            c.split = {v[0], v[1], v[2]};
        }
        if (j.contains("text")) {
            const auto& t = j["text"];
            if (t.contains("kind")) {
                auto k = parse_vocabulary_kind(t["kind"].get<std::string>());
                if (!k) throw ConfigError("text.kind must be uni, bi or both");
                c.text_kind = *k;
            }
            detail::read_opt(t, "min_count", c.min_count);
        }
        if (j.contains("regression")) {
            const auto& r = j["regression"];
            if (r.contains("grid"))
                for (const auto& p : r["grid"]) c.grid.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            detail::read_opt(r, "n_lambda1", c.n_lambda1);
            detail::read_opt(r, "min_ratio", c.min_ratio);
            detail::read_opt(r, "lambda2", c.lambda2);
            detail::read_opt(r, "nnz_target", c.nnz_target);
            detail::read_opt(r, "tol", c.tol);
            detail::read_opt(r, "max_iter", c.max_iter);
        }
        if (j.contains("clustering")) {
            const auto& k = j["clustering"];
            detail::read_opt(k, "k_per_polarity", c.candidates_per_polarity);
            detail::read_opt(k, "n_clusters", c.clusters_per_polarity);
            detail::read_opt(k, "sigma", c.sigma);
            if (k.contains("naming")) {
                const auto n = k["naming"].get<std::string>();
                if (n == "max_weight")
                    c.naming = NamingMode::MaxWeight;
                else if (n == "random")
                    c.naming = NamingMode::Random;
                else
                    throw ConfigError("clustering.naming must be max_weight or random");
            }
        }
        if (j.contains("training")) {
            const auto& t = j["training"];
            detail::read_opt(t, "features", c.features);
            detail::read_opt(t, "eta0", c.eta0);
            detail::read_opt(t, "lambda", c.reg_lambda);
            detail::read_opt(t, "epochs", c.epochs);
            detail::read_opt(t, "k_per_polarity", c.bank_k_per_polarity);
        }
        if (j.contains("labeling")) detail::read_opt(j["labeling"], "delta", c.delta);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    if (!base_dir.empty()) {
        if (fs::path(c.corpus).is_relative()) c.corpus = (base_dir / c.corpus).lexically_normal().string();
        if (fs::path(c.workdir).is_relative()) c.workdir = (base_dir / c.workdir).lexically_normal().string();
    }
    return c;
}

inline nlohmann::json to_json(const PipelineConfig& c) {
    auto grid = nlohmann::json::array();
    for (const auto& g : c.grid) grid.push_back({g.lambda1, g.lambda2});
    return {{"corpus", c.corpus},
            {"workdir", c.workdir},
            {"seed", c.seed},
            {"jobs", c.jobs},
            {"split", c.split},
            {"text", {{"kind", detail::kind_name(c.text_kind)}, {"min_count", c.min_count}}},
            {"regression",
             {{"grid", grid},
              {"n_lambda1", c.n_lambda1},
              {"min_ratio", c.min_ratio},
              {"lambda2", c.lambda2},
              {"nnz_target", c.nnz_target},
              {"tol", c.tol},
              {"max_iter", c.max_iter}}},
            {"clustering",
             {{"k_per_polarity", c.candidates_per_polarity},
              {"n_clusters", c.clusters_per_polarity},
              {"sigma", c.sigma},
              {"naming", detail::naming_name(c.naming)}}},
            {"training",
             {{"features", c.features},
              {"eta0", c.eta0},
              {"lambda", c.reg_lambda},
              {"epochs", c.epochs},
              {"k_per_polarity", c.bank_k_per_polarity}}},
            {"labeling", {{"delta", c.delta}}}};
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(j, fs::path(path).parent_path());
}

inline void validate_config(const PipelineConfig& c) {
    if (c.corpus.empty() || !fs::exists(c.corpus)) throw ConfigError("corpus file not found: " + c.corpus);
    if (c.workdir.empty()) throw ConfigError("workdir must be set");
    if (c.jobs == 0) throw ConfigError("jobs must be at least 1");
    if (c.features != "precomputed" && c.features != "builtin")
        throw ConfigError("training.features must be precomputed or builtin");
    if (c.delta < 0.0) throw ConfigError("labeling.delta must be non-negative");
    if (!(c.sigma > 0.0)) throw ConfigError("clustering.sigma must be positive");
    if (c.grid.empty() && (c.n_lambda1 == 0 || c.lambda2.empty()))
        throw ConfigError("regression needs a grid or n_lambda1 and lambda2 values");
    if (c.nnz_target == 0) throw ConfigError("regression.nnz_target must be positive");
    if (c.clusters_per_polarity == 0 || c.candidates_per_polarity == 0 || c.bank_k_per_polarity == 0)
        throw ConfigError("clustering and training sizes must be positive");
}

// ---------------------------------------------------------------------------
// Features for a corpus

/// Precomputed features come from the records; builtin features are
/// extracted from Netpbm files named by `pixels` (relative to `base_dir`).
/// Records without the needed input are left out.
inline FeatureMap corpus_features(const Corpus& corpus, const std::string& mode, const fs::path& base_dir = {},
                                  unsigned jobs = 1) {
    std::vector<const ImageRecord*> recs;
    for (const auto& r : corpus) recs.push_back(&r);
    std::vector<std::optional<FeatureVector>> out(recs.size());
    if (mode == "precomputed") {
        for (std::size_t i = 0; i < recs.size(); ++i)
            if (recs[i]->features) out[i] = FeatureVector{*recs[i]->features, kPrecomputedExtractor};
    } else if (mode == "builtin") {
        detail::parallel_for(recs.size(), jobs, [&](std::size_t i) {
            if (!recs[i]->pixels) return;
            fs::path p = *recs[i]->pixels;
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            out[i] = extract_builtin_features(read_netpbm(p.string()));
        });
    } else {
        throw ArgumentError("unknown feature source \"" + mode + "\"");
    }
    FeatureMap map;
    std::optional<std::size_t> dim;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if (!out[i]) continue;
        if (dim && out[i]->dim() != *dim)
            throw ValidationError("image \"" + recs[i]->image_id + "\" has a feature dimension different from others");
        dim = out[i]->dim();
        map.emplace(recs[i]->image_id, std::move(*out[i]));
    }
    return map;
}

// ---------------------------------------------------------------------------
// Manifest

struct StageRecord {
    std::string stage;
    std::string key;
    std::string status;  // "ran" or "cached"
    std::map<std::string, std::string> outputs;  // file name -> sha256
};

struct PipelineReport {
    std::vector<StageRecord> stages;
    std::string workdir;
    double preference_auc = 0.0;
};

class Manifest {
public:
    explicit Manifest(fs::path path) : path_(std::move(path)) {
        std::ifstream in(path_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error&) {
                continue;
            }
            if (!j.contains("stage")) continue;
            StageRecord r;
            r.stage = j["stage"].get<std::string>();
            r.key = j.value("key", "");
            r.status = j.value("status", "");
            r.outputs = j.value("outputs", std::map<std::string, std::string>{});
            last_[r.stage] = r;
        }
    }

    const StageRecord* last(const std::string& stage) const {
        auto it = last_.find(stage);
        return it == last_.end() ? nullptr : &it->second;
    }

    void append(const nlohmann::json& line) {
        std::ofstream out(path_, std::ios::app);
        if (!out) throw IoError("cannot append to manifest " + path_.string());
        out << line.dump() << '\n';
    }

    void record(const StageRecord& r, const nlohmann::json& settings) {
        append({{"stage", r.stage}, {"key", r.key}, {"status", r.status}, {"outputs", r.outputs},
                {"settings", settings}});
        last_[r.stage] = r;
    }

private:
    fs::path path_;
    std::map<std::string, StageRecord> last_;
};

inline const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> names{"ingest", "vectorize", "regress", "candidates", "cluster",
                                                "assign", "train",     "bank",    "preference"};
    return names;
}

/// Error raised by a stage, tagged with the stage and its main artifact.
/// Keeps the exit code of the underlying error.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& artifact, const std::string& what, int code)
        : Error("stage " + stage + " (" + artifact + "): " + what), code_(code) {}
    int exit_code() const noexcept override { return code_; }

private:
    int code_;
};

// ---------------------------------------------------------------------------
// Candidate and cluster files

inline void write_candidates(const std::string& path, const CandidateSelection& sel) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# beautiful_shortfall " << sel.beautiful_shortfall << '\n'
        << "# ugly_shortfall " << sel.ugly_shortfall << '\n';
    for (const auto* list : {&sel.beautiful, &sel.ugly})
        for (const auto& c : *list)
            out << to_string(c.polarity) << '\t' << c.term.text() << '\t' << detail::format_double(c.weight) << '\n';
}

inline CandidateSelection read_candidates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    CandidateSelection sel;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto parts = detail::split_ws(line);
            if (parts.size() == 3 && parts[1] == "beautiful_shortfall") sel.beautiful_shortfall = parts[2] == "1";
            if (parts.size() == 3 && parts[1] == "ugly_shortfall") sel.ugly_shortfall = parts[2] == "1";
            continue;
        }
        auto parts = detail::split(line, '\t');
        if (parts.size() != 3) throw ParseError("candidate line must be \"polarity<TAB>term<TAB>beta\"", line_no);
        CandidateTerm c{Term::from_text(parts[1]), std::stod(parts[2]), parse_polarity(parts[0])};
        (c.polarity == Polarity::Beautiful ? sel.beautiful : sel.ugly).push_back(std::move(c));
    }
    return sel;
}

inline nlohmann::json clusters_to_json(const std::vector<AttributeCluster>& clusters) {
    auto arr = nlohmann::json::array();
    for (const auto& c : clusters) {
        auto members = nlohmann::json::array();
        for (const auto& m : c.members) members.push_back({{"term", m.term.text()}, {"beta", m.weight}});
        arr.push_back({{"label", c.label.text()}, {"polarity", to_string(c.polarity)}, {"members", members}});
    }
    return arr;
}

inline std::vector<AttributeCluster> clusters_from_json(const nlohmann::json& j) {
    std::vector<AttributeCluster> out;
    for (const auto& c : j) {
        AttributeCluster a;
        a.polarity = parse_polarity(c.at("polarity").get<std::string>());
        a.label = Term::from_text(c.at("label").get<std::string>());
        for (const auto& m : c.at("members"))
            a.members.push_back({Term::from_text(m.at("term").get<std::string>()), m.at("beta").get<double>(), a.polarity});
        out.push_back(std::move(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Driver

struct PipelineOptions {
    /// Run stages even when cached artifacts look fresh.
    bool force = false;
    /// Progress lines, one per stage.
    std::function<void(const StageRecord&)> on_stage;
};

inline PipelineReport run_pipeline(const PipelineConfig& cfg, const PipelineOptions& popts = {}) {
    validate_config(cfg);
    const fs::path wd = cfg.workdir;
    std::error_code ec;
    fs::create_directories(wd, ec);
    if (ec) throw IoError("cannot create workdir " + cfg.workdir + ": " + ec.message());
    Manifest manifest(wd / "manifest.jsonl");
    manifest.append({{"run", "pipeline"}, {"config", to_json(cfg)}});

    PipelineReport report;
    report.workdir = cfg.workdir;
    const auto at = [&](const char* name) { return (wd / name).string(); };
    const fs::path corpus_dir = fs::path(cfg.corpus).parent_path();

    // Runs or skips one stage. `inputs` are artifact paths whose hashes go
    // into the stage key; `outputs` are file names inside the workdir.
    auto stage = [&](const std::string& name, const nlohmann::json& settings, const std::vector<std::string>& inputs,
                     const std::vector<std::string>& outputs, const std::function<void()>& body) {
        nlohmann::json key_doc{{"stage", name}, {"settings", settings}};
        for (const auto& in : inputs) key_doc["inputs"][fs::path(in).filename().string()] = file_sha256(in);
        StageRecord rec;
        rec.stage = name;
        rec.key = sha256_hex(key_doc.dump());

        bool fresh = false;
        if (!popts.force)
            if (const auto* last = manifest.last(name); last && last->key == rec.key) {
                fresh = last->outputs.size() == outputs.size();
                for (const auto& o : outputs) {
                    auto it = last->outputs.find(o);
                    if (!fresh || it == last->outputs.end() || !fs::exists(wd / o) ||
                        file_sha256((wd / o).string()) != it->second) {
                        fresh = false;
                        break;
                    }
                }
            }
        if (fresh) {
            rec.status = "cached";
        } else {
            try {
                body();
            } catch (const Error& e) {
                throw StageError(name, (wd / outputs.front()).string(), e.what(), e.exit_code());
            } catch (const std::exception& e) {
                throw StageError(name, (wd / outputs.front()).string(), e.what(), 3);
            }
            rec.status = "ran";
        }
        for (const auto& o : outputs) rec.outputs[o] = file_sha256((wd / o).string());
        manifest.record(rec, settings);
        report.stages.push_back(rec);
        if (popts.on_stage) popts.on_stage(rec);
    };

    // Lazy loaders so cached stages do not pay for parsing.
    auto load_work_corpus = [&] { return load_corpus(at("corpus.jsonl")).corpus; };
    auto load_split = [&] { return split_from_json(read_json_file(at("split.json"))); };
    auto sgd = [&](std::uint64_t salt) {
        SgdOptions o;
        o.eta0 = cfg.eta0;
        o.lambda = cfg.reg_lambda;
        o.epochs = cfg.epochs;
        o.seed = detail::mix_seed(cfg.seed, salt);
        return o;
    };

    stage("ingest", {{"split", cfg.split}, {"seed", cfg.seed}}, {cfg.corpus},
          {"corpus.jsonl", "split.json", "rejects.json"}, [&] {
              auto loaded = load_corpus(cfg.corpus);
              if (loaded.corpus.size() == 0) throw ValidationError("corpus has no valid records");
              // Pixel paths are rewritten relative to the corpus file so
              // the stored copy resolves from any directory.
              Corpus resolved;
              for (auto rec : loaded.corpus) {
                  if (rec.pixels && fs::path(*rec.pixels).is_relative())
                      rec.pixels = fs::absolute(corpus_dir / *rec.pixels).lexically_normal().string();
                  resolved.add(std::move(rec));
              }
              save_corpus(at("corpus.jsonl"), resolved);
              write_json_file(at("split.json"), to_json(split_corpus(resolved, cfg.split, cfg.seed)));
              write_json_file(at("rejects.json"), to_json(loaded.rejects));
          });

    stage("vectorize", {{"kind", detail::kind_name(cfg.text_kind)}, {"min_count", cfg.min_count}},
          {at("corpus.jsonl")}, {"tfidf.mtx", "tfidf.mtx.ids", "vocab.tsv"}, [&] {
              const auto corpus = load_work_corpus();
              const auto vocab = build_vocabulary(corpus, cfg.text_kind, cfg.min_count, cfg.jobs);
              write_vocabulary(at("vocab.tsv"), vocab);
              write_matrix(at("tfidf.mtx"), vectorize_tfidf(corpus, vocab, cfg.jobs));
          });

    const auto cfg_json = to_json(cfg);
    stage("regress", cfg_json["regression"], {at("tfidf.mtx"), at("tfidf.mtx.ids"), at("vocab.tsv"), at("split.json")},
          {"regression.tsv", "cv.json"}, [&] {
              const auto X = read_matrix(at("tfidf.mtx"));
              const auto vocab = read_vocabulary(at("vocab.tsv"));
              const auto split = load_split();
              const auto train = X.select(split.train_ids);
              const auto val = X.select(split.validation_ids);
              const auto grid =
                  cfg.grid.empty() ? make_grid(train, cfg.n_lambda1, cfg.min_ratio, cfg.lambda2) : cfg.grid;
              ElasticNetOptions eo;
              eo.tol = cfg.tol;
              eo.max_iter = cfg.max_iter;
              const auto cv = cross_validate(train, val, grid, cfg.nnz_target, eo, cfg.jobs);
              if (!cv.model.converged)
                  throw NumericError("elastic net did not converge within " + std::to_string(cfg.max_iter) +
                                     " sweeps at the chosen grid point");
              write_term_model(at("regression.tsv"), cv.model, vocab);
              write_json_file(at("cv.json"), to_json(cv));
          });

    stage("candidates", cfg_json["clustering"]["k_per_polarity"], {at("regression.tsv")}, {"candidates.tsv"}, [&] {
        const auto tm = read_term_model(at("regression.tsv"));
        write_candidates(at("candidates.tsv"), select_candidates(tm.model, tm.vocab, cfg.candidates_per_polarity));
    });

    stage("cluster", {{"clustering", cfg_json["clustering"]}, {"seed", cfg.seed}}, {at("candidates.tsv")},
          {"clusters.json"}, [&] {
              const auto sel = read_candidates(at("candidates.tsv"));
              std::vector<AttributeCluster> all;
              std::uint64_t salt = 0;
              for (const auto* list : {&sel.beautiful, &sel.ugly}) {
                  auto cl = cluster_candidates(*list, cfg.clusters_per_polarity, cfg.sigma,
                                               detail::mix_seed(cfg.seed, 10 + salt), cfg.jobs);
                  cl = name_clusters(std::move(cl), cfg.naming, detail::mix_seed(cfg.seed, 20 + salt));
                  ++salt;
                  all.insert(all.end(), cl.begin(), cl.end());
              }
              write_json_file(at("clusters.json"), clusters_to_json(all));
          });

    stage("assign", nlohmann::json::object(), {at("clusters.json"), at("corpus.jsonl")}, {"attributes.jsonl"}, [&] {
        const auto clusters = clusters_from_json(read_json_file(at("clusters.json")));
        write_attributes(at("attributes.jsonl"), assign_positive_images(clusters, load_work_corpus()));
    });

    std::optional<FeatureMap> features;
    std::optional<Corpus> work_corpus;
    auto get_corpus = [&]() -> const Corpus& {
        if (!work_corpus) work_corpus = load_work_corpus();
        return *work_corpus;
    };
    auto get_features = [&]() -> const FeatureMap& {
        if (!features) features = corpus_features(get_corpus(), cfg.features, {}, cfg.jobs);
        if (features->empty()) throw ValidationError("no image has " + cfg.features + " features");
        return *features;
    };

    stage("train", {{"training", cfg_json["training"]}, {"seed", cfg.seed}},
          {at("attributes.jsonl"), at("corpus.jsonl"), at("split.json")}, {"models.json"}, [&] {
              const auto attrs = read_attributes(at("attributes.jsonl"));
              const auto split = load_split();
              const auto& fm = get_features();
              auto outcome = train_attribute_models(attrs, fm, split, sgd(30), cfg.jobs);
              auto semantic = train_semantic_models(get_corpus(), fm, split, sgd(31), cfg.jobs);
              auto models = nlohmann::json::array();
              for (const auto* list : {&outcome.models, &semantic.models})
                  for (const auto& m : *list) models.push_back(to_json(m));
              auto dropped = nlohmann::json::array();
              for (const auto* list : {&outcome.dropped, &semantic.dropped})
                  for (const auto& d : *list) dropped.push_back({{"label", d.label}, {"reason", d.reason}});
              write_json_file(at("models.json"), {{"models", models}, {"dropped", dropped}});
          });

    stage("bank", cfg_json["training"]["k_per_polarity"], {at("models.json")}, {"bank.json"}, [&] {
        const auto doc = read_json_file(at("models.json"));
        std::vector<AttributeModel> models;
        for (const auto& m : doc.at("models")) models.push_back(model_from_json(m));
        save_bank(at("bank.json"), build_attribute_bank(std::move(models), cfg.bank_k_per_polarity));
    });

    stage("preference", {{"delta", cfg.delta}, {"training", cfg_json["training"]}, {"seed", cfg.seed}},
          {at("bank.json"), at("corpus.jsonl"), at("split.json")}, {"preference.json"}, [&] {
              const auto bank = load_bank(at("bank.json"));
              const auto pm = train_preference_classifier(bank, get_corpus(), get_features(), load_split(), cfg.delta,
                                                          sgd(40), cfg.jobs);
              write_json_file(at("preference.json"), to_json(pm));
          });

    report.preference_auc = read_json_file(at("preference.json")).at("auc").get<double>();
    return report;
}

}  // namespace aesthmine
