#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "dwe/common/error.hpp"
#include "dwe/common/hash.hpp"
#include "dwe/common/io.hpp"
#include "dwe/common/log.hpp"
#include "dwe/common/random.hpp"
#include "dwe/harness/config.hpp"
#include "dwe/harness/corpus.hpp"
#include "dwe/harness/evaluate.hpp"
#include "dwe/harness/report.hpp"
#include "dwe/signal/session_io.hpp"
#include "dwe/synthgen/synthgen.hpp"

namespace dwe::cli {

namespace {

namespace fs = std::filesystem;
using harness::PipelineConfig;

struct Options {
    std::uint64_t seed = 0;
    std::string config;
    std::string out;
    std::string mode;
    std::size_t k = 0;
    std::size_t m = 0;
    std::string band;
    std::size_t pad_factor = 0;
    std::string labels;
    std::string folds;
    std::vector<std::size_t> sessions;
    std::string corpus;
    std::vector<std::string> session_dirs;
    std::string clusters;
    std::string model;
    bool verbose = false;
    bool quiet = false;
};

struct Flags {
    CLI::Option* seed = nullptr;
    CLI::Option* k = nullptr;
    CLI::Option* m = nullptr;
    CLI::Option* pad = nullptr;
};

nlohmann::json parse_json_file(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<ensemble::Mode> modes_of(const std::string& name) {
    if (name == "all") return {ensemble::Mode::kSingle, ensemble::Mode::kFixed, ensemble::Mode::kDynamic};
    const auto m = ensemble::parse_mode(name);
    if (!m) throw ParseError("--mode: expected single, fixed, dynamic or all, got '" + name + "'");
    return {*m};
}

PipelineConfig build_config(const Options& o, const Flags& f) {
    PipelineConfig cfg;
    if (!o.config.empty()) cfg = harness::pipeline_config_from_json(parse_json_file(o.config));
    if (f.seed->count()) cfg.seed = o.seed;
    if (f.k->count()) cfg.k = o.k;
    if (f.m->count()) cfg.m = o.m;
    if (f.pad->count()) cfg.features.spectrum.pad_factor = o.pad_factor;
    if (!o.band.empty()) {
        if (o.band == "all") {
            cfg.weight_features.power_bands.assign(signal::kAllBands.begin(), signal::kAllBands.end());
        } else {
            const auto b = signal::parse_band(o.band);
            if (!b) throw ParseError("--band: expected delta, theta, alpha, beta or all, got '" + o.band + "'");
            cfg.weight_features.power_bands = {*b};
        }
    }
    if (!o.mode.empty()) cfg.modes = modes_of(o.mode);
    if (!o.labels.empty()) {
        if (o.labels == "clustered") cfg.labels = harness::LabelSource::kClustered;
        else if (o.labels == "truth") cfg.labels = harness::LabelSource::kTruth;
        else throw ParseError("--labels: expected clustered or truth");
    }
    if (!o.folds.empty()) {
        if (o.folds == "session") cfg.folds = harness::FoldUnit::kSession;
        else if (o.folds == "subject") cfg.folds = harness::FoldUnit::kSubject;
        else throw ParseError("--folds: expected session or subject");
    }
    if (!o.sessions.empty()) {
        if (o.sessions.size() != 3) throw ParseError("--sessions: expected three counts");
        cfg.corpus = {o.sessions[0], o.sessions[1], o.sessions[2]};
    }
    cfg.validate();
    return cfg;
}

fs::path require_out(const Options& o) {
    if (o.out.empty()) throw ValidationError("--out is required");
    fs::path out(o.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
    return out;
}

/// Sessions named by --corpus or --session, in that order.
harness::Corpus load_inputs(const Options& o, const PipelineConfig& cfg) {
    harness::Corpus corpus;
    if (!o.corpus.empty()) corpus = harness::load_corpus(o.corpus, cfg);
    for (const auto& d : o.session_dirs) corpus.push_back(harness::load_session(d, cfg));
    if (corpus.empty()) throw ValidationError("no input sessions; pass --corpus or --session");
    return corpus;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

std::optional<std::vector<std::size_t>> known_truth(const harness::Corpus& corpus) {
    for (const auto& s : corpus) {
        if (s.archetype_id < 1) return std::nullopt;
    }
    return harness::truth_labels(corpus);
}

nlohmann::json svr_json(const svr::TrainConfig& c) {
    return {{"C", c.C}, {"epsilon", c.epsilon}, {"gamma", c.gamma ? nlohmann::json(*c.gamma) : nlohmann::json(nullptr)}};
}

std::string provenance(const std::string& hash, std::uint64_t seed) { return harness::provenance_comment(hash, seed); }

// Subcommands

void cmd_synth(const Options& o, const PipelineConfig& cfg, std::ostream& out) {
    const auto dir = require_out(o);
    const auto hash = harness::config_hash(cfg);
    const auto rows = synthgen::generate_corpus(cfg.corpus, cfg.generator_config(), dir, hash);
    nlohmann::json j = {{"config_hash", hash}, {"seed", cfg.seed}, {"config", harness::to_json(cfg)}};
    write_file_atomic(dir / "config.json", j.dump(1) + "\n");
    out << "wrote " << rows.size() << " sessions to " << dir.string() << "\n";
}

void cmd_features(const Options& o, const PipelineConfig& cfg, std::ostream& out) {
    std::vector<fs::path> dirs;
    if (!o.corpus.empty()) {
        const auto corpus = fs::path(o.corpus);
        if (fs::exists(corpus / "manifest.csv")) {
            for (const auto& r : synthgen::manifest_from_csv(read_text_file(corpus / "manifest.csv"))) {
                dirs.push_back(corpus / r.entry.session_id);
            }
        } else {
            if (!fs::is_directory(corpus)) throw IoError("corpus directory " + corpus.string() + " does not exist");
            for (const auto& e : fs::directory_iterator(corpus)) {
                if (e.is_directory() && fs::exists(e.path() / "meta.json")) dirs.push_back(e.path());
            }
            std::sort(dirs.begin(), dirs.end());
        }
    }
    for (const auto& d : o.session_dirs) dirs.emplace_back(d);
    if (dirs.empty()) throw ValidationError("no input sessions; pass --corpus or --session");
    if (!o.out.empty() && dirs.size() > 1) throw ValidationError("--out takes a single --session");

    const auto comment = provenance(harness::config_hash(cfg), cfg.seed);
    for (const auto& d : dirs) {
        const auto session = signal::read_session_dir(d);
        const auto f = signal::extract_features(session, cfg.features);
        const fs::path target = o.out.empty() ? d / "features.csv" : require_out(o) / "features.csv";
        write_file_atomic(target, signal::features_to_csv(f, comment));
        out << "wrote " << target.string() << " (" << f.frames.size() << " frames)\n";
    }
}

void cmd_cluster(const Options& o, const PipelineConfig& cfg, std::ostream& out) {
    const auto dir = require_out(o);
    const auto corpus = load_inputs(o, cfg);
    const auto records = harness::records_of(corpus, all_indices(corpus.size()));
    const auto truth = known_truth(corpus);
    const auto labeling = harness::label_sessions(records, cfg, derive_seed(cfg.seed, 7), truth ? &*truth : nullptr);

    nlohmann::json j;
    if (labeling.clustering) {
        j = clustering::to_json(*labeling.clustering, records);
    } else {
        j["k"] = cfg.k;
        j["session_ids"] = nlohmann::json::array();
        j["labels"] = nlohmann::json::object();
        for (std::size_t s = 0; s < records.size(); ++s) {
            j["session_ids"].push_back(records[s].session_id);
            j["labels"][records[s].session_id] = labeling.labels[s] + 1;
        }
    }
    j["label_source"] = harness::label_source_name(cfg.labels);
    j["svr"] = svr_json(labeling.svr);
    if (truth) j["agreement_with_planted"] = clustering::best_agreement(labeling.labels, *truth, cfg.k).fraction;
    j["config_hash"] = harness::config_hash(cfg);
    j["seed"] = cfg.seed;
    write_file_atomic(dir / "clusters.json", j.dump(1) + "\n");
    out << "wrote " << (dir / "clusters.json").string() << "\n";
}

void cmd_train(const Options& o, const PipelineConfig& cfg, std::ostream& out) {
    const auto dir = require_out(o);
    const auto corpus = load_inputs(o, cfg);
    const auto records = harness::records_of(corpus, all_indices(corpus.size()));

    std::vector<std::size_t> labels;
    svr::TrainConfig svr_cfg = cfg.svr;
    std::string clusters_hash;
    if (!o.clusters.empty()) {
        const auto text = read_text_file(o.clusters);
        clusters_hash = hash_hex(text);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(o.clusters + ": " + e.what());
        }
        const auto file = clustering::cluster_file_from_json(j);
        if (file.k != cfg.k) throw ValidationError("clusters.json has k = " + std::to_string(file.k) + ", config has " + std::to_string(cfg.k));
        std::map<std::string, std::size_t> by_id;
        for (std::size_t i = 0; i < file.session_ids.size(); ++i) by_id[file.session_ids[i]] = file.labels[i];
        for (const auto& s : corpus) {
            const auto it = by_id.find(s.features.session_id);
            if (it == by_id.end()) throw ValidationError("session " + s.features.session_id + " is not in " + o.clusters);
            labels.push_back(it->second);
        }
        if (j.contains("svr")) {
            try {
                const auto& h = j.at("svr");
                svr_cfg.C = h.at("C").get<double>();
                svr_cfg.epsilon = h.at("epsilon").get<double>();
                if (h.at("gamma").is_null()) svr_cfg.gamma.reset();
                else svr_cfg.gamma = h.at("gamma").get<double>();
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(o.clusters + ": svr: " + e.what());
            }
        }
    } else {
        const auto truth = known_truth(corpus);
        auto labeling = harness::label_sessions(records, cfg, derive_seed(cfg.seed, 7), truth ? &*truth : nullptr);
        labels = std::move(labeling.labels);
        svr_cfg = labeling.svr;
    }

    std::vector<const signal::SessionFeatures*> sessions;
    for (const auto& s : corpus) sessions.push_back(&s.features);
    auto model = ensemble::train_ensemble(sessions, labels, cfg.ensemble_config(svr_cfg, derive_seed(cfg.seed, 99)));
    if (cfg.modes.size() == 1) model.default_mode = cfg.modes.front();
    model.provenance = {{"config_hash", harness::config_hash(cfg)}, {"seed", cfg.seed}};
    if (!clusters_hash.empty()) model.provenance["clusters_hash"] = clusters_hash;
    write_file_atomic(dir / "ensemble.json", ensemble::to_json(model).dump() + "\n");
    out << "wrote " << (dir / "ensemble.json").string() << "\n";
}

void cmd_predict(const Options& o, const PipelineConfig& cfg, std::ostream& out) {
    if (o.model.empty()) throw ValidationError("--model is required");
    const auto dir = require_out(o);
    const auto model_text = read_text_file(o.model);
    nlohmann::json mj;
    try {
        mj = nlohmann::json::parse(model_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(o.model + ": " + e.what());
    }
    const auto model = ensemble::ensemble_from_json(mj);
    const auto corpus = load_inputs(o, cfg);
    const std::vector<ensemble::Mode> modes = o.mode.empty() ? std::vector<ensemble::Mode>{model.default_mode} : cfg.modes;

    const std::string comment = provenance(harness::config_hash(cfg), cfg.seed) + " model_hash=" + hash_hex(model_text);
    for (const auto& s : corpus) {
        const fs::path target_dir = corpus.size() == 1 ? dir : dir / s.features.session_id;
        std::error_code ec;
        fs::create_directories(target_dir, ec);
        if (ec) throw IoError("cannot create " + target_dir.string() + ": " + ec.message());
        for (auto m : modes) {
            auto trace = ensemble::predict(model, s.features, m);
            ensemble::attach_recorded_rt(trace, s.features.events);
            const std::string name = modes.size() == 1 ? "trace.csv" : std::string("trace_") + ensemble::mode_name(m) + ".csv";
            write_file_atomic(target_dir / name,
                              ensemble::trace_to_csv(trace, comment + " mode=" + ensemble::mode_name(m)));
            out << "wrote " << (target_dir / name).string() << "\n";
        }
    }
}

void cmd_eval(const Options& o, const PipelineConfig& cfg, std::ostream& out) {
    const auto dir = require_out(o);
    const harness::Corpus corpus =
        (o.corpus.empty() && o.session_dirs.empty()) ? harness::synthesize_corpus(cfg) : load_inputs(o, cfg);
    const auto report = harness::evaluate(corpus, cfg);
    harness::write_report(report, dir);
    out << "wrote report for " << corpus.size() << " sessions to " << dir.string() << "\n";
    for (auto m : cfg.modes) {
        const auto& v = report.median_rmse[harness::mode_index(m)];
        if (v) out << "median RMSE " << ensemble::mode_name(m) << ": " << format_double(*v) << " s\n";
    }
}

int fail(std::ostream& err, int code, const char* category, const std::string& message) {
    err << nlohmann::json{{"error", category}, {"message", message}}.dump() << "\n";
    return code;
}

}  // namespace

int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamically weighted ensemble for EEG-based reaction time prediction", "dwe"};
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    Flags f;
    f.seed = app.add_option("--seed", o.seed, "Master seed");
    app.add_option("--config", o.config, "JSON config file");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--mode", o.mode, "single|fixed|dynamic|all");
    f.k = app.add_option("--k", o.k, "Number of clusters");
    f.m = app.add_option("--m", o.m, "Mixture components per cluster");
    app.add_option("--band", o.band, "Weighting band power: delta|theta|alpha|beta|all");
    f.pad = app.add_option("--pad-factor", o.pad_factor, "Zero padding factor, 2 or 4");
    app.add_flag("-v,--verbose", o.verbose, "Progress messages");
    app.add_flag("-q,--quiet", o.quiet, "Suppress warnings");

    auto* synth = app.add_subcommand("synth", "Generate a planted corpus");
    synth->add_option("--sessions", o.sessions, "Sessions per archetype, three counts")->expected(3);

    auto* features = app.add_subcommand("features", "Extract features.csv for sessions");
    auto* cluster = app.add_subcommand("cluster", "Recursive clustering -> clusters.json");
    auto* train = app.add_subcommand("train", "Train the ensemble -> ensemble.json");
    auto* predict = app.add_subcommand("predict", "Predict RT traces -> trace.csv");
    auto* eval = app.add_subcommand("eval", "Leave-one-out evaluation -> report.json and tables");
    for (auto* sub : {features, cluster, train, predict, eval}) {
        sub->add_option("--corpus", o.corpus, "Corpus directory");
        sub->add_option("--session", o.session_dirs, "Session directory (repeatable)");
    }
    train->add_option("--clusters", o.clusters, "clusters.json from the cluster step");
    predict->add_option("--model", o.model, "ensemble.json from the train step");
    eval->add_option("--labels", o.labels, "clustered|truth");
    eval->add_option("--folds", o.folds, "session|subject");
    eval->add_option("--sessions", o.sessions, "Sessions per archetype when synthesizing")->expected(3);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        return fail(err, kUsage, "usage", e.what());
    }

    const LogLevel previous = log_level();
    set_log_level(o.quiet ? LogLevel::kQuiet : o.verbose ? LogLevel::kInfo : LogLevel::kWarning);
    int code = kOk;
    try {
        const auto cfg = build_config(o, f);
        if (*synth) cmd_synth(o, cfg, out);
        else if (*features) cmd_features(o, cfg, out);
        else if (*cluster) cmd_cluster(o, cfg, out);
        else if (*train) cmd_train(o, cfg, out);
        else if (*predict) cmd_predict(o, cfg, out);
        else if (*eval) cmd_eval(o, cfg, out);
    } catch (const Error& e) {
        static constexpr int codes[] = {kParse, kValidation, kNumeric, kIo};
        code = fail(err, codes[static_cast<int>(e.kind())], error_kind_name(e.kind()), e.what());
    } catch (const std::exception& e) {
        code = fail(err, kInternal, "internal", e.what());
    }
    set_log_level(previous);
    return code;
}

}  // namespace dwe::cli
