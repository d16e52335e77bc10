#include "dwe/harness/config.hpp"

#include <algorithm>

#include "dwe/common/error.hpp"
#include "dwe/common/hash.hpp"

namespace dwe::harness {

namespace {

/// Reads known keys of one JSON object and rejects the rest.
class Reader {
public:
    Reader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ParseError(where_ + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.emplace_back(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where_ + "." + key + ": " + e.what());
        }
    }

    const nlohmann::json* child(const char* key) {
        seen_.emplace_back(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                throw ParseError(where_ + ": unknown key '" + key + "'");
            }
        }
    }

private:
    const nlohmann::json& j_;
    std::string where_;
    std::vector<std::string> seen_;
};

signal::Band band_from(const std::string& name) {
    const auto b = signal::parse_band(name);
    if (!b) throw ParseError("unknown band '" + name + "'");
    return *b;
}

std::vector<std::string> band_names(const std::vector<signal::Band>& bands) {
    std::vector<std::string> out;
    for (auto b : bands) out.emplace_back(signal::band_name(b));
    return out;
}

std::vector<signal::Band> bands_from(const std::vector<std::string>& names) {
    std::vector<signal::Band> out;
    for (const auto& n : names) out.push_back(band_from(n));
    return out;
}

nlohmann::json features_json(const signal::FeatureConfig& f) {
    nlohmann::json j;
    j["prefilter"] = f.prefilter;
    j["prefilter_low_hz"] = f.prefilter_low_hz;
    j["prefilter_high_hz"] = f.prefilter_high_hz;
    j["window_s"] = f.spectrum.window_s;
    j["step_s"] = f.spectrum.step_s;
    j["subwin_len"] = f.spectrum.subwin_len;
    j["pad_factor"] = f.spectrum.pad_factor;
    j["taper"] = f.spectrum.taper == signal::Taper::kHamming ? "hamming" : "rectangular";
    j["overlap"] = f.spectrum.overlap;
    j["power_floor"] = f.spectrum.power_floor;
    j["min_hz"] = f.spectrum.min_hz;
    j["max_hz"] = f.spectrum.max_hz;
    j["power_bands"] = band_names(f.power_bands);
    j["plv_bands"] = band_names(f.plv_bands);
    return j;
}

signal::FeatureConfig features_from(const nlohmann::json& j) {
    signal::FeatureConfig f;
    Reader r(j, "features");
    r.get("prefilter", f.prefilter);
    r.get("prefilter_low_hz", f.prefilter_low_hz);
    r.get("prefilter_high_hz", f.prefilter_high_hz);
    r.get("window_s", f.spectrum.window_s);
    r.get("step_s", f.spectrum.step_s);
    r.get("subwin_len", f.spectrum.subwin_len);
    r.get("pad_factor", f.spectrum.pad_factor);
    std::string taper = "hamming";
    r.get("taper", taper);
    if (taper == "hamming") f.spectrum.taper = signal::Taper::kHamming;
    else if (taper == "rectangular") f.spectrum.taper = signal::Taper::kRectangular;
    else throw ParseError("features.taper: unknown taper '" + taper + "'");
    r.get("overlap", f.spectrum.overlap);
    r.get("power_floor", f.spectrum.power_floor);
    r.get("min_hz", f.spectrum.min_hz);
    r.get("max_hz", f.spectrum.max_hz);
    std::vector<std::string> power = band_names(f.power_bands);
    std::vector<std::string> plv = band_names(f.plv_bands);
    r.get("power_bands", power);
    r.get("plv_bands", plv);
    f.power_bands = bands_from(power);
    f.plv_bands = bands_from(plv);
    r.finish();
    return f;
}

nlohmann::json svr_json(const svr::TrainConfig& c) {
    nlohmann::json j;
    j["C"] = c.C;
    j["epsilon"] = c.epsilon;
    j["gamma"] = c.gamma ? nlohmann::json(*c.gamma) : nlohmann::json(nullptr);
    j["kkt_tol"] = c.kkt_tol;
    j["max_passes"] = c.max_passes;
    j["cv_folds"] = c.cv_folds;
    return j;
}

svr::TrainConfig svr_from(const nlohmann::json& j, svr::TrainConfig c) {
    Reader r(j, "svr");
    r.get("C", c.C);
    r.get("epsilon", c.epsilon);
    if (const auto* g = r.child("gamma")) {
        if (g->is_null()) c.gamma.reset();
        else if (g->is_number()) c.gamma = g->get<double>();
        else throw ParseError("svr.gamma must be a number or null");
    }
    r.get("kkt_tol", c.kkt_tol);
    r.get("max_passes", c.max_passes);
    r.get("cv_folds", c.cv_folds);
    r.finish();
    return c;
}

nlohmann::json grid_json(const svr::GridConfig& g) {
    return {{"C", g.C}, {"epsilon", g.epsilon}, {"gamma_scale", g.gamma_scale}, {"max_points", g.max_points}};
}

svr::GridConfig grid_from(const nlohmann::json& j) {
    svr::GridConfig g;
    Reader r(j, "grid");
    r.get("C", g.C);
    r.get("epsilon", g.epsilon);
    r.get("gamma_scale", g.gamma_scale);
    r.get("max_points", g.max_points);
    r.finish();
    return g;
}

nlohmann::json em_json(const mixture::EmConfig& e) {
    return {{"max_iter", e.max_iter},
            {"rel_tol", e.rel_tol},
            {"variance_floor", e.variance_floor},
            {"restarts", e.restarts},
            {"covariance", e.covariance == mixture::CovarianceType::kDiagonal ? "diagonal" : "full"}};
}

mixture::EmConfig em_from(const nlohmann::json& j) {
    mixture::EmConfig e;
    Reader r(j, "em");
    r.get("max_iter", e.max_iter);
    r.get("rel_tol", e.rel_tol);
    r.get("variance_floor", e.variance_floor);
    r.get("restarts", e.restarts);
    std::string cov = "diagonal";
    r.get("covariance", cov);
    if (cov == "diagonal") e.covariance = mixture::CovarianceType::kDiagonal;
    else if (cov == "full") e.covariance = mixture::CovarianceType::kFull;
    else throw ParseError("em.covariance: unknown covariance '" + cov + "'");
    r.finish();
    return e;
}

template <class E>
E enum_from(const std::string& name, std::initializer_list<std::pair<const char*, E>> options, const char* what) {
    for (const auto& [n, v] : options) {
        if (name == n) return v;
    }
    throw ParseError(std::string(what) + ": unknown value '" + name + "'");
}

}  // namespace

std::vector<signal::WeightFeatureSpec> PipelineConfig::default_accuracy_band_sets() {
    using signal::Band;
    return {
        {{Band::kDelta}, {}},
        {{Band::kTheta}, {}},
        {{Band::kAlpha}, {}},
        {{Band::kBeta}, {}},
        {{Band::kDelta, Band::kTheta, Band::kAlpha, Band::kBeta}, {}},
        {{Band::kTheta}, {Band::kAlpha}},
    };
}

synthgen::GeneratorConfig PipelineConfig::generator_config() const {
    auto g = generator;
    g.seed = seed;
    return g;
}

ensemble::EnsembleConfig PipelineConfig::ensemble_config(const svr::TrainConfig& svr_cfg, std::uint64_t s) const {
    ensemble::EnsembleConfig e;
    e.k = k;
    e.svr = svr_cfg;
    e.weights.m = m;
    e.weights.em = em;
    e.weight_features = weight_features;
    e.gmm_stride = gmm_stride;
    e.seed = s;
    return e;
}

void PipelineConfig::validate() const {
    if (k == 0) throw ValidationError("config: k must be positive");
    if (m == 0) throw ValidationError("config: m must be positive");
    if (gmm_stride < 1 || accuracy_stride < 1) throw ValidationError("config: strides must be positive");
    if (cluster_max_iter < 1) throw ValidationError("config: cluster_max_iter must be at least 1");
    if (features.spectrum.pad_factor != 2 && features.spectrum.pad_factor != 4) {
        throw ValidationError("config: pad_factor must be 2 or 4");
    }
    if (modes.empty()) throw ValidationError("config: at least one mode is required");
    if (weight_features.power_bands.empty() && weight_features.plv_bands.empty()) {
        throw ValidationError("config: weight_features selects nothing");
    }
    for (std::size_t n : corpus) {
        if (n < 2) throw ValidationError("config: corpus needs at least 2 sessions per archetype");
    }
    if (grid.C.empty() || grid.epsilon.empty() || grid.gamma_scale.empty()) {
        throw ValidationError("config: grid lists must be non-empty");
    }
    if (accuracy_grid && (accuracy_m.empty() || accuracy_band_sets.empty())) {
        throw ValidationError("config: accuracy grid lists must be non-empty");
    }
    generator_config().validate();
}

const char* label_source_name(LabelSource s) noexcept {
    return s == LabelSource::kClustered ? "clustered" : "truth";
}

const char* fold_unit_name(FoldUnit f) noexcept { return f == FoldUnit::kSession ? "session" : "subject"; }

const char* hyperparameter_mode_name(HyperparameterMode h) noexcept {
    return h == HyperparameterMode::kFixed ? "fixed" : "cluster_grid";
}

signal::WeightFeatureSpec parse_band_set(const std::string& label) {
    signal::WeightFeatureSpec spec{{}, {}};
    std::size_t start = 0;
    while (start <= label.size()) {
        const auto plus = label.find('+', start);
        const std::string part = label.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
        if (part.rfind("plv_", 0) == 0) spec.plv_bands.push_back(band_from(part.substr(4)));
        else spec.power_bands.push_back(band_from(part));
        if (plus == std::string::npos) break;
        start = plus + 1;
    }
    return spec;
}

nlohmann::json to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["generator"] = synthgen::to_json(cfg.generator_config());
    j["corpus"] = cfg.corpus;
    j["features"] = features_json(cfg.features);
    j["k"] = cfg.k;
    j["svr"] = svr_json(cfg.svr);
    j["hyperparameters"] = hyperparameter_mode_name(cfg.hyperparameters);
    j["grid"] = grid_json(cfg.grid);
    j["cluster_max_iter"] = cfg.cluster_max_iter;
    j["group_by_subject"] = cfg.group_by_subject;
    j["m"] = cfg.m;
    j["weight_features"] = cfg.weight_features.label();
    j["gmm_stride"] = cfg.gmm_stride;
    j["em"] = em_json(cfg.em);
    j["labels"] = label_source_name(cfg.labels);
    j["folds"] = fold_unit_name(cfg.folds);
    j["modes"] = nlohmann::json::array();
    for (auto m : cfg.modes) j["modes"].push_back(ensemble::mode_name(m));
    j["zero_order_hold"] = cfg.zero_order_hold;
    j["accuracy_grid"] = cfg.accuracy_grid;
    j["accuracy_m"] = cfg.accuracy_m;
    j["accuracy_band_sets"] = nlohmann::json::array();
    for (const auto& s : cfg.accuracy_band_sets) j["accuracy_band_sets"].push_back(s.label());
    j["accuracy_stride"] = cfg.accuracy_stride;
    j["cross_model"] = cfg.cross_model;
    return j;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    Reader r(j, "config");
    r.get("seed", cfg.seed);
    if (const auto* g = r.child("generator")) {
        cfg.generator = synthgen::generator_config_from_json(*g);
        // the generator's own seed is only meaningful when no master seed is given
        if (!j.contains("seed") && g->contains("seed")) cfg.seed = cfg.generator.seed;
    }
    r.get("corpus", cfg.corpus);
    if (const auto* f = r.child("features")) cfg.features = features_from(*f);
    r.get("k", cfg.k);
    if (const auto* s = r.child("svr")) cfg.svr = svr_from(*s, cfg.svr);
    std::string hp = hyperparameter_mode_name(cfg.hyperparameters);
    r.get("hyperparameters", hp);
    cfg.hyperparameters = enum_from<HyperparameterMode>(
        hp, {{"fixed", HyperparameterMode::kFixed}, {"cluster_grid", HyperparameterMode::kClusterGrid}},
        "hyperparameters");
    if (const auto* g = r.child("grid")) cfg.grid = grid_from(*g);
    r.get("cluster_max_iter", cfg.cluster_max_iter);
    r.get("group_by_subject", cfg.group_by_subject);
    r.get("m", cfg.m);
    std::string wf = cfg.weight_features.label();
    r.get("weight_features", wf);
    cfg.weight_features = parse_band_set(wf);
    r.get("gmm_stride", cfg.gmm_stride);
    if (const auto* e = r.child("em")) cfg.em = em_from(*e);
    std::string labels = label_source_name(cfg.labels);
    r.get("labels", labels);
    cfg.labels = enum_from<LabelSource>(labels, {{"clustered", LabelSource::kClustered}, {"truth", LabelSource::kTruth}},
                                        "labels");
    std::string folds = fold_unit_name(cfg.folds);
    r.get("folds", folds);
    cfg.folds = enum_from<FoldUnit>(folds, {{"session", FoldUnit::kSession}, {"subject", FoldUnit::kSubject}}, "folds");
    if (const auto* modes = r.child("modes")) {
        if (!modes->is_array()) throw ParseError("config.modes must be an array");
        cfg.modes.clear();
        for (const auto& m : *modes) {
            const auto mode = m.is_string() ? ensemble::parse_mode(m.get<std::string>()) : std::nullopt;
            if (!mode) throw ParseError("config.modes: unknown mode " + m.dump());
            cfg.modes.push_back(*mode);
        }
    }
    r.get("zero_order_hold", cfg.zero_order_hold);
    r.get("accuracy_grid", cfg.accuracy_grid);
    r.get("accuracy_m", cfg.accuracy_m);
    std::vector<std::string> sets;
    for (const auto& s : cfg.accuracy_band_sets) sets.push_back(s.label());
    r.get("accuracy_band_sets", sets);
    cfg.accuracy_band_sets.clear();
    for (const auto& s : sets) cfg.accuracy_band_sets.push_back(parse_band_set(s));
    r.get("accuracy_stride", cfg.accuracy_stride);
    r.get("cross_model", cfg.cross_model);
    r.finish();
    cfg.validate();
    return cfg;
}

std::string config_hash(const PipelineConfig& cfg) { return hash_hex(to_json(cfg).dump()); }

}  // namespace dwe::harness
