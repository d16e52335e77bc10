#include "dwe/ensemble/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dwe/clustering/clustering.hpp"
#include "dwe/common/error.hpp"
#include "dwe/common/io.hpp"
#include "dwe/common/log.hpp"
#include "dwe/mixture/accuracy.hpp"

namespace dwe::ensemble {

const char* mode_name(Mode mode) noexcept {
    switch (mode) {
        case Mode::kSingle: return "single";
        case Mode::kFixed: return "fixed";
        case Mode::kDynamic: return "dynamic";
    }
    return "dynamic";
}

std::optional<Mode> parse_mode(std::string_view name) noexcept {
    for (Mode m : {Mode::kSingle, Mode::kFixed, Mode::kDynamic}) {
        if (name == mode_name(m)) return m;
    }
    return std::nullopt;
}

EnsembleModel train_ensemble(const std::vector<const signal::SessionFeatures*>& sessions,
                             const std::vector<std::size_t>& labels, const EnsembleConfig& cfg) {
    if (sessions.size() != labels.size()) throw ValidationError("train_ensemble: one label per session");
    if (cfg.k == 0) throw ValidationError("train_ensemble: k must be at least 1");
    std::vector<clustering::SessionRecord> records;
    std::vector<Matrix> weight_rows(cfg.k);
    EnsembleModel model;
    model.k = cfg.k;
    model.weight_features = cfg.weight_features;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        if (labels[s] >= cfg.k) throw ValidationError("train_ensemble: label out of range");
        records.push_back(clustering::make_record(*sessions[s]));
        const Matrix w = mixture::weight_matrix(*sessions[s], cfg.weight_features, mixture::kWeightWindowBegin,
                                                mixture::kWeightWindowEnd, cfg.gmm_stride);
        for (std::size_t r = 0; r < w.rows(); ++r) weight_rows[labels[s]].append_row(w.row(r));
        model.training_sessions.push_back(sessions[s]->session_id);
    }
    for (std::size_t c = 0; c < cfg.k; ++c) {
        if (std::find(labels.begin(), labels.end(), c) == labels.end()) {
            throw ValidationError("train_ensemble: cluster " + std::to_string(c + 1) + " has no training session");
        }
    }
    model.svrs = clustering::train_cluster_models(records, labels, cfg.k, cfg.svr);
    const std::vector<std::size_t> pooled(records.size(), 0);
    model.single_svr = clustering::train_cluster_models(records, pooled, 1, cfg.svr).front();
    model.weight_model = mixture::fit_cluster_weight_model(weight_rows, cfg.weights, cfg.seed);
    return model;
}

namespace {

bool wanted(const PredictOptions& opt, int t) {
    return !opt.only_times || std::binary_search(opt.only_times->begin(), opt.only_times->end(), t);
}

std::size_t count_gaps(const signal::SessionFeatures& s) {
    std::size_t gaps = 0;
    for (std::size_t i = 1; i < s.frames.size(); ++i) {
        gaps += static_cast<std::size_t>(s.frames[i].t_s - s.frames[i - 1].t_s - 1);
    }
    if (gaps > 0) log_info("predict: session " + s.session_id + " has " + std::to_string(gaps) + " missing seconds");
    return gaps;
}

TraceRow weighted_row(const EnsembleModel& model, const signal::FeatureFrame& f, std::vector<double> w) {
    TraceRow row;
    row.t_s = f.t_s;
    row.sub_predictions.reserve(model.k);
    for (const auto& m : model.svrs) row.sub_predictions.push_back(svr::predict(m, f.oz_spectrum));
    double sum = 0.0;
    for (std::size_t i = 0; i < model.k; ++i) sum += row.sub_predictions[i] * w[i];
    row.rt_pred = sum;
    row.weights = std::move(w);
    return row;
}

std::vector<int> sorted_times(const PredictOptions& opt) {
    std::vector<int> t = opt.only_times ? *opt.only_times : std::vector<int>{};
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace

PredictionTrace predict_dynamic(const EnsembleModel& model, const signal::SessionFeatures& session,
                                const PredictOptions& opt) {
    const auto times = sorted_times(opt);
    const PredictOptions o{opt.only_times ? &times : nullptr};
    PredictionTrace trace;
    trace.mode = Mode::kDynamic;
    trace.gaps = count_gaps(session);
    for (const auto& f : session.frames) {
        if (!wanted(o, f.t_s)) continue;
        auto w = mixture::cluster_weights(model.weight_model, signal::weight_vector(f, model.weight_features));
        trace.rows.push_back(weighted_row(model, f, std::move(w)));
    }
    return trace;
}

std::vector<double> fixed_weights(const EnsembleModel& model, const signal::SessionFeatures& session) {
    if (session.frames.empty() || session.frames.back().t_s < mixture::kWeightWindowEnd) {
        throw ValidationError("predict_fixed: session " + session.session_id + " must reach t = " +
                              std::to_string(mixture::kWeightWindowEnd) + " s to average the first five minutes");
    }
    std::vector<double> acc(model.k, 0.0);
    std::size_t count = 0;
    for (const auto& f : session.frames) {
        if (f.t_s < mixture::kWeightWindowBegin || f.t_s > mixture::kWeightWindowEnd) continue;
        const auto w = mixture::cluster_weights(model.weight_model, signal::weight_vector(f, model.weight_features));
        for (std::size_t i = 0; i < model.k; ++i) acc[i] += w[i];
        ++count;
    }
    double sum = 0.0;
    for (double& v : acc) {
        v /= static_cast<double>(count);
        sum += v;
    }
    for (double& v : acc) v /= sum;
    return acc;
}

PredictionTrace predict_fixed(const EnsembleModel& model, const signal::SessionFeatures& session,
                              const PredictOptions& opt) {
    const auto w = fixed_weights(model, session);
    const auto times = sorted_times(opt);
    const PredictOptions o{opt.only_times ? &times : nullptr};
    PredictionTrace trace;
    trace.mode = Mode::kFixed;
    trace.gaps = count_gaps(session);
    for (const auto& f : session.frames) {
        if (wanted(o, f.t_s)) trace.rows.push_back(weighted_row(model, f, w));
    }
    return trace;
}

PredictionTrace predict_single(const EnsembleModel& model, const signal::SessionFeatures& session,
                               const PredictOptions& opt) {
    const auto times = sorted_times(opt);
    const PredictOptions o{opt.only_times ? &times : nullptr};
    PredictionTrace trace;
    trace.mode = Mode::kSingle;
    trace.gaps = count_gaps(session);
    for (const auto& f : session.frames) {
        if (!wanted(o, f.t_s)) continue;
        TraceRow row;
        row.t_s = f.t_s;
        row.rt_pred = svr::predict(model.single_svr, f.oz_spectrum);
        row.sub_predictions = {row.rt_pred};
        row.weights = {1.0};
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

PredictionTrace predict(const EnsembleModel& model, const signal::SessionFeatures& session, Mode mode,
                        const PredictOptions& opt) {
    switch (mode) {
        case Mode::kSingle: return predict_single(model, session, opt);
        case Mode::kFixed: return predict_fixed(model, session, opt);
        case Mode::kDynamic: return predict_dynamic(model, session, opt);
    }
    return predict_dynamic(model, session, opt);
}

std::vector<int> trial_times(const std::vector<signal::TrialEvent>& events) {
    std::set<int> t;
    for (const auto& ev : events) t.insert(static_cast<int>(std::floor(ev.deviation_onset_s)));
    return {t.begin(), t.end()};
}

TrialPairs align_trace_to_trials(const PredictionTrace& trace, const std::vector<signal::TrialEvent>& events) {
    TrialPairs out;
    for (const auto& ev : events) {
        const int t = static_cast<int>(std::floor(ev.deviation_onset_s));
        const auto it = std::lower_bound(trace.rows.begin(), trace.rows.end(), t,
                                         [](const TraceRow& r, int v) { return r.t_s < v; });
        if (it == trace.rows.end() || it->t_s != t) {
            ++out.excluded;
            continue;
        }
        out.rt_rec.push_back(ev.rt_s);
        out.rt_pred.push_back(it->rt_pred);
    }
    return out;
}

void attach_recorded_rt(PredictionTrace& trace, const std::vector<signal::TrialEvent>& events) {
    for (const auto& ev : events) {
        const int t = static_cast<int>(std::floor(ev.deviation_onset_s));
        for (auto& row : trace.rows) {
            if (row.t_s == t) row.rt_rec = ev.rt_s;
        }
    }
}

nlohmann::json to_json(const EnsembleModel& model) {
    nlohmann::json j;
    j["k"] = model.k;
    j["default_mode"] = mode_name(model.default_mode);
    std::vector<std::string> pb, lb;
    for (auto b : model.weight_features.power_bands) pb.emplace_back(signal::band_name(b));
    for (auto b : model.weight_features.plv_bands) lb.emplace_back(signal::band_name(b));
    j["weight_features"] = {{"power_bands", pb}, {"plv_bands", lb}};
    j["svrs"] = nlohmann::json::array();
    for (const auto& s : model.svrs) j["svrs"].push_back(svr::to_json(s));
    j["single_svr"] = svr::to_json(model.single_svr);
    j["weight_model"] = mixture::to_json(model.weight_model);
    j["training_sessions"] = model.training_sessions;
    j["provenance"] = model.provenance;
    return j;
}

EnsembleModel ensemble_from_json(const nlohmann::json& j) {
    try {
        EnsembleModel m;
        m.k = j.at("k").get<std::size_t>();
        const auto mode = parse_mode(j.at("default_mode").get<std::string>());
        if (!mode) throw ParseError("ensemble.json: unknown default_mode");
        m.default_mode = *mode;
        m.weight_features.power_bands.clear();
        m.weight_features.plv_bands.clear();
        for (const auto& name : j.at("weight_features").at("power_bands")) {
            const auto b = signal::parse_band(name.get<std::string>());
            if (!b) throw ParseError("ensemble.json: unknown band");
            m.weight_features.power_bands.push_back(*b);
        }
        for (const auto& name : j.at("weight_features").at("plv_bands")) {
            const auto b = signal::parse_band(name.get<std::string>());
            if (!b) throw ParseError("ensemble.json: unknown band");
            m.weight_features.plv_bands.push_back(*b);
        }
        for (const auto& s : j.at("svrs")) m.svrs.push_back(svr::svr_from_json(s));
        m.single_svr = svr::svr_from_json(j.at("single_svr"));
        m.weight_model = mixture::cluster_weight_model_from_json(j.at("weight_model"));
        m.training_sessions = j.at("training_sessions").get<std::vector<std::string>>();
        m.provenance = j.value("provenance", nlohmann::json::object());
        if (m.svrs.size() != m.k || m.weight_model.k() != m.k) throw ParseError("ensemble.json: k mismatch");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ensemble.json: ") + e.what());
    }
}

std::string trace_to_csv(const PredictionTrace& trace, const std::string& comment) {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    const std::size_t k = trace.rows.empty() ? 0 : trace.rows.front().weights.size();
    out += "t_s,rt_pred_s";
    for (std::size_t i = 0; i < k; ++i) out += ",w_" + std::to_string(i + 1);
    out += ",rt_rec_s\n";
    for (const auto& r : trace.rows) {
        out += std::to_string(r.t_s) + "," + format_double(r.rt_pred);
        for (double w : r.weights) out += "," + format_double(w);
        out += ",";
        if (r.rt_rec) out += format_double(*r.rt_rec);
        out += "\n";
    }
    return out;
}

}  // namespace dwe::ensemble
