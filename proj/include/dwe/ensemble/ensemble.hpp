#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dwe/mixture/cluster_weights.hpp"
#include "dwe/signal/features.hpp"
#include "dwe/svr/svr.hpp"

namespace dwe::ensemble {

enum class Mode { kSingle, kFixed, kDynamic };

const char* mode_name(Mode mode) noexcept;
std::optional<Mode> parse_mode(std::string_view name) noexcept;

struct EnsembleConfig {
    std::size_t k = 3;
    svr::TrainConfig svr;
    mixture::WeightModelConfig weights;
    signal::WeightFeatureSpec weight_features;
    /// Stride over frames t = 90..300 when collecting mixture training rows.
    int gmm_stride = 5;
    std::uint64_t seed = 0;
};

struct EnsembleModel {
    std::size_t k = 0;
    Mode default_mode = Mode::kDynamic;
    std::vector<svr::SvrModel> svrs;
    svr::SvrModel single_svr;
    mixture::ClusterWeightModel weight_model;
    signal::WeightFeatureSpec weight_features;
    /// Ids of the sessions whose rows trained the SVRs and the mixtures.
    std::vector<std::string> training_sessions;
    nlohmann::json provenance = nlohmann::json::object();
};

/// `labels` are 0-based, one per session.
EnsembleModel train_ensemble(const std::vector<const signal::SessionFeatures*>& sessions,
                             const std::vector<std::size_t>& labels, const EnsembleConfig& cfg);

struct TraceRow {
    int t_s = 0;
    double rt_pred = 0.0;
    std::vector<double> weights;
    std::vector<double> sub_predictions;
    std::optional<double> rt_rec;
};

struct PredictionTrace {
    Mode mode = Mode::kDynamic;
    std::vector<TraceRow> rows;  ///< sorted by t_s
    std::size_t gaps = 0;        ///< missing seconds inside the frame range
};

struct PredictOptions {
    /// When set, only these seconds are predicted (others are skipped, not counted as gaps).
    const std::vector<int>* only_times = nullptr;
};

PredictionTrace predict_dynamic(const EnsembleModel& model, const signal::SessionFeatures& session,
                                const PredictOptions& opt = {});
/// Rejects sessions without frames up to t = 300 s.
PredictionTrace predict_fixed(const EnsembleModel& model, const signal::SessionFeatures& session,
                              const PredictOptions& opt = {});
PredictionTrace predict_single(const EnsembleModel& model, const signal::SessionFeatures& session,
                               const PredictOptions& opt = {});
PredictionTrace predict(const EnsembleModel& model, const signal::SessionFeatures& session, Mode mode,
                        const PredictOptions& opt = {});

/// Mean posterior over the session's frames t = 90..300, renormalized.
std::vector<double> fixed_weights(const EnsembleModel& model, const signal::SessionFeatures& session);

struct TrialPairs {
    std::vector<double> rt_rec;
    std::vector<double> rt_pred;
    std::size_t excluded = 0;
};

/// Pairs each trial with the trace row at floor(deviation onset); trials without a row are excluded.
TrialPairs align_trace_to_trials(const PredictionTrace& trace, const std::vector<signal::TrialEvent>& events);

/// Seconds at which trials need a prediction.
std::vector<int> trial_times(const std::vector<signal::TrialEvent>& events);

/// Fills rt_rec of rows whose second holds a trial onset.
void attach_recorded_rt(PredictionTrace& trace, const std::vector<signal::TrialEvent>& events);

nlohmann::json to_json(const EnsembleModel& model);
EnsembleModel ensemble_from_json(const nlohmann::json& j);

/// trace.csv: t_s,rt_pred_s,w_1..w_k,rt_rec_s with an optional leading comment line.
std::string trace_to_csv(const PredictionTrace& trace, const std::string& comment = {});

}  // namespace dwe::ensemble
