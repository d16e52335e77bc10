#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dwe/clustering/clustering.hpp"
#include "dwe/common/matrix.hpp"
#include "dwe/common/stats.hpp"
#include "dwe/ensemble/ensemble.hpp"
#include "dwe/harness/config.hpp"
#include "dwe/harness/corpus.hpp"
#include "dwe/mixture/accuracy.hpp"
#include "dwe/svr/svr.hpp"

namespace dwe::harness {

inline constexpr std::size_t kModeCount = 3;

inline std::size_t mode_index(ensemble::Mode m) noexcept { return static_cast<std::size_t>(m); }

/// Mean grouped-CV RMSE of every grid point over the clusters of `labels` (clusters with fewer
/// than two sessions are left out). Returns the best point merged into cfg.svr, or cfg.svr
/// unchanged in fixed mode or when no cluster can be searched.
svr::TrainConfig select_hyperparameters(const std::vector<clustering::SessionRecord>& records,
                                        const std::vector<std::size_t>& labels, const PipelineConfig& cfg,
                                        std::uint64_t seed, std::vector<svr::GridPoint>* scores = nullptr);

struct Labeling {
    std::vector<std::size_t> labels;  ///< 0-based
    svr::TrainConfig svr;
    std::vector<svr::GridPoint> grid_scores;
    std::optional<clustering::ClusteringResult> clustering;
};

/// Clustered mode: RT-ratio initial labels, hyperparameters searched on them, then recursive
/// clustering. Truth mode: `truth` as given, hyperparameters searched on it.
Labeling label_sessions(const std::vector<clustering::SessionRecord>& records, const PipelineConfig& cfg,
                        std::uint64_t seed, const std::vector<std::size_t>* truth = nullptr);

struct FoldRecord {
    std::vector<std::string> held_out;
    /// Sessions handed to the fold's labeling step.
    std::vector<std::string> labeling_sessions;
    /// Sessions whose rows trained the fold's SVRs and mixtures.
    std::vector<std::string> model_sessions;
    std::vector<std::size_t> training_labels;
    svr::TrainConfig svr;
    bool skipped = false;
    std::string skip_reason;
};

struct SessionResult {
    std::string session_id;
    std::string subject_id;
    int archetype_id = 0;
    std::size_t cluster = 0;  ///< reporting label, 0-based
    bool drift = false;
    std::array<std::optional<double>, kModeCount> rmse;
    /// Per-second comparison against the last recorded RT, when enabled.
    std::array<std::optional<double>, kModeCount> rmse_hold;
    std::size_t n_pairs = 0;
    std::size_t excluded_trials = 0;
    std::size_t fold = 0;
    /// Majority planted archetype of the training sessions behind each fold model (0 if unknown).
    std::vector<int> model_archetype;
    /// Full-length dynamic trace, when requested.
    std::optional<ensemble::PredictionTrace> dynamic_trace;
};

struct LosoOptions {
    bool keep_dynamic_traces = false;
};

struct LosoResult {
    std::vector<SessionResult> sessions;  ///< evaluated sessions in corpus order
    std::vector<FoldRecord> folds;
    std::size_t skipped_folds = 0;
    std::size_t skipped_sessions = 0;
};

/// Leave-one-session-out (or subject-out) evaluation. Each fold labels its own training sessions
/// (clustered or truth per cfg.labels), trains an ensemble and scores the held-out sessions in
/// cfg.modes. `report_labels` only decides how results are grouped.
LosoResult loso_evaluate(const Corpus& corpus, const std::vector<std::size_t>& report_labels,
                         const PipelineConfig& cfg, const LosoOptions& opt = {});

struct HygieneReport {
    std::size_t folds_checked = 0;
    std::vector<std::string> violations;
};

/// Every held-out id must be absent from its fold's labeling and model training sets.
HygieneReport check_fold_hygiene(const LosoResult& result);

struct CrossModelMatrix {
    Matrix mean;  ///< (i, j): cluster-i model on cluster-j sessions
    Matrix std;
    std::vector<std::size_t> sessions_per_cluster;
};

/// Off-diagonal entries use a model trained on all of cluster i; diagonal entries hold out each
/// cluster-i session in turn. Rejects empty clusters; a diagonal needs at least 2 sessions.
CrossModelMatrix cross_model_matrix(const std::vector<clustering::SessionRecord>& records,
                                    const std::vector<std::size_t>& labels, std::size_t k,
                                    const svr::TrainConfig& svr_cfg);

struct ClusterSummary {
    std::size_t n_sessions = 0;
    std::array<std::optional<MeanStd>, kModeCount> rmse;
};

struct EvalReport {
    std::size_t k = 0;
    std::vector<std::string> session_ids;
    std::vector<std::size_t> labels;  ///< reporting labels, 0-based
    std::optional<double> label_agreement;  ///< against planted archetypes, when known
    svr::TrainConfig svr;
    std::vector<svr::GridPoint> grid_scores;
    LosoResult loso;
    std::vector<ClusterSummary> clusters;
    std::array<std::optional<double>, kModeCount> median_rmse;
    std::vector<mixture::AccuracyCell> accuracy;
    std::optional<CrossModelMatrix> cross;
    std::size_t excluded_trials = 0;
    std::string config_hash;
    std::uint64_t seed = 0;
    nlohmann::json config;
};

/// Labels the whole corpus once for reporting, then runs loso_evaluate, the accuracy grid and
/// the cross-model matrix as configured.
EvalReport evaluate(const Corpus& corpus, const PipelineConfig& cfg, const LosoOptions& opt = {});

std::vector<ClusterSummary> summarize_clusters(const LosoResult& loso, std::size_t k);

}  // namespace dwe::harness
