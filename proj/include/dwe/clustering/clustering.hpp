#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dwe/common/matrix.hpp"
#include "dwe/signal/features.hpp"
#include "dwe/svr/svr.hpp"

namespace dwe::clustering {

inline constexpr std::size_t kMinTrials = 10;

/// A session reduced to what clustering needs: regression rows at trial times.
struct SessionRecord {
    std::string subject_id;
    std::string session_id;
    Matrix X;                ///< Oz spectrum of the frame at floor(deviation onset), one row per usable trial
    std::vector<double> rt;  ///< RT of the same trials
    std::vector<double> all_rts;  ///< every trial's RT, including those before the first frame
    std::size_t excluded_trials = 0;
};

/// Pairs each trial with the frame ending at floor(deviation_onset_s); trials without a frame
/// are counted as excluded.
SessionRecord make_record(const signal::SessionFeatures& features);

/// Per-trial RT divided by the mean of the ceil(10%) fastest RTs of the session.
std::vector<double> rt_ratio(std::span<const double> rts);

enum class InitMode { kModalBucket, kMeanRatio };

struct Thresholds {
    double optimal = 2.0;     ///< ratio <= optimal -> cluster 0
    double suboptimal = 3.0;  ///< optimal < ratio <= suboptimal -> cluster 1, else cluster 2
};

/// 0-based bucket of one ratio.
std::size_t ratio_bucket(double ratio, const Thresholds& t);

/// 0-based session labels from RT ratios (3 buckets). Modal bucket ties go to the better bucket.
std::vector<std::size_t> initial_labels(const std::vector<SessionRecord>& sessions, const Thresholds& t = {},
                                        InitMode mode = InitMode::kModalBucket);

struct ClusterConfig {
    std::size_t k = 3;
    svr::TrainConfig svr;
    int max_iter = 50;
    /// Move all sessions of a subject together (decided on their summed RMSE).
    bool group_by_subject = false;
};

struct ClusteringResult {
    std::vector<std::size_t> labels;  ///< final, 0-based, in input order
    int iterations = 0;
    std::vector<std::vector<std::size_t>> history;  ///< initial labeling first
    /// Sum over sessions of the RMSE under its own cluster's model, per trained labeling in history.
    std::vector<double> history_total_rmse;
    Matrix per_session_rmse;  ///< N x k, models trained on the final labeling
    bool converged = false;
    bool cycle_detected = false;
    std::size_t repairs = 0;
};

/// Makes every cluster non-empty by moving sessions from the largest clusters (warned).
std::vector<std::size_t> fill_empty_clusters(const std::vector<SessionRecord>& sessions,
                                             std::vector<std::size_t> labels, std::size_t k);

/// Pools the rows of the sessions whose label is `cluster`.
void pooled_rows(const std::vector<SessionRecord>& sessions, const std::vector<std::size_t>& labels,
                 std::size_t cluster, Matrix& X, std::vector<double>& rt);

/// RMSE matrix (N x k) of per-cluster models on every session.
Matrix rmse_matrix(const std::vector<SessionRecord>& sessions, const std::vector<svr::SvrModel>& models);

std::vector<svr::SvrModel> train_cluster_models(const std::vector<SessionRecord>& sessions,
                                                const std::vector<std::size_t>& labels, std::size_t k,
                                                const svr::TrainConfig& cfg);

/// Recursive relabeling from `init` until a fixpoint, a repeated labeling, or max_iter.
ClusteringResult recursive_cluster(const std::vector<SessionRecord>& sessions, std::vector<std::size_t> init,
                                   const ClusterConfig& cfg);

struct Agreement {
    double fraction = 0.0;
    std::vector<std::size_t> mapping;  ///< mapping[a] = matched label in b
};

/// Best agreement over all relabelings of `a` (exhaustive for k <= 8).
Agreement best_agreement(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b, std::size_t k);

nlohmann::json to_json(const ClusteringResult& result, const std::vector<SessionRecord>& sessions);

struct ClusterFile {
    std::size_t k = 0;
    std::vector<std::string> session_ids;
    std::vector<std::size_t> labels;  ///< 0-based
};

/// Reads the label map of clusters.json (labels are 1-based in the file).
ClusterFile cluster_file_from_json(const nlohmann::json& j);

}  // namespace dwe::clustering
