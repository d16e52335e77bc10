#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dwe/common/matrix.hpp"
#include "dwe/common/stats.hpp"
#include "dwe/mixture/cluster_weights.hpp"
#include "dwe/signal/features.hpp"

namespace dwe::mixture {

/// First and last frame second of the weight-model training window, and the default
/// frame stride used to thin it.
inline constexpr int kWeightWindowBegin = 90;
inline constexpr int kWeightWindowEnd = 300;

/// Weight-feature rows of the frames with t in [t_begin, t_end] and (t - t_begin) % stride == 0.
Matrix weight_matrix(const signal::SessionFeatures& features, const signal::WeightFeatureSpec& spec,
                     int t_begin = kWeightWindowBegin, int t_end = kWeightWindowEnd, int stride = 1);

struct LabeledSession {
    const signal::SessionFeatures* features = nullptr;
    std::size_t label = 0;  ///< 0-based cluster index
};

struct AccuracyGridConfig {
    std::vector<std::size_t> m_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    std::vector<signal::WeightFeatureSpec> band_sets = {signal::WeightFeatureSpec{{signal::Band::kTheta}, {}}};
    std::size_t k = 3;
    /// Stride over training frames; held-out frames are all classified.
    int train_stride = 5;
    EmConfig em;
    PriorMode priors = PriorMode::kFrameCounts;
    std::uint64_t seed = 0;
};

struct AccuracyCell {
    std::size_t m = 0;
    std::string band_set;
    /// confusion(i, j): mean over held-out sessions of cluster i of the fraction of their
    /// frames classified to cluster j.
    Matrix confusion;
    Matrix confusion_std;
    /// Per held-out session accuracy, in session order; skipped folds are absent.
    std::vector<double> session_accuracy;
    MeanStd overall;
    std::size_t skipped_folds = 0;
};

/// Leave-one-session-out MAP accuracy for every (m, band set). Sessions whose cluster has
/// no other session are skipped with a warning.
std::vector<AccuracyCell> accuracy_grid(const std::vector<LabeledSession>& sessions, const AccuracyGridConfig& cfg);

}  // namespace dwe::mixture
