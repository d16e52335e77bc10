#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "dwe/common/stats.hpp"
#include "dwe/mixture/gmm.hpp"

namespace dwe::mixture {

enum class PriorMode { kFrameCounts, kEqual };

/// One mixture per cluster over standardized weighting features, plus cluster priors.
struct ClusterWeightModel {
    std::vector<GmmModel> gmms;
    std::vector<double> priors;
    Standardizer scaler;

    std::size_t k() const noexcept { return gmms.size(); }
    bool operator==(const ClusterWeightModel&) const = default;
};

struct WeightModelConfig {
    std::size_t m = 4;
    EmConfig em;
    PriorMode priors = PriorMode::kFrameCounts;
};

/// Fits the scaler on all rows pooled, then one mixture per cluster. A cluster with fewer
/// than m rows gets max(1, rows / 5) components (warned). Rejects empty clusters.
ClusterWeightModel fit_cluster_weight_model(const std::vector<Matrix>& per_cluster, const WeightModelConfig& cfg,
                                            std::uint64_t seed);

struct WeightDiagnostics {
    /// Set when no cluster had a finite density and the priors were returned.
    bool fell_back_to_priors = false;
};

/// Posterior cluster probabilities of raw feature vector `y` (standardized internally).
std::vector<double> cluster_weights(const ClusterWeightModel& model, std::span<const double> y,
                                    WeightDiagnostics* diag = nullptr);

/// Index of the largest weight; ties go to the lowest index.
std::size_t argmax_weight(std::span<const double> w);

std::size_t map_classify(const ClusterWeightModel& model, std::span<const double> y);

nlohmann::json to_json(const ClusterWeightModel& model);
ClusterWeightModel cluster_weight_model_from_json(const nlohmann::json& j);

}  // namespace dwe::mixture
