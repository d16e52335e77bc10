#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dwe/ensemble/ensemble.hpp"
#include "dwe/mixture/gmm.hpp"
#include "dwe/signal/features.hpp"
#include "dwe/svr/svr.hpp"
#include "dwe/synthgen/synthgen.hpp"

namespace dwe::harness {

/// Where the cluster labels used for training come from.
enum class LabelSource { kClustered, kTruth };
/// What one evaluation fold holds out.
enum class FoldUnit { kSession, kSubject };
/// kClusterGrid: one grouped grid search per initial cluster, mean CV RMSE over clusters.
enum class HyperparameterMode { kFixed, kClusterGrid };

struct PipelineConfig {
    /// Master seed; overrides generator.seed and seeds every fitted model.
    std::uint64_t seed = 1;
    synthgen::GeneratorConfig generator;
    /// Sessions per archetype of the default corpus.
    std::array<std::size_t, 3> corpus = {36, 14, 23};
    signal::FeatureConfig features;

    std::size_t k = 3;
    /// Starting point for training; C, epsilon and gamma are replaced when a grid is searched.
    svr::TrainConfig svr = [] {
        svr::TrainConfig c;
        c.kkt_tol = 1e-3;
        return c;
    }();
    HyperparameterMode hyperparameters = HyperparameterMode::kClusterGrid;
    svr::GridConfig grid;
    int cluster_max_iter = 50;
    bool group_by_subject = false;

    std::size_t m = 4;
    signal::WeightFeatureSpec weight_features;
    int gmm_stride = 5;
    mixture::EmConfig em;

    LabelSource labels = LabelSource::kClustered;
    FoldUnit folds = FoldUnit::kSession;
    std::vector<ensemble::Mode> modes = {ensemble::Mode::kSingle, ensemble::Mode::kFixed, ensemble::Mode::kDynamic};
    /// Also score each session per second against the last recorded RT (zero-order hold).
    bool zero_order_hold = false;

    bool accuracy_grid = true;
    std::vector<std::size_t> accuracy_m = {1, 3, 6, 8, 10, 15};
    std::vector<signal::WeightFeatureSpec> accuracy_band_sets = default_accuracy_band_sets();
    int accuracy_stride = 10;

    bool cross_model = true;

    static std::vector<signal::WeightFeatureSpec> default_accuracy_band_sets();

    /// Generator config with the master seed applied.
    synthgen::GeneratorConfig generator_config() const;
    ensemble::EnsembleConfig ensemble_config(const svr::TrainConfig& svr_cfg, std::uint64_t seed) const;
    void validate() const;
};

const char* label_source_name(LabelSource s) noexcept;
const char* fold_unit_name(FoldUnit f) noexcept;
const char* hyperparameter_mode_name(HyperparameterMode h) noexcept;

nlohmann::json to_json(const PipelineConfig& cfg);
/// Missing keys keep their defaults; unknown keys and bad values raise ParseError.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Hash of the canonical JSON form of the config.
std::string config_hash(const PipelineConfig& cfg);

/// "theta+plv_alpha" style label back to a spec.
signal::WeightFeatureSpec parse_band_set(const std::string& label);

}  // namespace dwe::harness
