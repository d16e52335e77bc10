#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dwe/common/random.hpp"
#include "dwe/signal/session.hpp"

namespace dwe::synthgen {

struct SubjectArchetype {
    int archetype_id = 1;
    double rt_baseline_s = 0.7;
    /// RT multiplier per unit fatigue: rt = baseline * (1 + gain * fatigue).
    double fatigue_rt_gain = 1.5;
    /// Theta amplitude gain in dB per unit fatigue on O/P/CP channels.
    double theta_gain_posterior = 9.0;
    /// Mixing weight of the shared alpha source on the weighting channels.
    double alpha_plv_level = 0.5;
    /// Exponent of the 1/f background power spectrum.
    double spectral_slope = 1.0;
    double rt_noise_sigma = 0.1;
    /// Level the fatigue trend relaxes to, and the time constant of each of its two stages.
    double fatigue_plateau = 0.15;
    double fatigue_rise_s = 150.0;

    void validate() const;
    bool operator==(const SubjectArchetype&) const = default;
};

/// Optimal, suboptimal and poor defaults.
std::array<SubjectArchetype, 3> default_archetypes();

enum class FatigueMode { kRandomWalk, kTwoState, kConstant };

struct FatigueConfig {
    FatigueMode mode = FatigueMode::kRandomWalk;
    /// Initial level is uniform in [0, initial_max].
    double initial_max = 0.06;
    /// Dwell perturbation: Ornstein-Uhlenbeck with this time constant and stationary std.
    double dwell_s = 60.0;
    double volatility = 0.05;
    /// Largest change between consecutive seconds.
    double step_cap = 0.05;
    /// Two-state mode: mean dwell in each state; the low state sits at plateau * low_fraction.
    double two_state_dwell_s = 120.0;
    double two_state_low_fraction = 0.3;

    bool operator==(const FatigueConfig&) const = default;
};

struct GeneratorConfig {
    std::uint64_t seed = 1;
    double duration_s = 600.0;
    double sample_rate_hz = 500.0;
    std::array<SubjectArchetype, 3> archetypes = default_archetypes();
    FatigueConfig fatigue;
    /// Gap between a trial's response offset and the next deviation onset.
    double iti_min_s = 5.0;
    double iti_max_s = 10.0;
    /// Steering correction duration, response onset to offset.
    double correction_min_s = 0.8;
    double correction_max_s = 1.5;
    /// Per-session relative jitter of the archetype parameters.
    double session_jitter = 0.05;
    double slope_jitter = 0.05;
    /// Probability that an optimal or suboptimal session switches to the next worse regime.
    double drift_probability = 0.25;
    /// Regime switch time is uniform in [drift_earliest_s, duration - drift_tail_s].
    double drift_earliest_s = 420.0;
    double drift_tail_s = 90.0;
    double drift_transition_s = 20.0;
    /// Component amplitudes in microvolts RMS.
    double background_uv = 8.0;
    double delta_uv = 4.0;
    double theta_uv = 4.0;
    double alpha_uv = 6.0;
    double beta_uv = 2.0;
    /// Theta gain on non-posterior channels as a fraction of the posterior gain.
    double frontal_theta_fraction = 0.3;

    void validate() const;
};

nlohmann::json to_json(const GeneratorConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

struct GroundTruth {
    int archetype_id = 1;
    std::uint64_t seed = 0;
    /// Fatigue level at each whole second 0..ceil(duration).
    std::vector<double> fatigue;
    /// Active regime (archetype id) at each whole second.
    std::vector<int> regime;
    std::optional<double> drift_onset_s;
};

struct GeneratedSession {
    signal::EegSession session;
    GroundTruth truth;
};

/// Fatigue at each second 0..plateau.size()-1, relaxing towards plateau[t] with time constant rise_s.
std::vector<double> simulate_fatigue(const FatigueConfig& cfg, const std::vector<double>& plateau, double rise_s,
                                     Rng& rng);

GeneratedSession generate_session(const SubjectArchetype& archetype, const GeneratorConfig& cfg, std::uint64_t seed,
                                  const std::string& subject_id, const std::string& session_id);

struct CorpusEntry {
    std::string subject_id;
    std::string session_id;
    int archetype_id = 1;
    std::uint64_t seed = 0;
};

/// Sessions in archetype order; session i gets seed derive_seed(cfg.seed, i) and subject
/// "subj<archetype>-<i/2>" (two sessions per subject).
std::vector<CorpusEntry> corpus_plan(const std::array<std::size_t, 3>& per_archetype, const GeneratorConfig& cfg);

GeneratedSession generate_entry(const CorpusEntry& entry, const GeneratorConfig& cfg);

nlohmann::json truth_to_json(const GroundTruth& truth, const GeneratorConfig& cfg);
GroundTruth truth_from_json(const nlohmann::json& j);

struct ManifestRow {
    CorpusEntry entry;
    std::size_t n_trials = 0;
    double duration_s = 0.0;
    std::optional<double> drift_onset_s;
};

std::string manifest_to_csv(const std::vector<ManifestRow>& rows, const std::string& comment = {});
std::vector<ManifestRow> manifest_from_csv(const std::string& text);

/// Generates every planned session into <out>/<session_id>/ (session format plus truth.json)
/// and writes <out>/manifest.csv. Returns the manifest rows.
std::vector<ManifestRow> generate_corpus(const std::array<std::size_t, 3>& per_archetype, const GeneratorConfig& cfg,
                                         const std::filesystem::path& out, const std::string& config_hash = {});

bool is_posterior_channel(std::string_view name) noexcept;

}  // namespace dwe::synthgen
