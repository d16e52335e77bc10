#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "dwe/signal/session.hpp"
#include "dwe/signal/spectrum.hpp"

namespace dwe::signal {

struct FeatureConfig {
    bool prefilter = true;
    double prefilter_low_hz = 1.0;
    double prefilter_high_hz = 30.0;
    SpectrumConfig spectrum;
    /// Bands whose per-channel mean log power is emitted. Theta is always included.
    std::vector<Band> power_bands = {Band::kDelta, Band::kTheta, Band::kAlpha, Band::kBeta};
    /// Bands whose weighting-channel PLV is emitted. Alpha is always included.
    std::vector<Band> plv_bands = {Band::kAlpha};
};

/// Per-second features over the window ending at `t_s`.
struct FeatureFrame {
    int t_s = 0;
    /// Log power of the spectrum channel (the regression input).
    std::vector<double> oz_spectrum;
    /// Indexed by Band; each entry holds one value per channel, or is empty when not computed.
    std::array<std::vector<double>, 4> band_powers;
    /// Indexed by Band; each entry holds one PLV per weighting pair, or is empty.
    std::array<std::vector<double>, 4> band_plv;

    const std::vector<double>& theta_powers() const { return band_powers[static_cast<int>(Band::kTheta)]; }
    const std::vector<double>& alpha_plv() const { return band_plv[static_cast<int>(Band::kAlpha)]; }

    bool operator==(const FeatureFrame&) const = default;
};

/// Featurized session: what clustering, training and prediction consume.
struct SessionFeatures {
    std::string subject_id;
    std::string session_id;
    std::vector<std::string> channel_names;
    std::vector<double> bin_hz;
    std::vector<FeatureFrame> frames;  ///< sorted by t_s
    std::vector<TrialEvent> events;

    /// Frame whose window ends at second `t`, or nullptr.
    const FeatureFrame* frame_at(int t) const;
};

/// The 45 unordered pairs of weighting channels: (i, j) with i < j in list order.
std::vector<std::pair<std::string, std::string>> weighting_pairs();

/// Which frame features make up the mixture-model input vector.
struct WeightFeatureSpec {
    std::vector<Band> power_bands = {Band::kTheta};
    std::vector<Band> plv_bands = {Band::kAlpha};

    std::string label() const;
    bool operator==(const WeightFeatureSpec&) const = default;
};

/// Concatenates the selected band powers, then the selected PLVs.
std::vector<double> weight_vector(const FeatureFrame& frame, const WeightFeatureSpec& spec);

/// One frame per whole second from the first full window to the end of the session.
SessionFeatures extract_features(const EegSession& session, const FeatureConfig& cfg = {});

}  // namespace dwe::signal
