#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dwe::signal {

/// One lane-departure trial. Times are seconds from session start.
struct TrialEvent {
    double deviation_onset_s = 0.0;
    double response_onset_s = 0.0;
    double response_offset_s = 0.0;
    double rt_s = 0.0;

    bool operator==(const TrialEvent&) const = default;
};

/// 30-channel extended 10-20 montage used by the generator and as the default layout.
const std::vector<std::string>& default_montage();

/// Channels whose pairwise phase locking feeds the ensemble weights, in pair-ordering order.
inline constexpr std::array<std::string_view, 10> kWeightingChannels = {
    "O1", "O2", "Oz", "P3", "Pz", "P4", "CP3", "CPz", "CP4", "Cz"};

inline constexpr std::string_view kSpectrumChannel = "Oz";

/// Multichannel recording plus trial events.
///
/// Samples are stored sample-major as 32-bit floats (the on-disk layout): sample `i` of
/// channel `c` lives at `samples[i * n_channels + c]`.
struct EegSession {
    std::string subject_id;
    std::string session_id;
    double sample_rate_hz = 500.0;
    std::vector<std::string> channel_names;
    std::vector<float> samples;
    std::vector<TrialEvent> events;

    std::size_t n_channels() const noexcept { return channel_names.size(); }
    std::size_t n_samples() const noexcept {
        return channel_names.empty() ? 0 : samples.size() / channel_names.size();
    }
    double duration_s() const noexcept { return static_cast<double>(n_samples()) / sample_rate_hz; }

    /// Index of `name`; throws ValidationError when absent.
    std::size_t channel_index(std::string_view name) const;
    std::vector<double> channel(std::size_t index) const;
    void set_channel(std::size_t index, std::span<const double> values);

    /// Checks the structural invariants: required channels present exactly once, at least
    /// `min_duration_s` of data, finite samples, and well-formed, strictly ordered events.
    void validate(double min_duration_s = 90.0) const;
};

/// Checks a single event's ordering and RT identity.
void validate_event(const TrialEvent& ev, std::size_t index);

}  // namespace dwe::signal
