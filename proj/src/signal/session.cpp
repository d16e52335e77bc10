#include "dwe/signal/session.hpp"

#include <algorithm>
#include <cmath>

#include "dwe/common/error.hpp"

namespace dwe::signal {

const std::vector<std::string>& default_montage() {
    static const std::vector<std::string> kMontage = {
        "Fp1", "Fp2", "F7",  "F3",  "Fz",  "F4",  "F8",  "FT7", "FC3", "FCz",
        "FC4", "FT8", "T3",  "C3",  "Cz",  "C4",  "T4",  "TP7", "CP3", "CPz",
        "CP4", "TP8", "T5",  "P3",  "Pz",  "P4",  "T6",  "O1",  "Oz",  "O2"};
    return kMontage;
}

std::size_t EegSession::channel_index(std::string_view name) const {
    const auto it = std::find(channel_names.begin(), channel_names.end(), name);
    if (it == channel_names.end()) {
        throw ValidationError("session " + session_id + ": channel '" + std::string(name) + "' not found");
    }
    return static_cast<std::size_t>(it - channel_names.begin());
}

std::vector<double> EegSession::channel(std::size_t index) const {
    const std::size_t nc = n_channels();
    if (index >= nc) throw ValidationError("channel index out of range");
    const std::size_t n = n_samples();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = samples[i * nc + index];
    return out;
}

void EegSession::set_channel(std::size_t index, std::span<const double> values) {
    const std::size_t nc = n_channels();
    if (index >= nc || values.size() != n_samples()) {
        throw ValidationError("set_channel: shape mismatch");
    }
    for (std::size_t i = 0; i < values.size(); ++i) samples[i * nc + index] = static_cast<float>(values[i]);
}

void validate_event(const TrialEvent& ev, std::size_t index) {
    const std::string where = "event " + std::to_string(index);
    if (!std::isfinite(ev.deviation_onset_s) || !std::isfinite(ev.response_onset_s) ||
        !std::isfinite(ev.response_offset_s) || !std::isfinite(ev.rt_s)) {
        throw ValidationError(where + ": non-finite time");
    }
    if (!(ev.deviation_onset_s < ev.response_onset_s) || !(ev.response_onset_s <= ev.response_offset_s)) {
        throw ValidationError(where + ": expected deviation_onset < response_onset <= response_offset");
    }
    if (!(ev.rt_s > 0.0) || ev.rt_s != ev.response_onset_s - ev.deviation_onset_s) {
        throw ValidationError(where + ": rt_s must equal response_onset_s - deviation_onset_s");
    }
}

void EegSession::validate(double min_duration_s) const {
    if (!(sample_rate_hz > 0.0)) throw ValidationError("session " + session_id + ": sample rate must be positive");
    if (channel_names.empty()) throw ValidationError("session " + session_id + ": no channels");
    if (samples.size() % channel_names.size() != 0) {
        throw ValidationError("session " + session_id + ": sample count is not a multiple of the channel count");
    }
    std::vector<std::string_view> required(kWeightingChannels.begin(), kWeightingChannels.end());
    required.push_back(kSpectrumChannel);
    for (std::string_view name : required) {
        const auto count = std::count(channel_names.begin(), channel_names.end(), name);
        if (count != 1) {
            throw ValidationError("session " + session_id + ": channel '" + std::string(name) +
                                  "' must appear exactly once (found " + std::to_string(count) + ")");
        }
    }
    if (static_cast<double>(n_samples()) < min_duration_s * sample_rate_hz) {
        throw ValidationError("session " + session_id + ": shorter than one " + std::to_string(min_duration_s) +
                              " s analysis window");
    }
    const std::size_t nc = n_channels();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) {
            throw ValidationError("session " + session_id + ": non-finite sample at index " +
                                  std::to_string(i / nc) + " of channel " + channel_names[i % nc]);
        }
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        validate_event(events[i], i);
        if (i > 0 && !(events[i].deviation_onset_s > events[i - 1].deviation_onset_s)) {
            throw ValidationError("session " + session_id + ": events not strictly increasing at " +
                                  std::to_string(i));
        }
    }
}

}  // namespace dwe::signal
