#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "dwe/common/random.hpp"
#include "dwe/signal/session.hpp"

namespace testutil {

inline std::vector<double> sine(double freq_hz, double amplitude, std::size_t n, double fs, double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs + phase);
    }
    return x;
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
    dwe::Rng rng(seed);
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    return x;
}

/// Default-montage session of `seconds` length filled with seeded noise plus an optional
/// sinusoid on every channel.
inline dwe::signal::EegSession noise_session(double seconds, std::uint64_t seed, double tone_hz = 0.0,
                                             double tone_amp = 0.0) {
    dwe::signal::EegSession s;
    s.subject_id = "s";
    s.session_id = "s-" + std::to_string(seed);
    s.channel_names = dwe::signal::default_montage();
    const auto n = static_cast<std::size_t>(seconds * s.sample_rate_hz);
    s.samples.resize(n * s.n_channels());
    dwe::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double tone =
            tone_amp * std::sin(2.0 * std::numbers::pi * tone_hz * static_cast<double>(i) / s.sample_rate_hz);
        for (std::size_t c = 0; c < s.n_channels(); ++c) {
            s.samples[i * s.n_channels() + c] = static_cast<float>(rng.normal() + tone);
        }
    }
    return s;
}

}  // namespace testutil
