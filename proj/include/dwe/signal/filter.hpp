#pragma once

#include <array>
#include <span>
#include <vector>

#include "dwe/signal/session.hpp"

namespace dwe::signal {

/// One second-order section, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

struct SosFilter {
    std::vector<Biquad> sections;

    /// Magnitude response at `freq_hz`.
    double magnitude(double freq_hz, double sample_rate_hz) const;
};

/// Digital Butterworth band-pass designed through the bilinear transform with prewarping.
/// `order` is the prototype order per band edge, so the filter has 2*order poles.
SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate_hz);

/// Single causal pass with zero initial state.
std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x);

/// Zero-phase forward-backward filtering with odd-reflection padding and steady-state
/// initial conditions. `pad_len` is clamped to n - 1.
std::vector<double> sosfiltfilt(const SosFilter& filter, std::span<const double> x, std::size_t pad_len);

inline constexpr int kBandpassOrder = 4;

/// Zero-phase band-pass of one channel; rejects non-finite samples and bands outside (0, fs/2).
std::vector<double> bandpass_filter(std::span<const double> x, double sample_rate_hz, double low_hz,
                                    double high_hz);

/// Filters every channel of `session` independently.
EegSession bandpass_filter(const EegSession& session, double low_hz, double high_hz);

}  // namespace dwe::signal
