#pragma once

#include <span>
#include <vector>

#include "dwe/signal/fft.hpp"
#include "dwe/signal/spectrum.hpp"

namespace dwe::signal {

/// Fraction of samples dropped at each end of a Hilbert-transformed segment.
inline constexpr double kPlvEdgeFraction = 0.025;

/// Unit phasors exp(i*phase) of the band-limited analytic signal of `x`. Samples whose
/// analytic amplitude is exactly zero yield 0. Rejects signals with no energy in band.
std::vector<Complex> band_phasors(std::span<const double> x, BandRange band, double sample_rate_hz);

/// Phase-locking value of two equal-length signals in `band` over the whole span,
/// excluding the transform edges. Symmetric in its arguments and bounded to [0, 1].
double plv(std::span<const double> a, std::span<const double> b, BandRange band, double sample_rate_hz);

}  // namespace dwe::signal
