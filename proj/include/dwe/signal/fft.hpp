#pragma once

#include <complex>
#include <span>
#include <vector>

namespace dwe::signal {

using Complex = std::complex<double>;

/// Forward real DFT, unnormalized; returns n/2 + 1 bins.
std::vector<Complex> rfft(std::span<const double> input);

/// Inverse of rfft for a length-`n` signal, including the 1/n factor.
std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n);

/// In-place complex DFT. The inverse includes the 1/n factor.
void fft_inplace(std::vector<Complex>& data, bool inverse);

/// Analytic signal x + i*H{x} via the one-sided spectrum.
std::vector<Complex> analytic_signal(std::span<const double> input);

}  // namespace dwe::signal
