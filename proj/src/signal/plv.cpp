#include "dwe/signal/plv.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dwe/common/error.hpp"
#include "dwe/signal/filter.hpp"

namespace dwe::signal {

std::vector<Complex> band_phasors(std::span<const double> x, BandRange band, double sample_rate_hz) {
    const auto filtered = bandpass_filter(x, sample_rate_hz, band.low_hz, band.high_hz);
    double energy = 0.0;
    for (double v : filtered) energy += v * v;
    if (!(energy > 0.0)) {
        throw ValidationError("plv: signal has no energy in [" + std::to_string(band.low_hz) + ", " +
                              std::to_string(band.high_hz) + "] Hz; phase undefined");
    }
    auto z = analytic_signal(filtered);
    for (Complex& c : z) {
        const double mag = std::sqrt(c.real() * c.real() + c.imag() * c.imag());
        c = mag > 0.0 ? c / mag : Complex(0.0, 0.0);
    }
    return z;
}

double plv(std::span<const double> a, std::span<const double> b, BandRange band, double sample_rate_hz) {
    if (a.size() != b.size()) throw ValidationError("plv: signals differ in length");
    const std::size_t n = a.size();
    const auto edge = static_cast<std::size_t>(std::floor(kPlvEdgeFraction * static_cast<double>(n)));
    if (n < 3 || n <= 2 * edge) throw ValidationError("plv: signal too short");
    const auto pa = band_phasors(a, band, sample_rate_hz);
    const auto pb = band_phasors(b, band, sample_rate_hz);
    // Written out so that swapping the arguments negates the imaginary sum exactly.
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = edge; i < n - edge; ++i) {
        re += pa[i].real() * pb[i].real() + pa[i].imag() * pb[i].imag();
        im += pa[i].imag() * pb[i].real() - pa[i].real() * pb[i].imag();
    }
    const double count = static_cast<double>(n - 2 * edge);
    return std::min(1.0, std::hypot(re, im) / count);
}

}  // namespace dwe::signal
