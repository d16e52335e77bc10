#include "dwe/signal/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "dwe/common/error.hpp"

namespace dwe::signal {

namespace {

using Cplx = std::complex<double>;

void check_band(double low_hz, double high_hz, double sample_rate_hz) {
    if (!(sample_rate_hz > 0.0)) throw ValidationError("band-pass: sample rate must be positive");
    if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < sample_rate_hz / 2.0)) {
        throw ValidationError("band-pass: band (" + std::to_string(low_hz) + ", " + std::to_string(high_hz) +
                              ") Hz must satisfy 0 < low < high < " + std::to_string(sample_rate_hz / 2.0));
    }
}

// Steady-state DF2T state of one section for a unit step input.
std::array<double, 2> step_state(const Biquad& s) {
    const double y = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = s.b2 - s.a2 * y;
    const double z1 = s.b1 - s.a1 * y + z2;
    return {z1, z2};
}

double dc_gain(const Biquad& s) { return (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2); }

template <std::size_t NS>
void cascade(const Biquad* sec, double* z1, double* z2, std::vector<double>& x) {
    std::array<Biquad, NS> s;
    std::array<double, NS> a, b;
    for (std::size_t k = 0; k < NS; ++k) {
        s[k] = sec[k];
        a[k] = z1[k];
        b[k] = z2[k];
    }
    // All sections advance together per sample so their recurrences overlap in the pipeline.
    for (double& v : x) {
        double in = v;
        for (std::size_t k = 0; k < NS; ++k) {
            const double out = s[k].b0 * in + a[k];
            a[k] = s[k].b1 * in - s[k].a1 * out + b[k];
            b[k] = s[k].b2 * in - s[k].a2 * out;
            in = out;
        }
        v = in;
    }
}

// Filters `x` in place through every section, starting each section from `x0 * zi`.
void run_sections(const SosFilter& filter, std::vector<double>& x, bool steady_start) {
    if (x.empty()) return;
    const std::size_t ns = filter.sections.size();
    std::vector<double> z1(ns, 0.0), z2(ns, 0.0);
    if (steady_start) {
        double scale = x.front();
        for (std::size_t k = 0; k < ns; ++k) {
            const auto zi = step_state(filter.sections[k]);
            z1[k] = zi[0] * scale;
            z2[k] = zi[1] * scale;
            scale *= dc_gain(filter.sections[k]);
        }
    }
    std::size_t k = 0;
    for (; k + 4 <= ns; k += 4) cascade<4>(&filter.sections[k], &z1[k], &z2[k], x);
    for (; k < ns; ++k) cascade<1>(&filter.sections[k], &z1[k], &z2[k], x);
}

}  // namespace

double SosFilter::magnitude(double freq_hz, double sample_rate_hz) const {
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
    const Cplx z1 = std::polar(1.0, -w);
    const Cplx z2 = z1 * z1;
    double mag = 1.0;
    for (const Biquad& s : sections) {
        mag *= std::abs((s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2));
    }
    return mag;
}

SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate_hz) {
    check_band(low_hz, high_hz, sample_rate_hz);
    if (order < 1) throw ValidationError("band-pass: order must be >= 1");

    const double fs2 = 2.0 * sample_rate_hz;
    const double w1 = fs2 * std::tan(std::numbers::pi * low_hz / sample_rate_hz);
    const double w2 = fs2 * std::tan(std::numbers::pi * high_hz / sample_rate_hz);
    const double wo = std::sqrt(w1 * w2);
    const double bw = w2 - w1;
    const double center = 2.0 * std::atan(wo / fs2);  // rad/sample

    std::vector<Cplx> upper;
    for (int m = -order + 1; m < order; m += 2) {
        const Cplx proto = -std::polar(1.0, std::numbers::pi * m / (2.0 * order));
        const Cplx lp = proto * (bw / 2.0);
        const Cplx root = std::sqrt(lp * lp - wo * wo);
        for (const Cplx analog : {lp + root, lp - root}) {
            const Cplx digital = (fs2 + analog) / (fs2 - analog);
            if (digital.imag() > 0.0) upper.push_back(digital);
        }
    }
    if (upper.size() != static_cast<std::size_t>(order)) {
        throw NumericError("band-pass design produced real poles; band too narrow or too close to Nyquist");
    }
    std::sort(upper.begin(), upper.end(), [](Cplx a, Cplx b) { return std::abs(a) < std::abs(b); });

    SosFilter filter;
    const Cplx zc = std::polar(1.0, -center);
    for (const Cplx p : upper) {
        Biquad s;
        s.a1 = -2.0 * p.real();
        s.a2 = std::norm(p);
        // zeros at z = +1 and z = -1; unit gain at the band center
        const double g = std::abs((1.0 + s.a1 * zc + s.a2 * zc * zc) / (1.0 - zc * zc));
        s.b0 = g;
        s.b1 = 0.0;
        s.b2 = -g;
        filter.sections.push_back(s);
    }
    return filter;
}

std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    run_sections(filter, y, false);
    return y;
}

std::vector<double> sosfiltfilt(const SosFilter& filter, std::span<const double> x, std::size_t pad_len) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const std::size_t pad = std::min(pad_len, n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    run_sections(filter, ext, true);
    std::reverse(ext.begin(), ext.end());
    run_sections(filter, ext, true);
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

namespace {

std::size_t default_pad(double sample_rate_hz, double low_hz) {
    return static_cast<std::size_t>(std::ceil(3.0 * sample_rate_hz / low_hz));
}

}  // namespace

std::vector<double> bandpass_filter(std::span<const double> x, double sample_rate_hz, double low_hz,
                                    double high_hz) {
    check_band(low_hz, high_hz, sample_rate_hz);
    if (x.empty()) throw ValidationError("band-pass: empty input");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) throw ValidationError("band-pass: non-finite sample at index " + std::to_string(i));
    }
    const SosFilter filter = design_butterworth_bandpass(kBandpassOrder, low_hz, high_hz, sample_rate_hz);
    return sosfiltfilt(filter, x, default_pad(sample_rate_hz, low_hz));
}

EegSession bandpass_filter(const EegSession& session, double low_hz, double high_hz) {
    check_band(low_hz, high_hz, session.sample_rate_hz);
    if (session.n_samples() == 0 || session.n_channels() == 0) {
        throw ValidationError("band-pass: session " + session.session_id + " is empty");
    }
    const std::size_t nc = session.n_channels();
    for (std::size_t i = 0; i < session.samples.size(); ++i) {
        if (!std::isfinite(session.samples[i])) {
            throw ValidationError("band-pass: non-finite sample in channel " + session.channel_names[i % nc] +
                                  " at index " + std::to_string(i / nc));
        }
    }
    const SosFilter filter =
        design_butterworth_bandpass(kBandpassOrder, low_hz, high_hz, session.sample_rate_hz);
    const std::size_t pad = default_pad(session.sample_rate_hz, low_hz);
    EegSession out = session;
    for (std::size_t c = 0; c < nc; ++c) {
        const auto x = session.channel(c);
        out.set_channel(c, sosfiltfilt(filter, x, pad));
    }
    return out;
}

}  // namespace dwe::signal
