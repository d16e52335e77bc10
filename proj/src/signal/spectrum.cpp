#include "dwe/signal/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dwe/common/error.hpp"
#include "dwe/signal/fft.hpp"

namespace dwe::signal {

BandRange band_range(Band band) noexcept {
    switch (band) {
        case Band::kDelta: return {1.0, 3.0};
        case Band::kTheta: return {4.0, 7.0};
        case Band::kAlpha: return {8.0, 12.0};
        case Band::kBeta: return {13.0, 30.0};
    }
    return {4.0, 7.0};
}

std::string_view band_name(Band band) noexcept {
    switch (band) {
        case Band::kDelta: return "delta";
        case Band::kTheta: return "theta";
        case Band::kAlpha: return "alpha";
        case Band::kBeta: return "beta";
    }
    return "theta";
}

std::optional<Band> parse_band(std::string_view name) noexcept {
    for (Band b : kAllBands) {
        if (band_name(b) == name) return b;
    }
    return std::nullopt;
}

std::vector<double> make_taper(Taper taper, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (taper == Taper::kHamming && n > 1) {
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
        }
    }
    return w;
}

std::vector<double> subwindow_power(std::span<const double> subwin, std::span<const double> taper,
                                    std::size_t pad_factor) {
    const std::size_t len = subwin.size();
    if (taper.size() != len) throw ValidationError("subwindow_power: taper length mismatch");
    const std::size_t padded = len * pad_factor;
    std::vector<double> buf(padded, 0.0);
    for (std::size_t i = 0; i < len; ++i) buf[i] = subwin[i] * taper[i];
    const auto spec = rfft(buf);
    const double norm = 1.0 / (static_cast<double>(len) * static_cast<double>(padded));
    std::vector<double> power(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) power[k] = std::norm(spec[k]) * norm;
    return power;
}

double two_sided_total(std::span<const double> one_sided, std::size_t padded_len) {
    if (one_sided.size() != padded_len / 2 + 1) throw ValidationError("two_sided_total: length mismatch");
    double total = one_sided.front();
    const std::size_t last = one_sided.size() - 1;
    for (std::size_t k = 1; k < last; ++k) total += 2.0 * one_sided[k];
    total += (padded_len % 2 == 0) ? one_sided[last] : 2.0 * one_sided[last];
    return total;
}

namespace {

std::size_t whole_samples(double seconds, double sample_rate_hz, const char* what) {
    const double raw = seconds * sample_rate_hz;
    const double rounded = std::round(raw);
    if (!(rounded > 0.0) || std::abs(raw - rounded) > 1e-6) {
        throw ValidationError(std::string("spectrum: ") + what + " must be a positive whole number of samples");
    }
    return static_cast<std::size_t>(rounded);
}

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

SubwindowGrid make_subwindow_grid(const SpectrumConfig& cfg, double sample_rate_hz) {
    if (!is_power_of_two(cfg.subwin_len)) {
        throw ValidationError("spectrum: sub-window length " + std::to_string(cfg.subwin_len) +
                              " is not a power of two");
    }
    if (cfg.pad_factor != 2 && cfg.pad_factor != 4) {
        throw ValidationError("spectrum: pad factor must be 2 or 4");
    }
    if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0)) throw ValidationError("spectrum: overlap must be in [0, 1)");
    SubwindowGrid g;
    g.window_samples = whole_samples(cfg.window_s, sample_rate_hz, "window");
    g.step_samples = whole_samples(cfg.step_s, sample_rate_hz, "step");
    if (g.window_samples < cfg.subwin_len) throw ValidationError("spectrum: window shorter than one sub-window");
    const auto wanted = static_cast<std::size_t>(
        std::max(1.0, std::floor(static_cast<double>(cfg.subwin_len) * (1.0 - cfg.overlap))));
    // largest divisor of the step that does not exceed the requested hop
    for (std::size_t h = std::min(wanted, g.step_samples); h >= 1; --h) {
        if (g.step_samples % h == 0) {
            g.hop = h;
            break;
        }
    }
    g.per_window = (g.window_samples - cfg.subwin_len) / g.hop + 1;
    return g;
}

std::vector<std::size_t> retained_bins(const SpectrumConfig& cfg, double sample_rate_hz) {
    const std::size_t padded = cfg.subwin_len * cfg.pad_factor;
    const double df = sample_rate_hz / static_cast<double>(padded);
    std::vector<std::size_t> bins;
    for (std::size_t k = 0; k <= padded / 2; ++k) {
        const double f = static_cast<double>(k) * df;
        if (f >= cfg.min_hz && f <= cfg.max_hz) bins.push_back(k);
    }
    if (bins.empty()) throw ValidationError("spectrum: no bins inside the retained frequency range");
    return bins;
}

std::vector<SpectralFrame> sliding_log_spectrum(std::span<const double> channel_samples, double sample_rate_hz,
                                                const SpectrumConfig& cfg, std::string channel) {
    const SubwindowGrid grid = make_subwindow_grid(cfg, sample_rate_hz);
    const std::size_t n = channel_samples.size();
    if (n < grid.window_samples) {
        throw ValidationError("spectrum: window (" + std::to_string(grid.window_samples) +
                              " samples) longer than the signal (" + std::to_string(n) + ")");
    }
    const auto bins = retained_bins(cfg, sample_rate_hz);
    const std::size_t padded = cfg.subwin_len * cfg.pad_factor;
    std::vector<double> bin_hz;
    bin_hz.reserve(bins.size());
    for (std::size_t k : bins) bin_hz.push_back(static_cast<double>(k) * sample_rate_hz / static_cast<double>(padded));

    const auto taper = make_taper(cfg.taper, cfg.subwin_len);
    const std::size_t n_frames = (n - grid.window_samples) / grid.step_samples + 1;
    const std::size_t n_sub = (n - cfg.subwin_len) / grid.hop + 1;

    // retained-bin power of every grid sub-window, computed once
    std::vector<double> sub_power(n_sub * bins.size());
    for (std::size_t j = 0; j < n_sub; ++j) {
        const auto p = subwindow_power(channel_samples.subspan(j * grid.hop, cfg.subwin_len), taper, cfg.pad_factor);
        for (std::size_t b = 0; b < bins.size(); ++b) sub_power[j * bins.size() + b] = p[bins[b]];
    }

    std::vector<SpectralFrame> frames;
    frames.reserve(n_frames);
    const double inv = 1.0 / static_cast<double>(grid.per_window);
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t first = f * grid.step_samples / grid.hop;
        SpectralFrame frame;
        frame.t_s = static_cast<int>(
            std::lround(static_cast<double>(f * grid.step_samples + grid.window_samples) / sample_rate_hz));
        frame.channel = channel;
        frame.bin_hz = bin_hz;
        frame.log_power_db.assign(bins.size(), 0.0);
        for (std::size_t j = first; j < first + grid.per_window; ++j) {
            const double* row = &sub_power[j * bins.size()];
            for (std::size_t b = 0; b < bins.size(); ++b) frame.log_power_db[b] += row[b];
        }
        for (double& v : frame.log_power_db) v = 10.0 * std::log10(std::max(v * inv, cfg.power_floor));
        frames.push_back(std::move(frame));
    }
    return frames;
}

double band_power(std::span<const double> log_power_db, std::span<const double> bin_hz, BandRange range) {
    if (log_power_db.size() != bin_hz.size()) throw ValidationError("band_power: length mismatch");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < bin_hz.size(); ++i) {
        if (bin_hz[i] >= range.low_hz && bin_hz[i] <= range.high_hz) {
            sum += log_power_db[i];
            ++count;
        }
    }
    if (count == 0) {
        throw ValidationError("band_power: no bins in [" + std::to_string(range.low_hz) + ", " +
                              std::to_string(range.high_hz) + "] Hz");
    }
    return sum / static_cast<double>(count);
}

double band_power(const SpectralFrame& frame, Band band) {
    return band_power(frame.log_power_db, frame.bin_hz, band_range(band));
}

}  // namespace dwe::signal
