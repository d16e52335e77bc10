#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dwe::signal {

enum class Taper { kHamming, kRectangular };

enum class Band { kDelta = 0, kTheta = 1, kAlpha = 2, kBeta = 3 };

inline constexpr std::array<Band, 4> kAllBands = {Band::kDelta, Band::kTheta, Band::kAlpha, Band::kBeta};

struct BandRange {
    double low_hz;
    double high_hz;
};

/// delta 1-3, theta 4-7, alpha 8-12, beta 13-30 Hz.
BandRange band_range(Band band) noexcept;
std::string_view band_name(Band band) noexcept;
std::optional<Band> parse_band(std::string_view name) noexcept;

struct SpectrumConfig {
    double window_s = 90.0;
    double step_s = 1.0;
    std::size_t subwin_len = 512;
    std::size_t pad_factor = 2;
    Taper taper = Taper::kHamming;
    /// Requested fractional overlap between sub-windows (0 = back to back).
    double overlap = 0.0;
    double power_floor = 1e-12;
    double min_hz = 1.0;
    double max_hz = 30.0;
};

/// Log power of one analysis window of one channel.
struct SpectralFrame {
    int t_s = 0;  ///< window end time in whole seconds
    std::string channel;
    std::vector<double> log_power_db;
    std::vector<double> bin_hz;
};

std::vector<double> make_taper(Taper taper, std::size_t n);

/// One-sided periodogram of one sub-window after tapering and zero padding to
/// `subwin.size() * pad_factor` points. Bin k holds |X_k|^2 / (L * M) with L the
/// sub-window length and M the padded length, so the two-sided sum equals the mean square.
std::vector<double> subwindow_power(std::span<const double> subwin, std::span<const double> taper,
                                    std::size_t pad_factor);

/// Sum of the two-sided spectrum represented by a one-sided periodogram of padded length M.
double two_sided_total(std::span<const double> one_sided, std::size_t padded_len);

/// Geometry of the sub-window tiling shared by all sliding windows of a recording.
///
/// Sub-windows sit on a grid anchored at sample 0 whose hop divides the window step, so
/// every analysis window contains the same number of whole sub-windows and each
/// sub-window spectrum is computed once per recording.
struct SubwindowGrid {
    std::size_t hop = 0;
    std::size_t window_samples = 0;
    std::size_t step_samples = 0;
    std::size_t per_window = 0;
};

SubwindowGrid make_subwindow_grid(const SpectrumConfig& cfg, double sample_rate_hz);

/// Bin indices (of the padded periodogram) retained in [min_hz, max_hz].
std::vector<std::size_t> retained_bins(const SpectrumConfig& cfg, double sample_rate_hz);

/// Sliding-window log-power spectra of one channel: one frame per step from the first
/// full window to the end of the data.
std::vector<SpectralFrame> sliding_log_spectrum(std::span<const double> channel_samples, double sample_rate_hz,
                                                const SpectrumConfig& cfg = {}, std::string channel = {});

/// Mean of log power over the bins whose centers lie in `range`. Rejects empty selections.
double band_power(std::span<const double> log_power_db, std::span<const double> bin_hz, BandRange range);
double band_power(const SpectralFrame& frame, Band band);

}  // namespace dwe::signal
