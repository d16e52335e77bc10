#include "dwe/signal/features.hpp"

#include <algorithm>
#include <cmath>

#include "dwe/common/error.hpp"
#include "dwe/signal/filter.hpp"
#include "dwe/signal/plv.hpp"

namespace dwe::signal {

const FeatureFrame* SessionFeatures::frame_at(int t) const {
    const auto it = std::lower_bound(frames.begin(), frames.end(), t,
                                     [](const FeatureFrame& f, int value) { return f.t_s < value; });
    if (it == frames.end() || it->t_s != t) return nullptr;
    return &*it;
}

std::vector<std::pair<std::string, std::string>> weighting_pairs() {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < kWeightingChannels.size(); ++i) {
        for (std::size_t j = i + 1; j < kWeightingChannels.size(); ++j) {
            pairs.emplace_back(std::string(kWeightingChannels[i]), std::string(kWeightingChannels[j]));
        }
    }
    return pairs;
}

std::string WeightFeatureSpec::label() const {
    std::string out;
    for (Band b : power_bands) {
        if (!out.empty()) out += '+';
        out += band_name(b);
    }
    for (Band b : plv_bands) {
        if (!out.empty()) out += '+';
        out += "plv_";
        out += band_name(b);
    }
    return out;
}

std::vector<double> weight_vector(const FeatureFrame& frame, const WeightFeatureSpec& spec) {
    std::vector<double> out;
    for (Band b : spec.power_bands) {
        const auto& v = frame.band_powers[static_cast<int>(b)];
        if (v.empty()) throw ValidationError("weight_vector: frame has no " + std::string(band_name(b)) + " powers");
        out.insert(out.end(), v.begin(), v.end());
    }
    for (Band b : spec.plv_bands) {
        const auto& v = frame.band_plv[static_cast<int>(b)];
        if (v.empty()) throw ValidationError("weight_vector: frame has no " + std::string(band_name(b)) + " PLV");
        out.insert(out.end(), v.begin(), v.end());
    }
    if (out.empty()) throw ValidationError("weight_vector: empty feature selection");
    return out;
}

namespace {

std::vector<Band> with_required(std::vector<Band> bands, Band required) {
    if (std::find(bands.begin(), bands.end(), required) == bands.end()) bands.push_back(required);
    std::sort(bands.begin(), bands.end());
    bands.erase(std::unique(bands.begin(), bands.end()), bands.end());
    return bands;
}

}  // namespace

SessionFeatures extract_features(const EegSession& session, const FeatureConfig& cfg) {
    session.validate(cfg.spectrum.window_s);
    const double fs = session.sample_rate_hz;
    const std::size_t nc = session.n_channels();
    const std::size_t ns = session.n_samples();
    // channel-major copy, transposed in cache-sized blocks
    std::vector<float> by_channel(nc * ns);
    constexpr std::size_t kBlock = 256;
    for (std::size_t i0 = 0; i0 < ns; i0 += kBlock) {
        const std::size_t i1 = std::min(ns, i0 + kBlock);
        for (std::size_t c = 0; c < nc; ++c) {
            float* dst = by_channel.data() + c * ns;
            for (std::size_t i = i0; i < i1; ++i) dst[i] = session.samples[i * nc + c];
        }
    }
    auto prepared = [&](std::size_t c) {
        const float* src = by_channel.data() + c * ns;
        std::vector<double> x(src, src + ns);
        return cfg.prefilter ? bandpass_filter(x, fs, cfg.prefilter_low_hz, cfg.prefilter_high_hz) : x;
    };
    const SubwindowGrid grid = make_subwindow_grid(cfg.spectrum, fs);
    if (grid.window_samples % grid.step_samples != 0) {
        throw ValidationError("extract_features: window must be a whole number of steps");
    }
    const auto power_bands = with_required(cfg.power_bands, Band::kTheta);
    const auto plv_bands = with_required(cfg.plv_bands, Band::kAlpha);

    SessionFeatures out;
    out.subject_id = session.subject_id;
    out.session_id = session.session_id;
    out.channel_names = session.channel_names;
    out.events = session.events;

    const std::size_t oz = session.channel_index(kSpectrumChannel);
    std::vector<std::size_t> wch;
    for (auto name : kWeightingChannels) wch.push_back(session.channel_index(name));
    std::vector<std::vector<double>> weighting_signals(wch.size());
    for (std::size_t c = 0; c < nc; ++c) {
        auto x = prepared(c);
        const auto spectra = sliding_log_spectrum(x, fs, cfg.spectrum, session.channel_names[c]);
        if (c == 0) {
            out.bin_hz = spectra.front().bin_hz;
            out.frames.resize(spectra.size());
            for (std::size_t f = 0; f < spectra.size(); ++f) {
                out.frames[f].t_s = spectra[f].t_s;
                for (Band b : power_bands) out.frames[f].band_powers[static_cast<int>(b)].assign(nc, 0.0);
            }
        }
        for (std::size_t f = 0; f < spectra.size(); ++f) {
            FeatureFrame& frame = out.frames[f];
            for (Band b : power_bands) frame.band_powers[static_cast<int>(b)][c] = band_power(spectra[f], b);
            if (c == oz) frame.oz_spectrum = spectra[f].log_power_db;
        }
        const auto w = std::find(wch.begin(), wch.end(), c);
        if (w != wch.end()) weighting_signals[static_cast<std::size_t>(w - wch.begin())] = std::move(x);
    }

    // PLV over each frame's window: phasors are computed once for the whole session and the
    // phase-difference products are summed per step-sized block.
    const auto pairs = weighting_pairs();
    const std::size_t step = grid.step_samples;
    const std::size_t blocks_per_window = grid.window_samples / step;
    const std::size_t n_blocks = out.frames.size() - 1 + blocks_per_window;
    for (Band b : plv_bands) {
        std::vector<std::vector<Complex>> phasors;
        phasors.reserve(wch.size());
        for (const auto& x : weighting_signals) phasors.push_back(band_phasors(x, band_range(b), fs));
        for (auto& frame : out.frames) frame.band_plv[static_cast<int>(b)].assign(pairs.size(), 0.0);
        std::vector<double> block_re(n_blocks), block_im(n_blocks);
        std::size_t p = 0;
        for (std::size_t i = 0; i < wch.size(); ++i) {
            for (std::size_t j = i + 1; j < wch.size(); ++j, ++p) {
                const auto& za = phasors[i];
                const auto& zb = phasors[j];
                for (std::size_t blk = 0; blk < n_blocks; ++blk) {
                    double re = 0.0;
                    double im = 0.0;
                    for (std::size_t s = blk * step; s < (blk + 1) * step; ++s) {
                        re += za[s].real() * zb[s].real() + za[s].imag() * zb[s].imag();
                        im += za[s].imag() * zb[s].real() - za[s].real() * zb[s].imag();
                    }
                    block_re[blk] = re;
                    block_im[blk] = im;
                }
                const double count = static_cast<double>(grid.window_samples);
                for (std::size_t f = 0; f < out.frames.size(); ++f) {
                    double re = 0.0;
                    double im = 0.0;
                    for (std::size_t blk = f; blk < f + blocks_per_window; ++blk) {
                        re += block_re[blk];
                        im += block_im[blk];
                    }
                    out.frames[f].band_plv[static_cast<int>(b)][p] = std::min(1.0, std::hypot(re, im) / count);
                }
            }
        }
    }
    return out;
}

}  // namespace dwe::signal
