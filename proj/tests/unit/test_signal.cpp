#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dwe/common/error.hpp"
#include "dwe/common/stats.hpp"
#include "dwe/signal/features.hpp"
#include "dwe/signal/filter.hpp"
#include "dwe/signal/plv.hpp"
#include "dwe/signal/session_io.hpp"
#include "dwe/signal/spectrum.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace dwe;
using namespace dwe::signal;

namespace {

double rms(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
}

std::span<const double> trim(const std::vector<double>& x, std::size_t edge) {
    return std::span<const double>(x).subspan(edge, x.size() - 2 * edge);
}

}  // namespace

TEST_SUITE("signal") {

TEST_CASE("butterworth design matches the closed-form magnitude") {
    const auto f = design_butterworth_bandpass(kBandpassOrder, 1.0, 30.0, 500.0);
    CHECK(f.sections.size() == 4);
    for (double hz : {0.5, 1.0, 3.0, 10.0, 29.0, 30.0, 45.0, 60.0, 120.0}) {
        const double expected = std::sqrt(oracle::butter_bandpass_gain_sq(hz, 4, 1.0, 30.0, 500.0));
        CHECK(f.magnitude(hz, 500.0) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("bandpass keeps 10 Hz and removes 60 Hz like the spectral-mask oracle") {
    const double fs = 500.0;
    const std::size_t n = 2000;
    const auto x10 = testutil::sine(10.0, 1.0, 8 * n, fs);
    const auto y10 = bandpass_filter(x10, fs, 1.0, 30.0);
    CHECK(rms(trim(y10, 1000)) == doctest::Approx(rms(trim(x10, 1000))).epsilon(0.01));

    const auto x60 = testutil::sine(60.0, 1.0, 8 * n, fs);
    const auto y60 = bandpass_filter(x60, fs, 1.0, 30.0);
    CHECK(rms(trim(y60, 1000)) <= 0.01 * rms(x60));

    // noise against the circular mask oracle, away from the edges
    const auto noise = testutil::white_noise(n, 3);
    const auto y = bandpass_filter(noise, fs, 4.0, 30.0);
    const auto ref = oracle::mask_filter(noise, 4, 4.0, 30.0, fs);
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = y[i] - ref[i];
    CHECK(rms(trim(diff, 500)) <= 0.01 * rms(trim(ref, 500)));
}

TEST_CASE("bandpass on zeros, repeated application and errors") {
    const std::vector<double> zeros(3000, 0.0);
    const auto y = bandpass_filter(zeros, 500.0, 1.0, 30.0);
    CHECK(std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; }));

    const auto x = testutil::sine(10.0, 1.0, 10000, 500.0);
    const auto once = bandpass_filter(x, 500.0, 1.0, 30.0);
    const auto twice = bandpass_filter(once, 500.0, 1.0, 30.0);
    CHECK(std::abs(rms(trim(twice, 1000)) / rms(trim(once, 1000)) - 1.0) <= 0.02);

    CHECK_THROWS_AS(bandpass_filter(x, 500.0, 1.0, 250.0), ValidationError);
    CHECK_THROWS_AS(bandpass_filter(x, 500.0, 30.0, 1.0), ValidationError);
    auto bad = x;
    bad[17] = std::nan("");
    CHECK_THROWS_WITH_AS(bandpass_filter(bad, 500.0, 1.0, 30.0), doctest::Contains("17"), ValidationError);

    auto session = testutil::noise_session(95.0, 1);
    session.samples[5 * 30 + 2] = INFINITY;
    CHECK_THROWS_WITH_AS(bandpass_filter(session, 1.0, 30.0), doctest::Contains("F7"), ValidationError);
}

TEST_CASE("subwindow power matches a direct DFT and satisfies Parseval") {
    const auto x = testutil::white_noise(512, 11);
    for (std::size_t pad : {2u, 4u}) {
        const auto rect = make_taper(Taper::kRectangular, 512);
        const auto p = subwindow_power(x, rect, pad);
        std::vector<double> padded(512 * pad, 0.0);
        std::copy(x.begin(), x.end(), padded.begin());
        const auto ref = oracle::dft(padded);
        const double norm = 1.0 / (512.0 * 512.0 * static_cast<double>(pad));
        for (std::size_t k = 0; k < p.size(); k += 37) {
            CHECK(p[k] == doctest::Approx(std::norm(ref[k]) * norm).epsilon(1e-9));
        }
        double ms = 0.0;
        for (double v : x) ms += v * v;
        ms /= 512.0;
        CHECK(std::abs(two_sided_total(p, 512 * pad) / ms - 1.0) <= 1e-6);
    }
}

TEST_CASE("sliding spectrum peak, floor, bin count and frame count") {
    const double fs = 500.0;
    for (std::size_t pad : {2u, 4u}) {
        SpectrumConfig cfg;
        cfg.pad_factor = pad;
        const auto x = testutil::sine(10.0, 1.0, 92 * 500, fs);
        const auto frames = sliding_log_spectrum(x, fs, cfg, "Oz");
        REQUIRE(frames.size() == 3);
        CHECK(frames.front().t_s == 90);
        CHECK(frames.back().t_s == 92);
        CHECK(frames.front().bin_hz.size() == (pad == 2 ? 59u : 118u));
        const auto& f = frames.front();
        const auto peak = std::max_element(f.log_power_db.begin(), f.log_power_db.end()) - f.log_power_db.begin();
        const double width = fs / static_cast<double>(512 * pad);
        CHECK(std::abs(f.bin_hz[static_cast<std::size_t>(peak)] - 10.0) <= width);
        CHECK(std::is_sorted(f.bin_hz.begin(), f.bin_hz.end()));
    }
    SpectrumConfig cfg;
    const std::vector<double> zeros(90 * 500, 0.0);
    const auto frames = sliding_log_spectrum(zeros, fs, cfg, "Oz");
    for (double v : frames.front().log_power_db) CHECK(v == doctest::Approx(-120.0));

    CHECK_THROWS_AS(sliding_log_spectrum(std::vector<double>(1000, 0.0), fs, cfg, "Oz"), ValidationError);
    cfg.subwin_len = 500;
    CHECK_THROWS_AS(sliding_log_spectrum(zeros, fs, cfg, "Oz"), ValidationError);
}

TEST_CASE("sliding spectrum averages the same sub-windows as a direct computation") {
    const double fs = 500.0;
    SpectrumConfig cfg;
    const auto x = testutil::white_noise(91 * 500, 5);
    const auto frames = sliding_log_spectrum(x, fs, cfg, "Oz");
    const auto grid = make_subwindow_grid(cfg, fs);
    CHECK(grid.hop == 500);
    CHECK(grid.per_window == 89);
    const auto bins = retained_bins(cfg, fs);
    const auto taper = make_taper(Taper::kHamming, 512);
    // second frame starts one step in
    std::vector<double> acc(bins.size(), 0.0);
    for (std::size_t j = 0; j < grid.per_window; ++j) {
        const auto p = subwindow_power(std::span<const double>(x).subspan(500 + j * grid.hop, 512), taper, 2);
        for (std::size_t b = 0; b < bins.size(); ++b) acc[b] += p[bins[b]];
    }
    for (std::size_t b = 0; b < bins.size(); ++b) {
        CHECK(frames[1].log_power_db[b] ==
              doctest::Approx(10.0 * std::log10(acc[b] / static_cast<double>(grid.per_window))).epsilon(1e-12));
    }
}

TEST_CASE("white noise spectrum is flat") {
    SpectrumConfig cfg;
    const auto x = testutil::white_noise(90 * 500, 21);
    const auto frames = sliding_log_spectrum(x, 500.0, cfg, "Oz");
    const auto& db = frames.front().log_power_db;
    const double grand = mean(db);
    for (double v : db) CHECK(std::abs(v - grand) <= 1.5);
}

TEST_CASE("band power") {
    SpectralFrame flat;
    for (int i = 0; i < 59; ++i) flat.bin_hz.push_back(1.0 + 0.5 * i);
    flat.log_power_db.assign(59, 10.0);
    for (Band b : kAllBands) CHECK(band_power(flat, b) == doctest::Approx(10.0));
    CHECK_THROWS_AS(band_power(flat.log_power_db, flat.bin_hz, BandRange{31.0, 40.0}), ValidationError);

    SpectrumConfig cfg;
    const auto x = testutil::sine(6.0, 1.0, 90 * 500, 500.0);
    const auto frames = sliding_log_spectrum(x, 500.0, cfg, "Oz");
    CHECK(band_power(frames.front(), Band::kTheta) > band_power(frames.front(), Band::kAlpha));
    CHECK(parse_band("alpha") == Band::kAlpha);
    CHECK_FALSE(parse_band("gamma").has_value());
}

TEST_CASE("plv calibration and symmetry") {
    const double fs = 500.0;
    const auto a = testutil::white_noise(20000, 2);
    CHECK(plv(a, a, band_range(Band::kAlpha), fs) == doctest::Approx(1.0).epsilon(1e-9));

    const auto s1 = testutil::sine(10.0, 1.0, 20000, fs);
    std::vector<double> s2(20000);
    for (std::size_t i = 0; i < s2.size(); ++i) {
        s2[i] = std::sin(2.0 * std::numbers::pi * 10.0 * (static_cast<double>(i) / fs - 0.040));
    }
    CHECK(plv(s1, s2, band_range(Band::kAlpha), fs) >= 0.999);

    const auto b = testutil::white_noise(20000, 3);
    const double ab = plv(a, b, band_range(Band::kAlpha), fs);
    const double ba = plv(b, a, band_range(Band::kAlpha), fs);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);

    const std::vector<double> zeros(20000, 0.0);
    CHECK_THROWS_AS(plv(zeros, a, band_range(Band::kAlpha), fs), ValidationError);
    CHECK_THROWS_AS(plv(a, std::vector<double>(100, 1.0), band_range(Band::kAlpha), fs), ValidationError);
}

TEST_CASE("extract_features windowing, shapes and determinism") {
    const auto session = testutil::noise_session(120.0, 8, 10.0, 2.0);
    const auto f1 = extract_features(session);
    REQUIRE(f1.frames.size() == 31);
    CHECK(f1.frames.front().t_s == 90);
    CHECK(f1.frames.back().t_s == 120);
    const auto& fr = f1.frames.front();
    CHECK(fr.oz_spectrum.size() == 59);
    CHECK(fr.theta_powers().size() == 30);
    REQUIRE(fr.alpha_plv().size() == 45);
    for (double v : fr.alpha_plv()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // a shared 10 Hz tone locks every pair
    CHECK(fr.alpha_plv().front() > 0.5);
    CHECK(f1.frame_at(100) != nullptr);
    CHECK(f1.frame_at(100)->t_s == 100);
    CHECK(f1.frame_at(121) == nullptr);

    const auto f2 = extract_features(session);
    CHECK(f1.frames == f2.frames);

    WeightFeatureSpec spec;
    CHECK(weight_vector(fr, spec).size() == 75);
    CHECK(spec.label() == "theta+plv_alpha");
    spec.plv_bands = {Band::kBeta};
    CHECK_THROWS_AS(weight_vector(fr, spec), ValidationError);
}

TEST_CASE("frame PLV equals the direct PLV over the same window away from session edges") {
    const auto session = testutil::noise_session(100.0, 4, 10.0, 0.7);
    FeatureConfig cfg;
    const auto feats = extract_features(session, cfg);
    const auto filtered = bandpass_filter(session, 1.0, 30.0);
    const auto a = band_phasors(filtered.channel(session.channel_index("O1")), band_range(Band::kAlpha), 500.0);
    const auto b = band_phasors(filtered.channel(session.channel_index("O2")), band_range(Band::kAlpha), 500.0);
    const std::size_t start = 5 * 500;
    std::complex<double> acc = 0.0;
    for (std::size_t i = start; i < start + 90 * 500; ++i) acc += a[i] * std::conj(b[i]);
    const double expected = std::abs(acc) / (90.0 * 500.0);
    CHECK(feats.frame_at(95)->alpha_plv()[0] == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("session directory and features round trip") {
    auto session = testutil::noise_session(91.0, 9);
    session.events.push_back({91.0 - 80.0, 11.0 + 0.75, 12.5, (11.0 + 0.75) - 11.0});
    const auto dir = std::filesystem::temp_directory_path() / "dwe_test_session_io";
    std::filesystem::remove_all(dir);
    write_session_dir(dir, session, {{"seed", 9}});
    const auto back = read_session_dir(dir);
    CHECK(back.samples == session.samples);
    CHECK(back.events == session.events);
    CHECK(back.channel_names == session.channel_names);
    CHECK(read_session_header(dir).samples.empty());

    const auto feats = extract_features(session);
    const auto csv = features_to_csv(feats, "config_hash=abc seed=9");
    CHECK(csv.rfind("# config_hash=abc", 0) == 0);
    CHECK(csv.find("theta_Oz") != std::string::npos);
    CHECK(csv.find("plvA_O1_O2") != std::string::npos);
    const auto parsed = features_from_csv(csv);
    CHECK(parsed.frames == feats.frames);
    CHECK(parsed.bin_hz == feats.bin_hz);
    CHECK(parsed.channel_names == feats.channel_names);
    CHECK_THROWS_AS(features_from_csv("t_s,bogus\n90,1\n"), ParseError);
    CHECK_THROWS_AS(events_from_csv("a,b\n"), ParseError);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
