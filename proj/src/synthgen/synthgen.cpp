#include "dwe/synthgen/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "dwe/common/error.hpp"
#include "dwe/common/io.hpp"
#include "dwe/signal/fft.hpp"
#include "dwe/signal/session_io.hpp"

namespace dwe::synthgen {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError("generator config: " + what);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void SubjectArchetype::validate() const {
    const std::string id = "archetype " + std::to_string(archetype_id) + ": ";
    require(archetype_id >= 1 && archetype_id <= 3, id + "archetype_id must be 1, 2 or 3");
    require(finite(rt_baseline_s) && rt_baseline_s > 0.0, id + "rt_baseline_s must be positive");
    require(finite(fatigue_rt_gain) && fatigue_rt_gain >= 0.0, id + "fatigue_rt_gain must be finite and >= 0");
    require(finite(theta_gain_posterior), id + "theta_gain_posterior must be finite");
    require(alpha_plv_level >= 0.0 && alpha_plv_level <= 1.0, id + "alpha_plv_level must lie in [0, 1]");
    require(finite(spectral_slope) && spectral_slope >= 0.0, id + "spectral_slope must be finite and >= 0");
    require(finite(rt_noise_sigma) && rt_noise_sigma >= 0.0, id + "rt_noise_sigma must be finite and >= 0");
    require(fatigue_plateau >= 0.0 && fatigue_plateau <= 1.0, id + "fatigue_plateau must lie in [0, 1]");
    require(finite(fatigue_rise_s) && fatigue_rise_s >= 1.0, id + "fatigue_rise_s must be >= 1");
}

std::array<SubjectArchetype, 3> default_archetypes() {
    SubjectArchetype optimal;
    optimal.archetype_id = 1;
    optimal.rt_baseline_s = 0.7;
    optimal.fatigue_rt_gain = 1.5;
    optimal.theta_gain_posterior = 9.0;
    optimal.alpha_plv_level = 0.1;
    optimal.fatigue_plateau = 0.15;
    optimal.fatigue_rise_s = 100.0;
    optimal.rt_noise_sigma = 0.1;

    SubjectArchetype suboptimal;
    suboptimal.archetype_id = 2;
    suboptimal.rt_baseline_s = 0.8;
    suboptimal.fatigue_rt_gain = 5.0;
    suboptimal.theta_gain_posterior = 5.0;
    suboptimal.alpha_plv_level = 0.5;
    suboptimal.fatigue_plateau = 0.55;
    suboptimal.fatigue_rise_s = 100.0;
    suboptimal.rt_noise_sigma = 0.1;

    SubjectArchetype poor;
    poor.archetype_id = 3;
    poor.rt_baseline_s = 0.9;
    poor.fatigue_rt_gain = 7.0;
    poor.theta_gain_posterior = 2.5;
    poor.alpha_plv_level = 0.95;
    poor.fatigue_plateau = 0.85;
    poor.fatigue_rise_s = 100.0;
    poor.rt_noise_sigma = 0.1;
    return {optimal, suboptimal, poor};
}

void GeneratorConfig::validate() const {
    require(finite(duration_s) && duration_s >= 400.0,
            "duration_s must be at least 400 s (first five minutes for training plus trials)");
    require(finite(sample_rate_hz) && sample_rate_hz >= 100.0, "sample_rate_hz must be at least 100");
    for (std::size_t i = 0; i < archetypes.size(); ++i) {
        archetypes[i].validate();
        require(archetypes[i].archetype_id == static_cast<int>(i) + 1, "archetypes must be listed in id order");
    }
    require(iti_min_s > 0.0 && iti_max_s >= iti_min_s, "need 0 < iti_min_s <= iti_max_s");
    require(correction_min_s > 0.0 && correction_max_s >= correction_min_s,
            "need 0 < correction_min_s <= correction_max_s");
    require(session_jitter >= 0.0 && session_jitter < 0.5, "session_jitter must lie in [0, 0.5)");
    require(slope_jitter >= 0.0 && finite(slope_jitter), "slope_jitter must be >= 0");
    require(drift_probability >= 0.0 && drift_probability <= 1.0, "drift_probability must lie in [0, 1]");
    require(drift_transition_s > 0.0 && drift_earliest_s >= 0.0 && drift_tail_s >= 0.0, "drift times must be >= 0");
    require(fatigue.initial_max >= 0.0 && fatigue.initial_max <= 1.0, "fatigue.initial_max must lie in [0, 1]");
    require(fatigue.dwell_s >= 1.0 && fatigue.volatility >= 0.0, "fatigue dwell_s >= 1 and volatility >= 0");
    require(fatigue.step_cap > 0.0, "fatigue.step_cap must be positive");
    require(fatigue.two_state_dwell_s >= 1.0, "fatigue.two_state_dwell_s must be >= 1");
    require(fatigue.two_state_low_fraction >= 0.0 && fatigue.two_state_low_fraction <= 1.0,
            "fatigue.two_state_low_fraction must lie in [0, 1]");
    for (double a : {background_uv, delta_uv, theta_uv, alpha_uv, beta_uv, frontal_theta_fraction}) {
        require(finite(a) && a >= 0.0, "amplitudes must be finite and >= 0");
    }
}

namespace {

const char* fatigue_mode_name(FatigueMode m) {
    switch (m) {
        case FatigueMode::kRandomWalk: return "random_walk";
        case FatigueMode::kTwoState: return "two_state";
        case FatigueMode::kConstant: return "constant";
    }
    return "random_walk";
}

nlohmann::json archetype_json(const SubjectArchetype& a) {
    return {{"archetype_id", a.archetype_id},
            {"rt_baseline_s", a.rt_baseline_s},
            {"fatigue_rt_gain", a.fatigue_rt_gain},
            {"theta_gain_posterior", a.theta_gain_posterior},
            {"alpha_plv_level", a.alpha_plv_level},
            {"spectral_slope", a.spectral_slope},
            {"rt_noise_sigma", a.rt_noise_sigma},
            {"fatigue_plateau", a.fatigue_plateau},
            {"fatigue_rise_s", a.fatigue_rise_s}};
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out, std::vector<std::string>& seen) {
    seen.emplace_back(key);
    if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& seen, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
            throw ParseError(where + ": unknown key '" + key + "'");
        }
    }
}

SubjectArchetype archetype_from_json(const nlohmann::json& j, SubjectArchetype a) {
    std::vector<std::string> seen;
    read_key(j, "archetype_id", a.archetype_id, seen);
    read_key(j, "rt_baseline_s", a.rt_baseline_s, seen);
    read_key(j, "fatigue_rt_gain", a.fatigue_rt_gain, seen);
    read_key(j, "theta_gain_posterior", a.theta_gain_posterior, seen);
    read_key(j, "alpha_plv_level", a.alpha_plv_level, seen);
    read_key(j, "spectral_slope", a.spectral_slope, seen);
    read_key(j, "rt_noise_sigma", a.rt_noise_sigma, seen);
    read_key(j, "fatigue_plateau", a.fatigue_plateau, seen);
    read_key(j, "fatigue_rise_s", a.fatigue_rise_s, seen);
    reject_unknown(j, seen, "archetype");
    return a;
}

}  // namespace

nlohmann::json to_json(const GeneratorConfig& cfg) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["duration_s"] = cfg.duration_s;
    j["sample_rate_hz"] = cfg.sample_rate_hz;
    j["archetypes"] = nlohmann::json::array();
    for (const auto& a : cfg.archetypes) j["archetypes"].push_back(archetype_json(a));
    j["fatigue"] = {{"mode", fatigue_mode_name(cfg.fatigue.mode)},
                    {"initial_max", cfg.fatigue.initial_max},
                    {"dwell_s", cfg.fatigue.dwell_s},
                    {"volatility", cfg.fatigue.volatility},
                    {"step_cap", cfg.fatigue.step_cap},
                    {"two_state_dwell_s", cfg.fatigue.two_state_dwell_s},
                    {"two_state_low_fraction", cfg.fatigue.two_state_low_fraction}};
    j["iti_min_s"] = cfg.iti_min_s;
    j["iti_max_s"] = cfg.iti_max_s;
    j["correction_min_s"] = cfg.correction_min_s;
    j["correction_max_s"] = cfg.correction_max_s;
    j["session_jitter"] = cfg.session_jitter;
    j["slope_jitter"] = cfg.slope_jitter;
    j["drift_probability"] = cfg.drift_probability;
    j["drift_earliest_s"] = cfg.drift_earliest_s;
    j["drift_tail_s"] = cfg.drift_tail_s;
    j["drift_transition_s"] = cfg.drift_transition_s;
    j["background_uv"] = cfg.background_uv;
    j["delta_uv"] = cfg.delta_uv;
    j["theta_uv"] = cfg.theta_uv;
    j["alpha_uv"] = cfg.alpha_uv;
    j["beta_uv"] = cfg.beta_uv;
    j["frontal_theta_fraction"] = cfg.frontal_theta_fraction;
    return j;
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
    GeneratorConfig cfg;
    try {
        if (!j.is_object()) throw ParseError("generator config must be an object");
        std::vector<std::string> seen;
        read_key(j, "seed", cfg.seed, seen);
        read_key(j, "duration_s", cfg.duration_s, seen);
        read_key(j, "sample_rate_hz", cfg.sample_rate_hz, seen);
        seen.emplace_back("archetypes");
        if (j.contains("archetypes")) {
            const auto& arr = j.at("archetypes");
            if (!arr.is_array() || arr.size() != 3) throw ParseError("generator config: archetypes must list 3 entries");
            for (std::size_t i = 0; i < 3; ++i) cfg.archetypes[i] = archetype_from_json(arr[i], cfg.archetypes[i]);
        }
        seen.emplace_back("fatigue");
        if (j.contains("fatigue")) {
            const auto& f = j.at("fatigue");
            std::vector<std::string> fseen;
            std::string mode = fatigue_mode_name(cfg.fatigue.mode);
            read_key(f, "mode", mode, fseen);
            if (mode == "random_walk") cfg.fatigue.mode = FatigueMode::kRandomWalk;
            else if (mode == "two_state") cfg.fatigue.mode = FatigueMode::kTwoState;
            else if (mode == "constant") cfg.fatigue.mode = FatigueMode::kConstant;
            else throw ParseError("generator config: unknown fatigue mode '" + mode + "'");
            read_key(f, "initial_max", cfg.fatigue.initial_max, fseen);
            read_key(f, "dwell_s", cfg.fatigue.dwell_s, fseen);
            read_key(f, "volatility", cfg.fatigue.volatility, fseen);
            read_key(f, "step_cap", cfg.fatigue.step_cap, fseen);
            read_key(f, "two_state_dwell_s", cfg.fatigue.two_state_dwell_s, fseen);
            read_key(f, "two_state_low_fraction", cfg.fatigue.two_state_low_fraction, fseen);
            reject_unknown(f, fseen, "fatigue");
        }
        read_key(j, "iti_min_s", cfg.iti_min_s, seen);
        read_key(j, "iti_max_s", cfg.iti_max_s, seen);
        read_key(j, "correction_min_s", cfg.correction_min_s, seen);
        read_key(j, "correction_max_s", cfg.correction_max_s, seen);
        read_key(j, "session_jitter", cfg.session_jitter, seen);
        read_key(j, "slope_jitter", cfg.slope_jitter, seen);
        read_key(j, "drift_probability", cfg.drift_probability, seen);
        read_key(j, "drift_earliest_s", cfg.drift_earliest_s, seen);
        read_key(j, "drift_tail_s", cfg.drift_tail_s, seen);
        read_key(j, "drift_transition_s", cfg.drift_transition_s, seen);
        read_key(j, "background_uv", cfg.background_uv, seen);
        read_key(j, "delta_uv", cfg.delta_uv, seen);
        read_key(j, "theta_uv", cfg.theta_uv, seen);
        read_key(j, "alpha_uv", cfg.alpha_uv, seen);
        read_key(j, "beta_uv", cfg.beta_uv, seen);
        read_key(j, "frontal_theta_fraction", cfg.frontal_theta_fraction, seen);
        reject_unknown(j, seen, "generator config");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("generator config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::vector<double> simulate_fatigue(const FatigueConfig& cfg, const std::vector<double>& plateau, double rise_s,
                                     Rng& rng) {
    std::vector<double> f(plateau.size(), 0.0);
    if (f.empty()) return f;
    if (cfg.mode == FatigueMode::kConstant) {
        for (std::size_t t = 0; t < f.size(); ++t) f[t] = std::clamp(plateau[t], 0.0, 1.0);
        return f;
    }
    f[0] = rng.uniform(0.0, cfg.initial_max);
    if (cfg.mode == FatigueMode::kTwoState) {
        bool high = false;
        const double p_switch = 1.0 / cfg.two_state_dwell_s;
        for (std::size_t t = 1; t < f.size(); ++t) {
            if (rng.uniform() < p_switch) high = !high;
            const double level = high ? plateau[t] : plateau[t] * cfg.two_state_low_fraction;
            f[t] = std::clamp(f[t - 1] + std::clamp(level - f[t - 1], -cfg.step_cap, cfg.step_cap), 0.0, 1.0);
        }
        return f;
    }
    const double decay = std::exp(-1.0 / cfg.dwell_s);
    const double kick = cfg.volatility * std::sqrt(1.0 - decay * decay);
    // Two-stage relaxation: the trend leaves its start level slowly, like an alert start.
    double drive = f[0];
    double trend = f[0];
    double dwell = 0.0;
    for (std::size_t t = 1; t < f.size(); ++t) {
        drive += (plateau[t] - drive) / rise_s;
        trend += (drive - trend) / rise_s;
        dwell = dwell * decay + kick * rng.normal();
        const double target = std::clamp(trend + dwell, 0.0, 1.0);
        f[t] = std::clamp(f[t - 1] + std::clamp(target - f[t - 1], -cfg.step_cap, cfg.step_cap), 0.0, 1.0);
    }
    return f;
}

bool is_posterior_channel(std::string_view name) noexcept {
    return name.starts_with("O") || name.starts_with("P") || name.starts_with("CP");
}

namespace {

SubjectArchetype jittered(const SubjectArchetype& a, const GeneratorConfig& cfg, Rng& rng) {
    auto scale = [&](double v) { return v * std::clamp(1.0 + cfg.session_jitter * rng.normal(), 0.5, 1.5); };
    SubjectArchetype j = a;
    j.rt_baseline_s = scale(a.rt_baseline_s);
    j.fatigue_rt_gain = scale(a.fatigue_rt_gain);
    j.theta_gain_posterior = scale(a.theta_gain_posterior);
    j.alpha_plv_level = std::clamp(scale(a.alpha_plv_level), 0.0, 1.0);
    j.fatigue_plateau = std::clamp(scale(a.fatigue_plateau), 0.0, 1.0);
    j.spectral_slope = std::max(0.0, a.spectral_slope + cfg.slope_jitter * rng.normal());
    return j;
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

/// Highest frequency the generator puts power at (an amplifier low-pass).
constexpr double kLowpassHz = 100.0;

/// Amplitude profile over rfft bins whose random-phase realization has unit variance in expectation.
/// Bins where the shape is below 1e-6 of its peak are zeroed.
std::vector<double> unit_profile(std::size_t n, double fs, const std::function<double(double)>& shape) {
    const std::size_t nb = n / 2 + 1;
    std::vector<double> p(nb, 0.0);
    double energy = 0.0;
    double peak = 0.0;
    for (std::size_t k = 1; k < nb; ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(n);
        if (f > kLowpassHz) break;
        p[k] = shape(f);
        peak = std::max(peak, p[k]);
    }
    for (double& v : p) {
        if (v < 1e-6 * peak) v = 0.0;
        energy += v * v;
    }
    if (energy <= 0.0) return p;
    const double scale = static_cast<double>(n) / std::sqrt(2.0 * energy);
    for (double& v : p) v *= scale;
    return p;
}

std::function<double(double)> bump(double centre, double width) {
    return [=](double f) { return std::exp(-(f - centre) * (f - centre) / (4.0 * width * width)); };
}

/// Realizes a Gaussian process with the given rfft amplitude profile.
std::vector<double> realize(const std::vector<double>& profile, std::size_t n, Rng& rng) {
    std::vector<signal::Complex> spec(profile.size());
    constexpr double kHalf = std::numbers::sqrt2 / 2.0;
    for (std::size_t k = 1; k < profile.size(); ++k) {
        if (profile[k] == 0.0) continue;
        const double re = rng.normal();
        const double im = rng.normal();
        spec[k] = signal::Complex(re, im) * (profile[k] * kHalf);
    }
    if (n % 2 == 0) spec.back() = signal::Complex(spec.back().real() * std::numbers::sqrt2, 0.0);
    return signal::irfft(spec, n);
}

}  // namespace

GeneratedSession generate_session(const SubjectArchetype& archetype, const GeneratorConfig& cfg, std::uint64_t seed,
                                  const std::string& subject_id, const std::string& session_id) {
    cfg.validate();
    archetype.validate();
    Rng rng(seed);
    GeneratedSession out;
    out.truth.archetype_id = archetype.archetype_id;
    out.truth.seed = seed;

    const SubjectArchetype own = jittered(archetype, cfg, rng);
    const int next_id = std::min(archetype.archetype_id + 1, 3);
    SubjectArchetype next = jittered(cfg.archetypes[static_cast<std::size_t>(next_id - 1)], cfg, rng);
    next.spectral_slope = own.spectral_slope;

    const double drift_draw = rng.uniform();
    const double drift_at = rng.uniform(cfg.drift_earliest_s, std::max(cfg.drift_earliest_s, cfg.duration_s - cfg.drift_tail_s));
    const bool drifts = archetype.archetype_id < 3 && drift_draw < cfg.drift_probability &&
                        cfg.drift_earliest_s < cfg.duration_s - cfg.drift_tail_s;
    if (drifts) out.truth.drift_onset_s = drift_at;

    const auto seconds = static_cast<std::size_t>(std::ceil(cfg.duration_s)) + 1;
    std::vector<double> mix(seconds, 0.0);
    std::vector<double> plateau(seconds);
    out.truth.regime.resize(seconds);
    for (std::size_t t = 0; t < seconds; ++t) {
        if (drifts) mix[t] = std::clamp((static_cast<double>(t) - drift_at) / cfg.drift_transition_s, 0.0, 1.0);
        plateau[t] = lerp(own.fatigue_plateau, next.fatigue_plateau, mix[t]);
        out.truth.regime[t] = mix[t] >= 0.5 ? next_id : archetype.archetype_id;
    }
    out.truth.fatigue = simulate_fatigue(cfg.fatigue, plateau, own.fatigue_rise_s, rng);
    const auto& fatigue = out.truth.fatigue;

    auto at_second = [&](const std::vector<double>& v, double t) {
        const double c = std::clamp(t, 0.0, static_cast<double>(seconds - 1));
        const auto i = std::min(static_cast<std::size_t>(c), seconds - 2);
        return lerp(v[i], v[i + 1], c - static_cast<double>(i));
    };

    // Trials
    auto& session = out.session;
    session.subject_id = subject_id;
    session.session_id = session_id;
    session.sample_rate_hz = cfg.sample_rate_hz;
    session.channel_names = signal::default_montage();
    double t = rng.uniform(cfg.iti_min_s, cfg.iti_max_s);
    for (;;) {
        const double m = at_second(mix, t);
        const double b = lerp(own.rt_baseline_s, next.rt_baseline_s, m);
        const double g = lerp(own.fatigue_rt_gain, next.fatigue_rt_gain, m);
        const double sigma = lerp(own.rt_noise_sigma, next.rt_noise_sigma, m);
        const double rt = b * (1.0 + g * at_second(fatigue, t)) * std::exp(sigma * rng.normal());
        signal::TrialEvent ev;
        ev.deviation_onset_s = t;
        ev.response_onset_s = t + rt;
        ev.rt_s = ev.response_onset_s - ev.deviation_onset_s;
        ev.response_offset_s = ev.response_onset_s + rng.uniform(cfg.correction_min_s, cfg.correction_max_s);
        if (ev.response_offset_s >= cfg.duration_s) break;
        session.events.push_back(ev);
        t = ev.response_offset_s + rng.uniform(cfg.iti_min_s, cfg.iti_max_s);
    }

    // EEG
    const double fs = cfg.sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
    const double slope = own.spectral_slope;
    const auto background = unit_profile(n, fs, [slope](double f) { return std::pow(std::max(f, 0.5), -slope / 2.0); });
    const auto delta = unit_profile(n, fs, bump(2.0, 0.5));
    const auto theta = unit_profile(n, fs, bump(5.5, 0.7));
    const auto alpha = unit_profile(n, fs, bump(10.0, 0.7));
    const auto beta = unit_profile(n, fs, bump(20.0, 4.0));
    std::vector<double> stationary(background.size());
    std::vector<double> stationary_alpha(background.size());
    for (std::size_t k = 0; k < background.size(); ++k) {
        const double p2 = cfg.background_uv * cfg.background_uv * background[k] * background[k] +
                          cfg.delta_uv * cfg.delta_uv * delta[k] * delta[k] +
                          cfg.beta_uv * cfg.beta_uv * beta[k] * beta[k];
        stationary[k] = std::sqrt(p2);
        stationary_alpha[k] = std::sqrt(p2 + cfg.alpha_uv * cfg.alpha_uv * alpha[k] * alpha[k]);
    }

    // Per-sample envelopes from the per-second paths.
    std::vector<double> theta_posterior(n), theta_frontal(n), coupling(n), private_weight(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ts = static_cast<double>(i) / fs;
        const double m = at_second(mix, ts);
        const double db = lerp(own.theta_gain_posterior, next.theta_gain_posterior, m) * at_second(fatigue, ts);
        theta_posterior[i] = cfg.theta_uv * std::pow(10.0, db / 20.0);
        theta_frontal[i] = cfg.theta_uv * std::pow(10.0, cfg.frontal_theta_fraction * db / 20.0);
        coupling[i] = cfg.alpha_uv * lerp(own.alpha_plv_level, next.alpha_plv_level, m);
        private_weight[i] = std::sqrt(std::max(0.0, cfg.alpha_uv * cfg.alpha_uv - coupling[i] * coupling[i]));
    }
    const auto common_alpha = realize(alpha, n, rng);

    const std::size_t nc = session.channel_names.size();
    std::vector<float> channel_major(n * nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto& name = session.channel_names[c];
        const bool weighting = std::find(signal::kWeightingChannels.begin(), signal::kWeightingChannels.end(), name) !=
                               signal::kWeightingChannels.end();
        const auto& theta_amp = is_posterior_channel(name) ? theta_posterior : theta_frontal;
        const auto base = realize(weighting ? stationary : stationary_alpha, n, rng);
        const auto th = realize(theta, n, rng);
        std::vector<double> private_alpha;
        if (weighting) private_alpha = realize(alpha, n, rng);
        float* dst = channel_major.data() + c * n;
        for (std::size_t i = 0; i < n; ++i) {
            double v = base[i] + theta_amp[i] * th[i];
            if (weighting) v += coupling[i] * common_alpha[i] + private_weight[i] * private_alpha[i];
            dst[i] = static_cast<float>(v);
        }
    }
    session.samples.resize(n * nc);
    constexpr std::size_t kBlock = 256;
    for (std::size_t i0 = 0; i0 < n; i0 += kBlock) {
        const std::size_t i1 = std::min(n, i0 + kBlock);
        for (std::size_t c = 0; c < nc; ++c) {
            const float* src = channel_major.data() + c * n;
            for (std::size_t i = i0; i < i1; ++i) session.samples[i * nc + c] = src[i];
        }
    }
    return out;
}

std::vector<CorpusEntry> corpus_plan(const std::array<std::size_t, 3>& per_archetype, const GeneratorConfig& cfg) {
    std::vector<CorpusEntry> plan;
    std::size_t index = 0;
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t i = 0; i < per_archetype[a]; ++i, ++index) {
            CorpusEntry e;
            e.archetype_id = static_cast<int>(a) + 1;
            e.subject_id = "subj" + std::to_string(a + 1) + "-" + std::to_string(i / 2);
            std::ostringstream id;
            id << "S" << std::setw(3) << std::setfill('0') << index;
            e.session_id = id.str();
            e.seed = derive_seed(cfg.seed, index);
            plan.push_back(std::move(e));
        }
    }
    return plan;
}

GeneratedSession generate_entry(const CorpusEntry& entry, const GeneratorConfig& cfg) {
    return generate_session(cfg.archetypes[static_cast<std::size_t>(entry.archetype_id - 1)], cfg, entry.seed,
                            entry.subject_id, entry.session_id);
}

nlohmann::json truth_to_json(const GroundTruth& truth, const GeneratorConfig& cfg) {
    nlohmann::json j;
    j["archetype_id"] = truth.archetype_id;
    j["seed"] = truth.seed;
    j["fatigue"] = truth.fatigue;
    j["regime"] = truth.regime;
    j["drift_onset_s"] = truth.drift_onset_s ? nlohmann::json(*truth.drift_onset_s) : nlohmann::json(nullptr);
    j["generator"] = to_json(cfg);
    return j;
}

GroundTruth truth_from_json(const nlohmann::json& j) {
    try {
        GroundTruth t;
        t.archetype_id = j.at("archetype_id").get<int>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.fatigue = j.at("fatigue").get<std::vector<double>>();
        t.regime = j.at("regime").get<std::vector<int>>();
        if (!j.at("drift_onset_s").is_null()) t.drift_onset_s = j.at("drift_onset_s").get<double>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("truth.json: ") + e.what());
    }
}

namespace {
constexpr const char* kManifestHeader = "session_id,subject_id,archetype_id,seed,n_trials,duration_s,drift_onset_s";
}

std::string manifest_to_csv(const std::vector<ManifestRow>& rows, const std::string& comment) {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    out += kManifestHeader;
    out += "\n";
    for (const auto& r : rows) {
        out += r.entry.session_id + "," + r.entry.subject_id + "," + std::to_string(r.entry.archetype_id) + "," +
               std::to_string(r.entry.seed) + "," + std::to_string(r.n_trials) + "," + format_double(r.duration_s) +
               ",";
        if (r.drift_onset_s) out += format_double(*r.drift_onset_s);
        out += "\n";
    }
    return out;
}

std::vector<ManifestRow> manifest_from_csv(const std::string& text) {
    std::vector<ManifestRow> rows;
    bool header = false;
    for (const auto& raw : split(text, '\n')) {
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != kManifestHeader) throw ParseError("manifest.csv: unexpected header");
            header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 7) throw ParseError("manifest.csv: expected 7 fields per row");
        ManifestRow r;
        r.entry.session_id = f[0];
        r.entry.subject_id = f[1];
        r.entry.archetype_id = static_cast<int>(parse_double(f[2], "manifest archetype_id"));
        try {
            r.entry.seed = std::stoull(f[3]);
        } catch (const std::exception&) {
            throw ParseError("manifest.csv: bad seed '" + f[3] + "'");
        }
        r.n_trials = static_cast<std::size_t>(parse_double(f[4], "manifest n_trials"));
        r.duration_s = parse_double(f[5], "manifest duration_s");
        if (!f[6].empty()) r.drift_onset_s = parse_double(f[6], "manifest drift_onset_s");
        rows.push_back(std::move(r));
    }
    if (!header) throw ParseError("manifest.csv: missing header");
    return rows;
}

std::vector<ManifestRow> generate_corpus(const std::array<std::size_t, 3>& per_archetype, const GeneratorConfig& cfg,
                                         const std::filesystem::path& out, const std::string& config_hash) {
    cfg.validate();
    for (std::size_t n : per_archetype) {
        if (n < 2) throw ValidationError("generate_corpus: at least 2 sessions per archetype are required");
    }
    std::filesystem::create_directories(out);
    std::vector<ManifestRow> rows;
    for (const auto& entry : corpus_plan(per_archetype, cfg)) {
        const auto g = generate_entry(entry, cfg);
        const nlohmann::json provenance = {{"generator_seed", cfg.seed},
                                           {"session_seed", entry.seed},
                                           {"archetype_id", entry.archetype_id},
                                           {"config_hash", config_hash}};
        const auto dir = out / entry.session_id;
        signal::write_session_dir(dir, g.session, provenance);
        auto truth = truth_to_json(g.truth, cfg);
        truth["config_hash"] = config_hash;
        write_file_atomic(dir / "truth.json", truth.dump(1) + "\n");
        ManifestRow row;
        row.entry = entry;
        row.n_trials = g.session.events.size();
        row.duration_s = g.session.duration_s();
        row.drift_onset_s = g.truth.drift_onset_s;
        rows.push_back(std::move(row));
    }
    write_file_atomic(out / "manifest.csv",
                      manifest_to_csv(rows, config_hash.empty() ? std::string{} : "config_hash=" + config_hash));
    return rows;
}

}  // namespace dwe::synthgen
