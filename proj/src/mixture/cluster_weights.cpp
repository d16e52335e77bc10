#include "dwe/mixture/cluster_weights.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dwe/common/error.hpp"
#include "dwe/common/log.hpp"
#include "dwe/common/random.hpp"

namespace dwe::mixture {

ClusterWeightModel fit_cluster_weight_model(const std::vector<Matrix>& per_cluster, const WeightModelConfig& cfg,
                                            std::uint64_t seed) {
    if (per_cluster.empty()) throw ValidationError("weight model: no clusters");
    if (cfg.m == 0) throw ValidationError("weight model: m must be at least 1");
    Matrix pooled;
    for (std::size_t i = 0; i < per_cluster.size(); ++i) {
        if (per_cluster[i].empty()) {
            throw ValidationError("weight model: cluster " + std::to_string(i + 1) + " has no training frames");
        }
        for (std::size_t r = 0; r < per_cluster[i].rows(); ++r) pooled.append_row(per_cluster[i].row(r));
    }
    ClusterWeightModel model;
    model.scaler = Standardizer::fit(pooled);
    double total = 0.0;
    for (std::size_t i = 0; i < per_cluster.size(); ++i) {
        const Matrix z = model.scaler.transform(per_cluster[i]);
        std::size_t m = cfg.m;
        if (z.rows() < m) {
            m = std::max<std::size_t>(1, z.rows() / 5);
            log_warning("weight model: cluster " + std::to_string(i + 1) + " has " + std::to_string(z.rows()) +
                        " frames; using " + std::to_string(m) + " components instead of " + std::to_string(cfg.m));
        }
        model.gmms.push_back(fit_em(z, m, derive_seed(seed, i), cfg.em));
        const double p = cfg.priors == PriorMode::kEqual ? 1.0 : static_cast<double>(z.rows());
        model.priors.push_back(p);
        total += p;
    }
    for (double& p : model.priors) p /= total;
    return model;
}

std::vector<double> cluster_weights(const ClusterWeightModel& model, std::span<const double> y,
                                    WeightDiagnostics* diag) {
    if (y.size() != model.scaler.dim()) {
        throw ValidationError("cluster_weights: expected " + std::to_string(model.scaler.dim()) + " features, got " +
                              std::to_string(y.size()));
    }
    const auto z = model.scaler.transform(y);
    const std::size_t k = model.k();
    std::vector<double> a(k);
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        a[i] = std::log(model.priors[i]) + log_density(model.gmms[i], z);
        if (std::isfinite(a[i])) hi = std::max(hi, a[i]);
    }
    if (diag) diag->fell_back_to_priors = false;
    if (!std::isfinite(hi)) {
        if (diag) diag->fell_back_to_priors = true;
        return model.priors;
    }
    std::vector<double> w(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        w[i] = std::isfinite(a[i]) ? std::exp(a[i] - hi) : 0.0;
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

std::size_t argmax_weight(std::span<const double> w) {
    if (w.empty()) throw ValidationError("argmax_weight: empty weights");
    std::size_t best = 0;
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (w[i] > w[best]) best = i;
    }
    return best;
}

std::size_t map_classify(const ClusterWeightModel& model, std::span<const double> y) {
    return argmax_weight(cluster_weights(model, y));
}

nlohmann::json to_json(const ClusterWeightModel& model) {
    nlohmann::json j;
    j["priors"] = model.priors;
    j["scaler"] = {{"mean", model.scaler.mean}, {"scale", model.scaler.scale}};
    j["gmms"] = nlohmann::json::array();
    for (const auto& g : model.gmms) j["gmms"].push_back(to_json(g));
    return j;
}

ClusterWeightModel cluster_weight_model_from_json(const nlohmann::json& j) {
    try {
        ClusterWeightModel model;
        model.priors = j.at("priors").get<std::vector<double>>();
        model.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
        model.scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
        for (const auto& g : j.at("gmms")) model.gmms.push_back(gmm_from_json(g));
        if (model.gmms.size() != model.priors.size() || model.gmms.empty()) {
            throw ParseError("weight model: prior count does not match mixture count");
        }
        if (model.scaler.mean.size() != model.scaler.scale.size()) throw ParseError("weight model: scaler size mismatch");
        for (const auto& g : model.gmms) {
            if (g.dim != model.scaler.dim()) throw ParseError("weight model: mixture dimension mismatch");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("weight model: ") + e.what());
    }
}

}  // namespace dwe::mixture
