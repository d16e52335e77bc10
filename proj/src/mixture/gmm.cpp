#include "dwe/mixture/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dwe/common/error.hpp"
#include "dwe/common/log.hpp"
#include "dwe/common/random.hpp"

namespace dwe::mixture {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)
constexpr double kEmptyMass = 1e-10;

void check_finite(std::span<const double> y, const char* what) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i])) throw ValidationError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
}

/// Per-component quantities reused across all rows of one E-step.
struct ComponentCache {
    double log_weight = 0.0;
    double log_norm = 0.0;  // -0.5 * (d log 2pi + log det)
    std::vector<double> inv_var;
    Eigen::MatrixXd chol_l;  // full mode: lower Cholesky factor
};

std::vector<ComponentCache> build_cache(const GmmModel& model) {
    std::vector<ComponentCache> cache(model.size());
    const auto d = static_cast<double>(model.dim);
    for (std::size_t l = 0; l < model.size(); ++l) {
        const auto& c = model.components[l];
        auto& cc = cache[l];
        cc.log_weight = c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity();
        if (model.covariance == CovarianceType::kDiagonal) {
            double log_det = 0.0;
            cc.inv_var.resize(model.dim);
            for (std::size_t j = 0; j < model.dim; ++j) {
                cc.inv_var[j] = 1.0 / c.variances[j];
                log_det += std::log(c.variances[j]);
            }
            cc.log_norm = -0.5 * (d * kLog2Pi + log_det);
        } else {
            Eigen::MatrixXd cov(model.dim, model.dim);
            for (std::size_t r = 0; r < model.dim; ++r) {
                for (std::size_t s = 0; s < model.dim; ++s) cov(r, s) = c.covariance(r, s);
            }
            Eigen::LLT<Eigen::MatrixXd> llt(cov);
            if (llt.info() != Eigen::Success) throw NumericError("gmm: covariance is not positive definite");
            cc.chol_l = llt.matrixL();
            double log_det = 0.0;
            for (std::size_t j = 0; j < model.dim; ++j) log_det += 2.0 * std::log(cc.chol_l(j, j));
            cc.log_norm = -0.5 * (d * kLog2Pi + log_det);
        }
    }
    return cache;
}

double component_log_pdf(const GmmModel& model, const ComponentCache& cc, std::size_t l,
                         std::span<const double> y) {
    const auto& mean = model.components[l].mean;
    double maha = 0.0;
    if (model.covariance == CovarianceType::kDiagonal) {
        for (std::size_t j = 0; j < model.dim; ++j) {
            const double diff = y[j] - mean[j];
            maha += diff * diff * cc.inv_var[j];
        }
    } else {
        Eigen::VectorXd diff(model.dim);
        for (std::size_t j = 0; j < model.dim; ++j) diff(j) = y[j] - mean[j];
        cc.chol_l.triangularView<Eigen::Lower>().solveInPlace(diff);
        maha = diff.squaredNorm();
    }
    return cc.log_norm - 0.5 * maha;
}

void log_joint_into(const GmmModel& model, const std::vector<ComponentCache>& cache, std::span<const double> y,
                    std::span<double> out) {
    for (std::size_t l = 0; l < model.size(); ++l) out[l] = cache[l].log_weight + component_log_pdf(model, cache[l], l, y);
}

std::vector<double> column_means(const Matrix& data) {
    std::vector<double> mu(data.cols(), 0.0);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < data.cols(); ++j) mu[j] += data(i, j);
    }
    for (double& v : mu) v /= static_cast<double>(data.rows());
    return mu;
}

Matrix pooled_covariance(const Matrix& data, double floor) {
    const auto mu = column_means(data);
    const std::size_t d = data.cols();
    Matrix cov(d, d, 0.0);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t r = 0; r < d; ++r) {
            const double dr = data(i, r) - mu[r];
            for (std::size_t s = 0; s <= r; ++s) cov(r, s) += dr * (data(i, s) - mu[s]);
        }
    }
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t s = 0; s <= r; ++s) {
            cov(r, s) /= static_cast<double>(data.rows());
            cov(s, r) = cov(r, s);
        }
        cov(r, r) = std::max(cov(r, r), floor);
    }
    return cov;
}

/// k-means++ seeding: first centre uniform, then proportional to squared distance.
std::vector<std::size_t> kmeanspp(const Matrix& data, std::size_t m, Rng& rng) {
    const std::size_t n = data.rows();
    std::vector<std::size_t> centers;
    centers.push_back(static_cast<std::size_t>(rng.below(n)));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < m) {
        const auto last = data.row(centers.back());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            const auto x = data.row(i);
            for (std::size_t j = 0; j < data.cols(); ++j) s += (x[j] - last[j]) * (x[j] - last[j]);
            d2[i] = std::min(d2[i], s);
            total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                for (std::size_t i = n; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // every point coincides with a centre; pick any unused index
            pick = static_cast<std::size_t>(rng.below(n));
        }
        centers.push_back(pick);
    }
    return centers;
}

GmmModel initial_model(const Matrix& data, std::size_t m, const EmConfig& cfg, Rng& rng) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    GmmModel model;
    model.dim = d;
    model.covariance = cfg.covariance;
    const auto centers = kmeanspp(data, m, rng);
    // hard assignment to the nearest centre, ties to the lower index
    std::vector<std::size_t> owner(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < m; ++l) {
            const auto c = data.row(centers[l]);
            const auto x = data.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += (x[j] - c[j]) * (x[j] - c[j]);
            if (s < best) {
                best = s;
                owner[i] = l;
            }
        }
    }
    const Matrix pooled = pooled_covariance(data, cfg.variance_floor);
    for (std::size_t l = 0; l < m; ++l) {
        Matrix members;
        for (std::size_t i = 0; i < n; ++i) {
            if (owner[i] == l) members.append_row(data.row(i));
        }
        GaussianComponent c;
        c.variances.resize(d);
        if (members.empty()) {
            // duplicate centre: keep it on the point with the pooled spread
            const auto x = data.row(centers[l]);
            c.mean.assign(x.begin(), x.end());
            c.weight = 1.0 / static_cast<double>(n);
            for (std::size_t j = 0; j < d; ++j) c.variances[j] = pooled(j, j);
            if (cfg.covariance == CovarianceType::kFull) c.covariance = pooled;
        } else {
            c.mean = column_means(members);
            c.weight = static_cast<double>(members.rows()) / static_cast<double>(n);
            Matrix cov = pooled_covariance(members, 0.0);
            for (std::size_t j = 0; j < d; ++j) {
                if (cfg.covariance == CovarianceType::kFull) {
                    cov(j, j) += cfg.variance_floor;
                } else {
                    cov(j, j) = std::max(cov(j, j), cfg.variance_floor);
                }
                c.variances[j] = cov(j, j);
            }
            if (cfg.covariance == CovarianceType::kFull) c.covariance = std::move(cov);
        }
        model.components.push_back(std::move(c));
    }
    double wsum = 0.0;
    for (const auto& c : model.components) wsum += c.weight;
    for (auto& c : model.components) c.weight /= wsum;
    return model;
}

GmmModel run_em(const Matrix& data, std::size_t m, const EmConfig& cfg, Rng& rng) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    GmmModel model = initial_model(data, m, cfg, rng);
    Matrix resp(n, m);
    std::vector<double> point_ll(n);
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0;; ++it) {
        // E-step
        const auto cache = build_cache(model);
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto r = resp.row(i);
            log_joint_into(model, cache, data.row(i), r);
            const double lse = log_sum_exp(r);
            for (double& v : r) v = std::exp(v - lse);
            point_ll[i] = lse;
            ll += lse;
        }
        if (!std::isfinite(ll)) throw NumericError("gmm: log-likelihood is not finite");
        model.diagnostics.trace.push_back(ll);
        model.diagnostics.log_likelihood = ll;
        if (it > 0 && ll - prev <= cfg.rel_tol * std::abs(prev)) {
            model.diagnostics.converged = true;
            break;
        }
        if (it == cfg.max_iter) break;
        prev = ll;

        // M-step
        std::vector<char> used(n, 0);
        for (std::size_t l = 0; l < m; ++l) {
            auto& c = model.components[l];
            double mass = 0.0;
            for (std::size_t i = 0; i < n; ++i) mass += resp(i, l);
            if (mass < kEmptyMass) {
                // re-seed from the worst-fit point not already used this step
                std::size_t worst = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (!used[i] && (worst == n || point_ll[i] < point_ll[worst])) worst = i;
                }
                if (worst == n) worst = 0;
                used[worst] = 1;
                const auto x = data.row(worst);
                c.mean.assign(x.begin(), x.end());
                const Matrix cov = pooled_covariance(data, cfg.variance_floor);
                for (std::size_t j = 0; j < d; ++j) c.variances[j] = cov(j, j);
                if (cfg.covariance == CovarianceType::kFull) c.covariance = cov;
                c.weight = 1.0 / static_cast<double>(n);
                model.diagnostics.reseed_iterations.push_back(it + 1);
                log_info("gmm: re-seeded empty component " + std::to_string(l) + " at iteration " +
                         std::to_string(it + 1));
                continue;
            }
            c.weight = mass / static_cast<double>(n);
            std::fill(c.mean.begin(), c.mean.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double r = resp(i, l);
                const auto x = data.row(i);
                for (std::size_t j = 0; j < d; ++j) c.mean[j] += r * x[j];
            }
            for (double& v : c.mean) v /= mass;
            if (cfg.covariance == CovarianceType::kDiagonal) {
                std::fill(c.variances.begin(), c.variances.end(), 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = resp(i, l);
                    const auto x = data.row(i);
                    for (std::size_t j = 0; j < d; ++j) {
                        const double diff = x[j] - c.mean[j];
                        c.variances[j] += r * diff * diff;
                    }
                }
                for (double& v : c.variances) v = std::max(v / mass, cfg.variance_floor);
            } else {
                Matrix cov(d, d, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = resp(i, l);
                    const auto x = data.row(i);
                    for (std::size_t a = 0; a < d; ++a) {
                        const double da = x[a] - c.mean[a];
                        for (std::size_t b = 0; b <= a; ++b) cov(a, b) += r * da * (x[b] - c.mean[b]);
                    }
                }
                for (std::size_t a = 0; a < d; ++a) {
                    for (std::size_t b = 0; b <= a; ++b) {
                        cov(a, b) /= mass;
                        cov(b, a) = cov(a, b);
                    }
                    cov(a, a) += cfg.variance_floor;
                    c.variances[a] = cov(a, a);
                }
                c.covariance = std::move(cov);
            }
        }
        double wsum = 0.0;
        for (const auto& c : model.components) wsum += c.weight;
        for (auto& c : model.components) c.weight /= wsum;
        model.diagnostics.iterations = it + 1;
    }
    return model;
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : values) hi = std::max(hi, v);
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double v : values) s += std::exp(v - hi);
    return hi + std::log(s);
}

GmmModel fit_em(const Matrix& data, std::size_t m, std::uint64_t seed, const EmConfig& cfg) {
    if (m == 0) throw ValidationError("fit_em: m must be at least 1");
    if (data.cols() == 0) throw ValidationError("fit_em: feature dimension must be at least 1");
    if (data.rows() < m) {
        throw ValidationError("fit_em: " + std::to_string(data.rows()) + " rows cannot support " + std::to_string(m) +
                              " components");
    }
    if (!(cfg.variance_floor > 0.0)) throw ValidationError("fit_em: variance floor must be positive");
    if (cfg.max_iter < 0 || cfg.restarts < 1) throw ValidationError("fit_em: invalid iteration settings");
    check_finite(data.data(), "fit_em data");
    GmmModel best;
    bool have = false;
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        GmmModel candidate = run_em(data, m, cfg, rng);
        if (!have || candidate.diagnostics.log_likelihood > best.diagnostics.log_likelihood) {
            best = std::move(candidate);
            have = true;
        }
    }
    return best;
}

std::vector<double> component_log_joint(const GmmModel& model, std::span<const double> y) {
    if (y.size() != model.dim) {
        throw ValidationError("gmm: expected " + std::to_string(model.dim) + " features, got " + std::to_string(y.size()));
    }
    check_finite(y, "gmm input");
    const auto cache = build_cache(model);
    std::vector<double> out(model.size());
    log_joint_into(model, cache, y, out);
    return out;
}

double log_density(const GmmModel& model, std::span<const double> y) {
    const auto joint = component_log_joint(model, y);
    return log_sum_exp(joint);
}

Matrix responsibilities(const GmmModel& model, const Matrix& data) {
    if (data.cols() != model.dim) throw ValidationError("gmm: data dimension mismatch");
    const auto cache = build_cache(model);
    Matrix resp(data.rows(), model.size());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        auto r = resp.row(i);
        log_joint_into(model, cache, data.row(i), r);
        const double lse = log_sum_exp(r);
        for (double& v : r) v = std::exp(v - lse);
    }
    return resp;
}

double total_log_likelihood(const GmmModel& model, const Matrix& data) {
    if (data.cols() != model.dim) throw ValidationError("gmm: data dimension mismatch");
    const auto cache = build_cache(model);
    std::vector<double> buf(model.size());
    double ll = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        log_joint_into(model, cache, data.row(i), buf);
        ll += log_sum_exp(buf);
    }
    return ll;
}

nlohmann::json to_json(const GmmModel& model) {
    nlohmann::json j;
    j["dim"] = model.dim;
    j["covariance"] = model.covariance == CovarianceType::kDiagonal ? "diagonal" : "full";
    j["components"] = nlohmann::json::array();
    for (const auto& c : model.components) {
        nlohmann::json jc;
        jc["weight"] = c.weight;
        jc["mean"] = c.mean;
        jc["variances"] = c.variances;
        if (model.covariance == CovarianceType::kFull) jc["covariance"] = c.covariance.data();
        j["components"].push_back(std::move(jc));
    }
    const auto& dg = model.diagnostics;
    j["diagnostics"] = {{"log_likelihood", dg.log_likelihood},
                        {"iterations", dg.iterations},
                        {"converged", dg.converged},
                        {"trace", dg.trace},
                        {"reseed_iterations", dg.reseed_iterations}};
    return j;
}

GmmModel gmm_from_json(const nlohmann::json& j) {
    try {
        GmmModel model;
        model.dim = j.at("dim").get<std::size_t>();
        const auto cov = j.at("covariance").get<std::string>();
        if (cov == "diagonal") {
            model.covariance = CovarianceType::kDiagonal;
        } else if (cov == "full") {
            model.covariance = CovarianceType::kFull;
        } else {
            throw ParseError("gmm: unknown covariance type '" + cov + "'");
        }
        for (const auto& jc : j.at("components")) {
            GaussianComponent c;
            c.weight = jc.at("weight").get<double>();
            c.mean = jc.at("mean").get<std::vector<double>>();
            c.variances = jc.at("variances").get<std::vector<double>>();
            if (c.mean.size() != model.dim || c.variances.size() != model.dim) {
                throw ParseError("gmm: component dimension mismatch");
            }
            if (model.covariance == CovarianceType::kFull) {
                const auto flat = jc.at("covariance").get<std::vector<double>>();
                if (flat.size() != model.dim * model.dim) throw ParseError("gmm: covariance size mismatch");
                c.covariance = Matrix(model.dim, model.dim);
                std::copy(flat.begin(), flat.end(), c.covariance.data().begin());
            }
            model.components.push_back(std::move(c));
        }
        const auto& dg = j.at("diagnostics");
        model.diagnostics.log_likelihood = dg.at("log_likelihood").get<double>();
        model.diagnostics.iterations = dg.at("iterations").get<int>();
        model.diagnostics.converged = dg.at("converged").get<bool>();
        model.diagnostics.trace = dg.at("trace").get<std::vector<double>>();
        model.diagnostics.reseed_iterations = dg.at("reseed_iterations").get<std::vector<int>>();
        if (model.components.empty()) throw ParseError("gmm: no components");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("gmm: ") + e.what());
    }
}

}  // namespace dwe::mixture
