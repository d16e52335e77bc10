#include "dwe/svr/svr.hpp"

#include <algorithm>
#include <map>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dwe/common/error.hpp"
#include "dwe/common/random.hpp"

namespace dwe::svr {

namespace {

constexpr double kTau = 1e-12;

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return std::exp(-gamma * s);
}

Matrix kernel_matrix(const Matrix& Z, double gamma) {
    const std::size_t n = Z.rows();
    Matrix K(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        K(i, i) = 1.0;
        for (std::size_t j = 0; j < i; ++j) {
            const double v = rbf(Z.row(i), Z.row(j), gamma);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

struct DualSolution {
    std::vector<double> beta;
    double bias = 0.0;
    TrainDiagnostics diagnostics;
};

/// SMO over the 2n-variable epsilon-SVR dual
///   min 0.5 a'Qa + p'a  s.t. y'a = 0, 0 <= a <= C,
/// with a = (alpha, alpha*), y = (+1.., -1..), p = (eps - z, eps + z), Q_st = y_s y_t K.
DualSolution solve_dual(const Matrix& K, std::span<const double> z, double C, double eps, double tol,
                        std::int64_t max_updates, bool record) {
    const std::size_t n = z.size();
    const std::size_t l = 2 * n;
    std::vector<double> alpha(l, 0.0);
    std::vector<double> p(l);
    std::vector<double> G(l);
    for (std::size_t s = 0; s < n; ++s) {
        p[s] = eps - z[s];
        p[s + n] = eps + z[s];
    }
    G = p;
    auto yv = [n](std::size_t t) { return t < n ? 1.0 : -1.0; };
    auto objective = [&]() {
        double o = 0.0;
        for (std::size_t t = 0; t < l; ++t) o += alpha[t] * (G[t] + p[t]);
        return 0.5 * o;
    };

    DualSolution out;
    std::int64_t updates = 0;
    double gap = 0.0;
    for (;;) {
        // maximal violating pair
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = l;
        std::size_t j = l;
        for (std::size_t t = 0; t < l; ++t) {
            const double y = yv(t);
            const double v = -y * G[t];
            const bool up = (y > 0 && alpha[t] < C) || (y < 0 && alpha[t] > 0.0);
            const bool low = (y > 0 && alpha[t] > 0.0) || (y < 0 && alpha[t] < C);
            if (up && v > gmax) {
                gmax = v;
                i = t;
            }
            if (low && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        gap = (i == l || j == l) ? 0.0 : gmax - gmin;
        if (gap < tol) break;
        if (updates >= max_updates) {
            throw NumericError("svr: SMO did not converge within " + std::to_string(max_updates) +
                               " pair updates (violation " + std::to_string(gap) + ")");
        }

        const double yi = yv(i);
        const double yj = yv(j);
        const std::size_t ii = i % n;
        const std::size_t jj = j % n;
        const double kij = K(ii, jj);
        const double qij = yi * yj * kij;
        const double qd_i = K(ii, ii);
        const double qd_j = K(jj, jj);
        const double old_ai = alpha[i];
        const double old_aj = alpha[j];
        if (yi != yj) {
            double quad = qd_i + qd_j + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = qd_i + qd_j - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        const double di = (alpha[i] - old_ai) * yi;
        const double dj = (alpha[j] - old_aj) * yj;
        for (std::size_t s = 0; s < n; ++s) {
            const double u = di * K(ii, s) + dj * K(jj, s);
            G[s] += u;
            G[s + n] -= u;
        }
        ++updates;
        if (record) out.diagnostics.objective.push_back(objective());
    }

    // bias from free variables, else the midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < l; ++t) {
        const double y = yv(t);
        const double yg = y * G[t];
        if (alpha[t] >= C) {
            if (y < 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else if (alpha[t] <= 0.0) {
            if (y > 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    out.bias = -rho;
    out.beta.resize(n);
    for (std::size_t s = 0; s < n; ++s) out.beta[s] = alpha[s] - alpha[s + n];
    out.diagnostics.updates = updates;
    out.diagnostics.max_violation = gap;
    return out;
}

void check_inputs(const Matrix& X, std::span<const double> rt) {
    if (X.rows() == 0) throw ValidationError("svr: no training rows");
    if (X.cols() == 0) throw ValidationError("svr: no features");
    if (rt.size() != X.rows()) {
        throw ValidationError("svr: " + std::to_string(X.rows()) + " rows but " + std::to_string(rt.size()) + " targets");
    }
    for (std::size_t i = 0; i < X.rows(); ++i) {
        for (std::size_t j = 0; j < X.cols(); ++j) {
            if (!std::isfinite(X(i, j))) {
                throw ValidationError("svr: non-finite feature at row " + std::to_string(i) + ", column " +
                                      std::to_string(j));
            }
        }
        if (!std::isfinite(rt[i]) || !(rt[i] > 0.0)) {
            throw ValidationError("svr: target " + std::to_string(i) + " must be finite and positive");
        }
    }
}

void check_config(const TrainConfig& cfg) {
    if (!(cfg.C > 0.0) || !(cfg.epsilon > 0.0) || !(cfg.kkt_tol > 0.0) || cfg.max_passes <= 0) {
        throw ValidationError("svr: C, epsilon, kkt_tol and max_passes must be positive");
    }
    if (cfg.gamma && !(*cfg.gamma > 0.0)) throw ValidationError("svr: gamma must be positive");
    if (cfg.cv_folds < 2) throw ValidationError("svr: cv_folds must be at least 2");
}

struct TargetScale {
    double mean = 0.0;
    double scale = 1.0;
};

TargetScale target_scale(std::span<const double> rt) {
    TargetScale ts;
    ts.mean = mean(rt);
    const double sd = stddev(rt);
    ts.scale = sd > 0.0 ? sd : 1.0;
    return ts;
}

DualSolution fit_kernel(const Matrix& K, std::span<const double> rt, const TargetScale& ts, const TrainConfig& cfg) {
    std::vector<double> z(rt.size());
    for (std::size_t i = 0; i < rt.size(); ++i) z[i] = (rt[i] - ts.mean) / ts.scale;
    return solve_dual(K, z, cfg.C, cfg.epsilon / ts.scale, cfg.kkt_tol, cfg.max_passes, cfg.record_objective);
}

}  // namespace

SvrModel train(const Matrix& X, std::span<const double> rt, const TrainConfig& cfg) {
    check_config(cfg);
    check_inputs(X, rt);
    SvrModel model;
    model.scaler = Standardizer::fit(X);
    const Matrix Z = model.scaler.transform(X);
    model.gamma = cfg.gamma.value_or(1.0 / static_cast<double>(X.cols()));
    model.C = cfg.C;
    model.epsilon = cfg.epsilon;
    const TargetScale ts = target_scale(rt);
    model.target_mean = ts.mean;
    model.target_scale = ts.scale;
    const Matrix K = kernel_matrix(Z, model.gamma);
    DualSolution sol = fit_kernel(K, rt, ts, cfg);
    model.bias = sol.bias;
    model.diagnostics = std::move(sol.diagnostics);
    for (std::size_t i = 0; i < Z.rows(); ++i) {
        if (sol.beta[i] != 0.0) {
            model.support_vectors.append_row(Z.row(i));
            model.dual_coeffs.push_back(sol.beta[i]);
        }
    }
    return model;
}

double decision_value(const SvrModel& model, std::span<const double> z) {
    double s = model.bias;
    for (std::size_t j = 0; j < model.dual_coeffs.size(); ++j) {
        s += model.dual_coeffs[j] * rbf(model.support_vectors.row(j), z, model.gamma);
    }
    return s;
}

double predict(const SvrModel& model, std::span<const double> x) {
    if (x.size() != model.dim()) {
        throw ValidationError("svr: expected " + std::to_string(model.dim()) + " features, got " + std::to_string(x.size()));
    }
    const auto z = model.scaler.transform(x);
    return model.target_mean + model.target_scale * decision_value(model, z);
}

std::vector<double> predict(const SvrModel& model, const Matrix& X) {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict(model, X.row(i));
    return out;
}

GridResult grid_search(const Matrix& X, std::span<const double> rt, const GridConfig& grid, const TrainConfig& base,
                       std::span<const std::size_t> groups) {
    check_config(base);
    check_inputs(X, rt);
    if (!groups.empty() && groups.size() != X.rows()) {
        throw ValidationError("grid_search: groups must have one entry per row");
    }
    if (grid.C.empty() || grid.epsilon.empty() || grid.gamma_scale.empty()) {
        throw ValidationError("grid_search: every grid must be non-empty");
    }
    Rng rng(base.seed);
    std::vector<std::size_t> order(X.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    if (grid.max_points > 0 && order.size() > grid.max_points) {
        order.resize(grid.max_points);
        std::sort(order.begin(), order.end());
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    const std::size_t n = order.size();
    auto folds = static_cast<std::size_t>(base.cv_folds);
    std::map<std::size_t, std::size_t> rank;
    for (std::size_t g : groups) rank.emplace(g, rank.size());
    if (!groups.empty()) {
        if (rank.size() < 2) throw ValidationError("grid_search: at least 2 groups are required");
        folds = std::min(folds, rank.size());
    }
    if (n < folds || n - (n + folds - 1) / folds < 1) {
        throw ValidationError("grid_search: " + std::to_string(n) + " rows are too few for " + std::to_string(folds) +
                              " folds");
    }
    const Matrix sample = X.select_rows(order);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = rt[order[i]];
    const Matrix Z = Standardizer::fit(sample).transform(sample);

    // fold f holds positions with i % folds == f, or the groups of rank r with r % folds == f
    std::vector<std::size_t> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[i] = i % folds;
    if (!groups.empty()) {
        for (std::size_t i = 0; i < n; ++i) fold_of[i] = rank.at(groups[order[i]]) % folds;
    }
    std::vector<std::vector<std::size_t>> train_idx(folds), test_idx(folds);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < folds; ++f) (fold_of[i] == f ? test_idx[f] : train_idx[f]).push_back(i);
    }
    for (std::size_t f = 0; f < folds; ++f) {
        if (train_idx[f].empty() || test_idx[f].empty()) {
            throw ValidationError("grid_search: fold " + std::to_string(f) + " is empty after subsampling");
        }
    }

    GridResult result;
    std::vector<double> sorted_C = grid.C;
    std::sort(sorted_C.begin(), sorted_C.end());
    std::vector<double> sorted_eps = grid.epsilon;
    std::sort(sorted_eps.begin(), sorted_eps.end(), std::greater<>());
    std::vector<double> sorted_gamma = grid.gamma_scale;
    std::sort(sorted_gamma.begin(), sorted_gamma.end());
    const double inv_d = 1.0 / static_cast<double>(X.cols());

    std::vector<Matrix> kernels;
    for (double gs : sorted_gamma) kernels.push_back(kernel_matrix(Z, gs * inv_d));

    bool have = false;
    for (double C : sorted_C) {
        for (double eps : sorted_eps) {
            for (std::size_t g = 0; g < sorted_gamma.size(); ++g) {
                TrainConfig cfg = base;
                cfg.C = C;
                cfg.epsilon = eps;
                cfg.gamma = sorted_gamma[g] * inv_d;
                cfg.record_objective = false;
                check_config(cfg);
                const Matrix& K = kernels[g];
                double sq = 0.0;
                for (std::size_t f = 0; f < folds; ++f) {
                    const auto& tr = train_idx[f];
                    Matrix Ksub(tr.size(), tr.size());
                    std::vector<double> ysub(tr.size());
                    for (std::size_t a = 0; a < tr.size(); ++a) {
                        ysub[a] = y[tr[a]];
                        for (std::size_t b = 0; b < tr.size(); ++b) Ksub(a, b) = K(tr[a], tr[b]);
                    }
                    const TargetScale ts = target_scale(ysub);
                    const DualSolution sol = fit_kernel(Ksub, ysub, ts, cfg);
                    for (std::size_t t : test_idx[f]) {
                        double s = sol.bias;
                        for (std::size_t a = 0; a < tr.size(); ++a) {
                            if (sol.beta[a] != 0.0) s += sol.beta[a] * K(t, tr[a]);
                        }
                        const double err = ts.mean + ts.scale * s - y[t];
                        sq += err * err;
                    }
                }
                const double cv = std::sqrt(sq / static_cast<double>(n));
                result.points.push_back({C, eps, *cfg.gamma, cv});
                if (!have || cv < result.best_rmse * (1.0 - 1e-12)) {
                    have = true;
                    result.best_rmse = cv;
                    result.best = cfg;
                }
            }
        }
    }
    return result;
}

nlohmann::json to_json(const SvrModel& m) {
    nlohmann::json j;
    j["C"] = m.C;
    j["epsilon"] = m.epsilon;
    j["gamma"] = m.gamma;
    j["bias"] = m.bias;
    j["target_mean"] = m.target_mean;
    j["target_scale"] = m.target_scale;
    j["scaler"] = {{"mean", m.scaler.mean}, {"scale", m.scaler.scale}};
    j["dual_coeffs"] = m.dual_coeffs;
    j["support_vectors"] = nlohmann::json::array();
    for (std::size_t r = 0; r < m.support_vectors.rows(); ++r) {
        const auto row = m.support_vectors.row(r);
        j["support_vectors"].push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["diagnostics"] = {{"updates", m.diagnostics.updates}, {"max_violation", m.diagnostics.max_violation}};
    return j;
}

SvrModel svr_from_json(const nlohmann::json& j) {
    try {
        SvrModel m;
        m.C = j.at("C").get<double>();
        m.epsilon = j.at("epsilon").get<double>();
        m.gamma = j.at("gamma").get<double>();
        m.bias = j.at("bias").get<double>();
        m.target_mean = j.at("target_mean").get<double>();
        m.target_scale = j.at("target_scale").get<double>();
        m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
        m.scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
        m.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
        for (const auto& row : j.at("support_vectors")) {
            const auto v = row.get<std::vector<double>>();
            if (v.size() != m.scaler.dim()) throw ParseError("svr: support vector dimension mismatch");
            m.support_vectors.append_row(v);
        }
        if (m.support_vectors.rows() != m.dual_coeffs.size()) throw ParseError("svr: coefficient count mismatch");
        if (m.scaler.mean.size() != m.scaler.scale.size() || m.scaler.dim() == 0) {
            throw ParseError("svr: scaler size mismatch");
        }
        if (j.contains("diagnostics")) {
            m.diagnostics.updates = j["diagnostics"].at("updates").get<std::int64_t>();
            m.diagnostics.max_violation = j["diagnostics"].at("max_violation").get<double>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("svr: ") + e.what());
    }
}

}  // namespace dwe::svr
