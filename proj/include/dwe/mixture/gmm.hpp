#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "dwe/common/matrix.hpp"

namespace dwe::mixture {

enum class CovarianceType { kDiagonal, kFull };

struct GaussianComponent {
    double weight = 1.0;
    std::vector<double> mean;
    /// Diagonal mode: per-feature variances. Full mode: the diagonal of `covariance`.
    std::vector<double> variances;
    /// Full mode only: d x d covariance.
    Matrix covariance;

    bool operator==(const GaussianComponent&) const = default;
};

struct FitDiagnostics {
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Total log-likelihood after each E-step of the kept restart.
    std::vector<double> trace;
    /// Iterations (indices into `trace`) at which an empty component was re-seeded.
    std::vector<int> reseed_iterations;

    bool operator==(const FitDiagnostics&) const = default;
};

struct GmmModel {
    std::vector<GaussianComponent> components;
    std::size_t dim = 0;
    CovarianceType covariance = CovarianceType::kDiagonal;
    FitDiagnostics diagnostics;

    std::size_t size() const noexcept { return components.size(); }
    bool operator==(const GmmModel&) const = default;
};

struct EmConfig {
    int max_iter = 500;
    double rel_tol = 1e-7;
    double variance_floor = 1e-6;
    int restarts = 3;
    CovarianceType covariance = CovarianceType::kDiagonal;
};

/// EM fit of an m-component mixture from k-means++ seeding; the restart with the best final
/// log-likelihood is kept. Deterministic given `seed`.
GmmModel fit_em(const Matrix& data, std::size_t m, std::uint64_t seed, const EmConfig& cfg = {});

/// log sum_l w_l N(y; mu_l, Sigma_l), evaluated with log-sum-exp.
double log_density(const GmmModel& model, std::span<const double> y);

/// Per-component log(w_l N(y; mu_l, Sigma_l)).
std::vector<double> component_log_joint(const GmmModel& model, std::span<const double> y);

/// E-step responsibilities of every row of `data` (n x m).
Matrix responsibilities(const GmmModel& model, const Matrix& data);

/// Total log-likelihood of `data`.
double total_log_likelihood(const GmmModel& model, const Matrix& data);

double log_sum_exp(std::span<const double> values);

nlohmann::json to_json(const GmmModel& model);
GmmModel gmm_from_json(const nlohmann::json& j);

}  // namespace dwe::mixture
