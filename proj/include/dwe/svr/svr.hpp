#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "dwe/common/matrix.hpp"
#include "dwe/common/stats.hpp"

namespace dwe::svr {

struct TrainConfig {
    double C = 1.0;
    /// Tube half-width in seconds; divided by the target scale before optimization.
    double epsilon = 0.1;
    /// RBF width in standardized feature space; unset means 1 / d.
    std::optional<double> gamma;
    /// Stop when the maximal KKT violation falls below this (standardized units).
    double kkt_tol = 1e-6;
    /// Hard cap on SMO pair updates.
    std::int64_t max_passes = 1'000'000;
    int cv_folds = 5;
    std::uint64_t seed = 0;
    /// Record the dual objective after every update (tests only; O(n) per update).
    bool record_objective = false;
};

struct TrainDiagnostics {
    std::int64_t updates = 0;
    double max_violation = 0.0;
    /// Minimized form 0.5 a'Qa + p'a after each update, when requested.
    std::vector<double> objective;
};

/// RBF epsilon-SVR in standardized coordinates. Predictions are in seconds.
struct SvrModel {
    Matrix support_vectors;  ///< standardized features
    std::vector<double> dual_coeffs;  ///< beta = alpha - alpha*, standardized-target units
    double bias = 0.0;
    double gamma = 1.0;
    double C = 1.0;
    double epsilon = 0.1;  ///< seconds
    Standardizer scaler;
    double target_mean = 0.0;
    double target_scale = 1.0;
    TrainDiagnostics diagnostics;

    std::size_t dim() const noexcept { return scaler.dim(); }
    bool operator==(const SvrModel& o) const {
        return support_vectors == o.support_vectors && dual_coeffs == o.dual_coeffs && bias == o.bias &&
               gamma == o.gamma && C == o.C && epsilon == o.epsilon && scaler == o.scaler &&
               target_mean == o.target_mean && target_scale == o.target_scale;
    }
};

/// Trains on rows of X against rt. Rejects empty or non-finite input and non-positive RTs.
SvrModel train(const Matrix& X, std::span<const double> rt, const TrainConfig& cfg = {});

double predict(const SvrModel& model, std::span<const double> x);
std::vector<double> predict(const SvrModel& model, const Matrix& X);

/// Decision value before de-standardization, for KKT checks.
double decision_value(const SvrModel& model, std::span<const double> x_standardized);

struct GridConfig {
    std::vector<double> C = {0.1, 1.0, 10.0, 100.0};
    std::vector<double> epsilon = {0.01, 0.05, 0.1, 0.2};
    /// Multiples of 1 / d.
    std::vector<double> gamma_scale = {0.1, 1.0, 10.0};
    /// Rows beyond this are subsampled (seeded) before the search; 0 keeps all.
    std::size_t max_points = 500;
};

struct GridPoint {
    double C = 0.0;
    double epsilon = 0.0;
    double gamma = 0.0;
    double cv_rmse = 0.0;
};

struct GridResult {
    TrainConfig best;
    double best_rmse = 0.0;
    std::vector<GridPoint> points;  ///< in search order
};

/// k-fold cross-validated RMSE over the grid; argmin with ties to smaller C, then larger
/// epsilon, then smaller gamma. Folds and subsample come from base.seed.
/// When `groups` is given (one id per row), folds are formed from whole groups (group of first
/// appearance r goes to fold r % folds, with folds capped at the group count) so rows of one
/// session never sit on both sides of a split.
GridResult grid_search(const Matrix& X, std::span<const double> rt, const GridConfig& grid, const TrainConfig& base = {},
                       std::span<const std::size_t> groups = {});

nlohmann::json to_json(const SvrModel& model);
SvrModel svr_from_json(const nlohmann::json& j);

}  // namespace dwe::svr
