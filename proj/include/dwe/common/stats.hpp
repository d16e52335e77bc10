#pragma once

#include <span>
#include <vector>

#include "dwe/common/matrix.hpp"

namespace dwe {

/// Root mean squared error. Rejects empty or mismatched inputs.
double rmse(std::span<const double> pred, std::span<const double> rec);

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);

double median(std::vector<double> xs);

double pearson(std::span<const double> a, std::span<const double> b);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(std::span<const double> xs);

/// Per-feature z-scoring. Zero-variance features get unit scale so they map to 0.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& data);

    std::size_t dim() const noexcept { return mean.size(); }
    std::vector<double> transform(std::span<const double> x) const;
    void transform_into(std::span<const double> x, std::span<double> out) const;
    Matrix transform(const Matrix& data) const;

    bool operator==(const Standardizer&) const = default;
};

}  // namespace dwe
