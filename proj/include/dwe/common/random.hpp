#pragma once

#include <cstdint>
#include <random>

namespace dwe {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Sub-seed for stream `index` of `master`; independent of generation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Seeded generator. The transforms are written out here rather than taken from
/// <random> distributions so draws do not depend on the standard library build.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    double normal();
    double normal(double mu, double sigma) { return mu + sigma * normal(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dwe
