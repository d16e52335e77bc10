#include "dwe/signal/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace dwe::signal {

namespace {

// FFTW planning is not thread-safe; executing an existing plan on new arrays is.
// Plans are made with FFTW_ESTIMATE so they (and their results) are deterministic. They assume
// fftw_malloc alignment, so every execution goes through fftw-allocated buffers.
enum class PlanKind { kR2C, kC2R, kForward, kBackward };

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(PlanKind kind, std::size_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto key = std::make_tuple(kind, n);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        const int ni = static_cast<int>(n);
        const unsigned flags = FFTW_ESTIMATE;
        fftw_plan plan = nullptr;
        double* real = fftw_alloc_real(n);
        fftw_complex* cplx = fftw_alloc_complex(n);
        fftw_complex* cplx2 = fftw_alloc_complex(n);
        switch (kind) {
            case PlanKind::kR2C: plan = fftw_plan_dft_r2c_1d(ni, real, cplx, flags); break;
            case PlanKind::kC2R: plan = fftw_plan_dft_c2r_1d(ni, cplx, real, flags); break;
            case PlanKind::kForward: plan = fftw_plan_dft_1d(ni, cplx, cplx2, FFTW_FORWARD, flags); break;
            case PlanKind::kBackward: plan = fftw_plan_dft_1d(ni, cplx, cplx2, FFTW_BACKWARD, flags); break;
        }
        fftw_free(real);
        fftw_free(cplx);
        fftw_free(cplx2);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<PlanKind, std::size_t>, fftw_plan> plans_;
};

PlanCache& plans() {
    static PlanCache cache;
    return cache;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuffer real_buffer(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
ComplexBuffer complex_buffer(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

Complex* as_complex(fftw_complex* p) { return reinterpret_cast<Complex*>(p); }

}  // namespace

std::vector<Complex> rfft(std::span<const double> input) {
    const std::size_t n = input.size();
    if (n == 0) return {};
    auto in = real_buffer(n);
    auto out = complex_buffer(n / 2 + 1);
    std::copy(input.begin(), input.end(), in.get());
    fftw_execute_dft_r2c(plans().get(PlanKind::kR2C, n), in.get(), out.get());
    return {as_complex(out.get()), as_complex(out.get()) + n / 2 + 1};
}

std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n) {
    if (n == 0) return {};
    const std::size_t bins = n / 2 + 1;
    auto in = complex_buffer(bins);
    auto out = real_buffer(n);
    // c2r overwrites its input, hence the copy.
    Complex* dst = as_complex(in.get());
    const std::size_t given = std::min(spectrum.size(), bins);
    std::copy_n(spectrum.begin(), given, dst);
    std::fill(dst + given, dst + bins, Complex{});
    fftw_execute_dft_c2r(plans().get(PlanKind::kC2R, n), in.get(), out.get());
    const double scale = 1.0 / static_cast<double>(n);
    std::vector<double> result(n);
    for (std::size_t i = 0; i < n; ++i) result[i] = out[i] * scale;
    return result;
}

void fft_inplace(std::vector<Complex>& data, bool inverse) {
    const std::size_t n = data.size();
    if (n == 0) return;
    auto in = complex_buffer(n);
    auto out = complex_buffer(n);
    std::copy(data.begin(), data.end(), as_complex(in.get()));
    fftw_execute_dft(plans().get(inverse ? PlanKind::kBackward : PlanKind::kForward, n), in.get(), out.get());
    const double scale = inverse ? 1.0 / static_cast<double>(n) : 1.0;
    const Complex* res = as_complex(out.get());
    for (std::size_t i = 0; i < n; ++i) data[i] = res[i] * scale;
}

std::vector<Complex> analytic_signal(std::span<const double> input) {
    const std::size_t n = input.size();
    std::vector<Complex> spec(n);
    if (n == 0) return spec;
    const auto half = rfft(input);
    // H = [1, 2, ..., 2, (1 at Nyquist for even n), 0, ..., 0]
    spec[0] = half[0];
    const std::size_t last = (n % 2 == 0) ? n / 2 : (n + 1) / 2;
    for (std::size_t k = 1; k < last; ++k) spec[k] = 2.0 * half[k];
    if (n % 2 == 0) spec[n / 2] = half[n / 2];
    fft_inplace(spec, true);
    return spec;
}

}  // namespace dwe::signal
