#include <algorithm>
#include <atomic>
#include <limits>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "dwe/common/error.hpp"
#include "dwe/common/hash.hpp"
#include "dwe/common/io.hpp"
#include "dwe/common/log.hpp"
#include "dwe/common/matrix.hpp"
#include "dwe/common/random.hpp"
#include "dwe/common/stats.hpp"

namespace dwe {

const char* error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::kParse: return "parse";
        case ErrorKind::kValidation: return "validation";
        case ErrorKind::kNumeric: return "numeric";
        case ErrorKind::kIo: return "io";
    }
    return "unknown";
}

// ---------------------------------------------------------------- Matrix

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) {
        cols_ = values.size();
    }
    if (values.size() != cols_) {
        throw ValidationError("Matrix::append_row: expected " + std::to_string(cols_) + " columns, got " +
                              std::to_string(values.size()));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

// ---------------------------------------------------------------- stats

double rmse(std::span<const double> pred, std::span<const double> rec) {
    if (pred.size() != rec.size()) {
        throw ValidationError("rmse: length mismatch (" + std::to_string(pred.size()) + " vs " +
                              std::to_string(rec.size()) + ")");
    }
    if (pred.empty()) {
        throw ValidationError("rmse: empty input");
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - rec[i];
        sse += e * e;
    }
    return std::sqrt(sse / static_cast<double>(pred.size()));
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double mu = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw ValidationError("median: empty input");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw ValidationError("pearson: need two equal-length series of at least 2 values");
    }
    const double ma = mean(a);
    const double mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

MeanStd mean_std(std::span<const double> xs) { return {mean(xs), stddev(xs)}; }

Standardizer Standardizer::fit(const Matrix& data) {
    if (data.rows() == 0) throw ValidationError("Standardizer::fit: no rows");
    Standardizer s;
    const std::size_t d = data.cols();
    const double n = static_cast<double>(data.rows());
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 0.0);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const auto row = data.row(r);
        for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
    }
    for (double& m : s.mean) m /= n;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const auto row = data.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            const double e = row[c] - s.mean[c];
            s.scale[c] += e * e;
        }
    }
    for (double& v : s.scale) {
        v = std::sqrt(v / n);
        if (!(v > 1e-12)) v = 1.0;
    }
    return s;
}

std::vector<double> Standardizer::transform(std::span<const double> x) const {
    std::vector<double> out(x.size());
    transform_into(x, out);
    return out;
}

void Standardizer::transform_into(std::span<const double> x, std::span<double> out) const {
    if (x.size() != mean.size() || out.size() != mean.size()) {
        throw ValidationError("Standardizer: expected dimension " + std::to_string(mean.size()) + ", got " +
                              std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / scale[i];
}

Matrix Standardizer::transform(const Matrix& data) const {
    Matrix out(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r) transform_into(data.row(r), out.row(r));
    return out;
}

// ---------------------------------------------------------------- random

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

double Rng::uniform() {
    // 53 random mantissa bits.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

// ---------------------------------------------------------------- hash

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::string_view bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kDigits[h & 0xF];
        h >>= 4;
    }
    return out;
}

// ---------------------------------------------------------------- log

namespace {
std::atomic<int> g_log_level{static_cast<int>(LogLevel::kWarning)};
}

void set_log_level(LogLevel level) noexcept { g_log_level = static_cast<int>(level); }
LogLevel log_level() noexcept { return static_cast<LogLevel>(g_log_level.load()); }

void log_warning(std::string_view message) {
    if (g_log_level.load() >= static_cast<int>(LogLevel::kWarning)) {
        std::clog << "[dwe] warning: " << message << '\n';
    }
}

void log_info(std::string_view message) {
    if (g_log_level.load() >= static_cast<int>(LogLevel::kInfo)) {
        std::clog << "[dwe] " << message << '\n';
    }
}

// ---------------------------------------------------------------- io

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(text.substr(start));
            break;
        }
        out.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view text, std::string_view context) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t')) text.remove_suffix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ParseError(std::string(context) + ": cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace dwe
