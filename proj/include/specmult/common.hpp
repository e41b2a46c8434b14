#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace specmult {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Seeded generator used everywhere randomness is needed. The engine output
/// is bit-exact across platforms; the double mappings below are ours, so
/// identical seeds give identical streams on any build.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0,1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, one value per call (the spare is cached)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * kPi * u2);
    }

    cplx normal_complex() { return {normal(), normal()}; }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        return n == 0 ? 0 : engine_() % n;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// splitmix64; used for per-index deterministic coefficients (dyadic_random)
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// deterministic value in [-1,1] from (seed, index)
inline double hash_unit(std::uint64_t seed, std::int64_t index) {
    const std::uint64_t h =
        splitmix64(seed ^ (0x517cc1b727220a95ULL * static_cast<std::uint64_t>(index + 0x4000000)));
    return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a(s.data(), s.size(), h);
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// least-squares line fit y = intercept + slope * x, plus R^2 of the fit
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int n = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
    LineFit f;
    f.n = static_cast<int>(x.size());
    if (f.n < 2) throw std::invalid_argument("fit_line: need at least 2 samples");
    double sx = 0, sy = 0;
    for (int i = 0; i < f.n; ++i) {
        sx += x[static_cast<std::size_t>(i)];
        sy += y[static_cast<std::size_t>(i)];
    }
    const double mx = sx / f.n, my = sy / f.n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < f.n; ++i) {
        const double dx = x[static_cast<std::size_t>(i)] - mx;
        const double dy = y[static_cast<std::size_t>(i)] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        f.slope = 0.0;
        f.intercept = my;
        f.r2 = (syy == 0.0) ? 1.0 : 0.0;
        return f;
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double ss_res = syy - f.slope * sxy;
    f.r2 = (syy == 0.0) ? 1.0 : 1.0 - ss_res / syy;
    return f;
}

inline bool approx_eq(double a, double b, double rel, double abs_floor = 0.0) {
    return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

}  // namespace specmult
