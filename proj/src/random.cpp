#include "aewm/random.hpp"

#include "aewm/error.hpp"

#include <cmath>

namespace aewm::rng {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

Stream Stream::child(std::uint64_t key) const {
    // Two finalizer rounds over (state, key) give full avalanche between
    // sibling streams with adjacent keys.
    std::uint64_t s = mix64(state_ + kGolden * (key + 1));
    return Stream(mix64(s + kGolden));
}

std::uint64_t Stream::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double Stream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Stream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double Stream::normal() {
    // uniform01() is in [0, 1); shift into (0, 1) to keep the PPND16
    // argument strictly interior.
    double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    return inverse_normal_cdf(u);
}

int Stream::bernoulli(double p) {
    return uniform01() < p ? 1 : 0;
}

std::size_t Stream::index(std::size_t n) {
    // Lemire-style multiply-shift; bias is negligible for n << 2^64 and the
    // mapping is deterministic, which is what matters here.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64());
    return static_cast<std::size_t>((m * n) >> 64);
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ComputeError("inverse_normal_cdf: p outside (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

void shuffle(std::vector<std::size_t>& items, Stream stream) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = stream.index(i);
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace aewm::rng
