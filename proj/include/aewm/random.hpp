#pragma once

#include <cstdint>
#include <vector>

namespace aewm::rng {

// Splittable counter-style random stream built on the splitmix64 finalizer.
// Child streams derived from (state, key) are statistically independent of
// the parent, which is what keeps per-row draws identical no matter how the
// work is partitioned across threads or how many rows a table has.
class Stream {
  public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    // Derives an independent substream for the given key (row index,
    // restart index, replicate index, ...).
    Stream child(std::uint64_t key) const;

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform01();

    double uniform(double lo, double hi);

    // Standard normal via the inverse-CDF transform; deterministic across
    // platforms, unlike rejection samplers.
    double normal();

    // Bernoulli draw, returns 0 or 1.
    int bernoulli(double p);

    // Uniform index in [0, n), n >= 1.
    std::size_t index(std::size_t n);

  private:
    std::uint64_t state_;
};

// Wichura's AS 241 (PPND16) inverse of the standard normal CDF.
double inverse_normal_cdf(double p);

double normal_cdf(double x);
double normal_pdf(double x);

// Fisher-Yates shuffle driven by a Stream.
void shuffle(std::vector<std::size_t>& items, Stream stream);

} // namespace aewm::rng
