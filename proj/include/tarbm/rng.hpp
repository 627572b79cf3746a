#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tarbm/matrix.hpp"

namespace tarbm {

/// Counter-based generator "ctr64 v1".
///
/// Draw n (n = 1, 2, ...) is splitmix64_finalize(seed + n · 0x9E3779B97F4A7C15),
/// i.e. a pure function of (seed, n). Doubles take the top 53 bits. Normals use
/// Box–Muller and consume two draws each; nothing is cached between calls, so
/// the stream position is always `counter()`.
class Rng {
public:
    static constexpr int kVersion = 1;

    explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept;
    // Uniform on [0, 1).
    double uniform() noexcept;
    // Uniform integer in [0, n); rejection sampling, no modulo bias. n > 0.
    std::size_t uniform_index(std::size_t n) noexcept;
    double normal() noexcept;
    // Independent child stream; does not advance this one beyond one draw.
    Rng split() noexcept { return Rng(next_u64()); }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

// Entries 1 with probability p(i,j). Throws DomainError if any p is outside [0,1].
Matrix sample_bernoulli(const Matrix& p, Rng& rng);
// Entries i.i.d. normal(0, stddev²). Throws DomainError for negative stddev.
Matrix gaussian_init(std::size_t rows, std::size_t cols, double stddev, Rng& rng);
// Fisher–Yates permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, Rng& rng);

}  // namespace tarbm
