#include "tarbm/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace tarbm {

std::uint64_t Rng::next_u64() noexcept {
    ++counter_;
    std::uint64_t z = seed_ + counter_ * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t Rng::uniform_index(std::size_t n) noexcept {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

double Rng::normal() noexcept {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix sample_bernoulli(const Matrix& p, Rng& rng) {
    Matrix out(p.rows(), p.cols());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = p[i];
        if (!(q >= 0.0 && q <= 1.0)) {
            throw DomainError("sample_bernoulli: probability " + std::to_string(q) +
                              " outside [0, 1]");
        }
        out[i] = rng.uniform() < q ? 1.0 : 0.0;
    }
    return out;
}

Matrix gaussian_init(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
    if (!(stddev >= 0.0)) throw DomainError("gaussian_init: negative stddev");
    Matrix out(rows, cols);
    if (stddev == 0.0) return out;
    for (double& v : out.data()) v = stddev * rng.normal();
    return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace tarbm
