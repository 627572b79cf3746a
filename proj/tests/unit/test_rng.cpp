#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tarbm/errors.hpp"
#include "tarbm/rng.hpp"

using namespace tarbm;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        EXPECT_NE(x, c.next_u64());
    }
    EXPECT_EQ(a.counter(), 100U);
}

TEST(Rng, DrawIsPureFunctionOfSeedAndCounter) {
    Rng a(7);
    for (int i = 0; i < 9; ++i) a.next_u64();
    const auto tenth = a.next_u64();
    Rng b(7);
    std::uint64_t x = 0;
    for (int i = 0; i < 10; ++i) x = b.next_u64();
    EXPECT_EQ(tenth, x);
}

TEST(Rng, UniformInUnitInterval) {
    Rng rng(1);
    double mean = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        mean += u;
    }
    EXPECT_NEAR(mean / 100000.0, 0.5, 0.01);
}

TEST(Rng, UniformIndexCoversRange) {
    Rng rng(3);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto k = rng.uniform_index(7);
        ASSERT_LT(k, 7U);
        ++counts[k];
    }
    for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, NormalMoments) {
    Rng rng(9);
    double s = 0.0, s2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.02);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Bernoulli, ZeroAndOneAreExact) {
    Rng rng(5);
    EXPECT_EQ(sample_bernoulli(Matrix(20, 20, 0.0), rng), Matrix(20, 20, 0.0));
    EXPECT_EQ(sample_bernoulli(Matrix(20, 20, 1.0), rng), Matrix(20, 20, 1.0));
}

TEST(Bernoulli, LawOfLargeNumbers) {
    Rng rng(17);
    const Matrix s = sample_bernoulli(Matrix(1000, 100, 0.3), rng);
    EXPECT_NEAR(sum(s) / 1e5, 0.3, 0.01);
}

TEST(Bernoulli, RejectsInvalidProbabilities) {
    Rng rng(1);
    EXPECT_THROW(sample_bernoulli(Matrix(1, 1, 1.5), rng), DomainError);
    EXPECT_THROW(sample_bernoulli(Matrix(1, 1, -0.1), rng), DomainError);
    EXPECT_THROW(sample_bernoulli(Matrix(1, 1, std::nan("")), rng), DomainError);
}

TEST(GaussianInit, ZeroStddevIsZero) {
    Rng rng(1);
    EXPECT_EQ(gaussian_init(4, 5, 0.0, rng), Matrix(4, 5));
    EXPECT_THROW(gaussian_init(1, 1, -1.0, rng), DomainError);
}

TEST(GaussianInit, SampleStddev) {
    Rng rng(23);
    const Matrix m = gaussian_init(100, 1000, 0.01, rng);
    const double mean = sum(m) / m.size();
    double var = 0.0;
    for (double x : m.data()) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / m.size());
    EXPECT_NEAR(sd, 0.01, 0.05 * 0.01);
}

TEST(GaussianInit, Deterministic) {
    Rng a(99), b(99);
    EXPECT_EQ(gaussian_init(10, 10, 0.01, a), gaussian_init(10, 10, 0.01, b));
}

TEST(Permutation, IsPermutationAndSeeded) {
    Rng a(4), b(4);
    auto p = seeded_permutation(50, a);
    EXPECT_EQ(p, seeded_permutation(50, b));
    std::sort(p.begin(), p.end());
    std::vector<std::size_t> iota(50);
    std::iota(iota.begin(), iota.end(), 0);
    EXPECT_EQ(p, iota);
}

TEST(Rng, SplitStreamsDiffer) {
    Rng rng(1);
    Rng a = rng.split(), b = rng.split();
    EXPECT_NE(a.next_u64(), b.next_u64());
    EXPECT_EQ(rng.counter(), 2U);
}
