#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "tarbm/errors.hpp"
#include "tarbm/rbm.hpp"
#include "test_util.hpp"

using namespace tarbm;
using namespace tarbm::testing;

namespace {

std::vector<double> to_vec(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

std::vector<double> flatten(const RbmGradient& g) {
    std::vector<double> out = to_vec(g.w);
    out.insert(out.end(), g.b_v.data().begin(), g.b_v.data().end());
    out.insert(out.end(), g.b_h.data().begin(), g.b_h.data().end());
    return out;
}

CdConfig plain_cd(std::size_t k = 1) {
    CdConfig cfg;
    cfg.k = k;
    cfg.sparsity_weight = 0.0;
    cfg.weight_decay = 0.0;
    return cfg;
}

}  // namespace

TEST(Energy, ZeroConfiguration) {
    RbmParams p;
    p.visible_kind = VisibleKind::binary;
    p.w = Matrix(3, 2);
    p.b_v = Matrix(3, 1);
    p.b_h = Matrix(2, 1);
    EXPECT_EQ(energy(p, Matrix(3, 1), Matrix(2, 1)), 0.0);
}

TEST(Energy, SingleWeightHandArithmetic) {
    RbmParams p;
    p.visible_kind = VisibleKind::binary;
    p.w = Matrix{{2.0}};
    p.b_v = Matrix(1, 1);
    p.b_h = Matrix(1, 1);
    EXPECT_EQ(energy(p, Matrix{{1.0}}, Matrix{{1.0}}), -2.0);
}

TEST(Energy, MatchesScalarLoop) {
    Rng rng(31);
    for (auto kind : {VisibleKind::binary, VisibleKind::gaussian}) {
        for (int trial = 0; trial < 20; ++trial) {
            const RbmParams p = random_rbm(4, 3, kind, rng);
            const Matrix v = kind == VisibleKind::binary ? random_binary(1, 4, rng) : random_matrix(1, 4, rng, 2.0);
            const Matrix h = random_binary(1, 3, rng);
            EXPECT_NEAR(energy(p, v, h), scalar_energy(p, to_vec(v), to_vec(h)), 1e-12);
        }
    }
}

TEST(Conditionals, ZeroModelIsHalf) {
    RbmParams p;
    p.visible_kind = VisibleKind::binary;
    p.w = Matrix(4, 3);
    p.b_v = Matrix(4, 1);
    p.b_h = Matrix(3, 1);
    EXPECT_EQ(hidden_given_visible(p, Matrix(2, 4, 1.0)), Matrix(2, 3, 0.5));
    EXPECT_EQ(visible_given_hidden(p, Matrix(2, 3, 1.0)), Matrix(2, 4, 0.5));
}

TEST(Conditionals, GaussianZeroWeightsGiveVisibleBias) {
    Rng rng(2);
    RbmParams p = random_rbm(4, 3, VisibleKind::gaussian, rng);
    p.w = Matrix(4, 3);
    const Matrix v = visible_given_hidden(p, random_binary(5, 3, rng));
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(v(r, i), p.b_v[i]);
}

TEST(Conditionals, GaussianReconstructionIsExactlyAffine) {
    Rng rng(4);
    const RbmParams p = random_rbm(5, 3, VisibleKind::gaussian, rng);
    const Matrix h = random_matrix(6, 3, rng);
    Matrix expected = matmul_nt(h, p.w);
    add_row_broadcast(expected, p.b_v);
    EXPECT_EQ(visible_given_hidden(p, h), expected);
}

TEST(Conditionals, HiddenMatchesEnumerationOnAllVisibleStates) {
    Rng rng(7);
    const RbmParams p = random_rbm(4, 3, VisibleKind::binary, rng);
    for (std::size_t a = 0; a < 16; ++a) {
        const auto v = bits(a, 4);
        const Matrix probs = hidden_given_visible(p, Matrix::row(v));
        for (std::size_t j = 0; j < 3; ++j) {
            double on = 0.0, all = 0.0;
            for (std::size_t b = 0; b < 8; ++b) {
                const auto h = bits(b, 3);
                const double e = std::exp(-scalar_energy(p, v, h));
                all += e;
                on += h[j] * e;
            }
            EXPECT_NEAR(probs[j], on / all, 1e-12);
        }
    }
}

TEST(Conditionals, VisibleMatchesEnumeration) {
    Rng rng(8);
    const RbmParams p = random_rbm(3, 4, VisibleKind::binary, rng);
    for (std::size_t b = 0; b < 16; ++b) {
        const auto h = bits(b, 4);
        const Matrix probs = visible_given_hidden(p, Matrix::row(h));
        for (std::size_t i = 0; i < 3; ++i) {
            double on = 0.0, all = 0.0;
            for (std::size_t a = 0; a < 8; ++a) {
                const auto v = bits(a, 3);
                const double e = std::exp(-scalar_energy(p, v, h));
                all += e;
                on += v[i] * e;
            }
            EXPECT_NEAR(probs[i], on / all, 1e-12);
        }
    }
}

TEST(Conditionals, Saturation) {
    RbmParams p;
    p.visible_kind = VisibleKind::binary;
    p.w = Matrix(4, 2);
    p.b_v = Matrix(4, 1);
    p.b_h = Matrix(2, 1);
    for (std::size_t i = 0; i < 4; ++i) p.w(i, 1) = 3.5;  // logit 14 with v = 1s
    const Matrix probs = hidden_given_visible(p, Matrix(1, 4, 1.0));
    EXPECT_GE(probs[1], 1.0 - 1e-6);
    EXPECT_EQ(probs[0], 0.5);
}

TEST(FreeEnergy, MatchesHiddenSumOnRandomModels) {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto kind = trial % 2 ? VisibleKind::binary : VisibleKind::gaussian;
        const RbmParams p = random_rbm(4, 5, kind, rng, 2.0);
        const Matrix v = kind == VisibleKind::binary ? random_binary(1, 4, rng) : random_matrix(1, 4, rng, 2.0);
        const double lhs = -free_energy(p, v.data());
        const double rhs = brute_log_unnormalized(p, to_vec(v));
        EXPECT_LT(std::abs(std::expm1(lhs - rhs)), 1e-10);
    }
}

TEST(ExactLikelihood, UniformModel) {
    RbmParams p;
    p.visible_kind = VisibleKind::binary;
    p.w = Matrix(1, 1);
    p.b_v = Matrix(1, 1);
    p.b_h = Matrix(1, 1);
    EXPECT_NEAR(exact_log_likelihood(p, Matrix{{1.0}}), std::log(0.5), 1e-15);
}

TEST(ExactLikelihood, MatchesIndependentEnumeration) {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const RbmParams p = random_rbm(5, 4, VisibleKind::binary, rng, 1.5);
        const Matrix data = random_binary(7, 5, rng);
        double expected = 0.0;
        for (std::size_t r = 0; r < data.rows(); ++r)
            expected += brute_log_unnormalized(p, to_vec(data.row_copy(r)));
        expected -= 7.0 * brute_log_z(p);
        EXPECT_NEAR(exact_log_partition(p), brute_log_z(p), 1e-10 * std::abs(brute_log_z(p)));
        EXPECT_LT(rel_err(exact_log_likelihood(p, data), expected), 1e-10);
    }
}

TEST(ExactLikelihood, InvariantUnderHiddenRelabeling) {
    Rng rng(5);
    const RbmParams p = random_rbm(4, 3, VisibleKind::binary, rng);
    const Matrix data = random_binary(6, 4, rng);
    const std::size_t perm[3] = {2, 0, 1};
    RbmParams q = p;
    for (std::size_t j = 0; j < 3; ++j) {
        q.b_h[j] = p.b_h[perm[j]];
        for (std::size_t i = 0; i < 4; ++i) q.w(i, j) = p.w(i, perm[j]);
    }
    EXPECT_NEAR(exact_log_likelihood(p, data), exact_log_likelihood(q, data), 1e-12);
}

TEST(ExactLikelihood, CapacityAndKindChecks) {
    Rng rng(1);
    EXPECT_THROW(exact_log_partition(random_rbm(11, 10, VisibleKind::binary, rng)), CapacityError);
    EXPECT_THROW(exact_log_partition(random_rbm(3, 3, VisibleKind::gaussian, rng)), DomainError);
}

TEST(ExactGradient, MatchesCentralDifferences) {
    Rng rng(101);
    RbmParams p = random_rbm(5, 4, VisibleKind::binary, rng, 0.8);
    const Matrix data = random_binary(12, 5, rng);
    const RbmGradient g = exact_gradient(p, data);
    const double step = 1e-5;
    double worst = 0.0;
    auto check = [&](Matrix& param, const Matrix& analytic) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double saved = param[i];
            param[i] = saved + step;
            const double up = exact_log_likelihood(p, data);
            param[i] = saved - step;
            const double down = exact_log_likelihood(p, data);
            param[i] = saved;
            worst = std::max(worst, rel_err(analytic[i], (up - down) / (2 * step), 1e-3));
        }
    };
    check(p.w, g.w);
    check(p.b_v, g.b_v);
    check(p.b_h, g.b_h);
    EXPECT_LT(worst, 1e-5);
}

TEST(ExactGradient, VanishesAtSaturatedSinglePattern) {
    const std::vector<double> pattern{1, 0, 1, 1, 0};
    RbmParams p;
    p.visible_kind = VisibleKind::binary;
    p.w = Matrix(5, 3);
    p.b_h = Matrix(3, 1);
    p.b_v = Matrix(5, 1);
    for (std::size_t i = 0; i < 5; ++i) p.b_v[i] = 20.0 * (2.0 * pattern[i] - 1.0);
    const RbmGradient g = exact_gradient(p, Matrix::row(pattern));
    for (double x : flatten(g)) EXPECT_LT(std::abs(x), 1e-6);
    // Remaining ascent still points further into saturation.
    for (std::size_t i = 0; i < 5; ++i) EXPECT_GT(g.b_v[i] * (2.0 * pattern[i] - 1.0), 0.0);
}

TEST(ContrastiveDivergence, LongChainsAlignWithExactGradient) {
    Rng rng(77);
    const RbmParams p = random_rbm(5, 4, VisibleKind::binary, rng);
    const Matrix data = random_binary(20, 5, rng);
    Matrix chains(10000, 5);
    for (std::size_t r = 0; r < chains.rows(); ++r) {
        auto src = data.row_span(r % data.rows());
        std::copy(src.begin(), src.end(), chains.row_span(r).begin());
    }
    const auto cd = flatten(cd_update(p, chains, plain_cd(50), rng));
    const auto exact = flatten(exact_gradient(p, data));
    const double cosine = std::inner_product(cd.begin(), cd.end(), exact.begin(), 0.0) /
                          std::sqrt(std::inner_product(cd.begin(), cd.end(), cd.begin(), 0.0) *
                                    std::inner_product(exact.begin(), exact.end(), exact.begin(), 0.0));
    EXPECT_GT(cosine, 0.5);
}

TEST(ContrastiveDivergence, FixedPointWhenDataComesFromModel) {
    Rng rng(13);
    const RbmParams p = random_rbm(3, 2, VisibleKind::binary, rng);
    // Exact marginal p(v) ∝ e^{-F(v)}.
    std::vector<double> cdf;
    double total = 0.0;
    for (std::size_t a = 0; a < 8; ++a) {
        total += std::exp(-free_energy(p, bits(a, 3)));
        cdf.push_back(total);
    }
    const int updates = 10000;
    std::vector<double> s(6, 0.0), s2(6, 0.0);
    for (int u = 0; u < updates; ++u) {
        Matrix batch(10, 3);
        for (std::size_t r = 0; r < 10; ++r) {
            const double x = rng.uniform() * total;
            const std::size_t a = std::upper_bound(cdf.begin(), cdf.end(), x) - cdf.begin();
            const auto v = bits(std::min<std::size_t>(a, 7), 3);
            std::copy(v.begin(), v.end(), batch.row_span(r).begin());
        }
        const RbmGradient g = cd_update(p, batch, plain_cd(), rng);
        for (std::size_t i = 0; i < 6; ++i) {
            s[i] += g.w[i];
            s2[i] += g.w[i] * g.w[i];
        }
    }
    for (std::size_t i = 0; i < 6; ++i) {
        const double mean = s[i] / updates;
        const double se = std::sqrt((s2[i] / updates - mean * mean) / updates);
        EXPECT_LT(std::abs(mean), 3.0 * se) << "entry " << i;
    }
}

TEST(ContrastiveDivergence, FreeEnergyOfTrainedPatternDecreases) {
    int monotone = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        RbmParams p = RbmParams::init(4, 2, VisibleKind::binary, 0.01, rng);
        const Matrix pattern = random_binary(1, 4, rng);
        // A minibatch of copies of the one pattern.
        Matrix batch(10, 4);
        for (std::size_t r = 0; r < 10; ++r)
            std::copy(pattern.data().begin(), pattern.data().end(), batch.row_span(r).begin());
        double previous = free_energy(p, pattern.data());
        const double initial = previous;
        bool ok = true;
        for (int u = 0; u < 100; ++u) {
            const RbmGradient g = cd_update(p, batch, plain_cd(), rng);
            p.w += 0.1 * g.w;
            p.b_v += 0.1 * g.b_v;
            p.b_h += 0.1 * g.b_h;
            const double f = free_energy(p, pattern.data());
            if (f > previous + 1e-12) ok = false;
            previous = f;
        }
        if (ok && previous < initial) ++monotone;
    }
    EXPECT_GE(monotone, 95);
}

TEST(ContrastiveDivergence, SparsityPenaltyHoldsMeanActivationNearTarget) {
    Rng rng(3);
    const Matrix data = random_binary(200, 6, rng);
    RbmParams p = RbmParams::init(6, 10, VisibleKind::binary, 0.01, rng);
    CdConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.sparsity_target = 0.05;
    cfg.sparsity_weight = 5.0;
    train_rbm(p, data, cfg, 100, 20, rng);
    const double mean = sum(hidden_given_visible(p, data)) / (200.0 * 10.0);
    EXPECT_GE(mean, 0.02);
    EXPECT_LE(mean, 0.10);
}

TEST(ContrastiveDivergence, SparsityGradientMatchesFiniteDifference) {
    Rng rng(9);
    const RbmParams p = random_rbm(4, 3, VisibleKind::binary, rng);
    const Matrix v0 = random_binary(5, 4, rng);
    CdConfig cfg;
    cfg.sparsity_target = 0.2;
    cfg.sparsity_weight = 0.7;
    auto penalty = [&](const RbmParams& q) {
        const Matrix probs = hidden_given_visible(q, v0);
        const Matrix mean = column_means(probs);
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += (mean[j] - 0.2) * (mean[j] - 0.2);
        return 0.7 * s;
    };
    RbmGradient g{Matrix(4, 3), Matrix(4, 1), Matrix(3, 1)};
    add_sparsity_gradient(g, v0, hidden_given_visible(p, v0), cfg);
    RbmParams q = p;
    for (std::size_t i = 0; i < q.w.size(); ++i) {
        q.w[i] = p.w[i] + 1e-6;
        const double up = penalty(q);
        q.w[i] = p.w[i] - 1e-6;
        const double down = penalty(q);
        q.w[i] = p.w[i];
        EXPECT_NEAR(g.w[i], -(up - down) / 2e-6, 1e-8);
    }
    for (std::size_t j = 0; j < 3; ++j) {
        q.b_h[j] = p.b_h[j] + 1e-6;
        const double up = penalty(q);
        q.b_h[j] = p.b_h[j] - 1e-6;
        const double down = penalty(q);
        q.b_h[j] = p.b_h[j];
        EXPECT_NEAR(g.b_h[j], -(up - down) / 2e-6, 1e-8);
    }
}

TEST(TrainRbm, DeterministicAndZeroRateIsNoOp) {
    Rng data_rng(1);
    const Matrix data = random_binary(50, 6, data_rng);
    auto run = [&](double lr) {
        Rng rng(5);
        RbmParams p = RbmParams::init(6, 4, VisibleKind::binary, 0.01, rng);
        CdConfig cfg;
        cfg.learning_rate = lr;
        const RbmParams before = p;
        train_rbm(p, data, cfg, 10, 8, rng);
        return std::pair{before, p};
    };
    const auto [b1, a1] = run(0.05);
    const auto [b2, a2] = run(0.05);
    EXPECT_EQ(a1, a2);
    EXPECT_FALSE(a1 == b1);
    const auto [b3, a3] = run(0.0);
    EXPECT_EQ(a3, b3);
}

TEST(TrainRbm, MomentumSchedule) {
    CdConfig cfg;
    EXPECT_EQ(cfg.momentum_at(0), 0.5);
    EXPECT_EQ(cfg.momentum_at(4), 0.5);
    EXPECT_EQ(cfg.momentum_at(5), 0.9);
}
