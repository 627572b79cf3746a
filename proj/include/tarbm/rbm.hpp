#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "tarbm/matrix.hpp"
#include "tarbm/rng.hpp"
#include "tarbm/training.hpp"

namespace tarbm {

enum class VisibleKind : std::uint8_t { binary = 0, gaussian = 1 };

std::string_view to_string(VisibleKind kind) noexcept;
VisibleKind parse_visible_kind(std::string_view text);

/// Static RBM: w is V×H, b_v is V×1, b_h is H×1. Gaussian visibles have unit
/// variance.
struct RbmParams {
    Matrix w;
    Matrix b_v;
    Matrix b_h;
    VisibleKind visible_kind = VisibleKind::gaussian;

    std::size_t visible() const noexcept { return w.rows(); }
    std::size_t hidden() const noexcept { return w.cols(); }

    // w ~ normal(0, init_stddev²), biases zero.
    static RbmParams init(std::size_t visible, std::size_t hidden, VisibleKind kind,
                          double init_stddev, Rng& rng);
    void validate() const;

    friend bool operator==(const RbmParams&, const RbmParams&) = default;
};

struct CdConfig {
    std::size_t k = 1;
    double learning_rate = 1e-3;
    double sparsity_target = 0.05;
    double sparsity_weight = 0.1;
    double momentum = 0.9;
    // Used for epochs before momentum_switch_epoch.
    double initial_momentum = 0.5;
    std::size_t momentum_switch_epoch = 5;
    double weight_decay = 1e-4;
    // Gaussian negative-phase visibles are the conditional mean unless set.
    bool sample_gaussian_visible = false;

    double momentum_at(std::size_t epoch) const noexcept {
        return epoch < momentum_switch_epoch ? initial_momentum : momentum;
    }
    void validate() const;
};

struct RbmGradient {
    Matrix w;
    Matrix b_v;
    Matrix b_h;
};

// Energy of a single configuration; v has V entries and h has H entries in
// any vector orientation.
double energy(const RbmParams& params, const Matrix& v, const Matrix& h);
// F(v) = -log Σ_h exp(-E(v, h)), marginalized analytically.
double free_energy(const RbmParams& params, std::span<const double> v);

// Row-batched conditionals: v is B×V → B×H, h is B×H → B×V.
Matrix hidden_given_visible(const RbmParams& params, const Matrix& v);
// Binary: sigmoid probabilities. Gaussian: the affine mean h·wᵀ + b_v.
Matrix visible_given_hidden(const RbmParams& params, const Matrix& h);

/// Result of a k-step Gibbs chain started at the data.
struct CdChain {
    Matrix pos_hidden;   // P(h=1 | v0), B×H
    Matrix neg_visible;  // v_k, B×V
    Matrix neg_hidden;   // P(h=1 | v_k), B×H
};

// Runs the chain with per-row effective biases (B×V and B×H). Every
// CD-trained model funnels through here so that models which reduce to a
// static RBM reproduce its arithmetic exactly.
CdChain run_cd_chain(const Matrix& w, VisibleKind kind, const Matrix& v0,
                     const Matrix& visible_bias_rows, const Matrix& hidden_bias_rows,
                     const CdConfig& cfg, Rng& rng);

Matrix broadcast_rows(const Matrix& bias, std::size_t rows);

// Batch-averaged ⟨v h⟩_0 − ⟨v h⟩_k and bias statistics of a chain.
RbmGradient cd_gradient(const Matrix& v0, const CdChain& chain);

// Adds the descent direction of sparsity_weight·Σ_j (q_j − target)², with q_j
// the minibatch-mean hidden probability, to grad.w and grad.b_h.
void add_sparsity_gradient(RbmGradient& grad, const Matrix& v0, const Matrix& pos_hidden,
                           const CdConfig& cfg);

// Averaged ⟨v h⟩_0 − ⟨v h⟩_k statistics plus the sparsity term; an ascent
// direction. The caller applies learning rate, momentum and decay.
RbmGradient cd_update(const RbmParams& params, const Matrix& minibatch, const CdConfig& cfg,
                      Rng& rng);

struct RbmVelocity {
    Matrix w, b_v, b_h;
    explicit RbmVelocity(const RbmParams& p)
        : w(p.w.rows(), p.w.cols()), b_v(p.b_v.rows(), 1), b_h(p.b_h.rows(), 1) {}
};

void apply_rbm_gradient(RbmParams& params, RbmVelocity& velocity, const RbmGradient& grad,
                        const CdConfig& cfg, std::size_t epoch);

// Minibatch CD over the rows of `frames` (one sample per row), reshuffled each
// epoch. Returns the last epoch's mean squared reconstruction error.
double train_rbm(RbmParams& params, const Matrix& frames, const CdConfig& cfg, std::size_t epochs,
                 std::size_t batch_size, Rng& rng, const TrainHooks& hooks = {});

// ---- Exhaustive oracles (binary visibles, V + H <= kMaxEnumerationBits) ----

inline constexpr std::size_t kMaxEnumerationBits = 20;

// log Z via enumeration of every (v, h) pair.
double exact_log_partition(const RbmParams& params);
// Σ_rows log Σ_h exp(-E(v, h)) − N log Z.
double exact_log_likelihood(const RbmParams& params, const Matrix& data);
// ∂ exact_log_likelihood / ∂{w, b_v, b_h}.
RbmGradient exact_gradient(const RbmParams& params, const Matrix& data);

}  // namespace tarbm
