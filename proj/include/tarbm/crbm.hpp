#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "tarbm/data.hpp"
#include "tarbm/rbm.hpp"

namespace tarbm {

/// Conditional RBM: history visibles enter as dynamic biases.
/// autoregressive[d-1] is A_d (V×V, past visible i → current visible k);
/// history_to_hidden[d-1] is B_d (V×H).
struct CrbmParams {
    RbmParams static_;
    std::vector<Matrix> autoregressive;
    std::vector<Matrix> history_to_hidden;

    std::size_t order() const noexcept { return autoregressive.size(); }
    std::size_t visible() const noexcept { return static_.visible(); }
    std::size_t hidden() const noexcept { return static_.hidden(); }

    // Static weights ~ normal(0, init_stddev²); A_d, B_d and biases zero.
    static CrbmParams init(std::size_t visible, std::size_t hidden, std::size_t order,
                           VisibleKind kind, double init_stddev, Rng& rng);
    void validate() const;

    friend bool operator==(const CrbmParams&, const CrbmParams&) = default;
};

struct DynamicBiases {
    Matrix visible;  // B×V
    Matrix hidden;   // B×H
};

// b_v* = b_v + Σ_d A_dᵀ v^d and b_h* = b_h + Σ_d B_dᵀ v^d for a batch;
// history[d-1] holds v^d as B×V.
DynamicBiases dynamic_biases(const CrbmParams& params, const std::vector<Matrix>& history);
// Single-history form: row d−1 of `history` (M×V) is v^d. Returns 1×V and 1×H.
DynamicBiases dynamic_biases(const CrbmParams& params, const Matrix& history);

// The static RBM obtained by conditioning on one history.
RbmParams conditioned_rbm(const CrbmParams& params, const Matrix& history);

// Conditionals given a history (M×V) for a batch of rows, computed through
// the per-row dynamic-bias path used in training.
Matrix crbm_hidden_given_visible(const CrbmParams& params, const Matrix& history, const Matrix& v);
Matrix crbm_visible_given_hidden(const CrbmParams& params, const Matrix& history, const Matrix& h);

// Minibatch CD on slice 0 of every width-(M+1) window under dynamic biases.
// Returns the last epoch's mean squared reconstruction error.
double crbm_cd_train(CrbmParams& params, const SequenceDataset& data, const CdConfig& cfg,
                     std::size_t epochs, std::size_t batch_size, Rng& rng,
                     const TrainHooks& hooks = {});

// Mean-field next frame: h = sigmoid(v⁰-free hidden bias), v = visible mean
// under the dynamic biases. history as in dynamic_biases. Returns 1×V.
Matrix predict_next(const CrbmParams& params, const Matrix& history);

}  // namespace tarbm
