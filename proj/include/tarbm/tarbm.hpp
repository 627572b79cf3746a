#pragma once

#include <cstddef>
#include <vector>

#include "tarbm/data.hpp"
#include "tarbm/rbm.hpp"

namespace tarbm {

/// M-th order temporal RBM with hidden-to-hidden delayed weights.
///
/// `delayed[d-1]` is w_d (H×H). It maps the hidden state at t−d onto the
/// logit of the current hidden layer from the left: logit(h⁰) gains w_d·h^d,
/// so entry (j, k) couples current unit j to past unit k.
struct TarbmParams {
    RbmParams static_;
    std::vector<Matrix> delayed;

    std::size_t order() const noexcept { return delayed.size(); }
    std::size_t visible() const noexcept { return static_.visible(); }
    std::size_t hidden() const noexcept { return static_.hidden(); }

    // Static weights ~ normal(0, init_stddev²); biases and delayed weights zero.
    static TarbmParams init(std::size_t visible, std::size_t hidden, std::size_t order,
                            VisibleKind kind, double init_stddev, Rng& rng);
    void validate() const;

    friend bool operator==(const TarbmParams&, const TarbmParams&) = default;
};

struct TrainSchedule {
    std::size_t static_epochs = 100;
    std::size_t ae_epochs_per_delay = 50;
    std::size_t joint_epochs = 100;
    std::size_t minibatch_size = 100;
    double ae_learning_rate = 1e-3;
    double ae_momentum = 0.9;

    void validate() const;
};

// Σ_{i=0..M} E_RBM(v^i, h^i) − Σ_{i=1..M} (h⁰)ᵀ w_i h^i. Row i of `visibles`
// ((M+1)×V) and `hiddens` ((M+1)×H) is slice i.
double joint_energy(const TarbmParams& params, const Matrix& visibles, const Matrix& hiddens);

// sigmoid(b_h + Σ_{j=1..d} w_j h^j) with row j−1 of `past_hiddens` holding h^j
// (d ≤ M). Returns 1×H.
Matrix hidden_prior_mean(const TarbmParams& params, const Matrix& past_hiddens);

// ---- autoencoding pretraining of the delayed weights ----------------------

// Squared reconstruction error ‖v̂⁰ − v⁰‖² of one window when h⁰ is predicted
// from delays 1..depth only.
double ae_window_error(const TarbmParams& params, const FrameWindow& window, std::size_t depth);
// ∂ ae_window_error / ∂ w_depth (H×H).
Matrix ae_window_gradient(const TarbmParams& params, const FrameWindow& window, std::size_t depth);
// Mean of ae_window_error over every width-(M+1) window of the dataset.
double ae_dataset_error(const TarbmParams& params, const SequenceDataset& data, std::size_t depth);

/// trace[d-1][0] is the error before training w_d; trace[d-1][e] after epoch e.
struct AeTrace {
    std::vector<std::vector<double>> per_delay;
};

// Trains w_1, then w_2, ... by minibatch gradient descent on the window
// reconstruction error. The static RBM and earlier delays stay frozen.
AeTrace ae_pretrain_delays(TarbmParams& params, const SequenceDataset& data,
                           const TrainSchedule& schedule, Rng& rng, const TrainHooks& hooks = {});

// ---- contrastive-divergence fine-tuning -----------------------------------

// CD on the joint energy. History hiddens are mean-field inferred and held
// fixed; the current slice is Gibbs sampled under the dynamic hidden bias.
// Every history slice additionally contributes a static CD term for w, b_v, b_h.
// Returns the last epoch's mean squared reconstruction error of slice 0.
double joint_cd_finetune(TarbmParams& params, const SequenceDataset& data,
                         const TrainSchedule& schedule, const CdConfig& cfg, Rng& rng,
                         const TrainHooks& hooks = {});

struct TarbmTrainResult {
    bool static_done = false;
    bool ae_done = false;
    bool joint_done = false;
    AeTrace ae_trace;
};

// Static CD → (autoencoding, when `autoencode` and ae epochs > 0) → joint CD.
// autoencode = false is the TRBM baseline.
TarbmTrainResult train_temporal(TarbmParams& params, const SequenceDataset& data,
                                const TrainSchedule& schedule, const CdConfig& cfg,
                                bool autoencode, Rng& rng, const TrainHooks& hooks = {});

// ---- inference ------------------------------------------------------------

// Mean-field next frame from M history frames (row d−1 holds v^d, most recent
// first). Returns 1×V.
Matrix predict_next(const TarbmParams& params, const Matrix& history);

struct GenerateOptions {
    // Sample h⁰ from its dynamic prior instead of using probabilities.
    bool sample_hidden = false;
};

// Autoregressive rollout; rows of the result are in time order.
Matrix generate(const TarbmParams& params, const Matrix& seed_history, std::size_t n_frames,
                Rng& rng, const GenerateOptions& options = {});

}  // namespace tarbm
