#include "tarbm/tarbm.hpp"

#include <algorithm>
#include <cmath>

namespace tarbm {

TarbmParams TarbmParams::init(std::size_t visible, std::size_t hidden, std::size_t order,
                              VisibleKind kind, double init_stddev, Rng& rng) {
    TarbmParams p;
    p.static_ = RbmParams::init(visible, hidden, kind, init_stddev, rng);
    p.delayed.assign(order, Matrix(hidden, hidden));
    return p;
}

void TarbmParams::validate() const {
    static_.validate();
    for (const Matrix& wd : delayed) {
        if (wd.rows() != hidden() || wd.cols() != hidden())
            throw ShapeError("delayed weight " + wd.shape_string() + " is not " +
                             std::to_string(hidden()) + "x" + std::to_string(hidden()));
        if (!all_finite(wd)) throw DomainError("delayed weights contain non-finite values");
    }
}

void TrainSchedule::validate() const {
    if (minibatch_size < 1) throw DomainError("schedule: minibatch_size must be >= 1");
    if (!(ae_learning_rate > 0.0)) throw DomainError("schedule: ae_learning_rate must be > 0");
    if (!(ae_momentum >= 0.0 && ae_momentum < 1.0))
        throw DomainError("schedule: ae_momentum must be in [0, 1)");
}

double joint_energy(const TarbmParams& params, const Matrix& visibles, const Matrix& hiddens) {
    const std::size_t slices = params.order() + 1;
    if (visibles.rows() != slices || hiddens.rows() != slices) {
        throw ShapeError("joint_energy: expected " + std::to_string(slices) + " slices, got " +
                         visibles.shape_string() + " visibles and " + hiddens.shape_string() +
                         " hiddens");
    }
    double e = 0.0;
    for (std::size_t i = 0; i < slices; ++i)
        e += energy(params.static_, visibles.row_copy(i), hiddens.row_copy(i));
    const auto h0 = hiddens.row_span(0);
    for (std::size_t i = 1; i < slices; ++i) {
        const Matrix& wi = params.delayed[i - 1];
        const auto hi = hiddens.row_span(i);
        double coupling = 0.0;
        for (std::size_t j = 0; j < h0.size(); ++j) coupling += h0[j] * dot(wi.row_span(j), hi);
        e -= coupling;
    }
    return e;
}

namespace {

// b_h + Σ_{d=1..depth} w_d h^d for a batch; past[d-1] is B×H.
Matrix dynamic_hidden_logits(const TarbmParams& params, const std::vector<Matrix>& past,
                             std::size_t depth, std::size_t batch) {
    Matrix logits = broadcast_rows(params.static_.b_h, batch);
    for (std::size_t d = 1; d <= depth; ++d) logits += matmul_nt(past[d - 1], params.delayed[d - 1]);
    return logits;
}

std::vector<Matrix> infer_history(const TarbmParams& params, const SequenceDataset& data,
                                  std::span<const std::size_t> ends, std::size_t depth) {
    std::vector<Matrix> past;
    past.reserve(depth);
    for (std::size_t d = 1; d <= depth; ++d)
        past.push_back(hidden_given_visible(params.static_, gather_delay(data, ends, d)));
    return past;
}

struct AeForward {
    std::vector<Matrix> past;  // h^1..h^depth
    Matrix h0;
    Matrix recon;
};

AeForward ae_forward(const TarbmParams& params, std::vector<Matrix> past, std::size_t depth) {
    AeForward f;
    const std::size_t batch = past.empty() ? 0 : past.front().rows();
    f.h0 = sigmoid(dynamic_hidden_logits(params, past, depth, batch));
    f.recon = visible_given_hidden(params.static_, f.h0);
    f.past = std::move(past);
    return f;
}

// Σ_b ∂‖v̂_b − v_b‖² / ∂w_depth.
Matrix ae_backward(const TarbmParams& params, const AeForward& f, const Matrix& target,
                   std::size_t depth) {
    Matrix delta_v = f.recon - target;
    delta_v *= 2.0;
    if (params.static_.visible_kind == VisibleKind::binary) {
        for (std::size_t i = 0; i < delta_v.size(); ++i)
            delta_v[i] *= f.recon[i] * (1.0 - f.recon[i]);
    }
    Matrix delta_h = matmul(delta_v, params.static_.w);
    for (std::size_t i = 0; i < delta_h.size(); ++i) delta_h[i] *= f.h0[i] * (1.0 - f.h0[i]);
    return matmul_tn(delta_h, f.past[depth - 1]);
}

void check_depth(const TarbmParams& params, std::size_t depth) {
    if (depth < 1 || depth > params.order())
        throw DomainError("delay depth " + std::to_string(depth) + " outside 1.." +
                          std::to_string(params.order()));
}

std::vector<Matrix> window_history(const TarbmParams& params, const FrameWindow& window,
                                   std::size_t depth) {
    if (window.frames.rows() < depth + 1 || window.frames.cols() != params.visible())
        throw ShapeError("window " + window.frames.shape_string() + " too short for depth " +
                         std::to_string(depth));
    std::vector<Matrix> past;
    for (std::size_t d = 1; d <= depth; ++d)
        past.push_back(hidden_given_visible(params.static_, window.frames.row_copy(d)));
    return past;
}

}  // namespace

Matrix hidden_prior_mean(const TarbmParams& params, const Matrix& past_hiddens) {
    if (past_hiddens.rows() > params.order())
        throw ShapeError("hidden_prior_mean: " + std::to_string(past_hiddens.rows()) +
                         " past slices for a model of order " + std::to_string(params.order()));
    if (past_hiddens.rows() > 0 && past_hiddens.cols() != params.hidden())
        throw ShapeError("hidden_prior_mean: hidden width mismatch");
    std::vector<Matrix> past;
    for (std::size_t d = 0; d < past_hiddens.rows(); ++d) past.push_back(past_hiddens.row_copy(d));
    return sigmoid(dynamic_hidden_logits(params, past, past.size(), 1));
}

double ae_window_error(const TarbmParams& params, const FrameWindow& window, std::size_t depth) {
    check_depth(params, depth);
    const AeForward f = ae_forward(params, window_history(params, window, depth), depth);
    double e = 0.0;
    for (std::size_t i = 0; i < f.recon.size(); ++i) {
        const double d = f.recon[i] - window.frames(0, i);
        e += d * d;
    }
    return e;
}

Matrix ae_window_gradient(const TarbmParams& params, const FrameWindow& window, std::size_t depth) {
    check_depth(params, depth);
    const AeForward f = ae_forward(params, window_history(params, window, depth), depth);
    return ae_backward(params, f, window.frames.row_copy(0), depth);
}

double ae_dataset_error(const TarbmParams& params, const SequenceDataset& data, std::size_t depth) {
    check_depth(params, depth);
    const auto ends = window_ends(data, params.order());
    if (ends.empty()) throw DomainError("ae_dataset_error: no windows in dataset");
    const AeForward f = ae_forward(params, infer_history(params, data, ends, depth), depth);
    const Matrix target = gather_delay(data, ends, 0);
    double e = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = f.recon[i] - target[i];
        e += d * d;
    }
    return e / static_cast<double>(ends.size());
}

AeTrace ae_pretrain_delays(TarbmParams& params, const SequenceDataset& data,
                           const TrainSchedule& schedule, Rng& rng, const TrainHooks& hooks) {
    params.validate();
    schedule.validate();
    if (data.length() == 0) throw DomainError("ae_pretrain_delays: empty dataset");
    const auto ends = window_ends(data, params.order());
    if (ends.empty()) throw DomainError("ae_pretrain_delays: no windows of width M+1 in dataset");
    if (max_abs(params.static_.w) == 0.0)
        warn("ae_pretrain_delays: static weights are all zero; run static pretraining first");

    AeTrace trace;
    if (schedule.ae_epochs_per_delay == 0) return trace;

    // History hiddens depend only on the frozen static RBM.
    const std::vector<Matrix> all_past = infer_history(params, data, ends, params.order());

    for (std::size_t depth = 1; depth <= params.order(); ++depth) {
        std::vector<double> errors{ae_dataset_error(params, data, depth)};
        Matrix velocity(params.hidden(), params.hidden());
        for (std::size_t epoch = 0; epoch < schedule.ae_epochs_per_delay; ++epoch) {
            const auto order = seeded_permutation(ends.size(), rng);
            for (std::size_t start = 0; start < order.size(); start += schedule.minibatch_size) {
                const std::size_t n = std::min(schedule.minibatch_size, order.size() - start);
                std::vector<Matrix> past(depth, Matrix(n, params.hidden()));
                Matrix target(n, params.visible());
                for (std::size_t b = 0; b < n; ++b) {
                    const std::size_t idx = order[start + b];
                    for (std::size_t d = 0; d < depth; ++d) {
                        auto src = all_past[d].row_span(idx);
                        std::copy(src.begin(), src.end(), past[d].row_span(b).begin());
                    }
                    auto frame = data.frames.row_span(ends[idx]);
                    std::copy(frame.begin(), frame.end(), target.row_span(b).begin());
                }
                const AeForward f = ae_forward(params, std::move(past), depth);
                Matrix descent = ae_backward(params, f, target, depth);
                descent *= -1.0 / static_cast<double>(n);
                momentum_step(params.delayed[depth - 1], velocity, descent,
                              schedule.ae_learning_rate, schedule.ae_momentum, 0.0);
            }
            errors.push_back(ae_dataset_error(params, data, depth));
            hooks.epoch_done("ae", epoch, errors.back());
        }
        trace.per_delay.push_back(std::move(errors));
    }
    return trace;
}

double joint_cd_finetune(TarbmParams& params, const SequenceDataset& data,
                         const TrainSchedule& schedule, const CdConfig& cfg, Rng& rng,
                         const TrainHooks& hooks) {
    params.validate();
    schedule.validate();
    cfg.validate();
    if (data.length() == 0) throw DomainError("joint_cd_finetune: empty dataset");
    if (data.dims() != params.visible()) throw ShapeError("joint_cd_finetune: frame width mismatch");
    const std::size_t order = params.order();
    const auto ends = window_ends(data, order);
    if (ends.empty()) throw DomainError("joint_cd_finetune: no windows of width M+1 in dataset");

    RbmParams& st = params.static_;
    RbmVelocity velocity(st);
    std::vector<Matrix> delayed_velocity(order, Matrix(params.hidden(), params.hidden()));
    double last_error = 0.0;

    for (std::size_t epoch = 0; epoch < schedule.joint_epochs; ++epoch) {
        const auto perm = seeded_permutation(ends.size(), rng);
        double err = 0.0;
        for (std::size_t start = 0; start < perm.size(); start += schedule.minibatch_size) {
            const std::size_t n = std::min(schedule.minibatch_size, perm.size() - start);
            std::vector<std::size_t> batch_ends(n);
            for (std::size_t b = 0; b < n; ++b) batch_ends[b] = ends[perm[start + b]];

            const Matrix v0 = gather_delay(data, batch_ends, 0);
            const std::vector<Matrix> past = infer_history(params, data, batch_ends, order);
            const Matrix hidden_bias = dynamic_hidden_logits(params, past, order, n);
            const CdChain chain = run_cd_chain(st.w, st.visible_kind, v0,
                                               broadcast_rows(st.b_v, n), hidden_bias, cfg, rng);
            RbmGradient g = cd_gradient(v0, chain);
            add_sparsity_gradient(g, v0, chain.pos_hidden, cfg);

            const double inv = 1.0 / static_cast<double>(n);
            std::vector<Matrix> delayed_grad;
            delayed_grad.reserve(order);
            const Matrix hidden_diff = chain.pos_hidden - chain.neg_hidden;
            for (std::size_t d = 1; d <= order; ++d) {
                Matrix gd = matmul_tn(hidden_diff, past[d - 1]);
                gd *= inv;
                delayed_grad.push_back(std::move(gd));
            }

            // Static terms of the history slices.
            for (std::size_t d = 1; d <= order; ++d) {
                const Matrix vd = gather_delay(data, batch_ends, d);
                const CdChain hist = run_cd_chain(st.w, st.visible_kind, vd,
                                                  broadcast_rows(st.b_v, n),
                                                  broadcast_rows(st.b_h, n), cfg, rng);
                const RbmGradient gh = cd_gradient(vd, hist);
                g.w += gh.w;
                g.b_v += gh.b_v;
                g.b_h += gh.b_h;
            }

            apply_rbm_gradient(st, velocity, g, cfg, epoch);
            const double mom = cfg.momentum_at(epoch);
            for (std::size_t d = 0; d < order; ++d)
                momentum_step(params.delayed[d], delayed_velocity[d], delayed_grad[d],
                              cfg.learning_rate, mom, cfg.weight_decay);

            for (std::size_t i = 0; i < v0.size(); ++i) {
                const double diff = v0[i] - chain.neg_visible[i];
                err += diff * diff;
            }
        }
        last_error = err / static_cast<double>(ends.size());
        hooks.epoch_done("joint", epoch, last_error);
    }
    return last_error;
}

TarbmTrainResult train_temporal(TarbmParams& params, const SequenceDataset& data,
                                const TrainSchedule& schedule, const CdConfig& cfg,
                                bool autoencode, Rng& rng, const TrainHooks& hooks) {
    TarbmTrainResult result;
    train_rbm(params.static_, data.frames, cfg, schedule.static_epochs, schedule.minibatch_size, rng,
              hooks);
    result.static_done = true;
    if (autoencode && schedule.ae_epochs_per_delay > 0 && params.order() > 0) {
        result.ae_trace = ae_pretrain_delays(params, data, schedule, rng, hooks);
        result.ae_done = true;
    }
    joint_cd_finetune(params, data, schedule, cfg, rng, hooks);
    result.joint_done = true;
    return result;
}

Matrix predict_next(const TarbmParams& params, const Matrix& history) {
    const std::size_t order = params.order();
    if (history.rows() != order || (order > 0 && history.cols() != params.visible())) {
        throw ShapeError("predict_next: expected " + std::to_string(order) + "x" +
                         std::to_string(params.visible()) + " history, got " +
                         history.shape_string());
    }
    Matrix past_hiddens = order > 0 ? hidden_given_visible(params.static_, history)
                                    : Matrix(0, params.hidden());
    return visible_given_hidden(params.static_, hidden_prior_mean(params, past_hiddens));
}

Matrix generate(const TarbmParams& params, const Matrix& seed_history, std::size_t n_frames,
                Rng& rng, const GenerateOptions& options) {
    const std::size_t order = params.order();
    if (seed_history.rows() != order || (order > 0 && seed_history.cols() != params.visible()))
        throw ShapeError("generate: expected " + std::to_string(order) + " seed frames");
    Matrix out(n_frames, params.visible());
    Matrix history = seed_history;
    for (std::size_t t = 0; t < n_frames; ++t) {
        Matrix past = order > 0 ? hidden_given_visible(params.static_, history)
                                : Matrix(0, params.hidden());
        Matrix h0 = hidden_prior_mean(params, past);
        if (options.sample_hidden) h0 = sample_bernoulli(h0, rng);
        const Matrix frame = visible_given_hidden(params.static_, h0);
        std::copy(frame.data().begin(), frame.data().end(), out.row_span(t).begin());
        // Slide: the new frame becomes v¹.
        for (std::size_t d = order; d-- > 1;) {
            auto src = history.row_span(d - 1);
            std::copy(src.begin(), src.end(), history.row_span(d).begin());
        }
        if (order > 0) std::copy(frame.data().begin(), frame.data().end(), history.row_span(0).begin());
    }
    return out;
}

}  // namespace tarbm
