#include "tarbm/crbm.hpp"

#include <algorithm>

namespace tarbm {

CrbmParams CrbmParams::init(std::size_t visible, std::size_t hidden, std::size_t order,
                            VisibleKind kind, double init_stddev, Rng& rng) {
    if (order < 1) throw DomainError("crbm: order must be >= 1");
    CrbmParams p;
    p.static_ = RbmParams::init(visible, hidden, kind, init_stddev, rng);
    p.autoregressive.assign(order, Matrix(visible, visible));
    p.history_to_hidden.assign(order, Matrix(visible, hidden));
    return p;
}

void CrbmParams::validate() const {
    static_.validate();
    if (order() < 1) throw DomainError("crbm: order must be >= 1");
    if (history_to_hidden.size() != autoregressive.size())
        throw ShapeError("crbm: A and B delay counts differ");
    for (std::size_t d = 0; d < order(); ++d) {
        const Matrix& a = autoregressive[d];
        const Matrix& b = history_to_hidden[d];
        if (a.rows() != visible() || a.cols() != visible())
            throw ShapeError("crbm: A_" + std::to_string(d + 1) + " is " + a.shape_string());
        if (b.rows() != visible() || b.cols() != hidden())
            throw ShapeError("crbm: B_" + std::to_string(d + 1) + " is " + b.shape_string());
        if (!all_finite(a) || !all_finite(b)) throw DomainError("crbm: non-finite weights");
    }
}

DynamicBiases dynamic_biases(const CrbmParams& params, const std::vector<Matrix>& history) {
    if (history.size() != params.order())
        throw ShapeError("dynamic_biases: expected " + std::to_string(params.order()) +
                         " history frames, got " + std::to_string(history.size()));
    const std::size_t batch = history.front().rows();
    DynamicBiases out{broadcast_rows(params.static_.b_v, batch),
                      broadcast_rows(params.static_.b_h, batch)};
    for (std::size_t d = 0; d < history.size(); ++d) {
        if (history[d].rows() != batch || history[d].cols() != params.visible())
            throw ShapeError("dynamic_biases: history frame " + history[d].shape_string());
        out.visible += matmul(history[d], params.autoregressive[d]);
        out.hidden += matmul(history[d], params.history_to_hidden[d]);
    }
    return out;
}

namespace {

std::vector<Matrix> split_history(const CrbmParams& params, const Matrix& history) {
    if (history.rows() != params.order() || history.cols() != params.visible())
        throw ShapeError("crbm: expected " + std::to_string(params.order()) + "x" +
                         std::to_string(params.visible()) + " history, got " +
                         history.shape_string());
    std::vector<Matrix> out;
    for (std::size_t d = 0; d < history.rows(); ++d) out.push_back(history.row_copy(d));
    return out;
}

std::vector<Matrix> repeat_history(const CrbmParams& params, const Matrix& history,
                                   std::size_t batch) {
    std::vector<Matrix> out = split_history(params, history);
    for (Matrix& m : out) m = broadcast_rows(m, batch);
    return out;
}

}  // namespace

DynamicBiases dynamic_biases(const CrbmParams& params, const Matrix& history) {
    return dynamic_biases(params, split_history(params, history));
}

RbmParams conditioned_rbm(const CrbmParams& params, const Matrix& history) {
    const DynamicBiases dyn = dynamic_biases(params, history);
    RbmParams out = params.static_;
    out.b_v = dyn.visible.reshaped(params.visible(), 1);
    out.b_h = dyn.hidden.reshaped(params.hidden(), 1);
    return out;
}

Matrix crbm_hidden_given_visible(const CrbmParams& params, const Matrix& history, const Matrix& v) {
    const DynamicBiases dyn = dynamic_biases(params, repeat_history(params, history, v.rows()));
    Matrix logits = matmul(v, params.static_.w);
    logits += dyn.hidden;
    return sigmoid(logits);
}

Matrix crbm_visible_given_hidden(const CrbmParams& params, const Matrix& history, const Matrix& h) {
    const DynamicBiases dyn = dynamic_biases(params, repeat_history(params, history, h.rows()));
    Matrix mean = matmul_nt(h, params.static_.w);
    mean += dyn.visible;
    if (params.static_.visible_kind == VisibleKind::binary) return sigmoid(mean);
    return mean;
}

Matrix predict_next(const CrbmParams& params, const Matrix& history) {
    const DynamicBiases dyn = dynamic_biases(params, history);
    const Matrix h = sigmoid(dyn.hidden);
    Matrix mean = matmul_nt(h, params.static_.w);
    mean += dyn.visible;
    if (params.static_.visible_kind == VisibleKind::binary) return sigmoid(mean);
    return mean;
}

double crbm_cd_train(CrbmParams& params, const SequenceDataset& data, const CdConfig& cfg,
                     std::size_t epochs, std::size_t batch_size, Rng& rng,
                     const TrainHooks& hooks) {
    params.validate();
    cfg.validate();
    if (data.length() == 0) throw DomainError("crbm_cd_train: empty dataset");
    if (data.dims() != params.visible()) throw ShapeError("crbm_cd_train: frame width mismatch");
    if (batch_size == 0) throw DomainError("crbm_cd_train: batch size must be >= 1");
    const std::size_t order = params.order();
    const auto ends = window_ends(data, order);
    if (ends.empty()) throw DomainError("crbm_cd_train: no windows of width M+1 in dataset");

    RbmParams& st = params.static_;
    RbmVelocity velocity(st);
    std::vector<Matrix> a_velocity(order, Matrix(params.visible(), params.visible()));
    std::vector<Matrix> b_velocity(order, Matrix(params.visible(), params.hidden()));
    double last_error = 0.0;

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const auto perm = seeded_permutation(ends.size(), rng);
        double err = 0.0;
        for (std::size_t start = 0; start < perm.size(); start += batch_size) {
            const std::size_t n = std::min(batch_size, perm.size() - start);
            std::vector<std::size_t> batch_ends(n);
            for (std::size_t b = 0; b < n; ++b) batch_ends[b] = ends[perm[start + b]];

            const Matrix v0 = gather_delay(data, batch_ends, 0);
            std::vector<Matrix> history;
            for (std::size_t d = 1; d <= order; ++d) history.push_back(gather_delay(data, batch_ends, d));
            const DynamicBiases dyn = dynamic_biases(params, history);
            const CdChain chain = run_cd_chain(st.w, st.visible_kind, v0, dyn.visible, dyn.hidden, cfg, rng);
            RbmGradient g = cd_gradient(v0, chain);
            add_sparsity_gradient(g, v0, chain.pos_hidden, cfg);

            const double inv = 1.0 / static_cast<double>(n);
            const Matrix visible_diff = v0 - chain.neg_visible;
            const Matrix hidden_diff = chain.pos_hidden - chain.neg_hidden;
            const double mom = cfg.momentum_at(epoch);
            apply_rbm_gradient(st, velocity, g, cfg, epoch);
            for (std::size_t d = 0; d < order; ++d) {
                Matrix ga = matmul_tn(history[d], visible_diff);
                ga *= inv;
                Matrix gb = matmul_tn(history[d], hidden_diff);
                gb *= inv;
                momentum_step(params.autoregressive[d], a_velocity[d], ga, cfg.learning_rate, mom,
                              cfg.weight_decay);
                momentum_step(params.history_to_hidden[d], b_velocity[d], gb, cfg.learning_rate,
                              mom, cfg.weight_decay);
            }
            for (double x : visible_diff.data()) err += x * x;
        }
        last_error = err / static_cast<double>(ends.size());
        hooks.epoch_done("crbm", epoch, last_error);
    }
    return last_error;
}

}  // namespace tarbm
