#include "tarbm/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tarbm {

std::string_view to_string(VisibleKind kind) noexcept {
    return kind == VisibleKind::binary ? "binary" : "gaussian";
}

VisibleKind parse_visible_kind(std::string_view text) {
    if (text == "binary") return VisibleKind::binary;
    if (text == "gaussian") return VisibleKind::gaussian;
    throw DomainError("unknown visible kind '" + std::string(text) + "'");
}

RbmParams RbmParams::init(std::size_t visible, std::size_t hidden, VisibleKind kind,
                          double init_stddev, Rng& rng) {
    RbmParams p;
    p.w = gaussian_init(visible, hidden, init_stddev, rng);
    p.b_v = Matrix(visible, 1);
    p.b_h = Matrix(hidden, 1);
    p.visible_kind = kind;
    return p;
}

void RbmParams::validate() const {
    if (b_v.size() != w.rows() || b_h.size() != w.cols()) {
        throw ShapeError("rbm params: w " + w.shape_string() + ", b_v " + b_v.shape_string() +
                         ", b_h " + b_h.shape_string() + " are inconsistent");
    }
    if (!all_finite(w) || !all_finite(b_v) || !all_finite(b_h)) {
        throw DomainError("rbm params contain non-finite values");
    }
}

void CdConfig::validate() const {
    if (k < 1) throw DomainError("cd: k must be >= 1");
    if (!(learning_rate >= 0.0)) throw DomainError("cd: learning_rate must be >= 0");
    if (!(sparsity_target >= 0.0 && sparsity_target <= 1.0))
        throw DomainError("cd: sparsity_target must be in [0, 1]");
    if (!(sparsity_weight >= 0.0)) throw DomainError("cd: sparsity_weight must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("cd: momentum must be in [0, 1)");
    if (!(initial_momentum >= 0.0 && initial_momentum < 1.0))
        throw DomainError("cd: initial_momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw DomainError("cd: weight_decay must be >= 0");
}

double energy(const RbmParams& params, const Matrix& v, const Matrix& h) {
    const std::size_t nv = params.visible(), nh = params.hidden();
    if (v.size() != nv || h.size() != nh) {
        throw ShapeError("energy: v " + v.shape_string() + " and h " + h.shape_string() +
                         " do not match a " + params.w.shape_string() + " model");
    }
    double interaction = 0.0;
    for (std::size_t i = 0; i < nv; ++i) {
        if (v[i] == 0.0) continue;
        interaction += v[i] * dot(params.w.row_span(i), h.data());
    }
    const double hidden_term = dot(params.b_h.data(), h.data());
    if (params.visible_kind == VisibleKind::binary) {
        return -interaction - dot(params.b_v.data(), v.data()) - hidden_term;
    }
    double quad = 0.0;
    for (std::size_t i = 0; i < nv; ++i) {
        const double d = v[i] - params.b_v[i];
        quad += d * d;
    }
    return 0.5 * quad - interaction - hidden_term;
}

double free_energy(const RbmParams& params, std::span<const double> v) {
    if (v.size() != params.visible()) throw ShapeError("free_energy: visible length mismatch");
    double visible_term;
    if (params.visible_kind == VisibleKind::binary) {
        visible_term = -dot(params.b_v.data(), v);
    } else {
        visible_term = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = v[i] - params.b_v[i];
            visible_term += 0.5 * d * d;
        }
    }
    double hidden_term = 0.0;
    for (std::size_t j = 0; j < params.hidden(); ++j) {
        double logit = params.b_h[j];
        for (std::size_t i = 0; i < v.size(); ++i) logit += v[i] * params.w(i, j);
        hidden_term += softplus(logit);
    }
    return visible_term - hidden_term;
}

Matrix hidden_given_visible(const RbmParams& params, const Matrix& v) {
    Matrix logits = matmul(v, params.w);
    add_row_broadcast(logits, params.b_h);
    return sigmoid(logits);
}

Matrix visible_given_hidden(const RbmParams& params, const Matrix& h) {
    Matrix mean = matmul_nt(h, params.w);
    add_row_broadcast(mean, params.b_v);
    if (params.visible_kind == VisibleKind::binary) return sigmoid(mean);
    return mean;
}

Matrix broadcast_rows(const Matrix& bias, std::size_t rows) {
    Matrix out(rows, bias.size());
    add_row_broadcast(out, bias);
    return out;
}

CdChain run_cd_chain(const Matrix& w, VisibleKind kind, const Matrix& v0,
                     const Matrix& visible_bias_rows, const Matrix& hidden_bias_rows,
                     const CdConfig& cfg, Rng& rng) {
    if (v0.cols() != w.rows()) {
        throw ShapeError("cd: minibatch " + v0.shape_string() + " does not match weights " +
                         w.shape_string());
    }
    require_same_shape(v0, visible_bias_rows, "cd visible bias");
    if (hidden_bias_rows.rows() != v0.rows() || hidden_bias_rows.cols() != w.cols()) {
        throw ShapeError("cd: hidden bias rows " + hidden_bias_rows.shape_string() +
                         " do not match batch");
    }
    auto hidden_probs = [&](const Matrix& v) {
        Matrix logits = matmul(v, w);
        logits += hidden_bias_rows;
        return sigmoid(logits);
    };

    CdChain chain;
    chain.pos_hidden = hidden_probs(v0);
    Matrix h = sample_bernoulli(chain.pos_hidden, rng);
    for (std::size_t step = 0; step < cfg.k; ++step) {
        Matrix mean = matmul_nt(h, w);
        mean += visible_bias_rows;
        Matrix v;
        if (kind == VisibleKind::binary) {
            v = sample_bernoulli(sigmoid(mean), rng);
        } else if (cfg.sample_gaussian_visible) {
            v = std::move(mean);
            for (double& x : v.data()) x += rng.normal();
        } else {
            v = std::move(mean);
        }
        Matrix hp = hidden_probs(v);
        if (step + 1 == cfg.k) {
            chain.neg_visible = std::move(v);
            chain.neg_hidden = std::move(hp);
        } else {
            h = sample_bernoulli(hp, rng);
        }
    }
    return chain;
}

void add_sparsity_gradient(RbmGradient& grad, const Matrix& v0, const Matrix& pos_hidden,
                           const CdConfig& cfg) {
    if (cfg.sparsity_weight == 0.0) return;
    const std::size_t batch = v0.rows();
    const double inv = 1.0 / static_cast<double>(batch);
    const Matrix q = column_means(pos_hidden);
    // d/dθ of (q_j − target)² with q_j = mean_b σ(logit_bj).
    Matrix slope(batch, pos_hidden.cols());
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < pos_hidden.cols(); ++j) {
            const double p = pos_hidden(b, j);
            slope(b, j) = p * (1.0 - p);
        }
    }
    Matrix coeff(1, pos_hidden.cols());
    for (std::size_t j = 0; j < coeff.size(); ++j)
        coeff[j] = -2.0 * cfg.sparsity_weight * (q[j] - cfg.sparsity_target) * inv;
    Matrix weighted = slope;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < weighted.cols(); ++j) weighted(b, j) *= coeff[j];
    grad.w += matmul_tn(v0, weighted);
    for (std::size_t j = 0; j < grad.b_h.size(); ++j) {
        double s = 0.0;
        for (std::size_t b = 0; b < batch; ++b) s += weighted(b, j);
        grad.b_h[j] += s;
    }
}

RbmGradient cd_gradient(const Matrix& v0, const CdChain& chain) {
    const double inv = 1.0 / static_cast<double>(v0.rows());
    RbmGradient g;
    g.w = matmul_tn(v0, chain.pos_hidden);
    g.w -= matmul_tn(chain.neg_visible, chain.neg_hidden);
    g.w *= inv;
    g.b_v = column_means(v0) - column_means(chain.neg_visible);
    g.b_h = column_means(chain.pos_hidden) - column_means(chain.neg_hidden);
    return g;
}

RbmGradient cd_update(const RbmParams& params, const Matrix& minibatch, const CdConfig& cfg,
                      Rng& rng) {
    if (minibatch.rows() == 0) throw DomainError("cd_update: empty minibatch");
    const CdChain chain =
        run_cd_chain(params.w, params.visible_kind, minibatch,
                     broadcast_rows(params.b_v, minibatch.rows()),
                     broadcast_rows(params.b_h, minibatch.rows()), cfg, rng);
    RbmGradient g = cd_gradient(minibatch, chain);
    add_sparsity_gradient(g, minibatch, chain.pos_hidden, cfg);
    return g;
}

void apply_rbm_gradient(RbmParams& params, RbmVelocity& velocity, const RbmGradient& grad,
                        const CdConfig& cfg, std::size_t epoch) {
    const double mom = cfg.momentum_at(epoch);
    momentum_step(params.w, velocity.w, grad.w, cfg.learning_rate, mom, cfg.weight_decay);
    momentum_step(params.b_v, velocity.b_v, grad.b_v, cfg.learning_rate, mom, 0.0);
    momentum_step(params.b_h, velocity.b_h, grad.b_h, cfg.learning_rate, mom, 0.0);
}

double train_rbm(RbmParams& params, const Matrix& frames, const CdConfig& cfg, std::size_t epochs,
                 std::size_t batch_size, Rng& rng, const TrainHooks& hooks) {
    params.validate();
    cfg.validate();
    if (frames.rows() == 0) throw DomainError("train_rbm: empty dataset");
    if (frames.cols() != params.visible()) throw ShapeError("train_rbm: frame width mismatch");
    if (batch_size == 0) throw DomainError("train_rbm: batch size must be >= 1");

    RbmVelocity velocity(params);
    double last_error = 0.0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const auto order = seeded_permutation(frames.rows(), rng);
        double err = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t n = std::min(batch_size, order.size() - start);
            Matrix batch(n, frames.cols());
            for (std::size_t b = 0; b < n; ++b) {
                auto src = frames.row_span(order[start + b]);
                std::copy(src.begin(), src.end(), batch.row_span(b).begin());
            }
            const CdChain chain = run_cd_chain(params.w, params.visible_kind, batch,
                                               broadcast_rows(params.b_v, n),
                                               broadcast_rows(params.b_h, n), cfg, rng);
            RbmGradient g = cd_gradient(batch, chain);
            add_sparsity_gradient(g, batch, chain.pos_hidden, cfg);
            apply_rbm_gradient(params, velocity, g, cfg, epoch);
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const double d = batch[i] - chain.neg_visible[i];
                err += d * d;
            }
        }
        last_error = err / static_cast<double>(frames.rows());
        hooks.epoch_done("static", epoch, last_error);
    }
    return last_error;
}

// ---------------------------------------------------------------------------

namespace {

void require_enumerable(const RbmParams& params) {
    params.validate();
    if (params.visible_kind != VisibleKind::binary)
        throw DomainError("exact oracles require binary visible units");
    if (params.visible() + params.hidden() > kMaxEnumerationBits) {
        throw CapacityError("exact oracles need V + H <= " + std::to_string(kMaxEnumerationBits) +
                            ", got " + std::to_string(params.visible() + params.hidden()));
    }
}

Matrix bits(std::size_t state, std::size_t n) {
    Matrix out(n, 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>((state >> i) & 1U);
    return out;
}

double log_sum_exp(const std::vector<double>& xs) {
    const double m = *std::max_element(xs.begin(), xs.end());
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

double log_hidden_sum(const RbmParams& params, const Matrix& v) {
    const std::size_t nh = params.hidden();
    std::vector<double> terms(std::size_t{1} << nh);
    for (std::size_t s = 0; s < terms.size(); ++s) terms[s] = -energy(params, v, bits(s, nh));
    return log_sum_exp(terms);
}

}  // namespace

double exact_log_partition(const RbmParams& params) {
    require_enumerable(params);
    const std::size_t nv = params.visible(), nh = params.hidden();
    std::vector<double> terms;
    terms.reserve(std::size_t{1} << (nv + nh));
    for (std::size_t sv = 0; sv < (std::size_t{1} << nv); ++sv) {
        const Matrix v = bits(sv, nv);
        for (std::size_t sh = 0; sh < (std::size_t{1} << nh); ++sh)
            terms.push_back(-energy(params, v, bits(sh, nh)));
    }
    return log_sum_exp(terms);
}

double exact_log_likelihood(const RbmParams& params, const Matrix& data) {
    require_enumerable(params);
    if (data.cols() != params.visible()) throw ShapeError("exact_log_likelihood: width mismatch");
    const double log_z = exact_log_partition(params);
    double total = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        total += log_hidden_sum(params, data.row_copy(r)) - log_z;
    }
    return total;
}

RbmGradient exact_gradient(const RbmParams& params, const Matrix& data) {
    require_enumerable(params);
    if (data.cols() != params.visible()) throw ShapeError("exact_gradient: width mismatch");
    const std::size_t nv = params.visible(), nh = params.hidden();
    const double n = static_cast<double>(data.rows());

    RbmGradient g{Matrix(nv, nh), Matrix(nv, 1), Matrix(nh, 1)};
    // Data term: E[h | v] is exact for each observed v.
    const Matrix hd = hidden_given_visible(params, data);
    g.w += matmul_tn(data, hd);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t i = 0; i < nv; ++i) g.b_v[i] += data(r, i);
        for (std::size_t j = 0; j < nh; ++j) g.b_h[j] += hd(r, j);
    }

    // Model term: p(v) ∝ exp(-F(v)) over every visible state.
    const std::size_t states = std::size_t{1} << nv;
    std::vector<double> neg_f(states);
    for (std::size_t s = 0; s < states; ++s) neg_f[s] = -free_energy(params, bits(s, nv).data());
    const double log_z = log_sum_exp(neg_f);
    for (std::size_t s = 0; s < states; ++s) {
        const double p = std::exp(neg_f[s] - log_z);
        const Matrix v = bits(s, nv);
        const Matrix h = hidden_given_visible(params, v.reshaped(1, nv));
        for (std::size_t i = 0; i < nv; ++i) {
            if (v[i] == 0.0) continue;
            g.b_v[i] -= n * p;
            for (std::size_t j = 0; j < nh; ++j) g.w(i, j) -= n * p * h[j];
        }
        for (std::size_t j = 0; j < nh; ++j) g.b_h[j] -= n * p * h[j];
    }
    return g;
}

}  // namespace tarbm
