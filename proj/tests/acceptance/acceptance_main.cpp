// Acceptance checks 1–11. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/test_util.hpp"
#include "tarbm/bench.hpp"
#include "tarbm/crbm.hpp"
#include "tarbm/data.hpp"
#include "tarbm/image.hpp"
#include "tarbm/model_file.hpp"
#include "tarbm/rbm.hpp"
#include "tarbm/tarbm.hpp"
#include "tarbm/viz.hpp"

using namespace tarbm;
using namespace tarbm::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Matrix history_for(const SequenceDataset& data, std::size_t end, std::size_t order) {
    Matrix h(order, data.dims());
    for (std::size_t d = 1; d <= order; ++d) {
        auto src = data.frames.row_span(end - d);
        std::copy(src.begin(), src.end(), h.row_span(d - 1).begin());
    }
    return h;
}

// 1. exact gradient vs central differences of the exact log-likelihood
Outcome gradient_oracle() {
    Rng rng(101);
    RbmParams p = random_rbm(5, 4, VisibleKind::binary, rng);
    const Matrix data = random_binary(20, 5, rng);
    const RbmGradient g = exact_gradient(p, data);
    const double h = 1e-5;
    double worst = 0.0;
    auto check = [&](Matrix& param, const Matrix& analytic) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double saved = param[i];
            param[i] = saved + h;
            const double up = exact_log_likelihood(p, data);
            param[i] = saved - h;
            const double down = exact_log_likelihood(p, data);
            param[i] = saved;
            worst = std::max(worst, rel_err(analytic[i], (up - down) / (2 * h), 1e-3));
        }
    };
    check(p.w, g.w);
    check(p.b_v, g.b_v);
    check(p.b_h, g.b_h);
    return {worst < 1e-5, fmt("max relative error %.3e (limit 1e-05)", worst)};
}

// 2. e^{-F(v)} against the hidden-state sum on random tiny models
Outcome free_energy_identity() {
    Rng rng(202);
    double worst = 0.0;
    for (int m = 0; m < 100; ++m) {
        const std::size_t nv = 1 + rng.uniform_index(6), nh = 1 + rng.uniform_index(6);
        const auto kind = m % 2 ? VisibleKind::binary : VisibleKind::gaussian;
        const RbmParams p = random_rbm(nv, nh, kind, rng, 2.0);
        const Matrix v = kind == VisibleKind::binary ? random_binary(1, nv, rng) : random_matrix(1, nv, rng, 2.0);
        const std::vector<double> vv(v.data().begin(), v.data().end());
        const double lhs = -free_energy(p, v.data());
        const double rhs = brute_log_unnormalized(p, vv);
        worst = std::max(worst, std::abs(std::expm1(lhs - rhs)));
    }
    return {worst < 1e-10, fmt("max relative deviation %.3e over 100 models (limit 1e-10)", worst)};
}

// 3. joint energy with zero delayed weights is the sum of slice energies
Outcome energy_reduction() {
    Rng rng(303);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 1 + rng.uniform_index(4), nv = 1 + rng.uniform_index(5), nh = 1 + rng.uniform_index(5);
        TarbmParams p;
        p.static_ = random_rbm(nv, nh, trial % 2 ? VisibleKind::binary : VisibleKind::gaussian, rng);
        p.delayed.assign(m, Matrix(nh, nh));
        const Matrix v = random_matrix(m + 1, nv, rng), hid = random_binary(m + 1, nh, rng);
        double expected = 0.0;
        for (std::size_t i = 0; i <= m; ++i) expected += energy(p.static_, v.row_copy(i), hid.row_copy(i));
        if (joint_energy(p, v, hid) != expected) ++mismatches;
    }
    return {mismatches == 0, fmt("%zu of 1000 instances differ", mismatches)};
}

// 4. autoencoding gradient vs finite differences
Outcome ae_gradient() {
    Rng rng(404);
    TarbmParams p;
    p.static_ = random_rbm(4, 3, VisibleKind::gaussian, rng);
    p.delayed = {random_matrix(3, 3, rng), random_matrix(3, 3, rng)};
    const FrameWindow window{random_matrix(3, 4, rng)};
    double worst = 0.0;
    for (std::size_t depth = 1; depth <= 2; ++depth) {
        const Matrix g = ae_window_gradient(p, window, depth);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double saved = p.delayed[depth - 1][i];
            p.delayed[depth - 1][i] = saved + 1e-6;
            const double up = ae_window_error(p, window, depth);
            p.delayed[depth - 1][i] = saved - 1e-6;
            const double down = ae_window_error(p, window, depth);
            p.delayed[depth - 1][i] = saved;
            worst = std::max(worst, rel_err(g[i], (up - down) / 2e-6, 1e-6));
        }
    }
    return {worst < 1e-4, fmt("max relative error %.3e (limit 1e-04)", worst)};
}

double prediction_error(const TarbmParams& p, const SequenceDataset& data) {
    double total = 0.0;
    const auto ends = window_ends(data, p.order());
    for (std::size_t e : ends) {
        const Matrix pred = predict_next(p, history_for(data, e, p.order()));
        for (std::size_t i = 0; i < pred.size(); ++i) total += (pred[i] - data.frames(e, i)) * (pred[i] - data.frames(e, i));
    }
    return total / static_cast<double>(ends.size());
}

// 5. autoencoding halves the one-step prediction error on cyclic shifts
Outcome ae_efficacy() {
    int passed = 0;
    std::string ratios;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        SynthParams sp;
        sp.kind = SynthKind::cyclic_shift;
        sp.dims = 8;
        sp.length = 200;
        const SequenceDataset data = contrast_normalize(synth_generate(sp, rng));
        TarbmParams p = TarbmParams::init(8, 8, 1, VisibleKind::gaussian, 0.01, rng);
        CdConfig cd;
        cd.learning_rate = 0.01;
        train_rbm(p.static_, data.frames, cd, 100, 10, rng);
        const double before = prediction_error(p, data);
        TrainSchedule s;
        s.ae_epochs_per_delay = 200;
        s.ae_learning_rate = 0.1;
        s.minibatch_size = 10;
        ae_pretrain_delays(p, data, s, rng);
        const double ratio = prediction_error(p, data) / before;
        if (ratio <= 0.5) ++passed;
        ratios += fmt(" %.2f", ratio);
    }
    return {passed >= 8, fmt("%d/10 seeds reach <= 0.5 of the initial error; ratios", passed) + ratios};
}

// 6. TARBM beats TRBM on sinusoid mixtures; CRBM reported alongside
Outcome ordering() {
    int passed = 0;
    std::size_t crbm_rank_sum = 0;
    std::string rows;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        SynthParams sp;
        sp.kind = SynthKind::sinusoid_mixture;
        sp.dims = 10;
        sp.length = 2400;
        Rng data_rng = rng.split();
        const SequenceDataset data = synth_generate(sp, data_rng);
        Protocol p;
        p.train_count = 2000;
        p.test_snippets = 200;
        p.repetitions = 1;
        p.hidden_units = 20;
        p.delay = 3;
        BenchSettings s;
        s.cd.learning_rate = 0.01;
        s.cd.sparsity_weight = 0.1;
        s.schedule.static_epochs = 100;
        s.schedule.ae_epochs_per_delay = 50;
        s.schedule.joint_epochs = 100;
        s.schedule.ae_learning_rate = 0.01;
        s.schedule.minibatch_size = 100;
        s.crbm_epochs = 200;
        const BenchReport r = run_prediction_bench(data, p, standard_bench_models(), s, rng);
        const double trbm = r.models[0].mse, crbm = r.models[1].mse, tarbm = r.models[2].mse;
        if (tarbm < trbm) ++passed;
        crbm_rank_sum += 1 + (trbm < crbm) + (tarbm < crbm);
        rows += fmt("\n    seed %2llu  TRBM %.4f  CRBM %.4f  TARBM %.4f", static_cast<unsigned long long>(seed), trbm,
                    crbm, tarbm);
    }
    return {passed >= 8, fmt("TARBM < TRBM in %d/10 seeds; CRBM mean rank %.1f of 3", passed,
                             static_cast<double>(crbm_rank_sum) / 10.0) + rows};
}

// 7. ZCA decorrelates a correlated gaussian patch set. Pixels of each 4×4
// patch follow a separable AR(1) field: correlation 0.6^(|dx|+|dy|).
Outcome whitening() {
    Rng rng(707);
    const std::size_t edge = 4, v = edge * edge;
    const double rho = 0.6, innov = std::sqrt(1.0 - rho * rho);
    Matrix x(5000, v);
    for (std::size_t n = 0; n < x.rows(); ++n) {
        auto px = x.row_span(n);
        for (double& e : px) e = rng.normal();
        for (std::size_t r = 0; r < edge; ++r)
            for (std::size_t c = 1; c < edge; ++c) px[r * edge + c] = rho * px[r * edge + c - 1] + innov * px[r * edge + c];
        for (std::size_t r = 1; r < edge; ++r)
            for (std::size_t c = 0; c < edge; ++c) px[r * edge + c] = rho * px[(r - 1) * edge + c] + innov * px[r * edge + c];
    }
    const SequenceDataset patches = SequenceDataset::single(x);
    const Matrix cov = covariance(apply_zca(fit_zca(patches, 1e-8), patches).frames);
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
        diag += cov(i, i) / static_cast<double>(v);
        for (std::size_t j = 0; j < v; ++j)
            if (i != j) off = std::max(off, std::abs(cov(i, j)));
    }
    return {off < 1e-6 * diag, fmt("max |off-diagonal| %.3e, mean diagonal %.6f", off, diag)};
}

// Score of a path by direct summation over its ancestors, root first.
double path_score(const TarbmParams& p, const std::vector<std::size_t>& path, std::size_t candidate) {
    const std::size_t k = path.size();
    double s = 0.0;
    for (std::size_t a = 0; a < k; ++a) s += p.delayed[k - a - 1](candidate, path[a]);
    return s;
}

// 8. forward projection on a planted permutation and against enumeration
Outcome projection() {
    Rng rng(808);
    const std::size_t h = 6, m = 3;
    const std::vector<std::size_t> perm{3, 5, 0, 1, 2, 4};
    TarbmParams p;
    p.static_ = random_rbm(4, h, VisibleKind::gaussian, rng);
    for (std::size_t d = 0; d < m; ++d) p.delayed.push_back(random_matrix(h, h, rng, 0.1));
    for (std::size_t k = 0; k < h; ++k) p.delayed[0](perm[k], k) += 1.0;

    bool followed = true;
    for (std::size_t root = 0; root < h; ++root) {
        std::vector<std::size_t> expected{root};
        for (std::size_t k = 0; k < m; ++k) expected.push_back(perm[expected.back()]);
        followed = followed && forward_projection(p, root, 1).path_to(m, 0) == expected;
    }

    // n = H keeps every candidate, so each branch must list all units ordered
    // by the enumerated score.
    bool exhaustive = true;
    const ProjectionTrace t = forward_projection(p, 2, h);
    for (std::size_t k = 1; k <= m; ++k) {
        exhaustive = exhaustive && t.levels[k].size() == static_cast<std::size_t>(std::pow(h, k));
        for (std::size_t b = 0; b < t.levels[k - 1].size(); ++b) {
            const auto prefix = t.path_to(k - 1, b);
            std::vector<std::pair<double, std::size_t>> oracle;
            for (std::size_t j = 0; j < h; ++j) oracle.emplace_back(path_score(p, prefix, j), j);
            std::stable_sort(oracle.begin(), oracle.end(),
                             [](const auto& x, const auto& y) { return x.first > y.first; });
            for (std::size_t c = 0; c < h; ++c) {
                const TraceNode& node = t.levels[k][b * h + c];
                exhaustive = exhaustive && node.unit == oracle[c].second && node.score == oracle[c].first &&
                             node.parent == b;
            }
        }
    }
    return {followed && exhaustive,
            fmt("planted path %s; n=H scores %s", followed ? "followed" : "missed", exhaustive ? "exact" : "differ")};
}

std::string model_bytes(const ModelFile& m) {
    std::ostringstream out(std::ios::binary);
    write_model(out, m);
    return out.str();
}

// 9. identical seeds give identical model files; save/load is exact
Outcome determinism() {
    Rng rng(909);
    SynthParams sp;
    sp.kind = SynthKind::sinusoid_mixture;
    sp.dims = 5;
    sp.length = 200;
    const SequenceDataset data = synth_generate(sp, rng);
    RunConfig c;
    c.seed = 9;
    c.hidden = 8;
    c.delay = 3;
    c.schedule.static_epochs = 10;
    c.schedule.ae_epochs_per_delay = 10;
    c.schedule.joint_epochs = 10;
    c.schedule.minibatch_size = 20;
    c.crbm_epochs = 10;
    const fs::path dir = fs::temp_directory_path() / "tarbm_acceptance_models";
    fs::create_directories(dir);
    bool same = true, exact = true;
    for (ModelKind kind : {ModelKind::rbm, ModelKind::trbm, ModelKind::tarbm, ModelKind::crbm}) {
        const ModelFile a = train_model(c, data, kind), b = train_model(c, data, kind);
        same = same && model_bytes(a) == model_bytes(b);
        const fs::path path = dir / (std::string(to_string(kind)) + ".bin");
        save_model(path, a);
        const ModelFile back = load_model(path);
        exact = exact && back == a && model_bytes(back) == model_bytes(a);
    }
    return {same && exact, fmt("repeat runs %s; load(save(m)) %s", same ? "byte-identical" : "differ",
                               exact ? "bit-exact" : "differs")};
}

// 10. CRBM inference equals a static RBM carrying the dynamic biases
Outcome conditioning() {
    Rng rng(1010);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t nv = 1 + rng.uniform_index(6), nh = 1 + rng.uniform_index(6), m = 1 + rng.uniform_index(3);
        CrbmParams p;
        p.static_ = random_rbm(nv, nh, trial % 2 ? VisibleKind::binary : VisibleKind::gaussian, rng);
        for (std::size_t d = 0; d < m; ++d) {
            p.autoregressive.push_back(random_matrix(nv, nv, rng));
            p.history_to_hidden.push_back(random_matrix(nv, nh, rng));
        }
        const Matrix history = random_matrix(m, nv, rng);
        const DynamicBiases bias = dynamic_biases(p, history);
        RbmParams fixed = p.static_;
        fixed.b_v = bias.visible.reshaped(nv, 1);
        fixed.b_h = bias.hidden.reshaped(nh, 1);
        const Matrix v = random_matrix(4, nv, rng), hid = random_binary(4, nh, rng);
        if (!(hidden_given_visible(fixed, v) == crbm_hidden_given_visible(p, history, v)) ||
            !(visible_given_hidden(fixed, hid) == crbm_visible_given_hidden(p, history, hid)))
            ++mismatches;
    }
    return {mismatches == 0, fmt("%zu of 1000 instances differ", mismatches)};
}

double tile_variance(const Image& img, std::size_t edge, std::size_t tiles_down) {
    // Variance across tiles of each pixel, summed; tiles stacked vertically.
    double total = 0.0;
    for (std::size_t y = 0; y < edge; ++y)
        for (std::size_t x = 0; x < edge; ++x) {
            double mean = 0.0, sq = 0.0;
            for (std::size_t t = 0; t < tiles_down; ++t) {
                const double g = img.at(x, t * (edge + 1) + y);
                mean += g;
                sq += g * g;
            }
            mean /= static_cast<double>(tiles_down);
            total += sq / static_cast<double>(tiles_down) - mean * mean;
        }
    return total;
}

// 11. movie → patches → whitening → TARBM → filter and trace images
Outcome movie_pipeline() {
    const fs::path dir = fs::temp_directory_path() / "tarbm_acceptance_movie";
    fs::remove_all(dir);
    save_pgm_directory(translating_bar_movie(60, 16, 16, 3, 1), dir / "frames");
    const Movie movie = load_pgm_directory(dir / "frames");

    Rng rng(1111);
    PatchSpec spec;
    spec.patch_edge = 8;
    spec.frames_per_sequence = 10;
    spec.max_samples = 286;  // 286 · (10 − 3) = 2002 windows
    SequenceDataset data = contrast_normalize(extract_patch_sequences(movie, spec, rng));
    data = apply_zca(fit_zca(data, 1e-2), data);
    const std::size_t windows = window_ends(data, 3).size();

    TarbmParams p = TarbmParams::init(64, 32, 3, VisibleKind::gaussian, 0.01, rng);
    TrainSchedule s;
    s.static_epochs = 30;
    s.ae_epochs_per_delay = 20;
    s.joint_epochs = 20;
    s.minibatch_size = 100;
    s.ae_learning_rate = 0.01;
    CdConfig cd;
    cd.learning_rate = 0.001;
    train_temporal(p, data, s, cd, true, rng);

    save_image(filter_grid(p.static_.w, 8), dir / "filters.pgm");
    const auto rank = temporal_variation_rank(p);
    const auto variation = temporal_variation(p);
    bool parsed = read_pgm(dir / "filters.pgm").width == 6 * 8 + 5;
    bool varied = true;
    std::string heads;
    for (std::size_t i = 0; i < 4; ++i) {
        const std::size_t unit = rank[i];
        const fs::path path = dir / ("trace_unit_" + std::to_string(unit) + ".pgm");
        save_image(render_trace(forward_projection(p, unit, 1), p, 8, TraceLayout::n1_column), path);
        const Image img = read_pgm(path);
        parsed = parsed && img.width == 8 && img.height == 4 * 8 + 3;
        const double tv = tile_variance(img, 8, 4);
        varied = varied && variation[unit] > 0.0 && tv > 0.0;
        heads += fmt(" %zu(%.3g)", unit, variation[unit]);
    }
    return {windows >= 2000 && parsed && varied,
            fmt("%zu windows; images %s; head units", windows, parsed ? "parse" : "malformed") + heads +
                (varied ? " vary" : " flat")};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        std::function<Outcome()> run;
        double limit_seconds;  // 0: none
    };
    const std::vector<Criterion> criteria{
        {1, gradient_oracle, 10},  {2, free_energy_identity, 5}, {3, energy_reduction, 0},
        {4, ae_gradient, 0},       {5, ae_efficacy, 120},        {6, ordering, 900},
        {7, whitening, 0},         {8, projection, 0},           {9, determinism, 0},
        {10, conditioning, 0},     {11, movie_pipeline, 600},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_seconds > 0 && secs > c.limit_seconds) {
            o.pass = false;
            o.detail += fmt(" [over %.0f s limit]", c.limit_seconds);
        }
        if (!o.pass) ++failures;
        std::printf("criterion %2d: %s  (%.1f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
