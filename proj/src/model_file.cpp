#include "tarbm/model_file.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "binary_io.hpp"

namespace tarbm {

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::rbm: return "rbm";
        case ModelKind::trbm: return "trbm";
        case ModelKind::tarbm: return "tarbm";
        case ModelKind::crbm: return "crbm";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "rbm") return ModelKind::rbm;
    if (text == "trbm") return ModelKind::trbm;
    if (text == "tarbm") return ModelKind::tarbm;
    if (text == "crbm") return ModelKind::crbm;
    throw DomainError("unknown model kind '" + std::string(text) + "' (rbm, trbm, tarbm, crbm)");
}

const RbmParams& ModelFile::static_params() const {
    return std::visit(
        [](const auto& p) -> const RbmParams& {
            if constexpr (std::is_same_v<std::decay_t<decltype(p)>, RbmParams>) {
                return p;
            } else {
                return p.static_;
            }
        },
        params);
}

std::size_t ModelFile::order() const {
    if (const auto* t = std::get_if<TarbmParams>(&params)) return t->order();
    if (const auto* c = std::get_if<CrbmParams>(&params)) return c->order();
    return 0;
}

namespace {

void put_matrix(std::ostream& out, const Matrix& m) {
    detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.data()) detail::put_f64(out, v);
}

Matrix get_matrix(std::istream& in, std::size_t rows, std::size_t cols, const char* what) {
    const std::size_t r = detail::get_u32(in), c = detail::get_u32(in);
    if (r != rows || c != cols)
        throw ParseError(std::string("model file: ") + what + " is " + std::to_string(r) + "x" +
                         std::to_string(c) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    std::vector<double> values(r * c);
    for (double& v : values) v = detail::get_f64(in);
    return Matrix(r, c, std::move(values));
}

std::vector<const Matrix*> matrices_of(const ModelFile& m) {
    const RbmParams& st = m.static_params();
    std::vector<const Matrix*> out{&st.w, &st.b_v, &st.b_h};
    if (const auto* t = std::get_if<TarbmParams>(&m.params)) {
        for (const Matrix& d : t->delayed) out.push_back(&d);
    } else if (const auto* c = std::get_if<CrbmParams>(&m.params)) {
        for (const Matrix& a : c->autoregressive) out.push_back(&a);
        for (const Matrix& b : c->history_to_hidden) out.push_back(&b);
    }
    return out;
}

bool variant_matches(const ModelFile& m) {
    switch (m.kind) {
        case ModelKind::rbm: return std::holds_alternative<RbmParams>(m.params);
        case ModelKind::trbm:
        case ModelKind::tarbm: return std::holds_alternative<TarbmParams>(m.params);
        case ModelKind::crbm: return std::holds_alternative<CrbmParams>(m.params);
    }
    return false;
}

}  // namespace

void write_model(std::ostream& out, const ModelFile& model) {
    if (!variant_matches(model)) throw DomainError("model file: kind does not match parameters");
    const RbmParams& st = model.static_params();
    out.write("TARBM1", 6);
    detail::put_u32(out, ModelFile::kVersion);
    detail::put_u8(out, static_cast<std::uint8_t>(model.kind));
    detail::put_u8(out, static_cast<std::uint8_t>(st.visible_kind));
    detail::put_u32(out, static_cast<std::uint32_t>(st.visible()));
    detail::put_u32(out, static_cast<std::uint32_t>(st.hidden()));
    detail::put_u32(out, static_cast<std::uint32_t>(model.order()));
    detail::put_u8(out, static_cast<std::uint8_t>((model.flags.static_done ? 1 : 0) |
                                                  (model.flags.ae_done ? 2 : 0) |
                                                  (model.flags.joint_done ? 4 : 0)));
    detail::put_u64(out, model.config_hash);
    detail::put_u64(out, model.seed);
    const auto mats = matrices_of(model);
    detail::put_u32(out, static_cast<std::uint32_t>(mats.size()));
    for (const Matrix* m : mats) put_matrix(out, *m);
}

ModelFile read_model(std::istream& in) {
    detail::expect_magic(in, "TARBM1");
    const std::uint32_t version = detail::get_u32(in);
    if (version != ModelFile::kVersion)
        throw ParseError("model file: unsupported version " + std::to_string(version) +
                         " (expected " + std::to_string(ModelFile::kVersion) + ")");
    ModelFile m;
    const std::uint8_t kind = detail::get_u8(in);
    if (kind > 3) throw ParseError("model file: unknown model kind " + std::to_string(kind));
    m.kind = static_cast<ModelKind>(kind);
    const std::uint8_t vk = detail::get_u8(in);
    if (vk > 1) throw ParseError("model file: unknown visible kind " + std::to_string(vk));
    const std::size_t nv = detail::get_u32(in), nh = detail::get_u32(in), order = detail::get_u32(in);
    const std::uint8_t flags = detail::get_u8(in);
    m.flags = {(flags & 1) != 0, (flags & 2) != 0, (flags & 4) != 0};
    m.config_hash = detail::get_u64(in);
    m.seed = detail::get_u64(in);
    const std::size_t count = detail::get_u32(in);

    RbmParams st;
    st.visible_kind = static_cast<VisibleKind>(vk);
    std::size_t expected = 3;
    if (m.kind == ModelKind::trbm || m.kind == ModelKind::tarbm) expected += order;
    if (m.kind == ModelKind::crbm) expected += 2 * order;
    if (m.kind == ModelKind::rbm && order != 0) throw ParseError("model file: rbm with nonzero order");
    if (count != expected)
        throw ParseError("model file: " + std::to_string(count) + " matrices, expected " +
                         std::to_string(expected));
    st.w = get_matrix(in, nv, nh, "w");
    st.b_v = get_matrix(in, nv, 1, "b_v");
    st.b_h = get_matrix(in, nh, 1, "b_h");

    switch (m.kind) {
        case ModelKind::rbm:
            m.params = std::move(st);
            break;
        case ModelKind::trbm:
        case ModelKind::tarbm: {
            TarbmParams t;
            t.static_ = std::move(st);
            for (std::size_t d = 0; d < order; ++d) t.delayed.push_back(get_matrix(in, nh, nh, "w_d"));
            m.params = std::move(t);
            break;
        }
        case ModelKind::crbm: {
            CrbmParams c;
            c.static_ = std::move(st);
            for (std::size_t d = 0; d < order; ++d) c.autoregressive.push_back(get_matrix(in, nv, nv, "A_d"));
            for (std::size_t d = 0; d < order; ++d)
                c.history_to_hidden.push_back(get_matrix(in, nv, nh, "B_d"));
            m.params = std::move(c);
            break;
        }
    }
    return m;
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_model(out, model);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_model(in);
}

std::string describe_model(const ModelFile& m) {
    const RbmParams& st = m.static_params();
    std::ostringstream os;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.config_hash));
    os << "format:       TARBM1 v" << ModelFile::kVersion << '\n'
       << "kind:         " << to_string(m.kind) << '\n'
       << "visible:      " << st.visible() << " (" << to_string(st.visible_kind) << ")\n"
       << "hidden:       " << st.hidden() << '\n'
       << "order:        " << m.order() << '\n'
       << "stages:       static=" << (m.flags.static_done ? "done" : "no")
       << " ae=" << (m.flags.ae_done ? "done" : "no")
       << " joint=" << (m.flags.joint_done ? "done" : "no") << '\n'
       << "config_hash:  " << hash << '\n'
       << "seed:         " << m.seed << '\n';
    return os.str();
}

SequenceDataset preprocess(const SequenceDataset& data, const RunConfig& config) {
    SequenceDataset out = config.contrast_normalize ? contrast_normalize(data) : data;
    if (config.whiten) out = apply_zca(fit_zca(out, config.whiten_epsilon), out);
    return out;
}

ModelFile train_model(const RunConfig& config, const SequenceDataset& data, ModelKind kind,
                      const TrainHooks& hooks, ModelFile* partial) {
    config.validate();
    data.validate();
    Rng rng(config.seed);
    ModelFile m;
    m.kind = kind;
    m.config_hash = config.hash();
    m.seed = config.seed;
    const std::size_t nv = data.dims();

    auto guarded = [&](auto&& params, auto&& body) {
        try {
            body();
        } catch (const TrainingInterrupted&) {
            if (partial) {
                *partial = m;
                partial->params = params;
            }
            throw;
        }
    };

    switch (kind) {
        case ModelKind::rbm: {
            auto p = RbmParams::init(nv, config.hidden, config.visible_kind, config.init_stddev, rng);
            guarded(p, [&] {
                train_rbm(p, data.frames, config.cd, config.schedule.static_epochs,
                          config.schedule.minibatch_size, rng, hooks);
            });
            m.flags.static_done = true;
            m.params = std::move(p);
            break;
        }
        case ModelKind::trbm:
        case ModelKind::tarbm: {
            auto p = TarbmParams::init(nv, config.hidden, config.delay, config.visible_kind,
                                       config.init_stddev, rng);
            // Stage flags are updated as each stage completes so a partial
            // model reports how far it got.
            TrainHooks staged = hooks;
            staged.on_epoch = [&](std::string_view stage, std::size_t epoch, double metric) {
                if (stage == "ae") m.flags.static_done = true;
                if (stage == "joint") {
                    m.flags.static_done = true;
                    if (kind == ModelKind::tarbm && config.schedule.ae_epochs_per_delay > 0)
                        m.flags.ae_done = true;
                }
                if (hooks.on_epoch) hooks.on_epoch(stage, epoch, metric);
            };
            TarbmTrainResult r;
            guarded(p, [&] {
                r = train_temporal(p, data, config.schedule, config.cd, kind == ModelKind::tarbm, rng,
                                   staged);
            });
            m.flags = {r.static_done, r.ae_done, r.joint_done};
            m.params = std::move(p);
            break;
        }
        case ModelKind::crbm: {
            auto p = CrbmParams::init(nv, config.hidden, config.delay, config.visible_kind,
                                      config.init_stddev, rng);
            guarded(p, [&] {
                crbm_cd_train(p, data, config.cd, config.crbm_epochs, config.schedule.minibatch_size,
                              rng, hooks);
            });
            m.flags.static_done = true;
            m.flags.joint_done = true;
            m.params = std::move(p);
            break;
        }
    }
    return m;
}

}  // namespace tarbm
