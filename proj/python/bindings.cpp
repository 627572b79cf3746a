// Python bindings: numpy arrays in, numpy arrays out. Matrices are copied at
// the boundary; the C++ side never holds references into Python memory.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

#include "tarbm/bench.hpp"
#include "tarbm/config.hpp"
#include "tarbm/data.hpp"
#include "tarbm/model_file.hpp"
#include "tarbm/viz.hpp"

namespace py = pybind11;
using namespace tarbm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() == 1) return Matrix(1, a.shape(0), std::vector<double>(a.data(), a.data() + a.size()));
    if (a.ndim() != 2) throw ShapeError("expected a 1-D or 2-D array, got " + std::to_string(a.ndim()) + "-D");
    return Matrix(a.shape(0), a.shape(1), std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_numpy(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

py::array_t<std::uint8_t> image_to_numpy(const Image& img) {
    py::array_t<std::uint8_t> out({img.height, img.width});
    std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
    return out;
}

SequenceDataset to_dataset(const Array& frames, std::vector<std::size_t> boundaries) {
    SequenceDataset ds;
    ds.frames = to_matrix(frames);
    if (!boundaries.empty()) ds.boundaries = std::move(boundaries);
    ds.validate();
    return ds;
}

RunConfig make_config(const std::map<std::string, std::string>& settings) {
    RunConfig cfg;
    if (auto it = settings.find("preset"); it != settings.end()) cfg.apply_preset(it->second);
    for (const auto& [k, v] : settings)
        if (k != "preset") cfg.set(k, v);
    cfg.validate();
    cfg.protocol.hidden_units = cfg.hidden;
    cfg.protocol.delay = cfg.delay;
    return cfg;
}

const TarbmParams& temporal(const ModelFile& m) {
    if (const auto* t = std::get_if<TarbmParams>(&m.params)) return *t;
    throw DomainError("operation needs a trbm or tarbm model, got " + std::string(to_string(m.kind)));
}

py::dict trace_to_dict(const ProjectionTrace& t) {
    py::list levels;
    for (const auto& level : t.levels) {
        py::list row;
        for (const auto& node : level) row.append(py::dict(py::arg("unit") = node.unit, py::arg("score") = node.score));
        levels.append(row);
    }
    return py::dict(py::arg("root") = t.root, py::arg("n") = t.fan_out, py::arg("levels") = levels);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Temporal autoencoding RBMs and their TRBM / CRBM baselines";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<CapacityError>(m, "CapacityError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    // ---- static RBM ----------------------------------------------------
    auto rbm = [](const Array& w, const Array& b_v, const Array& b_h, const std::string& kind) {
        RbmParams p;
        p.w = to_matrix(w);
        p.b_v = to_matrix(b_v).reshaped(p.w.rows(), 1);
        p.b_h = to_matrix(b_h).reshaped(p.w.cols(), 1);
        p.visible_kind = parse_visible_kind(kind);
        p.validate();
        return p;
    };
    m.def(
        "rbm_energy",
        [rbm](const Array& w, const Array& b_v, const Array& b_h, const Array& v, const Array& h,
              const std::string& kind) { return energy(rbm(w, b_v, b_h, kind), to_matrix(v), to_matrix(h)); },
        py::arg("w"), py::arg("b_v"), py::arg("b_h"), py::arg("v"), py::arg("h"), py::arg("visible_kind") = "binary",
        "Energy of one (v, h) configuration.");
    m.def(
        "free_energy",
        [rbm](const Array& w, const Array& b_v, const Array& b_h, const Array& v, const std::string& kind) {
            const Matrix vm = to_matrix(v);
            return free_energy(rbm(w, b_v, b_h, kind), vm.data());
        },
        py::arg("w"), py::arg("b_v"), py::arg("b_h"), py::arg("v"), py::arg("visible_kind") = "binary");
    m.def(
        "exact_log_likelihood",
        [rbm](const Array& w, const Array& b_v, const Array& b_h, const Array& data) {
            return exact_log_likelihood(rbm(w, b_v, b_h, "binary"), to_matrix(data));
        },
        py::arg("w"), py::arg("b_v"), py::arg("b_h"), py::arg("data"),
        "Total log-likelihood of the rows by enumeration (binary visibles, V + H <= 20).");

    // ---- data ------------------------------------------------------------
    m.def(
        "synth",
        [](const std::string& kind, std::uint64_t seed, const std::map<std::string, std::string>& settings) {
            RunConfig cfg = make_config(settings);
            cfg.synth.kind = parse_synth_kind(kind);
            Rng rng(seed);
            const SequenceDataset ds = synth_generate(cfg.synth, rng);
            return py::make_tuple(to_numpy(ds.frames), ds.boundaries);
        },
        py::arg("kind") = "cyclic_shift", py::arg("seed") = 1,
        py::arg("settings") = std::map<std::string, std::string>{},
        "Synthetic sequences; settings use the synth_* config keys. Returns (frames, boundaries).");
    m.def(
        "contrast_normalize", [](const Array& frames) { return to_numpy(contrast_normalize(SequenceDataset::single(to_matrix(frames))).frames); },
        py::arg("frames"));
    m.def(
        "whiten",
        [](const Array& frames, double epsilon) {
            const SequenceDataset ds = SequenceDataset::single(to_matrix(frames));
            return to_numpy(apply_zca(fit_zca(ds, epsilon), ds).frames);
        },
        py::arg("frames"), py::arg("epsilon") = 1e-2, "ZCA whitening fitted on the frames themselves.");
    m.def("covariance", [](const Array& frames) { return to_numpy(covariance(to_matrix(frames))); }, py::arg("frames"));

    // ---- models ----------------------------------------------------------
    py::class_<ModelFile>(m, "Model")
        .def_property_readonly("kind", [](const ModelFile& f) { return std::string(to_string(f.kind)); })
        .def_property_readonly("visible", [](const ModelFile& f) { return f.static_params().visible(); })
        .def_property_readonly("hidden", [](const ModelFile& f) { return f.static_params().hidden(); })
        .def_property_readonly("order", &ModelFile::order)
        .def_property_readonly("seed", [](const ModelFile& f) { return f.seed; })
        .def_property_readonly("config_hash", [](const ModelFile& f) { return f.config_hash; })
        .def_property_readonly("w", [](const ModelFile& f) { return to_numpy(f.static_params().w); })
        .def_property_readonly("b_v", [](const ModelFile& f) { return to_numpy(f.static_params().b_v); })
        .def_property_readonly("b_h", [](const ModelFile& f) { return to_numpy(f.static_params().b_h); })
        .def_property_readonly("delayed",
                               [](const ModelFile& f) {
                                   std::vector<py::array_t<double>> out;
                                   for (const Matrix& w : temporal(f).delayed) out.push_back(to_numpy(w));
                                   return out;
                               })
        .def_property_readonly("stages",
                               [](const ModelFile& f) {
                                   return py::dict(py::arg("static") = f.flags.static_done,
                                                   py::arg("ae") = f.flags.ae_done,
                                                   py::arg("joint") = f.flags.joint_done);
                               })
        .def(
            "predict",
            [](const ModelFile& f, const Array& history) {
                const Matrix h = to_matrix(history);
                if (const auto* t = std::get_if<TarbmParams>(&f.params)) return to_numpy(predict_next(*t, h));
                if (const auto* c = std::get_if<CrbmParams>(&f.params)) return to_numpy(predict_next(*c, h));
                throw DomainError("a static rbm has no temporal prediction");
            },
            py::arg("history"), "Next frame from M history rows, most recent first.")
        .def(
            "generate",
            [](const ModelFile& f, const Array& history, std::size_t frames, std::uint64_t seed, bool sample) {
                Rng rng(seed);
                return to_numpy(generate(temporal(f), to_matrix(history), frames, rng, {sample}));
            },
            py::arg("history"), py::arg("frames"), py::arg("seed") = 1, py::arg("sample") = false)
        .def(
            "save", [](const ModelFile& f, const std::filesystem::path& path) { save_model(path, f); },
            py::arg("path"))
        .def_static("load", &load_model, py::arg("path"))
        .def("to_bytes",
             [](const ModelFile& f) {
                 std::ostringstream out(std::ios::binary);
                 write_model(out, f);
                 return py::bytes(out.str());
             })
        .def("__repr__", &describe_model);

    m.def(
        "train",
        [](const Array& frames, std::vector<std::size_t> boundaries, const std::string& kind,
           const std::map<std::string, std::string>& settings) {
            const RunConfig cfg = make_config(settings);
            const SequenceDataset data = preprocess(to_dataset(frames, std::move(boundaries)), cfg);
            py::gil_scoped_release release;
            return train_model(cfg, data, parse_model_kind(kind));
        },
        py::arg("frames"), py::arg("boundaries") = std::vector<std::size_t>{}, py::arg("kind") = "tarbm",
        py::arg("settings") = std::map<std::string, std::string>{},
        "Train a model; settings are config keys given as strings (e.g. {'hidden': '32'}).");

    m.def(
        "joint_energy",
        [](const ModelFile& f, const Array& visibles, const Array& hiddens) {
            return joint_energy(temporal(f), to_matrix(visibles), to_matrix(hiddens));
        },
        py::arg("model"), py::arg("visibles"), py::arg("hiddens"));

    // ---- visualization -----------------------------------------------------
    m.def(
        "filter_grid",
        [](const ModelFile& f, std::size_t patch_edge, std::size_t columns) {
            return image_to_numpy(filter_grid(f.static_params().w, patch_edge, GridLayout{columns}));
        },
        py::arg("model"), py::arg("patch_edge"), py::arg("columns") = 0);
    m.def(
        "forward_projection",
        [](const ModelFile& f, std::size_t root, std::size_t n) {
            return trace_to_dict(forward_projection(temporal(f), root, n));
        },
        py::arg("model"), py::arg("root"), py::arg("n") = 1);
    m.def(
        "temporal_variation_rank",
        [](const ModelFile& f) {
            if (const auto* c = std::get_if<CrbmParams>(&f.params)) return temporal_variation_rank(*c);
            return temporal_variation_rank(temporal(f));
        },
        py::arg("model"));

    // ---- benchmark -----------------------------------------------------------
    m.def(
        "bench",
        [](const std::map<std::string, std::string>& settings, const std::optional<Array>& frames,
           std::vector<std::size_t> boundaries, bool copy_last) {
            const RunConfig cfg = make_config(settings);
            Rng rng(cfg.seed);
            SequenceDataset data;
            if (frames) {
                data = preprocess(to_dataset(*frames, std::move(boundaries)), cfg);
            } else {
                Rng data_rng = rng.split();
                data = preprocess(synth_generate(cfg.synth, data_rng), cfg);
            }
            auto models = standard_bench_models();
            if (copy_last) models.insert(models.begin(), BenchModel{"copy-last", BenchModelKind::copy_last});
            BenchSettings s = cfg.bench_settings();
            s.record_timing = false;
            BenchReport report;
            {
                py::gil_scoped_release release;
                report = run_prediction_bench(data, cfg.protocol, models, s, rng);
            }
            return emit_report(report, ReportFormat::json);
        },
        py::arg("settings") = std::map<std::string, std::string>{}, py::arg("frames") = py::none(),
        py::arg("boundaries") = std::vector<std::size_t>{}, py::arg("copy_last") = false,
        "Next-frame prediction benchmark; without frames the configured synthetic data is used. "
        "Returns the JSON report, the same as `tarbm bench --format json --no-timing`.");
}
