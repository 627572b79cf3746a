// tarbm: train, predict, generate, visualize and benchmark temporal RBMs.
//
// Exit status: 0 success, 1 runtime failure, 2 usage or validation error.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tarbm/bench.hpp"
#include "tarbm/config.hpp"
#include "tarbm/data.hpp"
#include "tarbm/image.hpp"
#include "tarbm/model_file.hpp"
#include "tarbm/viz.hpp"

namespace fs = std::filesystem;
using namespace tarbm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

volatile std::sig_atomic_t g_interrupted = 0;

extern "C" void on_sigint(int) { g_interrupted = 1; }

struct ConfigOptions {
    std::string path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
};

void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
    cmd->add_option("-c,--config", opts.path, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", opts.overrides, "override a config key (key=value), repeatable");
    cmd->add_option("--seed", opts.seed, "RNG seed (falls back to $TARBM_SEED, then the config)");
}

// Precedence: --seed, then a seed given in the config file or --set, then
// $TARBM_SEED, then the built-in default.
RunConfig resolve_config(const ConfigOptions& opts) {
    RunConfig cfg;
    bool seed_given = false;
    std::string text;
    if (!opts.path.empty()) {
        std::ifstream in(opts.path);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    for (const auto& kv : opts.overrides) {
        if (kv.find('=') == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        text += "\n" + kv;
    }
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        const auto content = line.substr(0, line.find('#'));
        const auto eq = content.find('=');
        if (eq == std::string::npos) continue;
        std::istringstream key(content.substr(0, eq));
        std::string word;
        key >> word;
        if (word == "seed") seed_given = true;
    }
    std::istringstream in(text);
    cfg = parse_config(in);
    if (opts.seed) {
        cfg.seed = *opts.seed;
    } else if (!seed_given) {
        if (const char* env = std::getenv("TARBM_SEED"); env && *env) {
            try {
                cfg.set("seed", env);
            } catch (const DomainError&) {
                throw UsageError(std::string("TARBM_SEED='") + env + "' is not a non-negative integer");
            }
        }
    }
    cfg.protocol.hidden_units = cfg.hidden;
    cfg.protocol.delay = cfg.delay;
    return cfg;
}

// Directory → PGM movie cut into patch sequences; *.tseq → binary cache;
// anything else → comma-delimited text. Preprocessing follows the config.
SequenceDataset load_dataset(const std::string& path, const RunConfig& cfg) {
    if (path.empty()) throw UsageError("no dataset given (--data)");
    if (!fs::exists(path)) throw UsageError("dataset not found: " + path);
    SequenceDataset raw;
    if (fs::is_directory(path)) {
        Rng rng = Rng(cfg.seed).split();
        raw = extract_patch_sequences(load_pgm_directory(path), cfg.patch, rng);
    } else if (fs::path(path).extension() == ".tseq") {
        raw = load_cache(path);
    } else {
        raw = load_delimited(path);
    }
    return preprocess(raw, cfg);
}

void write_frames(const std::string& path, const Matrix& frames) {
    if (path.empty() || path == "-") {
        write_delimited(std::cout, SequenceDataset::single(frames));
    } else {
        save_delimited(path, SequenceDataset::single(frames));
    }
}

ModelFile load_model_arg(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("model not found: " + path);
    return load_model(path);
}

Matrix history_before(const SequenceDataset& data, std::size_t end, std::size_t order) {
    Matrix history(order, data.dims());
    for (std::size_t d = 1; d <= order; ++d) {
        auto src = data.frames.row_span(end - d);
        std::copy(src.begin(), src.end(), history.row_span(d - 1).begin());
    }
    return history;
}

Matrix predict_with(const ModelFile& model, const Matrix& history) {
    if (const auto* t = std::get_if<TarbmParams>(&model.params)) return predict_next(*t, history);
    if (const auto* c = std::get_if<CrbmParams>(&model.params)) return predict_next(*c, history);
    throw UsageError("prediction needs a temporal model (trbm, tarbm or crbm), got " +
                     std::string(to_string(model.kind)));
}

// --- subcommands -----------------------------------------------------------

struct TrainArgs {
    ConfigOptions config;
    std::string data, kind = "tarbm", out;
    bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
    const RunConfig cfg = resolve_config(a.config);
    const ModelKind kind = parse_model_kind(a.kind);
    const SequenceDataset data = load_dataset(a.data, cfg);

    TrainHooks hooks;
    if (!a.quiet) {
        hooks.on_epoch = [](std::string_view stage, std::size_t epoch, double metric) {
            std::fprintf(stderr, "[%.*s] epoch %zu error %.6g\n", static_cast<int>(stage.size()),
                         stage.data(), epoch + 1, metric);
        };
    }
    hooks.should_stop = [] { return g_interrupted != 0; };
    std::signal(SIGINT, on_sigint);

    ModelFile partial;
    try {
        const ModelFile model = train_model(cfg, data, kind, hooks, &partial);
        save_model(a.out, model);
    } catch (const TrainingInterrupted&) {
        const std::string path = a.out + ".partial";
        save_model(path, partial);
        std::cerr << "interrupted; partial model written to " << path << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

struct PredictArgs {
    ConfigOptions config;
    std::string model, data, out;
};

int cmd_predict(const PredictArgs& a) {
    const RunConfig cfg = resolve_config(a.config);
    const ModelFile model = load_model_arg(a.model);
    const SequenceDataset data = load_dataset(a.data, cfg);
    if (data.dims() != model.static_params().visible())
        throw UsageError("dataset has " + std::to_string(data.dims()) + " dimensions, model expects " +
                         std::to_string(model.static_params().visible()));
    const std::size_t order = model.order();
    if (order == 0) predict_with(model, Matrix());
    const auto ends = window_ends(data, order);
    Matrix out(ends.size(), data.dims());
    MseAccumulator mse;
    for (std::size_t i = 0; i < ends.size(); ++i) {
        const Matrix p = predict_with(model, history_before(data, ends[i], order));
        std::copy(p.data().begin(), p.data().end(), out.row_span(i).begin());
        mse.add(frame_squared_error(p.data(), data.frames.row_span(ends[i])));
    }
    write_frames(a.out, out);
    if (!ends.empty()) std::fprintf(stderr, "windows %zu mse %.6g\n", ends.size(), mse.mean());
    return kExitOk;
}

struct GenerateArgs {
    ConfigOptions config;
    std::string model, data, out;
    std::size_t frames = 100;
    bool sample = false;
};

int cmd_generate(const GenerateArgs& a) {
    const RunConfig cfg = resolve_config(a.config);
    const ModelFile model = load_model_arg(a.model);
    const std::size_t order = model.order();
    if (order == 0) predict_with(model, Matrix());
    const std::size_t nv = model.static_params().visible();
    if (a.frames == 0) {
        write_frames(a.out, Matrix(0, nv));
        return kExitOk;
    }
    const SequenceDataset data = load_dataset(a.data, cfg);
    if (data.dims() != nv) throw UsageError("dataset dimensions do not match the model");
    const auto ends = window_ends(data, order);
    if (ends.empty()) throw UsageError("dataset has no sequence longer than the model order");
    Matrix history = history_before(data, ends.front(), order);

    Rng rng(cfg.seed);
    Matrix frames;
    if (const auto* t = std::get_if<TarbmParams>(&model.params)) {
        frames = generate(*t, history, a.frames, rng, GenerateOptions{a.sample});
    } else {
        const auto& c = std::get<CrbmParams>(model.params);
        frames = Matrix(a.frames, nv);
        for (std::size_t i = 0; i < a.frames; ++i) {
            const Matrix next = predict_next(c, history);
            std::copy(next.data().begin(), next.data().end(), frames.row_span(i).begin());
            Matrix shifted(order, nv);
            std::copy(next.data().begin(), next.data().end(), shifted.row_span(0).begin());
            for (std::size_t d = 1; d < order; ++d) {
                auto src = history.row_span(d - 1);
                std::copy(src.begin(), src.end(), shifted.row_span(d).begin());
            }
            history = std::move(shifted);
        }
    }
    write_frames(a.out, frames);
    return kExitOk;
}

struct VizArgs {
    std::string model, mode = "grid", out_dir = ".", layout = "n1_column", normalization = "per_tile",
                       format = "pgm";
    std::size_t fan_out = 1, patch_edge = 0, top = 8, columns = 0;
    std::vector<std::size_t> units;
};

Normalization parse_normalization(const std::string& s) {
    if (s == "per_tile") return Normalization::per_tile;
    if (s == "global") return Normalization::global;
    throw UsageError("--normalization must be per_tile or global");
}

std::size_t patch_edge_for(const ModelFile& model, std::size_t requested) {
    if (requested != 0) return requested;
    const std::size_t nv = model.static_params().visible();
    std::size_t e = 1;
    while ((e + 1) * (e + 1) <= nv) ++e;
    if (e * e != nv)
        throw UsageError(std::to_string(nv) + " visible units is not a square patch; pass --patch-edge");
    return e;
}

int cmd_viz(const VizArgs& a) {
    const ModelFile model = load_model_arg(a.model);
    const std::size_t edge = patch_edge_for(model, a.patch_edge);
    const Normalization norm = parse_normalization(a.normalization);
    if (a.format != "pgm" && a.format != "png") throw UsageError("--format must be pgm or png");
    fs::create_directories(a.out_dir);
    auto out_path = [&](const std::string& stem) { return fs::path(a.out_dir) / (stem + "." + a.format); };

    if (a.mode == "grid") {
        save_image(filter_grid(model.static_params().w, edge, GridLayout{a.columns, norm}), out_path("filters"));
        std::cout << out_path("filters").string() << "\n";
        return kExitOk;
    }

    std::vector<std::size_t> units = a.units;
    auto rank = [&]() -> std::vector<std::size_t> {
        if (const auto* t = std::get_if<TarbmParams>(&model.params)) return temporal_variation_rank(*t);
        return temporal_variation_rank(std::get<CrbmParams>(model.params));
    };

    if (a.mode == "crbm") {
        const auto* c = std::get_if<CrbmParams>(&model.params);
        if (!c)
            throw UsageError("--mode crbm shows history-to-hidden filters and applies to crbm models; use "
                             "--mode trace for trbm/tarbm");
        if (units.empty()) {
            units = rank();
            units.resize(std::min(units.size(), a.top));
        }
        for (std::size_t u : units) {
            const auto p = out_path("crbm_unit_" + std::to_string(u));
            save_image(crbm_temporal_grid(*c, u, edge, norm), p);
            std::cout << p.string() << "\n";
        }
        return kExitOk;
    }

    if (a.mode == "trace") {
        const auto* t = std::get_if<TarbmParams>(&model.params);
        if (!t || t->order() == 0)
            throw UsageError("--mode trace (forward projection) applies to trbm/tarbm models; use --mode crbm "
                             "for crbm models and --mode grid for static filters");
        const TraceLayout layout = parse_trace_layout(a.layout);
        if (layout == TraceLayout::n1_column && a.fan_out != 1)
            throw UsageError("layout n1_column requires --n 1; use --layout tree_rows");
        if (units.empty()) {
            units = rank();
            units.resize(std::min(units.size(), a.top));
        }
        for (std::size_t u : units) {
            const ProjectionTrace trace = forward_projection(*t, u, a.fan_out);
            const std::string stem = "trace_unit_" + std::to_string(u);
            save_image(render_trace(trace, *t, edge, layout, norm), out_path(stem));
            std::ofstream(fs::path(a.out_dir) / (stem + ".json")) << trace_to_json(trace) << "\n";
            std::cout << out_path(stem).string() << "\n";
        }
        return kExitOk;
    }
    throw UsageError("unknown --mode '" + a.mode + "' (grid, crbm, trace)");
}

struct BenchArgs {
    ConfigOptions config;
    std::string data, format = "text", out;
    bool with_copy_last = false, no_timing = false;
};

int cmd_bench(const BenchArgs& a) {
    const RunConfig cfg = resolve_config(a.config);
    ReportFormat format;
    if (a.format == "text") format = ReportFormat::text_table;
    else if (a.format == "json") format = ReportFormat::json;
    else throw UsageError("--format must be text or json");

    Rng rng(cfg.seed);
    SequenceDataset data;
    if (a.data.empty()) {
        Rng data_rng = rng.split();
        data = preprocess(synth_generate(cfg.synth, data_rng), cfg);
    } else {
        data = load_dataset(a.data, cfg);
    }
    auto models = standard_bench_models();
    if (a.with_copy_last) models.insert(models.begin(), BenchModel{"copy-last", BenchModelKind::copy_last});
    BenchSettings settings = cfg.bench_settings();
    settings.record_timing = !a.no_timing;
    const BenchReport report = run_prediction_bench(data, cfg.protocol, models, settings, rng);
    const std::string text = emit_report(report, format);
    if (a.out.empty() || a.out == "-") {
        std::cout << text;
    } else {
        std::ofstream(a.out) << text;
    }
    return kExitOk;
}

struct SynthArgs {
    ConfigOptions config;
    std::string out;
    bool movie = false;
};

int cmd_synth(const SynthArgs& a) {
    const RunConfig cfg = resolve_config(a.config);
    if (a.out.empty()) throw UsageError("--out is required");
    Rng rng(cfg.seed);
    if (a.movie) {
        const auto& s = cfg.synth;
        save_pgm_directory(translating_bar_movie(s.length, s.edge, s.edge, s.bar_width, s.bar_speed, 0), a.out);
        return kExitOk;
    }
    const SequenceDataset data = synth_generate(cfg.synth, rng);
    if (fs::path(a.out).extension() == ".tseq") {
        save_cache(a.out, data);
    } else {
        save_delimited(a.out, data);
    }
    return kExitOk;
}

int cmd_inspect(const std::string& path) {
    std::cout << describe_model(load_model_arg(path));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal autoencoding RBMs: training, prediction, generation, visualization"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train a model and write a model file");
    add_config_options(train_cmd, train.config);
    train_cmd->add_option("-d,--data", train.data, "dataset: CSV file, .tseq cache or PGM frame directory")
        ->required();
    train_cmd->add_option("-k,--kind", train.kind, "rbm | trbm | tarbm | crbm")->capture_default_str();
    train_cmd->add_option("-o,--out", train.out, "model file to write")->required();
    train_cmd->add_flag("-q,--quiet", train.quiet, "no per-epoch log");

    PredictArgs predict;
    auto* predict_cmd = app.add_subcommand("predict", "one-step predictions for every window of a dataset");
    add_config_options(predict_cmd, predict.config);
    predict_cmd->add_option("-m,--model", predict.model, "model file")->required();
    predict_cmd->add_option("-d,--data", predict.data, "dataset")->required();
    predict_cmd->add_option("-o,--out", predict.out, "CSV output (default stdout)");

    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "roll a model forward from the first history in a dataset");
    add_config_options(gen_cmd, gen.config);
    gen_cmd->add_option("-m,--model", gen.model, "model file")->required();
    gen_cmd->add_option("-d,--data", gen.data, "dataset providing the seed history");
    gen_cmd->add_option("-n,--frames", gen.frames, "frames to generate")->capture_default_str();
    gen_cmd->add_flag("--sample", gen.sample, "sample hidden states instead of mean-field");
    gen_cmd->add_option("-o,--out", gen.out, "CSV output (default stdout)");

    VizArgs viz;
    auto* viz_cmd = app.add_subcommand("viz", "render filters and temporal receptive fields");
    viz_cmd->add_option("-m,--model", viz.model, "model file")->required();
    viz_cmd->add_option("--mode", viz.mode, "grid | crbm | trace")->capture_default_str();
    viz_cmd->add_option("--n", viz.fan_out, "trace fan-out per level")->capture_default_str();
    viz_cmd->add_option("--layout", viz.layout, "trace layout: n1_column | tree_rows")->capture_default_str();
    viz_cmd->add_option("--normalization", viz.normalization, "per_tile | global")->capture_default_str();
    viz_cmd->add_option("--units", viz.units, "hidden units to render (default: top by temporal variation)");
    viz_cmd->add_option("--top", viz.top, "units to render when --units is absent")->capture_default_str();
    viz_cmd->add_option("--patch-edge", viz.patch_edge, "tile edge (default: sqrt of visible count)");
    viz_cmd->add_option("--columns", viz.columns, "grid columns (0: square)");
    viz_cmd->add_option("--format", viz.format, "pgm | png")->capture_default_str();
    viz_cmd->add_option("-o,--out-dir", viz.out_dir, "output directory")->capture_default_str();

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "next-frame prediction benchmark (TRBM, CRBM, TARBM)");
    add_config_options(bench_cmd, bench.config);
    bench_cmd->add_option("-d,--data", bench.data, "dataset (default: synthetic data from the config)");
    bench_cmd->add_option("--format", bench.format, "text | json")->capture_default_str();
    bench_cmd->add_option("-o,--out", bench.out, "report file (default stdout)");
    bench_cmd->add_flag("--copy-last", bench.with_copy_last, "add a copy-last-frame baseline row");
    bench_cmd->add_flag("--no-timing", bench.no_timing, "report 0 seconds (byte-stable output)");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset from the synth_* config keys");
    add_config_options(synth_cmd, synth.config);
    synth_cmd->add_option("-o,--out", synth.out, "CSV / .tseq file, or directory with --movie")->required();
    synth_cmd->add_flag("--movie", synth.movie, "write a translating-bar movie as PGM frames");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "print a model file header");
    inspect_cmd->add_option("model", inspect_path, "model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train_cmd) return cmd_train(train);
        if (*predict_cmd) return cmd_predict(predict);
        if (*gen_cmd) return cmd_generate(gen);
        if (*viz_cmd) return cmd_viz(viz);
        if (*bench_cmd) return cmd_bench(bench);
        if (*synth_cmd) return cmd_synth(synth);
        if (*inspect_cmd) return cmd_inspect(inspect_path);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
