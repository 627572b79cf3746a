#include "tarbm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <tuple>

namespace tarbm {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
    throw DomainError("config: " + std::string(key) + " = '" + std::string(value) + "' is not " +
                      expected);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
    std::uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        bad_value(key, v, "a non-negative integer");
    return x;
}

double to_real(std::string_view key, std::string_view v) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x))
        bad_value(key, v, "a finite number");
    return x;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "a boolean");
}

std::string fmt(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string fmt(std::uint64_t x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "true" : "false"; }

std::string_view synth_name(SynthKind k) {
    switch (k) {
        case SynthKind::cyclic_shift: return "cyclic_shift";
        case SynthKind::sinusoid_mixture: return "sinusoid_mixture";
        case SynthKind::translating_bar: return "translating_bar";
        case SynthKind::bouncing_ball: return "bouncing_ball";
    }
    return "?";
}

struct Field {
    std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define TARBM_COUNT(path)                                                                          \
    Field {                                                                                        \
        [](RunConfig& c, std::string_view k, std::string_view v) {                                \
            c.path = static_cast<std::size_t>(to_u64(k, v));                                       \
        },                                                                                         \
            [](const RunConfig& c) { return fmt(static_cast<std::uint64_t>(c.path)); }             \
    }
#define TARBM_REAL(path)                                                                           \
    Field {                                                                                        \
        [](RunConfig& c, std::string_view k, std::string_view v) { c.path = to_real(k, v); },     \
            [](const RunConfig& c) { return fmt(c.path); }                                         \
    }
#define TARBM_BOOL(path)                                                                           \
    Field {                                                                                        \
        [](RunConfig& c, std::string_view k, std::string_view v) { c.path = to_bool(k, v); },     \
            [](const RunConfig& c) { return fmt(c.path); }                                         \
    }

const std::map<std::string, Field, std::less<>>& fields() {
    static const std::map<std::string, Field, std::less<>> table = {
        {"seed", Field{[](RunConfig& c, std::string_view k, std::string_view v) { c.seed = to_u64(k, v); },
                       [](const RunConfig& c) { return fmt(c.seed); }}},
        {"visible_kind",
         Field{[](RunConfig& c, std::string_view, std::string_view v) { c.visible_kind = parse_visible_kind(v); },
               [](const RunConfig& c) { return std::string(to_string(c.visible_kind)); }}},
        {"hidden", TARBM_COUNT(hidden)},
        {"delay", TARBM_COUNT(delay)},
        {"init_stddev", TARBM_REAL(init_stddev)},
        {"cd_k", TARBM_COUNT(cd.k)},
        {"learning_rate", TARBM_REAL(cd.learning_rate)},
        {"sparsity_target", TARBM_REAL(cd.sparsity_target)},
        {"sparsity_weight", TARBM_REAL(cd.sparsity_weight)},
        {"momentum", TARBM_REAL(cd.momentum)},
        {"initial_momentum", TARBM_REAL(cd.initial_momentum)},
        {"momentum_switch_epoch", TARBM_COUNT(cd.momentum_switch_epoch)},
        {"weight_decay", TARBM_REAL(cd.weight_decay)},
        {"sample_gaussian_visible", TARBM_BOOL(cd.sample_gaussian_visible)},
        {"static_epochs", TARBM_COUNT(schedule.static_epochs)},
        {"ae_epochs", TARBM_COUNT(schedule.ae_epochs_per_delay)},
        {"joint_epochs", TARBM_COUNT(schedule.joint_epochs)},
        {"batch_size", TARBM_COUNT(schedule.minibatch_size)},
        {"ae_learning_rate", TARBM_REAL(schedule.ae_learning_rate)},
        {"ae_momentum", TARBM_REAL(schedule.ae_momentum)},
        {"crbm_epochs", TARBM_COUNT(crbm_epochs)},
        {"contrast_normalize", TARBM_BOOL(contrast_normalize)},
        {"whiten", TARBM_BOOL(whiten)},
        {"whiten_epsilon", TARBM_REAL(whiten_epsilon)},
        {"patch_edge", TARBM_COUNT(patch.patch_edge)},
        {"frames_per_sequence", TARBM_COUNT(patch.frames_per_sequence)},
        {"patch_stride", TARBM_COUNT(patch.stride)},
        {"max_samples", TARBM_COUNT(patch.max_samples)},
        {"train_count", TARBM_COUNT(protocol.train_count)},
        {"test_snippets", TARBM_COUNT(protocol.test_snippets)},
        {"repetitions", TARBM_COUNT(protocol.repetitions)},
        {"synth_kind",
         Field{[](RunConfig& c, std::string_view, std::string_view v) { c.synth.kind = parse_synth_kind(v); },
               [](const RunConfig& c) { return std::string(synth_name(c.synth.kind)); }}},
        {"synth_dims", TARBM_COUNT(synth.dims)},
        {"synth_length", TARBM_COUNT(synth.length)},
        {"synth_sequences", TARBM_COUNT(synth.sequences)},
        {"synth_components", TARBM_COUNT(synth.components)},
        {"synth_amplitude", TARBM_REAL(synth.amplitude)},
        {"synth_edge", TARBM_COUNT(synth.edge)},
    };
    return table;
}

#undef TARBM_COUNT
#undef TARBM_REAL
#undef TARBM_BOOL

}  // namespace

void RunConfig::apply_preset(std::string_view name) {
    if (name == "motion") {
        *this = RunConfig{};
    } else if (name == "movie") {
        *this = RunConfig{};
        hidden = 400;
        delay = 3;
        patch.patch_edge = 8;
        patch.frames_per_sequence = 30;
        contrast_normalize = true;
        whiten = true;
    } else {
        throw DomainError("config: unknown preset '" + std::string(name) + "'");
    }
}

void RunConfig::set(std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key == "preset") {
        apply_preset(value);
        return;
    }
    const auto it = fields().find(key);
    if (it == fields().end()) throw DomainError("config: unknown key '" + std::string(key) + "'");
    it->second.set(*this, key, value);
}

void RunConfig::validate() const {
    if (hidden < 1) throw DomainError("config: hidden must be >= 1");
    if (delay < 1) throw DomainError("config: delay must be >= 1");
    if (!(init_stddev >= 0.0)) throw DomainError("config: init_stddev must be >= 0");
    if (!(whiten_epsilon > 0.0)) throw DomainError("config: whiten_epsilon must be > 0");
    cd.validate();
    schedule.validate();
    patch.validate();
    protocol.validate();
    synth.validate();
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : fields()) out.push_back(k);
    return out;
}

std::string RunConfig::canonical() const {
    std::string out;
    for (const auto& [k, f] : fields()) out += k + "=" + f.get(*this) + "\n";
    return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

BenchSettings RunConfig::bench_settings() const {
    BenchSettings s;
    s.schedule = schedule;
    s.cd = cd;
    s.crbm_epochs = crbm_epochs;
    s.visible_kind = visible_kind;
    s.init_stddev = init_stddev;
    s.config_hash = hash();
    return s;
}

RunConfig parse_config(std::istream& in) {
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) lines.emplace_back(n, line);

    RunConfig cfg;
    std::vector<std::tuple<std::size_t, std::string, std::string>> entries;
    for (const auto& [n, raw] : lines) {
        std::string_view content = raw;
        if (const auto hash = content.find('#'); hash != std::string_view::npos)
            content = content.substr(0, hash);
        content = trim(content);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string_view::npos) throw ParseError("config: expected key = value", n);
        entries.emplace_back(n, std::string(trim(content.substr(0, eq))),
                             std::string(trim(content.substr(eq + 1))));
    }
    // Presets reset everything, so they go first.
    std::stable_partition(entries.begin(), entries.end(),
                          [](const auto& e) { return std::get<1>(e) == "preset"; });
    for (const auto& [n, key, value] : entries) {
        try {
            cfg.set(key, value);
        } catch (const DomainError& e) {
            throw ParseError(e.what(), n);
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    return parse_config(in);
}

}  // namespace tarbm
