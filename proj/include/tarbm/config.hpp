#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tarbm/bench.hpp"
#include "tarbm/data.hpp"
#include "tarbm/rbm.hpp"
#include "tarbm/tarbm.hpp"

namespace tarbm {

/// Every tunable of the pipeline. Defaults follow the motion-capture
/// protocol (100 hidden units, 6-frame delay, minibatches of 100,
/// 100 static / 50 per-delay autoencoding / 100 joint epochs).
///
/// Text form: one `key = value` per line, '#' starts a comment. `preset`
/// (motion | movie) is applied before any other key regardless of position.
/// Unknown keys and malformed values are rejected.
struct RunConfig {
    std::uint64_t seed = 1;
    VisibleKind visible_kind = VisibleKind::gaussian;
    std::size_t hidden = 100;
    std::size_t delay = 6;
    double init_stddev = 0.01;

    CdConfig cd;
    TrainSchedule schedule;
    std::size_t crbm_epochs = 500;

    bool contrast_normalize = false;
    bool whiten = false;
    double whiten_epsilon = 1e-2;
    PatchSpec patch;

    Protocol protocol;

    SynthParams synth;

    void apply_preset(std::string_view name);
    void set(std::string_view key, std::string_view value);
    void validate() const;

    // Sorted `key=value` lines; the config hash covers exactly this text.
    std::string canonical() const;
    std::uint64_t hash() const;

    BenchSettings bench_settings() const;

    static std::vector<std::string> keys();
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace tarbm
