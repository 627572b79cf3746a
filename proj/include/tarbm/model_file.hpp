#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>

#include "tarbm/config.hpp"
#include "tarbm/crbm.hpp"
#include "tarbm/rbm.hpp"
#include "tarbm/tarbm.hpp"

namespace tarbm {

enum class ModelKind : std::uint8_t { rbm = 0, trbm = 1, tarbm = 2, crbm = 3 };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);

struct StageFlags {
    bool static_done = false;
    bool ae_done = false;
    bool joint_done = false;

    friend bool operator==(const StageFlags&, const StageFlags&) = default;
};

/// Serialized model.
///
/// Layout, all little-endian:
///   "TARBM1" | u32 version | u8 kind | u8 visible_kind | u32 V | u32 H | u32 M
///   | u8 flags (bit0 static, bit1 ae, bit2 joint) | u64 config_hash | u64 seed
///   | u32 matrix count | per matrix: u32 rows, u32 cols, f64[rows·cols] row-major
/// Matrix order: w (V×H), b_v (V×1), b_h (H×1), then for trbm/tarbm the
/// delayed weights w_1..w_M (H×H; entry (j, k) couples current unit j to unit
/// k at the delay), for crbm A_1..A_M (V×V) followed by B_1..B_M (V×H).
struct ModelFile {
    static constexpr std::uint32_t kVersion = 1;

    ModelKind kind = ModelKind::rbm;
    std::variant<RbmParams, TarbmParams, CrbmParams> params;
    StageFlags flags;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    const RbmParams& static_params() const;
    std::size_t order() const;

    friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

void write_model(std::ostream& out, const ModelFile& model);
ModelFile read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

// Human-readable header summary (the `inspect` subcommand).
std::string describe_model(const ModelFile& model);

// Applies the configured contrast normalization and whitening.
SequenceDataset preprocess(const SequenceDataset& data, const RunConfig& config);

// Staged pipeline for `kind`: rbm → static CD; trbm → static, joint;
// tarbm → static, autoencoding, joint; crbm → CD. Deterministic in
// (config, data). On TrainingInterrupted, `partial` (when given) receives the
// model as of the last completed epoch before the exception propagates.
ModelFile train_model(const RunConfig& config, const SequenceDataset& data, ModelKind kind,
                      const TrainHooks& hooks = {}, ModelFile* partial = nullptr);

}  // namespace tarbm
