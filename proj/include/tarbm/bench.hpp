#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tarbm/crbm.hpp"
#include "tarbm/tarbm.hpp"

namespace tarbm {

struct Protocol {
    std::size_t train_count = 2000;
    std::size_t test_snippets = 1000;
    std::size_t repetitions = 100;
    std::size_t hidden_units = 100;
    std::size_t delay = 6;

    void validate() const;
};

enum class BenchModelKind { copy_last, trbm, tarbm, crbm };

struct BenchModel {
    std::string name;
    BenchModelKind kind;
};

// The three standard models in table order: TRBM, CRBM, TARBM.
std::vector<BenchModel> standard_bench_models();

struct BenchSettings {
    TrainSchedule schedule;
    CdConfig cd;
    std::size_t crbm_epochs = 500;
    VisibleKind visible_kind = VisibleKind::gaussian;
    double init_stddev = 0.01;
    std::uint64_t config_hash = 0;
    bool record_timing = true;
};

struct ModelResult {
    std::string name;
    std::string architecture;
    double mse = 0.0;
    std::vector<double> per_seed;
    double seconds = 0.0;
    std::uint64_t config_hash = 0;

    friend bool operator==(const ModelResult&, const ModelResult&) = default;
};

struct BenchReport {
    std::vector<ModelResult> models;
    friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/// Running mean, updated one value at a time.
class MseAccumulator {
public:
    void add(double squared_error) noexcept {
        ++count_;
        mean_ += (squared_error - mean_) / static_cast<double>(count_);
    }
    double mean() const noexcept { return mean_; }
    std::size_t count() const noexcept { return count_; }

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
};

// Mean over dimensions of (predicted − actual)².
double frame_squared_error(std::span<const double> predicted, std::span<const double> actual);

// First `count` frames, keeping only the boundaries that fall inside.
SequenceDataset head_frames(const SequenceDataset& data, std::size_t count);
SequenceDataset tail_frames(const SequenceDataset& data, std::size_t from);

// Trains every model once on the first train_count frames (all models share
// one training seed drawn from rng), then for each repetition draws
// test_snippets distinct held-out windows of M+1 frames, predicts the last
// frame from the M before it, and records the MSE averaged over dimensions
// and snippets.
BenchReport run_prediction_bench(const SequenceDataset& data, const Protocol& protocol,
                                 const std::vector<BenchModel>& models,
                                 const BenchSettings& settings, Rng& rng);

enum class ReportFormat { text_table, json };

std::string emit_report(const BenchReport& report, ReportFormat format);
BenchReport parse_report_json(std::string_view json);

}  // namespace tarbm
