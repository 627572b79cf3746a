#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tarbm/matrix.hpp"
#include "tarbm/rng.hpp"

namespace tarbm {

/// Frames (T×V, one frame per row) split into contiguous sequences.
/// `boundaries` holds the start index of each sequence.
struct SequenceDataset {
    Matrix frames;
    std::vector<std::size_t> boundaries{0};
    std::vector<std::string> labels;  // optional per-dimension names

    static SequenceDataset single(Matrix frames);

    std::size_t length() const noexcept { return frames.rows(); }
    std::size_t dims() const noexcept { return frames.cols(); }
    std::size_t sequence_count() const noexcept { return boundaries.size(); }
    // [begin, end) frame range of sequence s.
    std::pair<std::size_t, std::size_t> sequence(std::size_t s) const;
    void validate() const;

    friend bool operator==(const SequenceDataset&, const SequenceDataset&) = default;
};

/// v⁰..v^M stored as rows: row 0 is time t, row d is time t−d.
struct FrameWindow {
    Matrix frames;

    std::size_t order() const noexcept { return frames.rows() == 0 ? 0 : frames.rows() - 1; }
    std::span<const double> at_delay(std::size_t d) const { return frames.row_span(d); }
};

// Frame index t of v⁰ for every width-(M+1) window inside a single sequence.
std::vector<std::size_t> window_ends(const SequenceDataset& data, std::size_t order);
std::vector<FrameWindow> make_windows(const SequenceDataset& data, std::size_t order);
FrameWindow gather_window(const SequenceDataset& data, std::size_t end, std::size_t order);
// Rows are frame (end − delay) for each end, in order.
Matrix gather_delay(const SequenceDataset& data, std::span<const std::size_t> ends,
                    std::size_t delay);

// ---- delimited text -------------------------------------------------------
// One frame per line. A blank line starts a new sequence; lines whose first
// non-space character is '#' are comments.
SequenceDataset parse_delimited(std::istream& in, char delimiter = ',');
SequenceDataset load_delimited(const std::filesystem::path& path, char delimiter = ',');
void write_delimited(std::ostream& out, const SequenceDataset& data, char delimiter = ',');
void save_delimited(const std::filesystem::path& path, const SequenceDataset& data,
                    char delimiter = ',');

// ---- binary cache ("TSEQ1", little-endian) ---------------------------------
// magic[5] | u32 T | u32 V | u32 boundary count | u32 boundaries[] | f64 frames[T*V]
void save_cache(const std::filesystem::path& path, const SequenceDataset& data);
SequenceDataset load_cache(const std::filesystem::path& path);

// ---- movies --------------------------------------------------------------

/// Grayscale frames, pixel (t, y, x) at index (t·height + y)·width + x.
struct Movie {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    Movie() = default;
    Movie(std::size_t t, std::size_t h, std::size_t w)
        : frames(t), height(h), width(w), pixels(t * h * w, 0.0) {}

    double& at(std::size_t t, std::size_t y, std::size_t x) {
        return pixels[(t * height + y) * width + x];
    }
    double at(std::size_t t, std::size_t y, std::size_t x) const {
        return pixels[(t * height + y) * width + x];
    }
};

// Reads frame_%06d.pgm files (P5, maxval 255) in index order.
Movie load_pgm_directory(const std::filesystem::path& dir);
// Writes frame_%06d.pgm, clamping pixels to [0, 255] and rounding.
void save_pgm_directory(const Movie& movie, const std::filesystem::path& dir);

struct PatchSpec {
    std::size_t patch_edge = 8;
    std::size_t frames_per_sequence = 30;
    std::size_t stride = 1;
    std::size_t max_samples = 1000;

    void validate() const;
};

// Each sample is a fixed window tracked over frames_per_sequence consecutive
// frames at a seeded random position (x, y on the stride grid). V = edge².
SequenceDataset extract_patch_sequences(const Movie& movie, const PatchSpec& spec, Rng& rng);

// Per frame: (x − mean) / max(stddev, 1e-8), population stddev.
SequenceDataset contrast_normalize(const SequenceDataset& data);

struct WhiteningTransform {
    Matrix mean;       // V×1
    Matrix transform;  // V×V, symmetric
    double epsilon = 0.0;
};

// ZCA: E·diag((λ + ε·tr(C)/V)^(−1/2))·Eᵀ from the population covariance C.
// ε is relative to the mean eigenvalue.
WhiteningTransform fit_zca(const SequenceDataset& data, double epsilon = 1e-2);
SequenceDataset apply_zca(const WhiteningTransform& transform, const SequenceDataset& data);
// Population covariance of the frames (V×V).
Matrix covariance(const Matrix& frames);

// ---- synthetic sequences --------------------------------------------------

enum class SynthKind { cyclic_shift, sinusoid_mixture, translating_bar, bouncing_ball };

SynthKind parse_synth_kind(std::string_view text);

struct SynthParams {
    SynthKind kind = SynthKind::cyclic_shift;
    std::size_t dims = 8;       // cyclic_shift, sinusoid_mixture
    std::size_t length = 100;   // frames per sequence
    std::size_t sequences = 1;
    std::size_t components = 3;  // sinusoid_mixture
    double amplitude = 1.0;      // sinusoid_mixture
    std::size_t edge = 8;        // translating_bar, bouncing_ball (image is edge×edge)
    std::size_t bar_width = 2;   // translating_bar
    std::size_t bar_speed = 1;   // translating_bar, pixels per frame
    double ball_radius = 0.15;   // bouncing_ball, in unit-box coordinates
    double ball_speed = 0.07;    // bouncing_ball, per frame

    void validate() const;
};

/// dim k at time t = Σ_m amplitude(k,m)·sin(frequency[m]·t + phase(k,m)).
struct SinusoidMixture {
    Matrix amplitude;  // dims×components
    Matrix phase;      // dims×components
    std::vector<double> frequency;

    static SinusoidMixture draw(std::size_t dims, std::size_t components, double amplitude,
                                Rng& rng);
    double value(std::size_t dim, double t) const;
};

struct BallState {
    double x, y, vx, vy;
};

// Reflecting walls at [radius, 1 − radius]; velocities only ever flip sign.
std::vector<BallState> bouncing_ball_trajectory(BallState start, double radius, std::size_t steps);
// Vertical bar of bar_width pixels moving right by speed pixels per frame, wrapping.
Movie translating_bar_movie(std::size_t frames, std::size_t height, std::size_t width,
                            std::size_t bar_width, std::size_t speed, std::size_t offset = 0);

SequenceDataset synth_generate(const SynthParams& params, Rng& rng);

}  // namespace tarbm
