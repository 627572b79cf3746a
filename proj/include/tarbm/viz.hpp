#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tarbm/crbm.hpp"
#include "tarbm/image.hpp"
#include "tarbm/tarbm.hpp"

namespace tarbm {

enum class Normalization {
    per_tile,  // each tile min-max scaled to [0, 255] on its own
    global,    // one min-max over every tile in the image
};

// Constant tiles (max == min) render as 128.
inline constexpr std::uint8_t kFlatTileGray = 128;
// Tiles are separated by 1-pixel lines of this value.
inline constexpr std::uint8_t kSeparatorGray = 0;

struct GridLayout {
    std::size_t columns = 0;  // 0 → ceil(sqrt(tile count))
    Normalization normalization = Normalization::per_tile;
};

// Tiles every column of w (V×H) as a patch_edge×patch_edge filter, row by row.
// Image size: cols·e + cols − 1 by rows·e + rows − 1.
Image filter_grid(const Matrix& w, std::size_t patch_edge, const GridLayout& layout = {});

// One row for unit j: [B_M col j, …, B_1 col j, w col j], oldest on the left.
Image crbm_temporal_grid(const CrbmParams& params, std::size_t unit, std::size_t patch_edge,
                         Normalization normalization = Normalization::per_tile);

struct TraceNode {
    std::size_t unit = 0;
    double score = 0.0;
    std::size_t parent = 0;  // index into the previous level; 0 for the root

    friend bool operator==(const TraceNode&, const TraceNode&) = default;
};

/// levels[0] is the root at t−M; levels[k] holds the n^k selections for
/// time t−M+k. The children of levels[k−1][p] are levels[k][p·n .. p·n+n−1],
/// best first.
struct ProjectionTrace {
    std::size_t root = 0;
    std::size_t fan_out = 1;
    std::vector<std::vector<TraceNode>> levels;

    std::size_t order() const noexcept { return levels.empty() ? 0 : levels.size() - 1; }
    // Units from the root to levels[level][index].
    std::vector<std::size_t> path_to(std::size_t level, std::size_t index) const;

    friend bool operator==(const ProjectionTrace&, const ProjectionTrace&) = default;
};

// Walks the delays forward from `root` active at t−M. At each step a
// candidate j scores Σ over the branch's selected ancestors a (summed from the
// root downward) of w_lag(j, a), lag being the time distance from a to the
// new step; the n best per branch are kept, ties to the lowest index.
ProjectionTrace forward_projection(const TarbmParams& params, std::size_t root, std::size_t fan_out);

enum class TraceLayout {
    n1_column,  // fan-out 1 only: M+1 tiles stacked, t−M at the top, t at the bottom
    tree_rows,  // n^M columns; each node repeated across its subtree's columns
};

TraceLayout parse_trace_layout(std::string_view text);

Image render_trace(const ProjectionTrace& trace, const TarbmParams& params, std::size_t patch_edge,
                   TraceLayout layout, Normalization normalization = Normalization::per_tile);

struct ImageSize {
    std::size_t width = 0;
    std::size_t height = 0;
    friend bool operator==(const ImageSize&, const ImageSize&) = default;
};
ImageSize trace_image_size(std::size_t order, std::size_t fan_out, std::size_t patch_edge,
                           TraceLayout layout);

// TARBM: sum over pixels of the variance across time steps of the fan-out-1
// trace's projected drive w·c_k, where c_k holds the summed delayed logit
// contributions into step k (c_0 = 0 for the root).
std::vector<double> temporal_variation(const TarbmParams& params);
// CRBM: sum over pixels of the variance across the tiles [B_M … B_1, w].
std::vector<double> temporal_variation(const CrbmParams& params);
// Descending variation, ties by unit index.
std::vector<std::size_t> rank_by_variation(const std::vector<double>& variation);
std::vector<std::size_t> temporal_variation_rank(const TarbmParams& params);
std::vector<std::size_t> temporal_variation_rank(const CrbmParams& params);

// {"root": r, "n": n, "levels": [[{"unit": u, "score": s}, ...], ...]}
std::string trace_to_json(const ProjectionTrace& trace);
ProjectionTrace trace_from_json(std::string_view json);

}  // namespace tarbm
