#include "tarbm/viz.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tarbm {

namespace {

struct Range {
    double lo = 0.0, hi = 0.0;
};

Range value_range(std::span<const double> values) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return {*lo, *hi};
}

void check_patch(std::size_t visible, std::size_t edge) {
    if (edge == 0 || edge * edge != visible) {
        throw DomainError("visible size " + std::to_string(visible) + " is not " +
                          std::to_string(edge) + "x" + std::to_string(edge));
    }
}

std::uint8_t to_gray(double x, Range r) {
    if (!(r.hi > r.lo)) return kFlatTileGray;
    const double scaled = std::round((x - r.lo) / (r.hi - r.lo) * 255.0);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

// Places tiles[i] at (row, col) slots; slot i of `slots` gives (col, row).
Image compose(const std::vector<Matrix>& tiles, const std::vector<std::pair<std::size_t, std::size_t>>& slots,
              std::size_t cols, std::size_t rows, std::size_t edge, Normalization norm) {
    Image img(cols * edge + (cols > 0 ? cols - 1 : 0), rows * edge + (rows > 0 ? rows - 1 : 0),
              kSeparatorGray);
    Range global;
    if (norm == Normalization::global && !tiles.empty()) {
        global = value_range(tiles.front().data());
        for (const Matrix& t : tiles) {
            const Range r = value_range(t.data());
            global.lo = std::min(global.lo, r.lo);
            global.hi = std::max(global.hi, r.hi);
        }
    }
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const Range r = norm == Normalization::global ? global : value_range(tiles[i].data());
        const auto [col, row] = slots[i];
        const std::size_t x0 = col * (edge + 1), y0 = row * (edge + 1);
        for (std::size_t y = 0; y < edge; ++y)
            for (std::size_t x = 0; x < edge; ++x) img.at(x0 + x, y0 + y) = to_gray(tiles[i][y * edge + x], r);
    }
    return img;
}

Matrix filter_of(const Matrix& w, std::size_t unit) { return w.col_copy(unit); }

}  // namespace

Image filter_grid(const Matrix& w, std::size_t patch_edge, const GridLayout& layout) {
    check_patch(w.rows(), patch_edge);
    const std::size_t n = w.cols();
    std::size_t cols = layout.columns;
    if (cols == 0) cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    cols = std::max<std::size_t>(1, std::min(cols, std::max<std::size_t>(n, 1)));
    const std::size_t rows = (n + cols - 1) / cols;
    std::vector<Matrix> tiles;
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t j = 0; j < n; ++j) {
        tiles.push_back(filter_of(w, j));
        slots.emplace_back(j % cols, j / cols);
    }
    return compose(tiles, slots, cols, rows, patch_edge, layout.normalization);
}

Image crbm_temporal_grid(const CrbmParams& params, std::size_t unit, std::size_t patch_edge,
                         Normalization normalization) {
    check_patch(params.visible(), patch_edge);
    if (unit >= params.hidden()) throw DomainError("crbm_temporal_grid: unit out of range");
    const std::size_t m = params.order();
    std::vector<Matrix> tiles;
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t d = m; d >= 1; --d) {
        tiles.push_back(filter_of(params.history_to_hidden[d - 1], unit));
        slots.emplace_back(m - d, 0);
    }
    tiles.push_back(filter_of(params.static_.w, unit));
    slots.emplace_back(m, 0);
    return compose(tiles, slots, m + 1, 1, patch_edge, normalization);
}

std::vector<std::size_t> ProjectionTrace::path_to(std::size_t level, std::size_t index) const {
    std::vector<std::size_t> path(level + 1);
    for (std::size_t k = level + 1; k-- > 0;) {
        const TraceNode& node = levels.at(k).at(index);
        path[k] = node.unit;
        index = node.parent;
    }
    return path;
}

ProjectionTrace forward_projection(const TarbmParams& params, std::size_t root, std::size_t fan_out) {
    const std::size_t nh = params.hidden(), m = params.order();
    if (root >= nh) throw DomainError("forward_projection: root unit out of range");
    if (fan_out < 1 || fan_out > nh) throw DomainError("forward_projection: n must be in [1, H]");

    ProjectionTrace trace;
    trace.root = root;
    trace.fan_out = fan_out;
    trace.levels.push_back({TraceNode{root, 0.0, 0}});
    std::vector<std::size_t> candidates(nh);
    std::vector<double> score(nh);
    for (std::size_t k = 1; k <= m; ++k) {
        std::vector<TraceNode> level;
        level.reserve(trace.levels.back().size() * fan_out);
        for (std::size_t p = 0; p < trace.levels[k - 1].size(); ++p) {
            const auto ancestors = trace.path_to(k - 1, p);
            for (std::size_t j = 0; j < nh; ++j) {
                double s = 0.0;
                for (std::size_t a = 0; a < ancestors.size(); ++a)
                    s += params.delayed[k - a - 1](j, ancestors[a]);
                score[j] = s;
            }
            std::iota(candidates.begin(), candidates.end(), std::size_t{0});
            std::stable_sort(candidates.begin(), candidates.end(),
                             [&](std::size_t x, std::size_t y) { return score[x] > score[y]; });
            for (std::size_t c = 0; c < fan_out; ++c)
                level.push_back(TraceNode{candidates[c], score[candidates[c]], p});
        }
        trace.levels.push_back(std::move(level));
    }
    return trace;
}

TraceLayout parse_trace_layout(std::string_view text) {
    if (text == "n1_column" || text == "column") return TraceLayout::n1_column;
    if (text == "tree_rows" || text == "tree") return TraceLayout::tree_rows;
    throw DomainError("unknown trace layout '" + std::string(text) + "'");
}

namespace {

std::size_t power(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

ImageSize trace_image_size(std::size_t order, std::size_t fan_out, std::size_t patch_edge,
                           TraceLayout layout) {
    const std::size_t rows = order + 1;
    const std::size_t cols = layout == TraceLayout::n1_column ? 1 : power(fan_out, order);
    return {cols * patch_edge + cols - 1, rows * patch_edge + rows - 1};
}

Image render_trace(const ProjectionTrace& trace, const TarbmParams& params, std::size_t patch_edge,
                   TraceLayout layout, Normalization normalization) {
    check_patch(params.visible(), patch_edge);
    const std::size_t m = trace.order();
    if (m != params.order()) throw DomainError("render_trace: trace order does not match model");
    if (layout == TraceLayout::n1_column && trace.fan_out != 1)
        throw DomainError("render_trace: n1_column layout needs fan-out 1, got " +
                          std::to_string(trace.fan_out) + "; use tree_rows");
    const std::size_t cols = layout == TraceLayout::n1_column ? 1 : power(trace.fan_out, m);

    std::vector<Matrix> tiles;
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t k = 0; k <= m; ++k) {
        const std::size_t span = cols / power(trace.fan_out, k);
        for (std::size_t c = 0; c < cols; ++c) {
            const TraceNode& node = trace.levels[k].at(c / span);
            tiles.push_back(filter_of(params.static_.w, node.unit));
            slots.emplace_back(c, k);
        }
    }
    return compose(tiles, slots, cols, m + 1, patch_edge, normalization);
}

namespace {

double summed_pixel_variance(const std::vector<Matrix>& tiles) {
    const double n = static_cast<double>(tiles.size());
    double total = 0.0;
    for (std::size_t p = 0; p < tiles.front().size(); ++p) {
        double mean = 0.0;
        for (const Matrix& t : tiles) mean += t[p];
        mean /= n;
        double var = 0.0;
        for (const Matrix& t : tiles) var += (t[p] - mean) * (t[p] - mean);
        total += var / n;
    }
    return total;
}

}  // namespace

std::vector<double> temporal_variation(const TarbmParams& params) {
    const std::size_t nh = params.hidden(), m = params.order();
    std::vector<double> out(nh, 0.0);
    if (m == 0) return out;
    for (std::size_t r = 0; r < nh; ++r) {
        const ProjectionTrace trace = forward_projection(params, r, 1);
        const auto path = trace.path_to(m, 0);
        std::vector<Matrix> tiles{Matrix(params.visible(), 1)};
        for (std::size_t k = 1; k <= m; ++k) {
            Matrix drive(nh, 1);
            for (std::size_t j = 0; j < nh; ++j)
                for (std::size_t a = 0; a < k; ++a) drive[j] += params.delayed[k - a - 1](j, path[a]);
            tiles.push_back(matmul(params.static_.w, drive));
        }
        out[r] = summed_pixel_variance(tiles);
    }
    return out;
}

std::vector<double> temporal_variation(const CrbmParams& params) {
    std::vector<double> out(params.hidden());
    for (std::size_t j = 0; j < params.hidden(); ++j) {
        std::vector<Matrix> tiles;
        for (std::size_t d = params.order(); d >= 1; --d)
            tiles.push_back(filter_of(params.history_to_hidden[d - 1], j));
        tiles.push_back(filter_of(params.static_.w, j));
        out[j] = summed_pixel_variance(tiles);
    }
    return out;
}

std::vector<std::size_t> rank_by_variation(const std::vector<double>& variation) {
    std::vector<std::size_t> idx(variation.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return variation[a] > variation[b]; });
    return idx;
}

std::vector<std::size_t> temporal_variation_rank(const TarbmParams& params) {
    return rank_by_variation(temporal_variation(params));
}

std::vector<std::size_t> temporal_variation_rank(const CrbmParams& params) {
    return rank_by_variation(temporal_variation(params));
}

std::string trace_to_json(const ProjectionTrace& trace) {
    nlohmann::json j;
    j["root"] = trace.root;
    j["n"] = trace.fan_out;
    j["levels"] = nlohmann::json::array();
    for (const auto& level : trace.levels) {
        auto row = nlohmann::json::array();
        for (const TraceNode& node : level) row.push_back({{"unit", node.unit}, {"score", node.score}});
        j["levels"].push_back(std::move(row));
    }
    return j.dump(2);
}

ProjectionTrace trace_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ProjectionTrace trace;
        trace.root = j.at("root").get<std::size_t>();
        trace.fan_out = j.at("n").get<std::size_t>();
        for (const auto& row : j.at("levels")) {
            std::vector<TraceNode> level;
            for (std::size_t i = 0; i < row.size(); ++i) {
                const std::size_t parent = trace.levels.empty() ? 0 : i / trace.fan_out;
                level.push_back(TraceNode{row[i].at("unit").get<std::size_t>(),
                                          row[i].at("score").get<double>(), parent});
            }
            trace.levels.push_back(std::move(level));
        }
        return trace;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("trace json: ") + e.what());
    }
}

}  // namespace tarbm
