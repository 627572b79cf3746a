#include "tarbm/data.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "binary_io.hpp"

namespace tarbm {

SequenceDataset SequenceDataset::single(Matrix frames) {
    SequenceDataset ds;
    ds.frames = std::move(frames);
    return ds;
}

std::pair<std::size_t, std::size_t> SequenceDataset::sequence(std::size_t s) const {
    const std::size_t end = s + 1 < boundaries.size() ? boundaries[s + 1] : length();
    return {boundaries.at(s), end};
}

void SequenceDataset::validate() const {
    if (length() == 0) {
        if (!boundaries.empty() && !(boundaries.size() == 1 && boundaries[0] == 0))
            throw DomainError("dataset: boundaries on empty dataset");
        return;
    }
    if (boundaries.empty() || boundaries.front() != 0)
        throw DomainError("dataset: boundaries must start with 0");
    for (std::size_t i = 1; i < boundaries.size(); ++i) {
        if (boundaries[i] <= boundaries[i - 1])
            throw DomainError("dataset: boundaries must be strictly increasing");
    }
    if (boundaries.back() >= length()) throw DomainError("dataset: boundary beyond last frame");
    if (!labels.empty() && labels.size() != dims())
        throw DomainError("dataset: label count does not match dimension");
}

std::vector<std::size_t> window_ends(const SequenceDataset& data, std::size_t order) {
    std::vector<std::size_t> ends;
    if (data.length() == 0) return ends;
    for (std::size_t s = 0; s < data.sequence_count(); ++s) {
        const auto [begin, end] = data.sequence(s);
        for (std::size_t t = begin + order; t < end; ++t) ends.push_back(t);
    }
    return ends;
}

FrameWindow gather_window(const SequenceDataset& data, std::size_t end, std::size_t order) {
    FrameWindow w{Matrix(order + 1, data.dims())};
    for (std::size_t d = 0; d <= order; ++d) {
        auto src = data.frames.row_span(end - d);
        std::copy(src.begin(), src.end(), w.frames.row_span(d).begin());
    }
    return w;
}

std::vector<FrameWindow> make_windows(const SequenceDataset& data, std::size_t order) {
    std::vector<FrameWindow> out;
    for (std::size_t t : window_ends(data, order)) out.push_back(gather_window(data, t, order));
    return out;
}

Matrix gather_delay(const SequenceDataset& data, std::span<const std::size_t> ends,
                    std::size_t delay) {
    Matrix out(ends.size(), data.dims());
    for (std::size_t b = 0; b < ends.size(); ++b) {
        auto src = data.frames.row_span(ends[b] - delay);
        std::copy(src.begin(), src.end(), out.row_span(b).begin());
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(std::string_view field, std::size_t line) {
    field = trim(field);
    double value = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw ParseError("non-numeric field '" + std::string(field) + "'", line);
    }
    return value;
}

}  // namespace

SequenceDataset parse_delimited(std::istream& in, char delimiter) {
    SequenceDataset ds;
    std::vector<double> values;
    std::size_t cols = 0, rows = 0, line_no = 0;
    bool pending_break = false;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view content = trim(line);
        if (content.empty()) {
            pending_break = rows > 0;
            continue;
        }
        if (content.front() == '#') continue;
        std::size_t count = 0;
        std::size_t pos = 0;
        while (true) {
            const auto next = content.find(delimiter, pos);
            const auto field = content.substr(pos, next == std::string_view::npos ? next : next - pos);
            values.push_back(parse_number(field, line_no));
            ++count;
            if (next == std::string_view::npos) break;
            pos = next + 1;
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw ParseError("ragged row: expected " + std::to_string(cols) + " fields, got " +
                                 std::to_string(count),
                             line_no);
        }
        if (pending_break) ds.boundaries.push_back(rows);
        pending_break = false;
        ++rows;
    }
    ds.frames = Matrix(rows, cols, std::move(values));
    return ds;
}

SequenceDataset load_delimited(const std::filesystem::path& path, char delimiter) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_delimited(in, delimiter);
}

void write_delimited(std::ostream& out, const SequenceDataset& data, char delimiter) {
    data.validate();
    char buf[32];
    std::size_t next_boundary = 1;
    for (std::size_t r = 0; r < data.length(); ++r) {
        if (next_boundary < data.boundaries.size() && data.boundaries[next_boundary] == r) {
            out << '\n';
            ++next_boundary;
        }
        for (std::size_t c = 0; c < data.dims(); ++c) {
            if (c) out << delimiter;
            // Shortest representation that round-trips exactly.
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, data.frames(r, c));
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

void save_delimited(const std::filesystem::path& path, const SequenceDataset& data,
                    char delimiter) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_delimited(out, data, delimiter);
}

void save_cache(const std::filesystem::path& path, const SequenceDataset& data) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write("TSEQ1", 5);
    detail::put_u32(out, static_cast<std::uint32_t>(data.length()));
    detail::put_u32(out, static_cast<std::uint32_t>(data.dims()));
    detail::put_u32(out, static_cast<std::uint32_t>(data.boundaries.size()));
    for (std::size_t b : data.boundaries) detail::put_u32(out, static_cast<std::uint32_t>(b));
    for (double v : data.frames.data()) detail::put_f64(out, v);
}

SequenceDataset load_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    detail::expect_magic(in, "TSEQ1");
    const std::size_t t = detail::get_u32(in);
    const std::size_t v = detail::get_u32(in);
    const std::size_t nb = detail::get_u32(in);
    SequenceDataset ds;
    ds.boundaries.resize(nb);
    for (auto& b : ds.boundaries) b = detail::get_u32(in);
    std::vector<double> values(t * v);
    for (double& x : values) x = detail::get_f64(in);
    ds.frames = Matrix(t, v, std::move(values));
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------

namespace {

std::string frame_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.pgm", index);
    return buf;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

}  // namespace

Movie load_pgm_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (std::size_t i = 0;; ++i) {
        auto p = dir / frame_name(i);
        if (!std::filesystem::exists(p)) break;
        files.push_back(std::move(p));
    }
    if (files.empty()) throw std::runtime_error("no frame_000000.pgm in " + dir.string());

    Movie movie;
    for (std::size_t i = 0; i < files.size(); ++i) {
        std::ifstream in(files[i], std::ios::binary);
        if (pgm_token(in) != "P5") throw ParseError(files[i].string() + ": not a P5 PGM");
        const std::size_t w = std::stoul(pgm_token(in));
        const std::size_t h = std::stoul(pgm_token(in));
        const std::size_t maxval = std::stoul(pgm_token(in));
        if (maxval != 255) throw ParseError(files[i].string() + ": maxval must be 255");
        if (i == 0) {
            movie = Movie(files.size(), h, w);
        } else if (w != movie.width || h != movie.height) {
            throw ParseError(files[i].string() + ": frame size differs from frame 0");
        }
        std::vector<unsigned char> raw(w * h);
        if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
            throw ParseError(files[i].string() + ": truncated pixel data");
        for (std::size_t k = 0; k < raw.size(); ++k) movie.pixels[i * w * h + k] = raw[k];
    }
    return movie;
}

void save_pgm_directory(const Movie& movie, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t t = 0; t < movie.frames; ++t) {
        std::ofstream out(dir / frame_name(t), std::ios::binary);
        out << "P5\n" << movie.width << ' ' << movie.height << "\n255\n";
        for (std::size_t y = 0; y < movie.height; ++y) {
            for (std::size_t x = 0; x < movie.width; ++x) {
                const double v = std::clamp(std::round(movie.at(t, y, x)), 0.0, 255.0);
                out.put(static_cast<char>(static_cast<unsigned char>(v)));
            }
        }
    }
}

void PatchSpec::validate() const {
    if (patch_edge < 1) throw DomainError("patch_edge must be >= 1");
    if (stride < 1) throw DomainError("patch stride must be >= 1");
    if (frames_per_sequence < 1) throw DomainError("frames_per_sequence must be >= 1");
}

SequenceDataset extract_patch_sequences(const Movie& movie, const PatchSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t e = spec.patch_edge, f = spec.frames_per_sequence;
    if (movie.frames < f) {
        throw DomainError("movie has " + std::to_string(movie.frames) + " frames, fewer than " +
                          std::to_string(f) + " per sequence");
    }
    if (movie.height < e || movie.width < e)
        throw DomainError("movie is smaller than the patch edge");

    const std::size_t ny = (movie.height - e) / spec.stride + 1;
    const std::size_t nx = (movie.width - e) / spec.stride + 1;
    const std::size_t nt = movie.frames - f + 1;

    SequenceDataset ds;
    ds.boundaries.clear();
    std::vector<double> values;
    values.reserve(spec.max_samples * f * e * e);
    for (std::size_t s = 0; s < spec.max_samples; ++s) {
        const std::size_t t0 = rng.uniform_index(nt);
        const std::size_t y0 = rng.uniform_index(ny) * spec.stride;
        const std::size_t x0 = rng.uniform_index(nx) * spec.stride;
        ds.boundaries.push_back(s * f);
        for (std::size_t tau = 0; tau < f; ++tau)
            for (std::size_t r = 0; r < e; ++r)
                for (std::size_t c = 0; c < e; ++c) values.push_back(movie.at(t0 + tau, y0 + r, x0 + c));
    }
    if (ds.boundaries.empty()) ds.boundaries.push_back(0);
    ds.frames = Matrix(spec.max_samples * f, e * e, std::move(values));
    return ds;
}

SequenceDataset contrast_normalize(const SequenceDataset& data) {
    SequenceDataset out = data;
    const double n = static_cast<double>(data.dims());
    for (std::size_t r = 0; r < out.length(); ++r) {
        auto row = out.frames.row_span(r);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        const double sd = std::max(std::sqrt(var / n), 1e-8);
        for (double& v : row) v = (v - mean) / sd;
    }
    return out;
}

Matrix covariance(const Matrix& frames) {
    const Matrix mean = column_means(frames);
    const std::size_t v = frames.cols();
    Matrix centered = frames;
    for (std::size_t r = 0; r < centered.rows(); ++r)
        for (std::size_t c = 0; c < v; ++c) centered(r, c) -= mean[c];
    Matrix cov = matmul_tn(centered, centered);
    cov *= 1.0 / static_cast<double>(frames.rows());
    return cov;
}

WhiteningTransform fit_zca(const SequenceDataset& data, double epsilon) {
    if (!(epsilon > 0.0)) throw DomainError("fit_zca: epsilon must be > 0");
    if (data.length() == 0) throw DomainError("fit_zca: empty dataset");
    const std::size_t v = data.dims();
    if (data.length() <= v) {
        warn("fit_zca: " + std::to_string(data.length()) + " frames for " + std::to_string(v) +
             " dimensions; covariance is rank deficient");
    }
    const Matrix cov = covariance(data.frames);
    if (!all_finite(cov)) throw DomainError("fit_zca: non-finite covariance");

    Eigen::MatrixXd c(v, v);
    for (std::size_t i = 0; i < v; ++i)
        for (std::size_t j = 0; j < v; ++j) c(i, j) = cov(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) throw DomainError("fit_zca: eigendecomposition failed");

    const double eps_abs = epsilon * c.trace() / static_cast<double>(v);
    Eigen::VectorXd scale = eig.eigenvalues().unaryExpr(
        [eps_abs](double lambda) { return 1.0 / std::sqrt(std::max(lambda, 0.0) + eps_abs); });
    const Eigen::MatrixXd& e = eig.eigenvectors();
    Eigen::MatrixXd t = e * scale.asDiagonal() * e.transpose();

    WhiteningTransform out;
    out.mean = column_means(data.frames);
    out.transform = Matrix(v, v);
    for (std::size_t i = 0; i < v; ++i)
        for (std::size_t j = 0; j < v; ++j) out.transform(i, j) = 0.5 * (t(i, j) + t(j, i));
    out.epsilon = epsilon;
    return out;
}

SequenceDataset apply_zca(const WhiteningTransform& transform, const SequenceDataset& data) {
    if (data.dims() != transform.transform.rows())
        throw ShapeError("apply_zca: dataset width does not match transform");
    Matrix centered = data.frames;
    for (std::size_t r = 0; r < centered.rows(); ++r)
        for (std::size_t c = 0; c < centered.cols(); ++c) centered(r, c) -= transform.mean[c];
    SequenceDataset out = data;
    // transform is symmetric, so row·Tᵀ = row·T.
    out.frames = matmul(centered, transform.transform);
    return out;
}

// ---------------------------------------------------------------------------

SynthKind parse_synth_kind(std::string_view text) {
    if (text == "cyclic_shift") return SynthKind::cyclic_shift;
    if (text == "sinusoid_mixture") return SynthKind::sinusoid_mixture;
    if (text == "translating_bar") return SynthKind::translating_bar;
    if (text == "bouncing_ball") return SynthKind::bouncing_ball;
    throw DomainError("unknown synthetic kind '" + std::string(text) + "'");
}

void SynthParams::validate() const {
    if (length < 1 || sequences < 1) throw DomainError("synth: length and sequences must be >= 1");
    switch (kind) {
        case SynthKind::cyclic_shift:
            if (dims < 1) throw DomainError("synth: cyclic_shift needs dims >= 1");
            break;
        case SynthKind::sinusoid_mixture:
            if (dims < 1 || components < 1) throw DomainError("synth: sinusoid_mixture needs dims, components >= 1");
            if (!(amplitude > 0.0)) throw DomainError("synth: amplitude must be > 0");
            break;
        case SynthKind::translating_bar:
            if (edge < 1 || bar_width < 1 || bar_width > edge)
                throw DomainError("synth: translating_bar needs 1 <= bar_width <= edge");
            break;
        case SynthKind::bouncing_ball:
            if (edge < 1) throw DomainError("synth: bouncing_ball needs edge >= 1");
            if (!(ball_radius > 0.0 && ball_radius < 0.5))
                throw DomainError("synth: ball_radius must be in (0, 0.5)");
            if (!(ball_speed > 0.0 && ball_speed < 1.0 - 2.0 * ball_radius))
                throw DomainError("synth: ball_speed must be positive and smaller than the box");
            break;
    }
}

SinusoidMixture SinusoidMixture::draw(std::size_t dims, std::size_t components, double amplitude,
                                      Rng& rng) {
    SinusoidMixture m;
    m.amplitude = Matrix(dims, components);
    m.phase = Matrix(dims, components);
    m.frequency.resize(components);
    for (double& f : m.frequency) f = 0.1 + 0.4 * rng.uniform();
    // Unit-variance-ish dimensions: each sinusoid has variance a²/2.
    const double scale = amplitude * std::sqrt(2.0 / static_cast<double>(components));
    for (std::size_t k = 0; k < dims; ++k) {
        for (std::size_t c = 0; c < components; ++c) {
            m.amplitude(k, c) = scale * (0.5 + rng.uniform());
            m.phase(k, c) = 2.0 * std::numbers::pi * rng.uniform();
        }
    }
    return m;
}

double SinusoidMixture::value(std::size_t dim, double t) const {
    double s = 0.0;
    for (std::size_t c = 0; c < frequency.size(); ++c)
        s += amplitude(dim, c) * std::sin(frequency[c] * t + phase(dim, c));
    return s;
}

std::vector<BallState> bouncing_ball_trajectory(BallState start, double radius, std::size_t steps) {
    std::vector<BallState> out;
    out.reserve(steps);
    const double lo = radius, hi = 1.0 - radius;
    auto reflect = [&](double& p, double& v) {
        p += v;
        if (p < lo) {
            p = 2.0 * lo - p;
            v = -v;
        } else if (p > hi) {
            p = 2.0 * hi - p;
            v = -v;
        }
    };
    BallState s = start;
    for (std::size_t i = 0; i < steps; ++i) {
        out.push_back(s);
        reflect(s.x, s.vx);
        reflect(s.y, s.vy);
    }
    return out;
}

Movie translating_bar_movie(std::size_t frames, std::size_t height, std::size_t width,
                            std::size_t bar_width, std::size_t speed, std::size_t offset) {
    Movie m(frames, height, width);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t left = (offset + t * speed) % width;
        for (std::size_t k = 0; k < bar_width; ++k) {
            const std::size_t x = (left + k) % width;
            for (std::size_t y = 0; y < height; ++y) m.at(t, y, x) = 255.0;
        }
    }
    return m;
}

SequenceDataset synth_generate(const SynthParams& p, Rng& rng) {
    p.validate();
    SequenceDataset ds;
    ds.boundaries.clear();
    for (std::size_t s = 0; s < p.sequences; ++s) ds.boundaries.push_back(s * p.length);
    const std::size_t total = p.sequences * p.length;

    switch (p.kind) {
        case SynthKind::cyclic_shift: {
            ds.frames = Matrix(total, p.dims);
            for (std::size_t s = 0; s < p.sequences; ++s)
                for (std::size_t t = 0; t < p.length; ++t)
                    ds.frames(s * p.length + t, (s + t) % p.dims) = 1.0;
            break;
        }
        case SynthKind::sinusoid_mixture: {
            const auto mix = SinusoidMixture::draw(p.dims, p.components, p.amplitude, rng);
            ds.frames = Matrix(total, p.dims);
            for (std::size_t t = 0; t < total; ++t)
                for (std::size_t k = 0; k < p.dims; ++k)
                    ds.frames(t, k) = mix.value(k, static_cast<double>(t));
            break;
        }
        case SynthKind::translating_bar: {
            ds.frames = Matrix(total, p.edge * p.edge);
            for (std::size_t s = 0; s < p.sequences; ++s) {
                const Movie m = translating_bar_movie(p.length, p.edge, p.edge, p.bar_width,
                                                      p.bar_speed, rng.uniform_index(p.edge));
                for (std::size_t t = 0; t < p.length; ++t)
                    for (std::size_t i = 0; i < p.edge * p.edge; ++i)
                        ds.frames(s * p.length + t, i) = m.pixels[t * p.edge * p.edge + i] / 255.0;
            }
            break;
        }
        case SynthKind::bouncing_ball: {
            ds.frames = Matrix(total, p.edge * p.edge);
            const double sigma = p.ball_radius / 2.0;
            for (std::size_t s = 0; s < p.sequences; ++s) {
                const double lo = p.ball_radius, span = 1.0 - 2.0 * p.ball_radius;
                const double angle = 2.0 * std::numbers::pi * rng.uniform();
                BallState start{lo + span * rng.uniform(), lo + span * rng.uniform(),
                                p.ball_speed * std::cos(angle), p.ball_speed * std::sin(angle)};
                const auto traj = bouncing_ball_trajectory(start, p.ball_radius, p.length);
                for (std::size_t t = 0; t < p.length; ++t) {
                    for (std::size_t y = 0; y < p.edge; ++y) {
                        for (std::size_t x = 0; x < p.edge; ++x) {
                            const double px = (static_cast<double>(x) + 0.5) / static_cast<double>(p.edge);
                            const double py = (static_cast<double>(y) + 0.5) / static_cast<double>(p.edge);
                            const double d2 = (px - traj[t].x) * (px - traj[t].x) +
                                              (py - traj[t].y) * (py - traj[t].y);
                            ds.frames(s * p.length + t, y * p.edge + x) =
                                std::exp(-d2 / (2.0 * sigma * sigma));
                        }
                    }
                }
            }
            break;
        }
    }
    return ds;
}

}  // namespace tarbm
