#include "tarbm/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

namespace tarbm {

void Protocol::validate() const {
    if (train_count < 1 || test_snippets < 1 || repetitions < 1 || hidden_units < 1 || delay < 1)
        throw DomainError("protocol: all counts must be >= 1");
}

std::vector<BenchModel> standard_bench_models() {
    return {{"TRBM", BenchModelKind::trbm}, {"CRBM", BenchModelKind::crbm}, {"TARBM", BenchModelKind::tarbm}};
}

double frame_squared_error(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw ShapeError("frame_squared_error: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - actual[i];
        s += d * d;
    }
    return s / static_cast<double>(predicted.size());
}

SequenceDataset head_frames(const SequenceDataset& data, std::size_t count) {
    count = std::min(count, data.length());
    SequenceDataset out;
    out.labels = data.labels;
    std::vector<double> values(data.frames.data().begin(),
                               data.frames.data().begin() + static_cast<std::ptrdiff_t>(count * data.dims()));
    out.frames = Matrix(count, data.dims(), std::move(values));
    out.boundaries.clear();
    for (std::size_t b : data.boundaries)
        if (b < count) out.boundaries.push_back(b);
    if (out.boundaries.empty()) out.boundaries.push_back(0);
    return out;
}

SequenceDataset tail_frames(const SequenceDataset& data, std::size_t from) {
    from = std::min(from, data.length());
    SequenceDataset out;
    out.labels = data.labels;
    std::vector<double> values(data.frames.data().begin() + static_cast<std::ptrdiff_t>(from * data.dims()),
                               data.frames.data().end());
    out.frames = Matrix(data.length() - from, data.dims(), std::move(values));
    out.boundaries = {0};
    for (std::size_t b : data.boundaries)
        if (b > from) out.boundaries.push_back(b - from);
    return out;
}

namespace {

using Predictor = std::function<Matrix(const Matrix& history)>;

std::string architecture_string(BenchModelKind kind, const Protocol& p, const BenchSettings& s) {
    std::ostringstream os;
    if (kind == BenchModelKind::copy_last) return "copy last frame";
    os << p.hidden_units << " hidden units, " << p.delay << " frame delay; ";
    const auto& sch = s.schedule;
    switch (kind) {
        case BenchModelKind::trbm:
            os << sch.static_epochs << " static + " << sch.joint_epochs << " joint epochs";
            break;
        case BenchModelKind::tarbm:
            os << sch.static_epochs << " static + " << sch.ae_epochs_per_delay << " AE/delay + "
               << sch.joint_epochs << " joint epochs";
            break;
        case BenchModelKind::crbm:
            os << s.crbm_epochs << " CD epochs";
            break;
        case BenchModelKind::copy_last:
            break;
    }
    return os.str();
}

Predictor train_predictor(BenchModelKind kind, const SequenceDataset& train, const Protocol& p,
                          const BenchSettings& s, std::uint64_t train_seed) {
    Rng rng(train_seed);
    switch (kind) {
        case BenchModelKind::copy_last:
            return [](const Matrix& history) { return history.row_copy(0); };
        case BenchModelKind::trbm:
        case BenchModelKind::tarbm: {
            auto params = TarbmParams::init(train.dims(), p.hidden_units, p.delay, s.visible_kind,
                                            s.init_stddev, rng);
            train_temporal(params, train, s.schedule, s.cd, kind == BenchModelKind::tarbm, rng);
            return [params = std::move(params)](const Matrix& history) {
                return predict_next(params, history);
            };
        }
        case BenchModelKind::crbm: {
            auto params = CrbmParams::init(train.dims(), p.hidden_units, p.delay, s.visible_kind,
                                           s.init_stddev, rng);
            crbm_cd_train(params, train, s.cd, s.crbm_epochs, s.schedule.minibatch_size, rng);
            return [params = std::move(params)](const Matrix& history) {
                return predict_next(params, history);
            };
        }
    }
    throw DomainError("unknown bench model kind");
}

}  // namespace

BenchReport run_prediction_bench(const SequenceDataset& data, const Protocol& protocol,
                                 const std::vector<BenchModel>& models,
                                 const BenchSettings& settings, Rng& rng) {
    protocol.validate();
    data.validate();
    if (data.length() <= protocol.train_count)
        throw DomainError("bench: dataset has " + std::to_string(data.length()) +
                          " frames, none left after " + std::to_string(protocol.train_count) +
                          " training frames");
    const SequenceDataset train = head_frames(data, protocol.train_count);
    const SequenceDataset test = tail_frames(data, protocol.train_count);
    const auto test_ends = window_ends(test, protocol.delay);
    if (test_ends.size() < protocol.test_snippets)
        throw DomainError("bench: only " + std::to_string(test_ends.size()) +
                          " held-out windows for " + std::to_string(protocol.test_snippets) +
                          " snippets");
    if (window_ends(train, protocol.delay).empty())
        throw DomainError("bench: training frames are shorter than the delay");

    const std::uint64_t train_seed = rng.next_u64();
    std::vector<std::vector<std::size_t>> snippets;
    for (std::size_t r = 0; r < protocol.repetitions; ++r) {
        Rng rep = rng.split();
        auto perm = seeded_permutation(test_ends.size(), rep);
        perm.resize(protocol.test_snippets);
        for (auto& idx : perm) idx = test_ends[idx];
        snippets.push_back(std::move(perm));
    }

    BenchReport report;
    for (const BenchModel& model : models) {
        const auto t0 = std::chrono::steady_clock::now();
        const Predictor predict = train_predictor(model.kind, train, protocol, settings, train_seed);
        ModelResult result;
        result.name = model.name;
        result.architecture = architecture_string(model.kind, protocol, settings);
        result.config_hash = settings.config_hash;
        MseAccumulator overall;
        for (const auto& ends : snippets) {
            MseAccumulator rep;
            for (std::size_t end : ends) {
                Matrix history(protocol.delay, test.dims());
                for (std::size_t d = 1; d <= protocol.delay; ++d) {
                    auto src = test.frames.row_span(end - d);
                    std::copy(src.begin(), src.end(), history.row_span(d - 1).begin());
                }
                const Matrix predicted = predict(history);
                rep.add(frame_squared_error(predicted.data(), test.frames.row_span(end)));
            }
            result.per_seed.push_back(rep.mean());
            overall.add(rep.mean());
        }
        result.mse = overall.mean();
        if (settings.record_timing) {
            result.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        report.models.push_back(std::move(result));
    }
    return report;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::string emit_report(const BenchReport& report, ReportFormat format) {
    if (format == ReportFormat::json) {
        nlohmann::json j;
        j["models"] = nlohmann::json::array();
        for (const auto& m : report.models) {
            j["models"].push_back({{"name", m.name},
                                   {"architecture", m.architecture},
                                   {"mse", m.mse},
                                   {"per_seed", m.per_seed},
                                   {"seconds", m.seconds},
                                   {"config_hash", hex64(m.config_hash)}});
        }
        return j.dump(2) + "\n";
    }

    const std::string h_model = "Model", h_arch = "Architecture and Training",
                      h_mse = "Mean Squared Error";
    std::size_t w_model = h_model.size(), w_arch = h_arch.size();
    for (const auto& m : report.models) {
        w_model = std::max(w_model, m.name.size());
        w_arch = std::max(w_arch, m.architecture.size());
    }
    std::ostringstream os;
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
    os << pad(h_model, w_model) << "  " << pad(h_arch, w_arch) << "  " << h_mse << '\n';
    os << std::string(w_model + w_arch + h_mse.size() + 4, '-') << '\n';
    for (const auto& m : report.models) {
        char mse[32];
        std::snprintf(mse, sizeof mse, "%.6f", m.mse);
        os << pad(m.name, w_model) << "  " << pad(m.architecture, w_arch) << "  " << mse << '\n';
    }
    return os.str();
}

BenchReport parse_report_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        BenchReport report;
        for (const auto& m : j.at("models")) {
            ModelResult r;
            r.name = m.at("name").get<std::string>();
            r.architecture = m.at("architecture").get<std::string>();
            r.mse = m.at("mse").get<double>();
            r.per_seed = m.at("per_seed").get<std::vector<double>>();
            r.seconds = m.at("seconds").get<double>();
            r.config_hash = std::stoull(m.at("config_hash").get<std::string>(), nullptr, 16);
            report.models.push_back(std::move(r));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bench report json: ") + e.what());
    }
}

}  // namespace tarbm
