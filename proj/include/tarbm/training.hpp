#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string_view>

#include "tarbm/matrix.hpp"

namespace tarbm {

// Thrown by a trainer when TrainHooks::should_stop returns true at an epoch
// boundary. Parameters passed by reference hold the last completed epoch.
struct TrainingInterrupted : std::runtime_error {
    TrainingInterrupted() : std::runtime_error("training interrupted") {}
};

struct TrainHooks {
    // stage is one of "static", "ae", "joint", "crbm"; metric is the epoch's
    // mean per-sample squared reconstruction or prediction error.
    std::function<void(std::string_view stage, std::size_t epoch, double metric)> on_epoch;
    std::function<bool()> should_stop;

    void epoch_done(std::string_view stage, std::size_t epoch, double metric) const {
        if (on_epoch) on_epoch(stage, epoch, metric);
        if (should_stop && should_stop()) throw TrainingInterrupted();
    }
};

// velocity ← momentum·velocity + lr·(grad − decay·param); param ← param + velocity.
// `grad` is an ascent direction.
inline void momentum_step(Matrix& param, Matrix& velocity, const Matrix& grad, double lr,
                          double momentum, double decay) {
    require_same_shape(param, grad, "momentum_step");
    require_same_shape(param, velocity, "momentum_step");
    for (std::size_t i = 0; i < param.size(); ++i) {
        velocity[i] = momentum * velocity[i] + lr * (grad[i] - decay * param[i]);
        param[i] += velocity[i];
    }
}

}  // namespace tarbm
