#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "endprompt/model.hpp"

namespace eplab {

struct Schedule {
    double peak_lr = 3e-4;
    int warmup_steps = 20;
    std::int64_t max_steps = 0;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double adam_eps = 1e-8;
};

// Linear ramp to peak over warmup_steps, constant afterwards. Steps are
// 1-indexed: with warmup 20, step 10 runs at half the peak rate.
inline double lr_at(const Schedule& schedule, std::int64_t step) {
    if (step < 1) {
        throw std::invalid_argument("lr_at: step must be >= 1");
    }
    if (schedule.warmup_steps <= 0 || step >= schedule.warmup_steps) {
        return schedule.peak_lr;
    }
    return schedule.peak_lr * static_cast<double>(step) /
           static_cast<double>(schedule.warmup_steps);
}

struct StepRecord {
    std::int64_t step = 0;
    double lr = 0.0;
    double loss_sum = 0.0;
    double loss_mean = 0.0;
    double wall_ms = 0.0;
};

struct TrainState {
    TinyModelParams params;
    std::vector<double> adam_m;
    std::vector<double> adam_v;
    std::int64_t step = 0;
    std::uint64_t seed = 0;
};

// Runs max_steps Adam updates over the batches, cycling when the stream is
// shorter than the step budget. Deterministic given the initial parameters
// and batch order; the thread count only parallelizes per-sample gradients,
// which are reduced in a fixed order.
inline TrainState train_from(TinyModelParams params, const std::vector<Batch>& batches,
                             const Schedule& schedule, std::uint64_t seed,
                             std::vector<StepRecord>* log = nullptr, int threads = 1) {
    if (schedule.max_steps > 0 && batches.empty()) {
        throw std::invalid_argument("train: no batches supplied");
    }
    TrainState state;
    state.params = std::move(params);
    state.adam_m.assign(state.params.size(), 0.0);
    state.adam_v.assign(state.params.size(), 0.0);
    state.seed = seed;

    std::vector<double> grad(state.params.size(), 0.0);
    for (std::int64_t step = 1; step <= schedule.max_steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        const Batch& batch = batches[static_cast<std::size_t>((step - 1) %
                                                              static_cast<std::int64_t>(batches.size()))];
        const LossResult loss = backward(state.params, batch, grad, threads);
        if (!std::isfinite(loss.sum)) {
            throw std::runtime_error("train: non-finite loss at step " + std::to_string(step) +
                                     " (divergence guard)");
        }
        const double lr = lr_at(schedule, step);
        const double bc1 = 1.0 - std::pow(schedule.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(schedule.beta2, static_cast<double>(step));
        std::vector<double>& flat = state.params.flat();
        for (std::size_t i = 0; i < flat.size(); ++i) {
            state.adam_m[i] = schedule.beta1 * state.adam_m[i] + (1.0 - schedule.beta1) * grad[i];
            state.adam_v[i] =
                schedule.beta2 * state.adam_v[i] + (1.0 - schedule.beta2) * grad[i] * grad[i];
            const double m_hat = state.adam_m[i] / bc1;
            const double v_hat = state.adam_v[i] / bc2;
            flat[i] -= lr * m_hat / (std::sqrt(v_hat) + schedule.adam_eps);
        }
        state.step = step;
        if (log != nullptr) {
            const double wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
            log->push_back({step, lr, loss.sum, loss.mean, wall_ms});
        }
    }
    return state;
}

inline TrainState train(const ModelConfig& config, const std::vector<Batch>& batches,
                        const Schedule& schedule, std::uint64_t seed,
                        std::vector<StepRecord>* log = nullptr, int threads = 1) {
    Rng rng(seed);
    return train_from(TinyModelParams::random_init(config, rng), batches, schedule, seed, log,
                      threads);
}

}  // namespace eplab
