// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffstego {

/// Diffusion bookkeeping: per-step retention factors alpha_t and their
/// cumulative products alpha_bar_t for t = 1..T, with the convention
/// alpha_bar_0 = 1 (step index 0 is the clean image).
///
/// Immutable after construction; safe to share across threads.
struct NoiseSchedule {
    int num_steps = 0;                // T
    std::vector<double> alphas;       // alphas[t-1] = alpha_t, size T
    std::vector<double> alpha_bars;   // alpha_bars[t] = alpha_bar_t, size T+1, [0] = 1

    double alpha(int t) const {
        if (t < 1 || t > num_steps) {
            throw std::invalid_argument("NoiseSchedule::alpha: step index " + std::to_string(t) +
                                        " outside [1, " + std::to_string(num_steps) + "]");
        }
        return alphas[static_cast<std::size_t>(t) - 1];
    }

    double alpha_bar(int t) const {
        if (t < 0 || t > num_steps) {
            throw std::invalid_argument("NoiseSchedule::alpha_bar: step index " +
                                        std::to_string(t) + " outside [0, " +
                                        std::to_string(num_steps) + "]");
        }
        return alpha_bars[static_cast<std::size_t>(t)];
    }

    void validate() const {
        if (num_steps < 1) throw std::invalid_argument("NoiseSchedule: num_steps must be >= 1");
        if (alphas.size() != static_cast<std::size_t>(num_steps) ||
            alpha_bars.size() != static_cast<std::size_t>(num_steps) + 1) {
            throw std::invalid_argument("NoiseSchedule: inconsistent array sizes");
        }
        if (alpha_bars[0] != 1.0) throw std::invalid_argument("NoiseSchedule: alpha_bar_0 must be 1");
        double prod = 1.0;
        for (int t = 1; t <= num_steps; ++t) {
            const double a = alphas[static_cast<std::size_t>(t) - 1];
            if (!(a > 0.0 && a <= 1.0)) {
                throw std::invalid_argument("NoiseSchedule: alpha_" + std::to_string(t) +
                                            " outside (0, 1]");
            }
            prod *= a;
            const double stored = alpha_bars[static_cast<std::size_t>(t)];
            if (std::abs(stored - prod) > 1e-12 * std::max(std::abs(prod), 1e-300)) {
                throw std::invalid_argument("NoiseSchedule: alpha_bar_" + std::to_string(t) +
                                            " is not the cumulative product of alphas");
            }
            if (stored > alpha_bars[static_cast<std::size_t>(t) - 1]) {
                throw std::invalid_argument("NoiseSchedule: alpha_bar must be non-increasing");
            }
        }
        if (!(alpha_bars[static_cast<std::size_t>(num_steps)] > 0.0 &&
              alpha_bars[static_cast<std::size_t>(num_steps)] < 1.0)) {
            throw std::invalid_argument("NoiseSchedule: alpha_bar_T must lie in (0, 1)");
        }
    }
};

inline constexpr int kDefaultScheduleSteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.02;

/// Linear beta schedule: beta_t interpolated from beta_start to beta_end,
/// alpha_t = 1 - beta_t. For num_steps == 1 the single beta is beta_start.
inline NoiseSchedule build_linear_schedule(int num_steps,
                                           double beta_start = kDefaultBetaStart,
                                           double beta_end = kDefaultBetaEnd) {
    if (num_steps < 1) throw std::invalid_argument("build_linear_schedule: num_steps must be >= 1");
    if (!(beta_start > 0.0 && beta_start < 1.0) || !(beta_end > 0.0 && beta_end < 1.0)) {
        throw std::invalid_argument("build_linear_schedule: betas must lie in (0, 1)");
    }
    if (beta_start > beta_end) {
        throw std::invalid_argument("build_linear_schedule: beta_start must not exceed beta_end");
    }
    NoiseSchedule sched;
    sched.num_steps = num_steps;
    sched.alphas.resize(static_cast<std::size_t>(num_steps));
    sched.alpha_bars.resize(static_cast<std::size_t>(num_steps) + 1);
    sched.alpha_bars[0] = 1.0;
    double prod = 1.0;
    for (int t = 1; t <= num_steps; ++t) {
        const double frac = num_steps == 1 ? 0.0
                                           : static_cast<double>(t - 1) / (num_steps - 1);
        const double beta = beta_start + (beta_end - beta_start) * frac;
        const double a = 1.0 - beta;
        sched.alphas[static_cast<std::size_t>(t) - 1] = a;
        prod *= a;
        sched.alpha_bars[static_cast<std::size_t>(t)] = prod;
    }
    sched.validate();
    return sched;
}

/// Closed marginal form of the noising process:
///   x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps.
/// The caller supplies eps; this function draws no randomness.
inline std::vector<double> forward_diffuse(const std::vector<double>& x0, int t,
                                           const std::vector<double>& eps,
                                           const NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.num_steps) {
        throw std::invalid_argument("forward_diffuse: step index " + std::to_string(t) +
                                    " outside [1, " + std::to_string(schedule.num_steps) + "]");
    }
    if (x0.size() != eps.size()) {
        throw std::invalid_argument("forward_diffuse: x0 and eps have different sizes");
    }
    const double ab = schedule.alpha_bar(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

}  // namespace diffstego
