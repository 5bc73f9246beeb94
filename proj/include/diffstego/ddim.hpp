// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffstego/prior.hpp"
#include "diffstego/schedule.hpp"

namespace diffstego {

/// Deterministic integrator settings. sigma is pinned to 0: the stochastic
/// branch of the sampler is out of scope, and sigma = 0 is what makes the
/// noise <-> image map a bijection worth inverting.
struct SolverConfig {
    int num_solver_steps = 50;
    double sigma = 0.0;

    void validate(const NoiseSchedule& schedule) const {
        if (sigma != 0.0) throw std::invalid_argument("SolverConfig: sigma must be 0");
        if (num_solver_steps < 1) {
            throw std::invalid_argument("SolverConfig: num_solver_steps must be >= 1");
        }
        if (num_solver_steps > schedule.num_steps) {
            throw std::invalid_argument("SolverConfig: num_solver_steps " +
                                        std::to_string(num_solver_steps) +
                                        " exceeds schedule steps " +
                                        std::to_string(schedule.num_steps));
        }
    }
};

/// Strictly increasing step indices from 0 to T. The backward pass walks the
/// exact reverse of the same list, which keeps the two directions on a shared
/// grid and minimizes round-trip error.
struct StepSequence {
    std::vector<int> indices;

    /// Uniform subsampling of [0, T] into num_intervals intervals, endpoints
    /// included. Requires num_intervals <= T so the rounded grid stays
    /// strictly increasing.
    static StepSequence uniform(int schedule_steps, int num_intervals) {
        if (num_intervals < 1 || num_intervals > schedule_steps) {
            throw std::invalid_argument("StepSequence::uniform: num_intervals outside [1, T]");
        }
        StepSequence seq;
        seq.indices.resize(static_cast<std::size_t>(num_intervals) + 1);
        for (int i = 0; i <= num_intervals; ++i) {
            seq.indices[static_cast<std::size_t>(i)] = static_cast<int>(
                std::lround(static_cast<double>(i) * schedule_steps / num_intervals));
        }
        seq.validate(schedule_steps);
        return seq;
    }

    void validate(int schedule_steps) const {
        if (indices.size() < 2) throw std::invalid_argument("StepSequence: need >= 2 indices");
        if (indices.front() != 0 || indices.back() != schedule_steps) {
            throw std::invalid_argument("StepSequence: endpoints must be 0 and T");
        }
        for (std::size_t i = 1; i < indices.size(); ++i) {
            if (indices[i] <= indices[i - 1]) {
                throw std::invalid_argument("StepSequence: indices must be strictly increasing");
            }
        }
    }
};

/// One deterministic update from step t to step s (either order):
///   x_s = sqrt(abar_s) * f + sqrt(1 - abar_s) * eps_hat,
///   f   = (x - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t),
/// with eps_hat = estimator(x, t) evaluated at the current state. For s > t
/// this same formula is the inversion step; evaluating the estimator at the
/// lower-noise current state is the standard approximation that makes round
/// trips inexact for non-linear estimators.
///
/// estimator: callable (const std::vector<double>&, int t) -> std::vector<double>.
template <typename Estimator>
std::vector<double> ddim_step_with(const std::vector<double>& x, int t, int s,
                                   const NoiseSchedule& schedule, Estimator&& estimator) {
    if (t < 0 || t > schedule.num_steps || s < 0 || s > schedule.num_steps) {
        throw std::invalid_argument("ddim_step: step index outside [0, T]");
    }
    if (s == t) return x;
    const std::vector<double> eps = estimator(x, t);
    if (eps.size() != x.size()) {
        throw std::invalid_argument("ddim_step: estimator output size mismatch");
    }
    const double ab_t = schedule.alpha_bar(t);
    const double ab_s = schedule.alpha_bar(s);
    const double sa_t = std::sqrt(ab_t);
    const double sb_t = std::sqrt(1.0 - ab_t);
    const double sa_s = std::sqrt(ab_s);
    const double sb_s = std::sqrt(1.0 - ab_s);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = (x[i] - sb_t * eps[i]) / sa_t;
        out[i] = sa_s * f + sb_s * eps[i];
    }
    return out;
}

inline std::vector<double> ddim_step(const std::vector<double>& x, int t, int s,
                                     const ConditionKey& key, const EstimatorRegistry& registry) {
    return ddim_step_with(x, t, s, registry.schedule(),
                          [&](const std::vector<double>& xt, int step) {
                              return epsilon(xt, step, key, registry);
                          });
}

/// Chains ddim_step over the grid. from/to must be the endpoints {0, T} in
/// either order; direction 0 -> T is inversion, T -> 0 is sampling.
template <typename Estimator>
std::vector<double> ode_solve_with(const std::vector<double>& x, int from, int to,
                                   const NoiseSchedule& schedule, const StepSequence& sequence,
                                   Estimator&& estimator) {
    sequence.validate(schedule.num_steps);
    const int T = schedule.num_steps;
    if (from == to) throw std::invalid_argument("ode_solve: from == to is degenerate");
    if (!((from == 0 && to == T) || (from == T && to == 0))) {
        throw std::invalid_argument("ode_solve: endpoints must be {0, T} in either order");
    }
    std::vector<double> state = x;
    const std::size_t n = sequence.indices.size();
    if (from == 0) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            state = ddim_step_with(state, sequence.indices[i], sequence.indices[i + 1], schedule,
                                   estimator);
        }
    } else {
        for (std::size_t i = n - 1; i > 0; --i) {
            state = ddim_step_with(state, sequence.indices[i], sequence.indices[i - 1], schedule,
                                   estimator);
        }
    }
    return state;
}

inline std::vector<double> ode_solve(const std::vector<double>& x, const ConditionKey& key,
                                     int from, int to, const SolverConfig& config,
                                     const EstimatorRegistry& registry) {
    config.validate(registry.schedule());
    const StepSequence seq =
        StepSequence::uniform(registry.schedule().num_steps, config.num_solver_steps);
    return ode_solve_with(x, from, to, registry.schedule(), seq,
                          [&](const std::vector<double>& xt, int step) {
                              return epsilon(xt, step, key, registry);
                          });
}

}  // namespace diffstego
