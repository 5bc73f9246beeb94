// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "diffstego/ddim.hpp"
#include "diffstego/image.hpp"
#include "diffstego/prior.hpp"

namespace diffstego {

/// One hide request: which image to hide and under which pair of conditions.
/// The private key describes the secret; the public key shapes the container.
struct StegoJob {
    Image secret;
    ConditionKey private_key;
    ConditionKey public_key;
    SolverConfig solver;
    // Equal keys turn hide into a plain round-trip probe; useful for solver
    // diagnostics, never for actual hiding, so it must be requested explicitly.
    bool diagnostic_allow_equal_keys = false;

    void validate(const EstimatorRegistry& registry) const {
        secret.validate();
        if (secret.shape.size() != static_cast<std::size_t>(registry.dim())) {
            throw std::invalid_argument("StegoJob: secret has " +
                                        std::to_string(secret.shape.size()) +
                                        " values, registry dim is " +
                                        std::to_string(registry.dim()));
        }
        if (!registry.has(private_key.name)) {
            throw std::invalid_argument("StegoJob: unknown private key '" + private_key.name + "'");
        }
        if (!registry.has(public_key.name)) {
            throw std::invalid_argument("StegoJob: unknown public key '" + public_key.name + "'");
        }
        if (private_key == public_key && !diagnostic_allow_equal_keys) {
            throw std::invalid_argument(
                "StegoJob: private and public keys are both '" + private_key.name +
                "'; equal keys are a diagnostic mode and must be enabled explicitly");
        }
        solver.validate(registry.schedule());
    }
};

/// Sidecar-safe run description: public key name and solver settings only.
/// The private key name deliberately has no field here.
struct StegoMetadata {
    std::string public_key;
    int num_solver_steps = 0;
};

struct StegoResult {
    Image container;
    // The inversion endpoint x_noise. A perfect decryption oracle under the
    // public key, so callers must not persist it outside diagnostic flows.
    Image latent;
    StegoMetadata metadata;
};

/// Hide: invert the secret to noise under the private key, then sample an
/// ordinary-looking image from that noise under the public key.
///   x_noise = ode_solve(x_sec, k_pri, 0 -> T)
///   x_cont  = ode_solve(x_noise, k_pub, T -> 0)
/// Deterministic given (secret, keys, solver).
inline StegoResult hide(const StegoJob& job, const EstimatorRegistry& registry) {
    job.validate(registry);
    const int T = registry.schedule().num_steps;
    std::vector<double> x_noise =
        ode_solve(job.secret.data, job.private_key, 0, T, job.solver, registry);
    std::vector<double> x_cont = ode_solve(x_noise, job.public_key, T, 0, job.solver, registry);
    StegoResult result;
    result.container.shape = job.secret.shape;
    result.container.data = std::move(x_cont);
    result.latent.shape = job.secret.shape;
    result.latent.data = std::move(x_noise);
    result.metadata.public_key = job.public_key.name;
    result.metadata.num_solver_steps = job.solver.num_solver_steps;
    return result;
}

/// Reveal: invert the (possibly degraded) container to noise under the public
/// key, then sample under the private key.
///   x'_noise = ode_solve(x'_cont, k_pub, 0 -> T)
///   x_rev    = ode_solve(x'_noise, k_pri, T -> 0)
/// Deterministic given (container, keys, solver).
inline Image reveal(const Image& container, const ConditionKey& public_key,
                    const ConditionKey& private_key, const SolverConfig& solver,
                    const EstimatorRegistry& registry) {
    container.validate();
    if (container.shape.size() != static_cast<std::size_t>(registry.dim())) {
        throw std::invalid_argument("reveal: container has " +
                                    std::to_string(container.shape.size()) +
                                    " values, registry dim is " + std::to_string(registry.dim()));
    }
    solver.validate(registry.schedule());
    const int T = registry.schedule().num_steps;
    std::vector<double> x_noise = ode_solve(container.data, public_key, 0, T, solver, registry);
    Image revealed;
    revealed.shape = container.shape;
    revealed.data = ode_solve(x_noise, private_key, T, 0, solver, registry);
    return revealed;
}

}  // namespace diffstego
