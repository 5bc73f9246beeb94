// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffstego/channel.hpp"
#include "diffstego/ddim.hpp"
#include "diffstego/image.hpp"
#include "diffstego/metrics.hpp"
#include "diffstego/prior.hpp"
#include "diffstego/rng.hpp"
#include "diffstego/stego.hpp"

namespace diffstego {

// ---------------------------------------------------------------------------
// Analytic mixture moments (population moments of a GmmPrior at t = 0).
// ---------------------------------------------------------------------------

inline std::vector<double> mixture_mean(const GmmPrior& prior) {
    std::vector<double> m(static_cast<std::size_t>(prior.dim), 0.0);
    for (std::size_t k = 0; k < prior.num_components(); ++k) {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += prior.weights[k] * prior.means[k][i];
    }
    return m;
}

/// Per-coordinate variance: v_i = sum_k w_k (sigma_k^2 + delta_ki^2) with
/// delta_k = mu_k - mixture mean.
inline std::vector<double> mixture_coordinate_variances(const GmmPrior& prior) {
    const std::vector<double> m = mixture_mean(prior);
    std::vector<double> v(m.size(), 0.0);
    for (std::size_t k = 0; k < prior.num_components(); ++k) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double d = prior.means[k][i] - m[i];
            v[i] += prior.weights[k] * (prior.variances[k] + d * d);
        }
    }
    return v;
}

/// Per-coordinate fourth central moment:
///   E[(x_i - m_i)^4] = sum_k w_k (d^4 + 6 d^2 s^2 + 3 s^4), d = delta_ki, s^2 = sigma_k^2.
inline std::vector<double> mixture_coordinate_fourth_moments(const GmmPrior& prior) {
    const std::vector<double> m = mixture_mean(prior);
    std::vector<double> m4(m.size(), 0.0);
    for (std::size_t k = 0; k < prior.num_components(); ++k) {
        const double s2 = prior.variances[k];
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double d = prior.means[k][i] - m[i];
            const double d2 = d * d;
            m4[i] += prior.weights[k] * (d2 * d2 + 6.0 * d2 * s2 + 3.0 * s2 * s2);
        }
    }
    return m4;
}

// ---------------------------------------------------------------------------
// Nearest-mean classification.
// ---------------------------------------------------------------------------

/// Index of the component whose mean is nearest to x (Euclidean), plus that
/// distance.
inline std::pair<std::size_t, double> nearest_component(const std::vector<double>& x,
                                                        const GmmPrior& prior) {
    detail::check_dim(prior, x.size(), "nearest_component");
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < prior.num_components(); ++k) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - prior.means[k][i];
            d2 += d * d;
        }
        if (d2 < best_d2) {
            best_d2 = d2;
            best = k;
        }
    }
    return {best, std::sqrt(best_d2)};
}

/// The candidate key whose prior holds the mean nearest to x. Candidates must
/// be non-empty and registered.
inline std::string nearest_mean_key(const std::vector<double>& x,
                                    const std::vector<std::string>& candidates,
                                    const EstimatorRegistry& registry) {
    if (candidates.empty()) throw std::invalid_argument("nearest_mean_key: no candidates");
    std::string best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const std::string& name : candidates) {
        const double d = nearest_component(x, registry.prior(name)).second;
        if (d < best_d) {
            best_d = d;
            best = name;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Robustness sweep: hide -> degrade -> reveal -> PSNR, per grid cell.
// ---------------------------------------------------------------------------

struct SweepRow {
    DegradationSpec spec;
    double mean_psnr = 0.0;            // continuous [0,1] domain
    double mean_psnr_quantized = 0.0;  // after forcing both sides through 8 bits
    double mean_rms = 0.0;
    int trials = 0;
};

/// Settings echoed into every report so a run can be reproduced byte-for-byte.
struct SweepConfigSnapshot {
    std::string private_key;  // redacted at serialization unless diagnostics are on
    std::string public_key;
    int num_solver_steps = 0;
    int schedule_steps = 0;
    double beta_start = 0.0;
    double beta_end = 0.0;
    std::uint64_t master_seed = 0;
    int corpus_size = 0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    SweepConfigSnapshot config;
};

/// One row per grid cell, averaging PSNR/RMS between each secret and its
/// reveal through that cell's channel. The grid must contain an identity cell
/// as the clean baseline. Stochastic channel draws are seeded per (cell, item)
/// from the master seed, so results do not depend on evaluation order.
inline SweepReport robustness_sweep(const std::vector<Image>& corpus, const ConditionKey& k_pri,
                                    const ConditionKey& k_pub,
                                    const std::vector<DegradationSpec>& grid,
                                    const SolverConfig& solver, const EstimatorRegistry& registry,
                                    std::uint64_t master_seed) {
    if (corpus.empty()) throw std::invalid_argument("robustness_sweep: empty corpus");
    if (grid.empty()) throw std::invalid_argument("robustness_sweep: empty grid");
    const bool has_identity =
        std::any_of(grid.begin(), grid.end(),
                    [](const DegradationSpec& s) { return s.kind == DegradationKind::identity; });
    if (!has_identity) {
        throw std::invalid_argument("robustness_sweep: grid must include the identity baseline");
    }
    for (const DegradationSpec& s : grid) s.validate();

    // Containers are channel-independent, so hide once per corpus item.
    std::vector<Image> containers;
    containers.reserve(corpus.size());
    for (const Image& secret : corpus) {
        StegoJob job;
        job.secret = secret;
        job.private_key = k_pri;
        job.public_key = k_pub;
        job.solver = solver;
        containers.push_back(hide(job, registry).container);
    }

    SweepReport report;
    report.config.private_key = k_pri.name;
    report.config.public_key = k_pub.name;
    report.config.num_solver_steps = solver.num_solver_steps;
    report.config.master_seed = master_seed;
    report.config.corpus_size = static_cast<int>(corpus.size());
    const NoiseSchedule& sched = registry.schedule();
    report.config.schedule_steps = sched.num_steps;
    report.config.beta_start = 1.0 - sched.alphas.front();
    report.config.beta_end = 1.0 - sched.alphas.back();

    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        SweepRow row;
        row.spec = grid[cell];
        double sum_psnr = 0.0, sum_psnr_q = 0.0, sum_rms = 0.0;
        for (std::size_t item = 0; item < corpus.size(); ++item) {
            DegradationSpec cell_spec = grid[cell];
            cell_spec.seed = derive_seed(master_seed, {static_cast<std::uint64_t>(cell),
                                                       static_cast<std::uint64_t>(item)});
            const Image degraded = apply(containers[item], cell_spec);
            const Image revealed = reveal(degraded, k_pub, k_pri, solver, registry);
            sum_psnr += psnr(corpus[item], revealed);
            sum_psnr_q += psnr_quantized(corpus[item], revealed);
            sum_rms += rms_error(corpus[item], revealed);
        }
        const double n = static_cast<double>(corpus.size());
        row.mean_psnr = sum_psnr / n;
        row.mean_psnr_quantized = sum_psnr_q / n;
        row.mean_rms = sum_rms / n;
        row.trials = static_cast<int>(corpus.size());
        report.rows.push_back(row);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Key sensitivity: reveal under every candidate key, compare fidelity.
// ---------------------------------------------------------------------------

struct KeyTrialRow {
    std::string key;
    double psnr_to_secret = 0.0;
    double psnr_quantized = 0.0;
    double rms_to_secret = 0.0;
    std::string classified_key;  // nearest-prior-mean over all candidates
};

struct KeySensitivityReport {
    std::vector<KeyTrialRow> rows;  // correct key first, then wrong keys in input order
    std::string argmax_key;         // candidate with the highest PSNR to the secret
    bool argmax_is_private = false;
};

inline KeySensitivityReport key_sensitivity(const Image& secret, const ConditionKey& k_pri,
                                            const ConditionKey& k_pub,
                                            const std::vector<ConditionKey>& wrong_keys,
                                            const SolverConfig& solver,
                                            const EstimatorRegistry& registry) {
    if (wrong_keys.empty()) throw std::invalid_argument("key_sensitivity: wrong_keys empty");
    for (const ConditionKey& k : wrong_keys) {
        if (!registry.has(k.name)) {
            throw std::invalid_argument("key_sensitivity: unknown key '" + k.name + "'");
        }
        if (k == k_pri) {
            throw std::invalid_argument("key_sensitivity: wrong_keys must not contain the "
                                        "private key '" +
                                        k_pri.name + "'");
        }
    }

    StegoJob job;
    job.secret = secret;
    job.private_key = k_pri;
    job.public_key = k_pub;
    job.solver = solver;
    const Image container = hide(job, registry).container;

    std::vector<ConditionKey> candidates;
    candidates.push_back(k_pri);
    candidates.insert(candidates.end(), wrong_keys.begin(), wrong_keys.end());
    std::vector<std::string> candidate_names;
    for (const ConditionKey& k : candidates) candidate_names.push_back(k.name);

    KeySensitivityReport report;
    double best_psnr = -std::numeric_limits<double>::infinity();
    for (const ConditionKey& candidate : candidates) {
        const Image revealed = reveal(container, k_pub, candidate, solver, registry);
        KeyTrialRow row;
        row.key = candidate.name;
        row.psnr_to_secret = psnr(secret, revealed);
        row.psnr_quantized = psnr_quantized(secret, revealed);
        row.rms_to_secret = rms_error(secret, revealed);
        row.classified_key = nearest_mean_key(revealed.data, candidate_names, registry);
        if (row.psnr_to_secret > best_psnr) {
            best_psnr = row.psnr_to_secret;
            report.argmax_key = candidate.name;
        }
        report.rows.push_back(row);
    }
    report.argmax_is_private = report.argmax_key == k_pri.name;
    return report;
}

// ---------------------------------------------------------------------------
// Moment-based container detector.
// ---------------------------------------------------------------------------

inline constexpr double kMomentTestThreshold = 4.0;
inline constexpr int kMomentTestMinBatch = 30;

struct MomentTestResult {
    double z_mean = 0.0;      // aggregated per-coordinate mean z-scores
    double z_variance = 0.0;  // aggregated per-coordinate variance z-scores
    double aggregate = 0.0;   // max(|z_mean|, |z_variance|)
    double threshold = kMomentTestThreshold;
    bool pass = false;
};

/// Tests whether a batch is consistent with the prior's analytic first and
/// second moments. Per-coordinate z-scores are summed and the sum is
/// standardized against its analytic null variance, which accounts for the
/// cross-coordinate correlation induced by shared component draws and for the
/// non-Gaussian fourth moments of the mixture. Null variances are first-order
/// in 1/n, which overstates |z| by under 1% at the minimum batch size.
inline MomentTestResult container_moment_test(const std::vector<std::vector<double>>& batch,
                                              const ConditionKey& public_key,
                                              const EstimatorRegistry& registry) {
    const std::size_t n = batch.size();
    if (n < static_cast<std::size_t>(kMomentTestMinBatch)) {
        throw std::invalid_argument("container_moment_test: batch size " + std::to_string(n) +
                                    " below minimum " + std::to_string(kMomentTestMinBatch));
    }
    const GmmPrior& prior = registry.prior(public_key);
    const std::size_t d = static_cast<std::size_t>(prior.dim);
    for (const std::vector<double>& x : batch) {
        if (x.size() != d) throw std::invalid_argument("container_moment_test: dim mismatch");
    }

    const std::vector<double> mbar = mixture_mean(prior);
    const std::vector<double> v = mixture_coordinate_variances(prior);
    const std::vector<double> m4 = mixture_coordinate_fourth_moments(prior);
    const double nn = static_cast<double>(n);

    std::vector<double> u(d, 0.0);
    for (const std::vector<double>& x : batch) {
        for (std::size_t i = 0; i < d; ++i) u[i] += x[i];
    }
    for (double& s : u) s /= nn;
    std::vector<double> s2(d, 0.0);
    for (const std::vector<double>& x : batch) {
        for (std::size_t i = 0; i < d; ++i) {
            const double dv = x[i] - u[i];
            s2[i] += dv * dv;
        }
    }
    for (double& s : s2) s /= (nn - 1.0);

    // Mean aggregate: A_m = sum_i sqrt(n) (u_i - mbar_i) / sqrt(v_i).
    // Var(A_m) = sum_ij Cov_ij / sqrt(v_i v_j) with the mixture covariance
    // Cov_ij = sum_k w_k (sigma_k^2 [i=j] + delta_ki delta_kj); the double sum
    // collapses to per-component inner products.
    double a_m = 0.0;
    for (std::size_t i = 0; i < d; ++i) a_m += std::sqrt(nn) * (u[i] - mbar[i]) / std::sqrt(v[i]);
    double var_a_m = 0.0;
    {
        double sum_inv_v = 0.0;
        for (std::size_t i = 0; i < d; ++i) sum_inv_v += 1.0 / v[i];
        for (std::size_t k = 0; k < prior.num_components(); ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                dot += (prior.means[k][i] - mbar[i]) / std::sqrt(v[i]);
            }
            var_a_m += prior.weights[k] * (prior.variances[k] * sum_inv_v + dot * dot);
        }
    }
    const double z_mean = a_m / std::sqrt(var_a_m);

    // Variance aggregate: A_v = sum_i (s2_i - v_i) / sd_i with
    // sd_i^2 = Var(s2_i) = (m4_i - v_i^2 (n-3)/(n-1)) / n.
    // Cross terms (i != j): Cov(s2_i, s2_j) ~= (m22_ij - v_i v_j)/n where
    // m22_ij = sum_k w_k c_ki c_kj, c_ki = delta_ki^2 + sigma_k^2. With
    // b_i = 1/(sqrt(n) sd_i) the off-diagonal sum again collapses per component.
    std::vector<double> sd(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double var_s2 = (m4[i] - v[i] * v[i] * (nn - 3.0) / (nn - 1.0)) / nn;
        sd[i] = std::sqrt(var_s2);
    }
    double a_v = 0.0;
    for (std::size_t i = 0; i < d; ++i) a_v += (s2[i] - v[i]) / sd[i];
    double var_a_v = static_cast<double>(d);  // exact diagonal: Var(z_i) = 1
    {
        double full = 0.0, diag = 0.0;
        std::vector<double> b(d);
        for (std::size_t i = 0; i < d; ++i) b[i] = 1.0 / (std::sqrt(nn) * sd[i]);
        for (std::size_t k = 0; k < prior.num_components(); ++k) {
            double dot = 0.0, dot_diag = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double delta = prior.means[k][i] - mbar[i];
                const double c = delta * delta + prior.variances[k];
                dot += b[i] * c;
                dot_diag += b[i] * b[i] * c * c;
            }
            full += prior.weights[k] * dot * dot;
            diag += prior.weights[k] * dot_diag;
        }
        double vv_full = 0.0, vv_diag = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            vv_full += b[i] * v[i];
            vv_diag += b[i] * b[i] * v[i] * v[i];
        }
        var_a_v += (full - diag) - (vv_full * vv_full - vv_diag);
    }
    const double z_var = a_v / std::sqrt(var_a_v);

    MomentTestResult result;
    result.z_mean = z_mean;
    result.z_variance = z_var;
    result.aggregate = std::max(std::abs(z_mean), std::abs(z_var));
    result.pass = result.aggregate < kMomentTestThreshold;
    return result;
}

inline MomentTestResult container_moment_test(const std::vector<Image>& batch,
                                              const ConditionKey& public_key,
                                              const EstimatorRegistry& registry) {
    std::vector<std::vector<double>> flat;
    flat.reserve(batch.size());
    for (const Image& img : batch) flat.push_back(img.data);
    return container_moment_test(flat, public_key, registry);
}

}  // namespace diffstego
