// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "diffstego/rng.hpp"
#include "diffstego/schedule.hpp"

namespace diffstego {

/// Named condition selecting a prior from a registry. Two keys are the same
/// condition iff their names are equal.
struct ConditionKey {
    std::string name;
    std::size_t prior_id = 0;

    friend bool operator==(const ConditionKey& a, const ConditionKey& b) {
        return a.name == b.name;
    }
    friend bool operator!=(const ConditionKey& a, const ConditionKey& b) { return !(a == b); }
};

/// Isotropic Gaussian mixture over the flattened image space. Component k has
/// weight weights[k], mean means[k] (length dim), covariance variances[k] * I.
struct GmmPrior {
    int dim = 0;
    std::vector<double> weights;
    std::vector<std::vector<double>> means;
    std::vector<double> variances;

    std::size_t num_components() const { return weights.size(); }

    void validate() const {
        if (dim < 1) throw std::invalid_argument("GmmPrior: dim must be >= 1");
        const std::size_t k = weights.size();
        if (k == 0) throw std::invalid_argument("GmmPrior: at least one component required");
        if (means.size() != k || variances.size() != k) {
            throw std::invalid_argument("GmmPrior: weights/means/variances sizes disagree");
        }
        double wsum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
                throw std::invalid_argument("GmmPrior: weights must be positive and finite");
            }
            wsum += weights[i];
            if (!(variances[i] > 0.0) || !std::isfinite(variances[i])) {
                throw std::invalid_argument("GmmPrior: variances must be positive and finite");
            }
            if (means[i].size() != static_cast<std::size_t>(dim)) {
                throw std::invalid_argument("GmmPrior: mean " + std::to_string(i) +
                                            " has length " + std::to_string(means[i].size()) +
                                            ", expected " + std::to_string(dim));
            }
            for (double v : means[i]) {
                if (!std::isfinite(v)) throw std::invalid_argument("GmmPrior: mean not finite");
            }
        }
        if (std::abs(wsum - 1.0) > 1e-9) {
            throw std::invalid_argument("GmmPrior: weights sum to " + std::to_string(wsum) +
                                        ", must sum to 1 within 1e-9");
        }
    }
};

namespace detail {

inline void check_dim(const GmmPrior& prior, std::size_t n, const char* where) {
    if (n != static_cast<std::size_t>(prior.dim)) {
        throw std::invalid_argument(std::string(where) + ": vector length " + std::to_string(n) +
                                    " does not match prior dim " + std::to_string(prior.dim));
    }
}

}  // namespace detail

/// Unnormalized log posterior weights of each component at the time-t marginal,
/// then normalized by log-sum-exp. Marginal of component k at retention
/// alpha_bar is N(sqrt(alpha_bar) * mu_k, s2_k * I) with
/// s2_k = alpha_bar * sigma_k^2 + (1 - alpha_bar).
inline std::vector<double> log_responsibilities_at(const std::vector<double>& x, double alpha_bar,
                                                   const GmmPrior& prior) {
    detail::check_dim(prior, x.size(), "log_responsibilities_at");
    if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
        throw std::invalid_argument("log_responsibilities_at: alpha_bar outside (0, 1]");
    }
    const std::size_t k = prior.num_components();
    const double sa = std::sqrt(alpha_bar);
    const double d = static_cast<double>(prior.dim);
    std::vector<double> logits(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double s2 = alpha_bar * prior.variances[c] + (1.0 - alpha_bar);
        const std::vector<double>& mu = prior.means[c];
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dlt = x[i] - sa * mu[i];
            q += dlt * dlt;
        }
        logits[c] = std::log(prior.weights[c]) - q / (2.0 * s2) - 0.5 * d * std::log(s2);
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    const double log_norm = m + std::log(sum);
    for (double& v : logits) v -= log_norm;
    return logits;
}

inline std::vector<double> responsibilities_at(const std::vector<double>& x, double alpha_bar,
                                               const GmmPrior& prior) {
    std::vector<double> r = log_responsibilities_at(x, alpha_bar, prior);
    for (double& v : r) v = std::exp(v);
    return r;
}

/// Log density of the time-t marginal mixture, full normalization included.
inline double gmm_log_density_at(const std::vector<double>& x, double alpha_bar,
                                 const GmmPrior& prior) {
    detail::check_dim(prior, x.size(), "gmm_log_density_at");
    if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
        throw std::invalid_argument("gmm_log_density_at: alpha_bar outside (0, 1]");
    }
    const std::size_t k = prior.num_components();
    const double sa = std::sqrt(alpha_bar);
    const double d = static_cast<double>(prior.dim);
    constexpr double kLog2Pi = 1.8378770664093454836;
    std::vector<double> logits(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double s2 = alpha_bar * prior.variances[c] + (1.0 - alpha_bar);
        const std::vector<double>& mu = prior.means[c];
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dlt = x[i] - sa * mu[i];
            q += dlt * dlt;
        }
        logits[c] = std::log(prior.weights[c]) - q / (2.0 * s2) -
                    0.5 * d * (kLog2Pi + std::log(s2));
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    return m + std::log(sum);
}

/// Gradient of gmm_log_density_at with respect to x:
///   score(x) = sum_k r_k(x) * (sqrt(alpha_bar) * mu_k - x) / s2_k.
inline std::vector<double> gmm_score_at(const std::vector<double>& x, double alpha_bar,
                                        const GmmPrior& prior) {
    const std::vector<double> r = responsibilities_at(x, alpha_bar, prior);
    const double sa = std::sqrt(alpha_bar);
    std::vector<double> score(x.size(), 0.0);
    for (std::size_t c = 0; c < prior.num_components(); ++c) {
        const double s2 = alpha_bar * prior.variances[c] + (1.0 - alpha_bar);
        const double coeff = r[c] / s2;
        const std::vector<double>& mu = prior.means[c];
        for (std::size_t i = 0; i < x.size(); ++i) {
            score[i] += coeff * (sa * mu[i] - x[i]);
        }
    }
    return score;
}

/// Noise estimate implied by the mixture score:
///   eps_hat(x) = -sqrt(1 - alpha_bar) * score(x).
/// At alpha_bar = 1 (the clean end) this is identically zero.
inline std::vector<double> gmm_epsilon_at(const std::vector<double>& x, double alpha_bar,
                                          const GmmPrior& prior) {
    detail::check_dim(prior, x.size(), "gmm_epsilon_at");
    if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
        throw std::invalid_argument("gmm_epsilon_at: alpha_bar outside (0, 1]");
    }
    if (alpha_bar == 1.0) return std::vector<double>(x.size(), 0.0);
    std::vector<double> eps = gmm_score_at(x, alpha_bar, prior);
    const double factor = -std::sqrt(1.0 - alpha_bar);
    for (double& v : eps) v *= factor;
    return eps;
}

/// Immutable name -> prior table sharing one schedule. All priors must agree
/// on dim; lookup by unknown name throws.
class EstimatorRegistry {
public:
    explicit EstimatorRegistry(NoiseSchedule schedule) : schedule_(std::move(schedule)) {
        schedule_.validate();
    }

    const NoiseSchedule& schedule() const { return schedule_; }

    int dim() const { return dim_; }

    std::size_t size() const { return priors_.size(); }

    ConditionKey add(const std::string& name, GmmPrior prior) {
        prior.validate();
        if (name.empty()) throw std::invalid_argument("EstimatorRegistry: empty key name");
        if (index_.count(name) != 0) {
            throw std::invalid_argument("EstimatorRegistry: duplicate key name '" + name + "'");
        }
        if (dim_ == 0) {
            dim_ = prior.dim;
        } else if (prior.dim != dim_) {
            throw std::invalid_argument("EstimatorRegistry: prior '" + name + "' has dim " +
                                        std::to_string(prior.dim) + ", registry dim is " +
                                        std::to_string(dim_));
        }
        const std::size_t id = priors_.size();
        index_.emplace(name, id);
        names_.push_back(name);
        priors_.push_back(std::move(prior));
        return ConditionKey{name, id};
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    ConditionKey key(const std::string& name) const { return ConditionKey{name, find(name)}; }

    const GmmPrior& prior(const std::string& name) const { return priors_[find(name)]; }

    const GmmPrior& prior(const ConditionKey& key) const { return priors_[find(key.name)]; }

    /// Key names in registration order (the deterministic iteration order).
    const std::vector<std::string>& names() const { return names_; }

private:
    std::size_t find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) {
            throw std::invalid_argument("EstimatorRegistry: unknown key '" + name + "'");
        }
        return it->second;
    }

    NoiseSchedule schedule_;
    int dim_ = 0;
    std::vector<std::string> names_;
    std::vector<GmmPrior> priors_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Conditional noise estimator eps_hat(x, t | key). Step index 0 (clean end,
/// alpha_bar = 1) is accepted and returns the zero vector, so solver grids may
/// include the endpoint.
inline std::vector<double> epsilon(const std::vector<double>& x, int t, const ConditionKey& key,
                                   const EstimatorRegistry& registry) {
    if (t < 0 || t > registry.schedule().num_steps) {
        throw std::invalid_argument("epsilon: step index " + std::to_string(t) + " outside [0, " +
                                    std::to_string(registry.schedule().num_steps) + "]");
    }
    return gmm_epsilon_at(x, registry.schedule().alpha_bar(t), registry.prior(key));
}

/// Predicted clean image: f(x, t) = (x - sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_bar_t).
/// Satisfies sqrt(alpha_bar_t) * f + sqrt(1 - alpha_bar_t) * eps_hat = x exactly.
inline std::vector<double> f_theta(const std::vector<double>& x, int t, const ConditionKey& key,
                                   const EstimatorRegistry& registry) {
    const std::vector<double> eps = epsilon(x, t, key, registry);
    const double ab = registry.schedule().alpha_bar(t);
    const double sa = std::sqrt(ab);
    const double sb = std::sqrt(1.0 - ab);
    std::vector<double> f(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f[i] = (x[i] - sb * eps[i]) / sa;
    return f;
}

/// Draws component k with probability weights[k], then N(mu_k, sigma_k^2 I).
/// Deterministic given rng_seed. component_out, when non-null, receives k.
inline std::vector<double> sample_prior(const ConditionKey& key, const EstimatorRegistry& registry,
                                        std::uint64_t rng_seed,
                                        std::size_t* component_out = nullptr) {
    const GmmPrior& prior = registry.prior(key);
    Rng rng(rng_seed);
    const double u = rng.uniform01();
    std::size_t comp = prior.num_components() - 1;
    double cdf = 0.0;
    for (std::size_t c = 0; c < prior.num_components(); ++c) {
        cdf += prior.weights[c];
        if (u < cdf) {
            comp = c;
            break;
        }
    }
    if (component_out != nullptr) *component_out = comp;
    const double sigma = std::sqrt(prior.variances[comp]);
    const std::vector<double>& mu = prior.means[comp];
    std::vector<double> out(static_cast<std::size_t>(prior.dim));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu[i] + sigma * rng.normal();
    return out;
}

}  // namespace diffstego
