// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffstego/formats.hpp"
#include "diffstego/image.hpp"

namespace diffstego {

/// Deterministic smooth grayscale test patterns, evaluated analytically at any
/// resolution. They serve as mixture means for demo priors, so values stay
/// well inside [0,1] and distinct patterns are far apart in L2.
inline Image builtin_template(const std::string& name, const ImageShape& shape) {
    shape.validate();
    if (shape.channels != 1) {
        throw std::invalid_argument("builtin_template: patterns are single-channel");
    }
    Image img = Image::zeros(shape);
    constexpr double two_pi = 6.28318530717958647692;
    for (int y = 0; y < shape.height; ++y) {
        for (int x = 0; x < shape.width; ++x) {
            const double u = (x + 0.5) / shape.width;
            const double v = (y + 0.5) / shape.height;
            double val = 0.0;
            if (name == "bump_ul") {
                const double du = u - 0.35, dv = v - 0.35;
                val = 0.22 + 0.55 * std::exp(-(du * du + dv * dv) / (2.0 * 0.18 * 0.18));
            } else if (name == "stripes_h") {
                val = 0.5 + 0.28 * std::sin(two_pi * 2.5 * v);
            } else if (name == "ramp_diag") {
                val = 0.2 + 0.6 * 0.5 * (u + v);
            } else if (name == "rings") {
                const double r = std::hypot(u - 0.5, v - 0.5);
                val = 0.5 + 0.28 * std::cos(two_pi * 3.0 * r);
            } else if (name == "stripes_v") {
                val = 0.5 + 0.28 * std::sin(two_pi * 2.5 * u);
            } else if (name == "ramp_anti") {
                val = 0.2 + 0.6 * 0.5 * (u + 1.0 - v);
            } else if (name == "bump_pair") {
                const double a = std::exp(-(std::pow(u - 0.3, 2) + std::pow(v - 0.7, 2)) /
                                          (2.0 * 0.15 * 0.15));
                const double b = std::exp(-(std::pow(u - 0.7, 2) + std::pow(v - 0.3, 2)) /
                                          (2.0 * 0.15 * 0.15));
                val = 0.22 + 0.5 * (a + b);
            } else if (name == "checker") {
                val = 0.5 + 0.3 * std::sin(two_pi * 2.0 * u) * std::sin(two_pi * 2.0 * v);
            } else if (name == "ramp_h") {
                val = 0.2 + 0.6 * u;
            } else {
                throw std::invalid_argument("builtin_template: unknown pattern '" + name + "'");
            }
            img.at(x, y) = val < 0.12 ? 0.12 : (val > 0.88 ? 0.88 : val);
        }
    }
    return img;
}

inline const std::vector<std::string>& builtin_template_names() {
    static const std::vector<std::string> names = {
        "bump_ul",    "stripes_h", "ramp_diag", "rings",  "stripes_v",
        "ramp_anti",  "bump_pair", "checker",   "ramp_h",
    };
    return names;
}

/// Four-key demo prior: 'alpha' plays the private role in the walkthroughs,
/// 'beta' is 'alpha' translated by a constant brightness offset (component
/// correspondence preserved), 'gamma' and 'delta' are unrelated pattern
/// families usable as wrong-key decoys. Unequal weights give the components
/// distinct radii from the mixture barycenter, which is what makes batch
/// moment statistics of the mixture well conditioned.
inline PriorSpec builtin_demo_prior(const ImageShape& shape, double variance = 0.01) {
    if (!(variance > 0.0)) throw std::invalid_argument("builtin_demo_prior: variance must be > 0");
    const std::vector<double> weights = {0.5, 0.3, 0.2};
    const double beta_offset = 0.12;

    const auto means_of = [&](const std::vector<std::string>& names) {
        std::vector<std::vector<double>> means;
        for (const std::string& n : names) means.push_back(builtin_template(n, shape).data);
        return means;
    };
    const auto make_prior = [&](std::vector<std::vector<double>> means) {
        GmmPrior p;
        p.dim = static_cast<int>(shape.size());
        p.weights = weights;
        p.variances = std::vector<double>(weights.size(), variance);
        p.means = std::move(means);
        p.validate();
        return p;
    };

    PriorSpec spec;
    spec.shape = shape;
    std::vector<std::vector<double>> alpha_means =
        means_of({"bump_ul", "stripes_h", "ramp_diag"});
    std::vector<std::vector<double>> beta_means = alpha_means;
    for (auto& mean : beta_means) {
        for (double& m : mean) m += beta_offset;
    }
    spec.entries.emplace_back("alpha", make_prior(std::move(alpha_means)));
    spec.entries.emplace_back("beta", make_prior(std::move(beta_means)));
    spec.entries.emplace_back("gamma", make_prior(means_of({"rings", "stripes_v", "ramp_anti"})));
    spec.entries.emplace_back("delta", make_prior(means_of({"bump_pair", "checker", "ramp_h"})));
    return spec;
}

}  // namespace diffstego
