// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "diffstego/ddim.hpp"
#include "diffstego/metrics.hpp"
#include "diffstego/patterns.hpp"
#include "diffstego/rng.hpp"
#include "helpers.hpp"

using namespace diffstego;

namespace {

const auto zero_estimator = [](const std::vector<double>& x, int) {
    return std::vector<double>(x.size(), 0.0);
};

/// Analytic estimator of the standard-normal prior: eps = sqrt(1-ab_t) * x.
struct StdNormalEstimator {
    const NoiseSchedule* schedule;
    std::vector<double> operator()(const std::vector<double>& x, int t) const {
        const double c = std::sqrt(1.0 - schedule->alpha_bar(t));
        std::vector<double> eps(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) eps[i] = c * x[i];
        return eps;
    }
};

/// Per-step linear coefficient of the standard-normal estimator, chained over
/// a grid walk in long double. Independent oracle for the solver loop.
long double std_normal_chain(const NoiseSchedule& sched, const StepSequence& seq, bool downward) {
    long double chain = 1.0L;
    const std::size_t n = seq.indices.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t a = downward ? n - 1 - i : i;
        const std::size_t b = downward ? n - 2 - i : i + 1;
        const long double ab_t = sched.alpha_bar(seq.indices[a]);
        const long double ab_s = sched.alpha_bar(seq.indices[b]);
        chain *= std::sqrt(ab_s * ab_t) + std::sqrt((1.0L - ab_s) * (1.0L - ab_t));
    }
    return chain;
}

}  // namespace

TEST_CASE("a degenerate step returns its input bitwise", "[ddim]") {
    const NoiseSchedule sched = build_linear_schedule(100, 1e-4, 0.02);
    Rng rng(1);
    const std::vector<double> x = rng.normal_vector(16);
    REQUIRE(ddim_step_with(x, 40, 40, sched, zero_estimator) == x);
}

TEST_CASE("zero-estimator step is a pure rescale", "[ddim]") {
    const NoiseSchedule sched = build_linear_schedule(100, 1e-4, 0.02);
    Rng rng(2);
    const std::vector<double> x = rng.normal_vector(8);
    for (auto [t, s] : std::vector<std::pair<int, int>>{{80, 20}, {20, 80}, {100, 0}, {0, 100}}) {
        const std::vector<double> out = ddim_step_with(x, t, s, sched, zero_estimator);
        const double c = std::sqrt(sched.alpha_bar(s) / sched.alpha_bar(t));
        for (std::size_t i = 0; i < x.size(); ++i) {
            REQUIRE(out[i] == Catch::Approx(c * x[i]).margin(1e-12));
        }
    }
}

TEST_CASE("standard-normal step applies the closed-form coefficient", "[ddim]") {
    const NoiseSchedule sched = build_linear_schedule(100, 1e-4, 0.02);
    StdNormalEstimator est{&sched};
    Rng rng(3);
    const std::vector<double> x = rng.normal_vector(8);
    for (auto [t, s] : std::vector<std::pair<int, int>>{{75, 30}, {30, 75}, {100, 0}}) {
        const double ab_t = sched.alpha_bar(t);
        const double ab_s = sched.alpha_bar(s);
        const double c = std::sqrt(ab_s * ab_t) + std::sqrt((1.0 - ab_s) * (1.0 - ab_t));
        const std::vector<double> out = ddim_step_with(x, t, s, sched, est);
        for (std::size_t i = 0; i < x.size(); ++i) {
            REQUIRE(out[i] == Catch::Approx(c * x[i]).margin(1e-12));
        }
    }
}

TEST_CASE("uniform step sequences cover [0, T] strictly", "[ddim]") {
    const StepSequence seq = StepSequence::uniform(1000, 50);
    REQUIRE(seq.indices.size() == 51);
    REQUIRE(seq.indices.front() == 0);
    REQUIRE(seq.indices.back() == 1000);
    for (std::size_t i = 1; i < seq.indices.size(); ++i) {
        REQUIRE(seq.indices[i] > seq.indices[i - 1]);
    }
    const StepSequence full = StepSequence::uniform(100, 100);
    for (int i = 0; i <= 100; ++i) REQUIRE(full.indices[static_cast<std::size_t>(i)] == i);
    REQUIRE_THROWS_AS(StepSequence::uniform(100, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(StepSequence::uniform(100, 101), std::invalid_argument);

    const NoiseSchedule sched = build_linear_schedule(100, 1e-4, 0.02);
    SolverConfig cfg;
    cfg.num_solver_steps = 101;
    REQUIRE_THROWS_AS(cfg.validate(sched), std::invalid_argument);
    cfg.num_solver_steps = 50;
    cfg.sigma = 0.1;
    REQUIRE_THROWS_AS(cfg.validate(sched), std::invalid_argument);
}

TEST_CASE("backward solve under the standard-normal estimator matches the coefficient chain",
          "[ddim]") {
    const NoiseSchedule sched = build_linear_schedule(1000, 1e-4, 0.02);
    const StepSequence seq = StepSequence::uniform(1000, 50);
    StdNormalEstimator est{&sched};
    const double chain = static_cast<double>(std_normal_chain(sched, seq, true));
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> x = rng.normal_vector(64);
        const std::vector<double> out = ode_solve_with(x, 1000, 0, sched, seq, est);
        std::vector<double> expected(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) expected[i] = chain * x[i];
        REQUIRE(rms_error(out, expected) < 1e-9);
    }
}

TEST_CASE("zero-estimator round trip is the identity to float noise", "[ddim]") {
    const NoiseSchedule sched = build_linear_schedule(1000, 1e-4, 0.02);
    const StepSequence seq = StepSequence::uniform(1000, 50);
    Rng rng(5);
    const std::vector<double> x = rng.normal_vector(64);
    const std::vector<double> up = ode_solve_with(x, 0, 1000, sched, seq, zero_estimator);
    const std::vector<double> back = ode_solve_with(up, 1000, 0, sched, seq, zero_estimator);
    REQUIRE(rms_error(back, x) < 1e-12);
}

TEST_CASE("standard-normal round trip contracts by the squared chain", "[ddim]") {
    // Each direction applies the same per-step cosine-like coefficients, so the
    // round trip scales by the squared chain (strictly below 1), not identity.
    const NoiseSchedule sched = build_linear_schedule(1000, 1e-4, 0.02);
    const StepSequence seq = StepSequence::uniform(1000, 50);
    StdNormalEstimator est{&sched};
    const long double up_chain = std_normal_chain(sched, seq, false);
    const long double down_chain = std_normal_chain(sched, seq, true);
    REQUIRE(static_cast<double>(up_chain) == Catch::Approx(static_cast<double>(down_chain)));
    REQUIRE(static_cast<double>(up_chain) < 1.0);
    REQUIRE(static_cast<double>(up_chain) > 0.9);

    Rng rng(6);
    const std::vector<double> x = rng.normal_vector(64);
    const std::vector<double> up = ode_solve_with(x, 0, 1000, sched, seq, est);
    const std::vector<double> back = ode_solve_with(up, 1000, 0, sched, seq, est);
    const double c2 = static_cast<double>(up_chain * down_chain);
    std::vector<double> expected(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) expected[i] = c2 * x[i];
    REQUIRE(rms_error(back, expected) < 1e-9);
}

TEST_CASE("round-trip error shrinks with step count at first order", "[ddim]") {
    const auto registry = testutil::demo_registry({16, 16, 1});
    const ConditionKey key = registry.key("alpha");
    const int T = registry.schedule().num_steps;

    auto mean_roundtrip_rms = [&](int steps) {
        SolverConfig cfg;
        cfg.num_solver_steps = steps;
        double sum = 0.0;
        const int trials = 5;
        for (int i = 0; i < trials; ++i) {
            const std::vector<double> x =
                sample_prior(key, registry, derive_seed(555, {static_cast<std::uint64_t>(i)}));
            const std::vector<double> up = ode_solve(x, key, 0, T, cfg, registry);
            const std::vector<double> back = ode_solve(up, key, T, 0, cfg, registry);
            sum += rms_error(back, x);
        }
        return sum / trials;
    };

    const double e25 = mean_roundtrip_rms(25);
    const double e50 = mean_roundtrip_rms(50);
    const double e100 = mean_roundtrip_rms(100);
    const double e200 = mean_roundtrip_rms(200);
    REQUIRE(e50 / e25 > 0.3);
    REQUIRE(e50 / e25 < 0.8);
    REQUIRE(e100 / e50 > 0.3);
    REQUIRE(e100 / e50 < 0.8);
    REQUIRE(e200 / e100 > 0.3);
    REQUIRE(e200 / e100 < 0.8);
}

TEST_CASE("distinct keys pull the same latent to images far beyond round-trip error", "[ddim]") {
    const auto registry = testutil::demo_registry({16, 16, 1});
    const ConditionKey alpha = registry.key("alpha");
    const ConditionKey gamma = registry.key("gamma");
    const int T = registry.schedule().num_steps;
    SolverConfig cfg;
    cfg.num_solver_steps = 200;

    // Mean separation dominates the component scale by far more than 5 sigma.
    const GmmPrior& pa = registry.prior("alpha");
    const GmmPrior& pg = registry.prior("gamma");
    double d2 = 0.0;
    for (std::size_t i = 0; i < pa.means[0].size(); ++i) {
        const double d = pa.means[0][i] - pg.means[0][i];
        d2 += d * d;
    }
    const double max_sigma = std::sqrt(std::max(pa.variances[0], pg.variances[0]));
    REQUIRE(std::sqrt(d2) > 5.0 * max_sigma);

    const std::vector<double> secret = sample_prior(alpha, registry, 808);
    const std::vector<double> latent = ode_solve(secret, alpha, 0, T, cfg, registry);
    const std::vector<double> img_a = ode_solve(latent, alpha, T, 0, cfg, registry);
    const std::vector<double> img_g = ode_solve(latent, gamma, T, 0, cfg, registry);
    const double roundtrip = rms_error(img_a, secret);
    const double separation = rms_error(img_a, img_g);
    REQUIRE(separation > 10.0 * roundtrip);
}

TEST_CASE("solver endpoints are enforced", "[ddim]") {
    const auto registry = testutil::demo_registry({8, 8, 1});
    const ConditionKey key = registry.key("alpha");
    SolverConfig cfg;
    cfg.num_solver_steps = 10;
    Rng rng(7);
    const std::vector<double> x = rng.normal_vector(64);
    const int T = registry.schedule().num_steps;
    REQUIRE_THROWS_AS(ode_solve(x, key, 0, 0, cfg, registry), std::invalid_argument);
    REQUIRE_THROWS_AS(ode_solve(x, key, 0, T / 2, cfg, registry), std::invalid_argument);
    REQUIRE_THROWS_AS(ode_solve(x, key, T / 2, 0, cfg, registry), std::invalid_argument);
    REQUIRE_NOTHROW(ode_solve(x, key, T, 0, cfg, registry));
}
