// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "diffstego/diffstego.hpp"

namespace testutil {

inline diffstego::GmmPrior single_gaussian(int dim, double mu, double variance) {
    diffstego::GmmPrior prior;
    prior.dim = dim;
    prior.weights = {1.0};
    prior.means = {std::vector<double>(static_cast<std::size_t>(dim), mu)};
    prior.variances = {variance};
    return prior;
}

inline diffstego::GmmPrior standard_normal(int dim) { return single_gaussian(dim, 0.0, 1.0); }

/// Registry with the four built-in demo keys on the default 1000-step schedule.
inline diffstego::EstimatorRegistry demo_registry(diffstego::ImageShape shape,
                                                  double variance = 0.01) {
    const diffstego::PriorSpec spec = diffstego::builtin_demo_prior(shape, variance);
    return diffstego::build_registry(spec, diffstego::ScheduleParams{});
}

/// Seeded corpus of prior samples; optionally records which component each
/// secret was drawn from.
inline std::vector<diffstego::Image> sampled_corpus(const diffstego::ConditionKey& key,
                                                    const diffstego::EstimatorRegistry& registry,
                                                    diffstego::ImageShape shape, int count,
                                                    std::uint64_t seed,
                                                    std::vector<std::size_t>* components = nullptr) {
    std::vector<diffstego::Image> corpus;
    for (int i = 0; i < count; ++i) {
        diffstego::Image img;
        img.shape = shape;
        std::size_t comp = 0;
        img.data = diffstego::sample_prior(
            key, registry, diffstego::derive_seed(seed, {static_cast<std::uint64_t>(i)}), &comp);
        if (components != nullptr) components->push_back(comp);
        corpus.push_back(std::move(img));
    }
    return corpus;
}

/// Fresh per-call temp directory; tests write artifacts only here.
inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() /
        ("diffstego_" + tag + "_" + std::to_string(counter.fetch_add(1)) + "_" +
         std::to_string(static_cast<unsigned long>(::getpid())));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace testutil
