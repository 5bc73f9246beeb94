// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: hide, reveal, roundtrip, bench, make-prior, sample.
// Exit codes: 0 success, 1 usage error, 2 data/format error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "diffstego/diffstego.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Thrown for violations of command semantics that CLI11 cannot see
// (missing keys, inconsistent flag combinations).
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct CommonArgs {
    std::string config_path;
    std::string private_key;
    std::string public_key;
    int steps = 0;  // 0 = take from config/sidecar
    std::optional<std::uint64_t> seed;
    std::string out;
    bool unsafe_diagnostics = false;
};

void add_common_flags(CLI::App* cmd, CommonArgs* args, bool with_keys = true) {
    cmd->add_option("--config", args->config_path, "Run config JSON file")->required();
    if (with_keys) {
        cmd->add_option("--private-key", args->private_key,
                        "Private condition key (overrides config)");
        cmd->add_option("--public-key", args->public_key,
                        "Public condition key (overrides config)");
    }
    cmd->add_option("--steps", args->steps, "Solver steps (overrides config/sidecar)");
    cmd->add_option("--seed", args->seed, "Master seed (overrides config)");
    cmd->add_option("--out", args->out, "Output path");
    cmd->add_flag("--unsafe-diagnostics", args->unsafe_diagnostics,
                  "Allow writing the inversion latent and private key name to disk");
}

struct LoadedRun {
    diffstego::RunConfig config;
    diffstego::PriorSpec prior_spec;
    diffstego::EstimatorRegistry registry;
};

LoadedRun load_run(const CommonArgs& args) {
    diffstego::RunConfig cfg = diffstego::load_run_config(args.config_path);
    if (!args.private_key.empty()) cfg.private_key = args.private_key;
    if (!args.public_key.empty()) cfg.public_key = args.public_key;
    if (args.steps > 0) cfg.solver_steps = args.steps;
    if (args.seed.has_value()) {
        cfg.seed = *args.seed;
        cfg.seed_given = true;
    }
    diffstego::PriorSpec spec = diffstego::load_prior_spec(cfg.prior_spec);
    diffstego::EstimatorRegistry registry = diffstego::build_registry(spec, cfg.schedule);
    return LoadedRun{std::move(cfg), std::move(spec), std::move(registry)};
}

std::string default_out(const diffstego::RunConfig& cfg, const std::string& flag_value,
                        const char* fallback_name) {
    if (!flag_value.empty()) return flag_value;
    return (std::filesystem::path(cfg.output_dir) / fallback_name).string();
}

void ensure_parent_dir(const std::string& path) {
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

diffstego::Sidecar make_sidecar(const diffstego::RunConfig& cfg,
                                const diffstego::StegoResult& result,
                                const diffstego::EstimatorRegistry& registry) {
    diffstego::Sidecar sc;
    sc.public_key = result.metadata.public_key;
    sc.solver_steps = result.metadata.num_solver_steps;
    sc.schedule = cfg.schedule;
    sc.solver_hash =
        diffstego::solver_fingerprint(registry.schedule(), result.metadata.num_solver_steps);
    sc.shape = result.container.shape;
    return sc;
}

int cmd_hide(const CommonArgs& args, const std::string& secret_path) {
    LoadedRun run = load_run(args);
    if (run.config.private_key.empty()) throw UsageError("hide: no private key given");
    if (run.config.public_key.empty()) throw UsageError("hide: no public key given");

    const diffstego::Image secret = diffstego::read_pnm(secret_path);
    diffstego::StegoJob job;
    job.secret = secret;
    job.private_key = run.registry.key(run.config.private_key);
    job.public_key = run.registry.key(run.config.public_key);
    job.solver.num_solver_steps = run.config.solver_steps;
    const diffstego::StegoResult result = diffstego::hide(job, run.registry);

    const std::string out_path = default_out(run.config, args.out, "container.pgm");
    ensure_parent_dir(out_path);
    diffstego::write_pnm(out_path, result.container);
    diffstego::save_sidecar(out_path + ".json", make_sidecar(run.config, result, run.registry));
    std::cout << "container: " << out_path << "\n"
              << "sidecar:   " << out_path << ".json\n";
    if (args.unsafe_diagnostics) {
        const std::string latent_path = out_path + ".latent.json";
        diffstego::save_vector_json(latent_path, result.latent.data);
        std::cout << "latent:    " << latent_path << " (unsafe diagnostics)\n";
    }
    return kExitOk;
}

int cmd_reveal(const CommonArgs& args, const std::string& container_path) {
    LoadedRun run = load_run(args);
    if (run.config.private_key.empty() && args.private_key.empty()) {
        throw UsageError("reveal: the private key must be supplied via --private-key or config");
    }

    const diffstego::Sidecar sc = diffstego::load_sidecar(container_path + ".json");
    if (!(sc.schedule == run.config.schedule)) {
        throw diffstego::FormatError(
            "reveal: sidecar schedule disagrees with the config schedule; refusing");
    }
    int steps = sc.solver_steps;
    if (args.steps > 0) {
        steps = args.steps;  // explicit override takes responsibility for the mismatch
    } else if (run.config.solver_steps != sc.solver_steps) {
        throw diffstego::FormatError(
            "reveal: sidecar solver_steps " + std::to_string(sc.solver_steps) +
            " disagrees with config solver_steps " + std::to_string(run.config.solver_steps) +
            "; pass --steps to override");
    }
    const std::string expected_hash =
        diffstego::solver_fingerprint(run.registry.schedule(), sc.solver_steps);
    if (expected_hash != sc.solver_hash) {
        throw diffstego::FormatError(
            "reveal: sidecar solver hash mismatch (sender and receiver are out of sync)");
    }
    if (!args.public_key.empty() && args.public_key != sc.public_key) {
        throw diffstego::FormatError("reveal: --public-key '" + args.public_key +
                                     "' disagrees with sidecar public key '" + sc.public_key +
                                     "'");
    }

    const diffstego::Image container = diffstego::read_pnm(container_path);
    if (!(container.shape == sc.shape)) {
        throw diffstego::FormatError("reveal: container shape disagrees with sidecar");
    }
    diffstego::SolverConfig solver;
    solver.num_solver_steps = steps;
    const diffstego::Image revealed =
        diffstego::reveal(container, run.registry.key(sc.public_key),
                          run.registry.key(run.config.private_key), solver, run.registry);

    const std::string out_path = default_out(run.config, args.out, "revealed.pgm");
    ensure_parent_dir(out_path);
    diffstego::write_pnm(out_path, revealed);
    std::cout << "revealed: " << out_path << "\n";
    return kExitOk;
}

int cmd_roundtrip(const CommonArgs& args, const std::string& secret_path) {
    LoadedRun run = load_run(args);
    if (run.config.private_key.empty()) throw UsageError("roundtrip: no private key given");
    if (run.config.public_key.empty()) throw UsageError("roundtrip: no public key given");

    const diffstego::Image secret = diffstego::read_pnm(secret_path);
    diffstego::StegoJob job;
    job.secret = secret;
    job.private_key = run.registry.key(run.config.private_key);
    job.public_key = run.registry.key(run.config.public_key);
    job.solver.num_solver_steps = run.config.solver_steps;
    job.diagnostic_allow_equal_keys = true;  // equal keys are a legitimate probe here
    const diffstego::StegoResult result = diffstego::hide(job, run.registry);
    const diffstego::Image revealed = diffstego::reveal(
        result.container, job.public_key, job.private_key, job.solver, run.registry);

    const std::string out_stem = default_out(run.config, args.out, "roundtrip");
    ensure_parent_dir(out_stem);
    diffstego::write_pnm(out_stem + "_container.pgm", result.container);
    diffstego::write_pnm(out_stem + "_revealed.pgm", revealed);
    std::printf("psnr_continuous: %.6f dB\n", diffstego::psnr(secret, revealed));
    std::printf("psnr_quantized:  %.6f dB\n", diffstego::psnr_quantized(secret, revealed));
    std::printf("rms:             %.8f\n", diffstego::rms_error(secret, revealed));
    return kExitOk;
}

int cmd_bench(const CommonArgs& args, const std::string& corpus_dir) {
    LoadedRun run = load_run(args);
    if (run.config.private_key.empty()) throw UsageError("bench: no private key given");
    if (run.config.public_key.empty()) throw UsageError("bench: no public key given");
    const bool stochastic = std::any_of(
        run.config.grid.begin(), run.config.grid.end(), [](const diffstego::DegradationSpec& s) {
            return s.kind == diffstego::DegradationKind::gaussian_noise;
        });
    if (stochastic && !run.config.seed_given) {
        throw diffstego::FormatError(
            "bench: the degradation grid has stochastic channels but no seed was given");
    }

    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(corpus_dir)) {
        throw diffstego::FormatError("bench: corpus directory '" + corpus_dir +
                                     "' does not exist");
    }
    for (const auto& entry : std::filesystem::directory_iterator(corpus_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw diffstego::FormatError("bench: corpus directory '" + corpus_dir +
                                     "' holds no .pgm/.ppm/.pnm files");
    }
    if (files.size() == 1) {
        std::cerr << "warning: corpus holds a single image; report rows are single-trial\n";
    }
    std::vector<diffstego::Image> corpus;
    for (const auto& f : files) corpus.push_back(diffstego::read_pnm(f.string()));

    diffstego::SolverConfig solver;
    solver.num_solver_steps = run.config.solver_steps;
    const diffstego::SweepReport report = diffstego::robustness_sweep(
        corpus, run.registry.key(run.config.private_key), run.registry.key(run.config.public_key),
        run.config.grid, solver, run.registry, run.config.seed);

    const std::string out_stem = default_out(run.config, args.out, "bench");
    ensure_parent_dir(out_stem);
    const std::string json_path = out_stem + ".json";
    const std::string table_path = out_stem + ".tsv";
    diffstego::save_text_file(
        json_path, diffstego::sweep_report_to_json(report, args.unsafe_diagnostics).dump(2) + "\n");
    diffstego::save_text_file(table_path, diffstego::sweep_report_to_table(report));
    std::cout << "report: " << json_path << "\n" << "table:  " << table_path << "\n";
    return kExitOk;
}

int cmd_make_prior(const std::string& out_path, const std::vector<std::string>& key_specs,
                   bool builtin_demo, int width, int height, double variance,
                   const std::string& emit_templates_dir) {
    diffstego::PriorSpec spec;
    const diffstego::ImageShape shape{width, height, 1};
    if (builtin_demo) {
        if (!key_specs.empty()) {
            throw UsageError("make-prior: --builtin-demo and key=files arguments are exclusive");
        }
        spec = diffstego::builtin_demo_prior(shape, variance);
    } else {
        if (key_specs.empty()) {
            throw UsageError(
                "make-prior: give key specs as name=template1.pgm,template2.pgm or "
                "--builtin-demo");
        }
        for (const std::string& ks : key_specs) {
            const std::size_t eq = ks.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == ks.size()) {
                throw UsageError("make-prior: bad key spec '" + ks + "', want name=file1,file2");
            }
            const std::string name = ks.substr(0, eq);
            diffstego::GmmPrior prior;
            std::vector<std::string> paths;
            std::string rest = ks.substr(eq + 1);
            std::size_t pos = 0;
            while (pos != std::string::npos) {
                const std::size_t comma = rest.find(',', pos);
                paths.push_back(rest.substr(pos, comma == std::string::npos ? comma : comma - pos));
                pos = comma == std::string::npos ? comma : comma + 1;
            }
            for (const std::string& p : paths) {
                const diffstego::Image tmpl = diffstego::read_pnm(p);
                if (spec.entries.empty() && prior.means.empty()) {
                    spec.shape = tmpl.shape;
                } else if (!(tmpl.shape == spec.shape)) {
                    throw diffstego::FormatError("make-prior: template shape mismatch: " + p);
                }
                prior.means.push_back(tmpl.data);
            }
            prior.dim = static_cast<int>(spec.shape.size());
            const double w = 1.0 / static_cast<double>(prior.means.size());
            prior.weights.assign(prior.means.size(), w);
            // Equal weights from counts can miss 1.0 by float error; pin the sum.
            prior.weights.back() = 1.0 - w * static_cast<double>(prior.means.size() - 1);
            prior.variances.assign(prior.means.size(), variance);
            prior.validate();
            spec.entries.emplace_back(name, std::move(prior));
        }
    }
    ensure_parent_dir(out_path);
    diffstego::save_prior_spec(out_path, spec);
    std::cout << "prior spec: " << out_path << "\n";
    if (!emit_templates_dir.empty()) {
        std::filesystem::create_directories(emit_templates_dir);
        for (const auto& [name, prior] : spec.entries) {
            for (std::size_t k = 0; k < prior.num_components(); ++k) {
                diffstego::Image img;
                img.shape = spec.shape;
                img.data = prior.means[k];
                const std::string path = (std::filesystem::path(emit_templates_dir) /
                                          (name + "_" + std::to_string(k) + ".pgm"))
                                             .string();
                diffstego::write_pnm(path, img);
                std::cout << "template:   " << path << "\n";
            }
        }
    }
    return kExitOk;
}

int cmd_sample(const CommonArgs& args, const std::string& key_name, int count) {
    LoadedRun run = load_run(args);
    if (key_name.empty()) throw UsageError("sample: no key given");
    if (!args.seed.has_value() && !run.config.seed_given) {
        throw UsageError("sample: a seed is required (--seed or config)");
    }
    const diffstego::ConditionKey key = run.registry.key(key_name);
    const std::string out_stem = default_out(run.config, args.out, "sample");
    ensure_parent_dir(out_stem);
    for (int i = 0; i < count; ++i) {
        const std::uint64_t seed =
            diffstego::derive_seed(run.config.seed, {0x73616d706cULL, static_cast<std::uint64_t>(i)});
        diffstego::Image img;
        img.shape = run.prior_spec.shape;
        img.data = diffstego::sample_prior(key, run.registry, seed);
        const std::string path = out_stem + "_" + std::to_string(i) + ".pgm";
        diffstego::write_pnm(path, img);
        std::cout << "sample: " << path << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coverless image steganography via deterministic diffusion inversion"};
    app.require_subcommand(1);

    CommonArgs hide_args, reveal_args, roundtrip_args, bench_args, sample_args;
    std::string secret_path, container_path, rt_secret_path, corpus_dir;

    CLI::App* hide = app.add_subcommand("hide", "Hide a secret image inside a fresh container");
    add_common_flags(hide, &hide_args);
    hide->add_option("--secret", secret_path, "Secret image (PGM/PPM)")->required();

    CLI::App* reveal = app.add_subcommand("reveal", "Reveal the secret from a container");
    add_common_flags(reveal, &reveal_args);
    reveal->add_option("--container", container_path, "Container image written by hide")
        ->required();

    CLI::App* roundtrip =
        app.add_subcommand("roundtrip", "Hide then reveal in memory and report fidelity");
    add_common_flags(roundtrip, &roundtrip_args);
    roundtrip->add_option("--secret", rt_secret_path, "Secret image (PGM/PPM)")->required();

    CLI::App* bench = app.add_subcommand("bench", "Robustness sweep over a degradation grid");
    add_common_flags(bench, &bench_args);
    bench->add_option("--corpus", corpus_dir, "Directory of secret images")->required();

    std::string mp_out = "prior.json", mp_emit_dir;
    std::vector<std::string> mp_key_specs;
    bool mp_builtin = false;
    int mp_width = 16, mp_height = 16;
    double mp_variance = 0.01;
    CLI::App* make_prior =
        app.add_subcommand("make-prior", "Build a prior spec from template images");
    make_prior->add_option("--out", mp_out, "Output prior spec path");
    make_prior->add_option("keys", mp_key_specs, "Key specs: name=tmpl1.pgm,tmpl2.pgm");
    make_prior->add_flag("--builtin-demo", mp_builtin,
                         "Emit the built-in four-key demo prior instead of reading templates");
    make_prior->add_option("--width", mp_width, "Demo template width");
    make_prior->add_option("--height", mp_height, "Demo template height");
    make_prior->add_option("--variance", mp_variance, "Per-component variance");
    make_prior->add_option("--emit-templates", mp_emit_dir,
                           "Also write each component mean as a PGM into this directory");

    std::string sample_key;
    int sample_count = 1;
    CLI::App* sample = app.add_subcommand("sample", "Draw seeded samples from a key's prior");
    add_common_flags(sample, &sample_args, /*with_keys=*/false);
    sample->add_option("--key", sample_key, "Condition key to sample")->required();
    sample->add_option("--count", sample_count, "Number of samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (hide->parsed()) return cmd_hide(hide_args, secret_path);
        if (reveal->parsed()) return cmd_reveal(reveal_args, container_path);
        if (roundtrip->parsed()) return cmd_roundtrip(roundtrip_args, rt_secret_path);
        if (bench->parsed()) return cmd_bench(bench_args, corpus_dir);
        if (make_prior->parsed()) {
            return cmd_make_prior(mp_out, mp_key_specs, mp_builtin, mp_width, mp_height,
                                  mp_variance, mp_emit_dir);
        }
        if (sample->parsed()) return cmd_sample(sample_args, sample_key, sample_count);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const diffstego::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    std::cerr << "error: no subcommand\n";
    return kExitUsage;
}
