// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "diffstego/channel.hpp"
#include "diffstego/eval.hpp"
#include "diffstego/image.hpp"
#include "diffstego/pnm.hpp"
#include "diffstego/prior.hpp"
#include "diffstego/schedule.hpp"

namespace diffstego {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline ordered_json parse_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open for reading");
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": invalid JSON: " + e.what());
    }
    return j;
}

inline void require_object(const ordered_json& j, const std::string& ctx) {
    if (!j.is_object()) throw FormatError(ctx + ": expected an object");
}

// Experiment records stay honest only if misspelled knobs fail loudly, so any
// field outside the allowed set is an error, not a warning.
inline void reject_unknown_fields(const ordered_json& j,
                                  std::initializer_list<const char*> allowed,
                                  const std::string& ctx) {
    require_object(j, ctx);
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (item.key() == a) {
                known = true;
                break;
            }
        }
        if (!known) throw FormatError(ctx + ": unknown field '" + item.key() + "'");
    }
}

inline const ordered_json* find_field(const ordered_json& j, const char* name) {
    auto it = j.find(name);
    return it == j.end() ? nullptr : &*it;
}

inline const ordered_json& require_field(const ordered_json& j, const char* name,
                                         const std::string& ctx) {
    const ordered_json* f = find_field(j, name);
    if (f == nullptr) throw FormatError(ctx + ": missing field '" + name + "'");
    return *f;
}

inline int as_int(const ordered_json& j, const std::string& ctx) {
    if (!j.is_number_integer()) throw FormatError(ctx + ": expected an integer");
    return j.get<int>();
}

inline std::uint64_t as_seed(const ordered_json& j, const std::string& ctx) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        throw FormatError(ctx + ": expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

inline double as_double(const ordered_json& j, const std::string& ctx) {
    if (!j.is_number()) throw FormatError(ctx + ": expected a number");
    return j.get<double>();
}

inline std::string as_string(const ordered_json& j, const std::string& ctx) {
    if (!j.is_string()) throw FormatError(ctx + ": expected a string");
    return j.get<std::string>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Schedule parameters.
// ---------------------------------------------------------------------------

struct ScheduleParams {
    int num_steps = kDefaultScheduleSteps;
    double beta_start = kDefaultBetaStart;
    double beta_end = kDefaultBetaEnd;

    NoiseSchedule build() const { return build_linear_schedule(num_steps, beta_start, beta_end); }

    friend bool operator==(const ScheduleParams& a, const ScheduleParams& b) = default;
};

inline ScheduleParams schedule_params_from_json(const ordered_json& j, const std::string& ctx) {
    detail::reject_unknown_fields(j, {"num_steps", "beta_start", "beta_end"}, ctx);
    ScheduleParams p;
    if (const auto* f = detail::find_field(j, "num_steps")) {
        p.num_steps = detail::as_int(*f, ctx + ".num_steps");
    }
    if (const auto* f = detail::find_field(j, "beta_start")) {
        p.beta_start = detail::as_double(*f, ctx + ".beta_start");
    }
    if (const auto* f = detail::find_field(j, "beta_end")) {
        p.beta_end = detail::as_double(*f, ctx + ".beta_end");
    }
    return p;
}

inline ordered_json schedule_params_to_json(const ScheduleParams& p) {
    return ordered_json{
        {"num_steps", p.num_steps}, {"beta_start", p.beta_start}, {"beta_end", p.beta_end}};
}

// ---------------------------------------------------------------------------
// Prior spec: named keys, each a list of mixture components. Component means
// come inline ("mean": [..]) or from a template image ("mean_file": path,
// resolved relative to the spec file).
// ---------------------------------------------------------------------------

struct PriorSpec {
    ImageShape shape;
    std::vector<std::pair<std::string, GmmPrior>> entries;
};

inline PriorSpec load_prior_spec(const std::string& path) {
    const ordered_json j = detail::parse_json_file(path);
    const std::string ctx = path;
    detail::reject_unknown_fields(j, {"width", "height", "channels", "keys"}, ctx);
    PriorSpec spec;
    spec.shape.width = detail::as_int(detail::require_field(j, "width", ctx), ctx + ".width");
    spec.shape.height = detail::as_int(detail::require_field(j, "height", ctx), ctx + ".height");
    spec.shape.channels = 1;
    if (const auto* f = detail::find_field(j, "channels")) {
        spec.shape.channels = detail::as_int(*f, ctx + ".channels");
    }
    spec.shape.validate();
    const int dim = static_cast<int>(spec.shape.size());

    const ordered_json& keys = detail::require_field(j, "keys", ctx);
    detail::require_object(keys, ctx + ".keys");
    if (keys.empty()) throw FormatError(ctx + ".keys: at least one key required");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    for (const auto& entry : keys.items()) {
        const std::string kctx = ctx + ".keys." + entry.key();
        detail::reject_unknown_fields(entry.value(), {"components"}, kctx);
        const ordered_json& comps = detail::require_field(entry.value(), "components", kctx);
        if (!comps.is_array() || comps.empty()) {
            throw FormatError(kctx + ".components: expected a non-empty array");
        }
        GmmPrior prior;
        prior.dim = dim;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const std::string cctx = kctx + ".components[" + std::to_string(i) + "]";
            const ordered_json& comp = comps[i];
            detail::reject_unknown_fields(comp, {"weight", "variance", "mean", "mean_file"}, cctx);
            prior.weights.push_back(
                detail::as_double(detail::require_field(comp, "weight", cctx), cctx + ".weight"));
            prior.variances.push_back(detail::as_double(
                detail::require_field(comp, "variance", cctx), cctx + ".variance"));
            const ordered_json* inline_mean = detail::find_field(comp, "mean");
            const ordered_json* mean_file = detail::find_field(comp, "mean_file");
            if ((inline_mean != nullptr) == (mean_file != nullptr)) {
                throw FormatError(cctx + ": exactly one of 'mean' or 'mean_file' required");
            }
            std::vector<double> mean;
            if (inline_mean != nullptr) {
                if (!inline_mean->is_array()) throw FormatError(cctx + ".mean: expected an array");
                for (const auto& v : *inline_mean) {
                    mean.push_back(detail::as_double(v, cctx + ".mean[]"));
                }
            } else {
                const std::string rel = detail::as_string(*mean_file, cctx + ".mean_file");
                const Image tmpl = read_pnm((base / rel).string());
                if (!(tmpl.shape == spec.shape)) {
                    throw FormatError(cctx + ".mean_file: template shape mismatch (" + rel + ")");
                }
                mean = tmpl.data;
            }
            if (mean.size() != static_cast<std::size_t>(dim)) {
                throw FormatError(cctx + ": mean has " + std::to_string(mean.size()) +
                                  " values, expected " + std::to_string(dim));
            }
            prior.means.push_back(std::move(mean));
        }
        try {
            prior.validate();
        } catch (const std::invalid_argument& e) {
            throw FormatError(kctx + ": " + e.what());
        }
        spec.entries.emplace_back(entry.key(), std::move(prior));
    }
    return spec;
}

inline void save_prior_spec(const std::string& path, const PriorSpec& spec) {
    ordered_json j;
    j["width"] = spec.shape.width;
    j["height"] = spec.shape.height;
    j["channels"] = spec.shape.channels;
    ordered_json keys = ordered_json::object();
    for (const auto& [name, prior] : spec.entries) {
        ordered_json comps = ordered_json::array();
        for (std::size_t k = 0; k < prior.num_components(); ++k) {
            ordered_json comp;
            comp["weight"] = prior.weights[k];
            comp["variance"] = prior.variances[k];
            comp["mean"] = prior.means[k];
            comps.push_back(std::move(comp));
        }
        keys[name] = ordered_json{{"components", std::move(comps)}};
    }
    j["keys"] = std::move(keys);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
    if (!out) throw FormatError(path + ": write failed");
}

inline EstimatorRegistry build_registry(const PriorSpec& spec, const ScheduleParams& params) {
    EstimatorRegistry registry(params.build());
    for (const auto& [name, prior] : spec.entries) registry.add(name, prior);
    return registry;
}

// ---------------------------------------------------------------------------
// Run config.
// ---------------------------------------------------------------------------

inline std::vector<DegradationSpec> default_degradation_grid() {
    std::vector<DegradationSpec> grid;
    grid.push_back(DegradationSpec::identity());
    for (double sigma : {0.0, 10.0, 20.0, 30.0}) {
        grid.push_back(DegradationSpec::gaussian_noise(sigma, 0));
    }
    for (int q : {80, 40, 20}) grid.push_back(DegradationSpec::jpeg_like(q));
    grid.push_back(DegradationSpec::resize(2));
    return grid;
}

struct RunConfig {
    std::string prior_spec;  // path, resolved relative to the config file
    ScheduleParams schedule;
    int solver_steps = 50;
    std::string private_key;
    std::string public_key;
    std::vector<DegradationSpec> grid = default_degradation_grid();
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string output_dir = ".";
};

inline DegradationSpec degradation_spec_from_json(const ordered_json& j, const std::string& ctx) {
    detail::reject_unknown_fields(j, {"kind", "severity"}, ctx);
    DegradationSpec spec;
    spec.kind = degradation_kind_from_string(
        detail::as_string(detail::require_field(j, "kind", ctx), ctx + ".kind"));
    if (const auto* f = detail::find_field(j, "severity")) {
        spec.severity = detail::as_double(*f, ctx + ".severity");
    } else if (spec.kind != DegradationKind::identity) {
        throw FormatError(ctx + ": missing field 'severity'");
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(ctx + ": " + e.what());
    }
    return spec;
}

inline RunConfig load_run_config(const std::string& path) {
    const ordered_json j = detail::parse_json_file(path);
    const std::string ctx = path;
    detail::reject_unknown_fields(j,
                                  {"prior_spec", "schedule", "solver_steps", "private_key",
                                   "public_key", "degradation_grid", "seed", "output_dir"},
                                  ctx);
    RunConfig cfg;
    cfg.prior_spec = detail::as_string(detail::require_field(j, "prior_spec", ctx),
                                       ctx + ".prior_spec");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    cfg.prior_spec = (base / cfg.prior_spec).string();
    if (const auto* f = detail::find_field(j, "schedule")) {
        cfg.schedule = schedule_params_from_json(*f, ctx + ".schedule");
    }
    if (const auto* f = detail::find_field(j, "solver_steps")) {
        cfg.solver_steps = detail::as_int(*f, ctx + ".solver_steps");
    }
    if (const auto* f = detail::find_field(j, "private_key")) {
        cfg.private_key = detail::as_string(*f, ctx + ".private_key");
    }
    if (const auto* f = detail::find_field(j, "public_key")) {
        cfg.public_key = detail::as_string(*f, ctx + ".public_key");
    }
    if (const auto* f = detail::find_field(j, "degradation_grid")) {
        if (!f->is_array() || f->empty()) {
            throw FormatError(ctx + ".degradation_grid: expected a non-empty array");
        }
        cfg.grid.clear();
        for (std::size_t i = 0; i < f->size(); ++i) {
            cfg.grid.push_back(degradation_spec_from_json(
                (*f)[i], ctx + ".degradation_grid[" + std::to_string(i) + "]"));
        }
    }
    if (const auto* f = detail::find_field(j, "seed")) {
        cfg.seed = detail::as_seed(*f, ctx + ".seed");
        cfg.seed_given = true;
    }
    if (const auto* f = detail::find_field(j, "output_dir")) {
        cfg.output_dir = detail::as_string(*f, ctx + ".output_dir");
        cfg.output_dir = (base / cfg.output_dir).string();
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Solver fingerprint and the container sidecar.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Hash of everything sender and receiver must agree on: the schedule's
/// numeric content and the solver grid. A mismatch means the reveal would be
/// run on a different deterministic map than the hide.
inline std::string solver_fingerprint(const NoiseSchedule& schedule, int solver_steps) {
    std::ostringstream os;
    os << "T=" << schedule.num_steps << ";steps=" << solver_steps << ";";
    char buf[32];
    for (double ab : schedule.alpha_bars) {
        std::snprintf(buf, sizeof(buf), "%.17g,", ab);
        os << buf;
    }
    const StepSequence seq = StepSequence::uniform(schedule.num_steps, solver_steps);
    for (int idx : seq.indices) os << idx << ",";
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(os.str())));
    return std::string(buf);
}

struct Sidecar {
    std::string public_key;
    int solver_steps = 0;
    ScheduleParams schedule;
    std::string solver_hash;
    ImageShape shape;
};

inline void save_sidecar(const std::string& path, const Sidecar& sc) {
    ordered_json j;
    j["format"] = "diffstego-sidecar";
    j["version"] = 1;
    j["public_key"] = sc.public_key;
    j["solver_steps"] = sc.solver_steps;
    j["schedule"] = schedule_params_to_json(sc.schedule);
    j["solver_hash"] = sc.solver_hash;
    j["width"] = sc.shape.width;
    j["height"] = sc.shape.height;
    j["channels"] = sc.shape.channels;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
    if (!out) throw FormatError(path + ": write failed");
}

inline Sidecar load_sidecar(const std::string& path) {
    const ordered_json j = detail::parse_json_file(path);
    const std::string ctx = path;
    detail::reject_unknown_fields(j,
                                  {"format", "version", "public_key", "solver_steps", "schedule",
                                   "solver_hash", "width", "height", "channels"},
                                  ctx);
    if (detail::as_string(detail::require_field(j, "format", ctx), ctx + ".format") !=
        "diffstego-sidecar") {
        throw FormatError(ctx + ": not a diffstego sidecar");
    }
    if (detail::as_int(detail::require_field(j, "version", ctx), ctx + ".version") != 1) {
        throw FormatError(ctx + ": unsupported sidecar version");
    }
    Sidecar sc;
    sc.public_key = detail::as_string(detail::require_field(j, "public_key", ctx),
                                      ctx + ".public_key");
    sc.solver_steps = detail::as_int(detail::require_field(j, "solver_steps", ctx),
                                     ctx + ".solver_steps");
    sc.schedule = schedule_params_from_json(detail::require_field(j, "schedule", ctx),
                                            ctx + ".schedule");
    sc.solver_hash = detail::as_string(detail::require_field(j, "solver_hash", ctx),
                                       ctx + ".solver_hash");
    sc.shape.width = detail::as_int(detail::require_field(j, "width", ctx), ctx + ".width");
    sc.shape.height = detail::as_int(detail::require_field(j, "height", ctx), ctx + ".height");
    sc.shape.channels = detail::as_int(detail::require_field(j, "channels", ctx),
                                       ctx + ".channels");
    sc.shape.validate();
    return sc;
}

// ---------------------------------------------------------------------------
// Report serialization.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
}

}  // namespace detail

/// JSON report. The private key name is replaced by a placeholder unless the
/// caller explicitly opts into diagnostics output.
inline ordered_json sweep_report_to_json(const SweepReport& report, bool include_private_key) {
    ordered_json j;
    j["report"] = "robustness_sweep";
    ordered_json cfg;
    cfg["private_key"] = include_private_key ? report.config.private_key : "(redacted)";
    cfg["public_key"] = report.config.public_key;
    cfg["solver_steps"] = report.config.num_solver_steps;
    cfg["schedule"] = schedule_params_to_json({report.config.schedule_steps,
                                               report.config.beta_start, report.config.beta_end});
    cfg["seed"] = report.config.master_seed;
    cfg["corpus_size"] = report.config.corpus_size;
    j["config"] = std::move(cfg);
    ordered_json rows = ordered_json::array();
    for (const SweepRow& row : report.rows) {
        ordered_json r;
        r["kind"] = to_string(row.spec.kind);
        r["severity"] = row.spec.severity;
        r["mean_psnr"] = row.mean_psnr;
        r["mean_psnr_quantized"] = row.mean_psnr_quantized;
        r["mean_rms"] = row.mean_rms;
        r["trials"] = row.trials;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j;
}

/// Tab-separated table with fixed 6-decimal formatting, one line per row.
inline std::string sweep_report_to_table(const SweepReport& report) {
    std::ostringstream os;
    os << "kind\tseverity\tmean_psnr\tmean_psnr_quantized\tmean_rms\ttrials\n";
    for (const SweepRow& row : report.rows) {
        os << to_string(row.spec.kind) << "\t" << detail::fixed6(row.spec.severity) << "\t"
           << detail::fixed6(row.mean_psnr) << "\t" << detail::fixed6(row.mean_psnr_quantized)
           << "\t" << detail::fixed6(row.mean_rms) << "\t" << row.trials << "\n";
    }
    return os.str();
}

inline void save_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << content;
    if (!out) throw FormatError(path + ": write failed");
}

/// Full-precision vector dump for diagnostic latent export; doubles serialize
/// with shortest round-trip representation, so reading back is exact.
inline void save_vector_json(const std::string& path, const std::vector<double>& values) {
    ordered_json j;
    j["values"] = values;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << j.dump() << "\n";
    if (!out) throw FormatError(path + ": write failed");
}

}  // namespace diffstego
