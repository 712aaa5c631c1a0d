#pragma once

/// @file cli.hpp
/// @brief Command-line front end. Parses flags, delegates to theory and
/// experiments, and writes records.csv, summary.json and plotdata.csv.
///
/// Requires CLI11.hpp and json.hpp on the include path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <ollga/core.hpp>
#include <ollga/engine.hpp>
#include <ollga/experiments.hpp>
#include <ollga/theory.hpp>

#ifndef OLLGA_VERSION
#define OLLGA_VERSION "0.1.0"
#endif

namespace ollga::cli {

using json = nlohmann::ordered_json;

/// Usage or domain error; reported as a single line with exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;

inline const std::string records_header =
    "trial,seed,iterations,evaluations,hit_optimum,first_hit_evaluation,final_fitness";
inline const std::string plotdata_header = "x,mean_evals,se_evals,exact_evals,bound_evals";

/// Effective settings of one invocation, after flags and --from-summary are merged.
struct Settings {
    std::string command;
    std::optional<std::size_t> n;
    std::optional<std::size_t> k;
    std::optional<double> p;
    std::optional<double> c;
    std::optional<std::uint64_t> lambda_m;
    std::optional<std::uint64_t> lambda_c;
    std::optional<theory::AutoParamsMode> auto_params;
    std::uint64_t trials = 2000;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> budget;
    std::optional<std::string> start;
    std::optional<double> ea_rate;
    std::string experiment = "escape";
    experiments::SweepGrid grid;
    std::optional<std::string> axis;
    bool bounds = false;
    std::string out = "ollga_out";
};

// ---------------------------------------------------------------------------
// Formatting

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    char buffer[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buffer, sizeof buffer, "%.*g", precision, v);
        if (std::strtod(buffer, nullptr) == v) {
            break;
        }
    }
    return buffer;
}

/// A log-space value as {"name": text, "name_is_log": flag}: decimal when the
/// linear value is a normal double, otherwise the natural log.
inline void put_log_value(json& obj, const std::string& name, double log_value) {
    constexpr double limit = 700.0;
    if (std::isfinite(log_value) && std::abs(log_value) < limit) {
        obj[name] = format_double(std::exp(log_value));
        obj[name + "_is_log"] = false;
    } else if (log_value == theory::neg_inf) {
        obj[name] = "0";
        obj[name + "_is_log"] = false;
    } else if (log_value == theory::pos_inf) {
        obj[name] = "inf";
        obj[name + "_is_log"] = false;
    } else {
        obj[name] = format_double(log_value);
        obj[name + "_is_log"] = true;
    }
}

inline void put_null_value(json& obj, const std::string& name) {
    obj[name] = nullptr;
    obj[name + "_is_log"] = false;
}

inline json stats_json(const experiments::SummaryStats& s) {
    json out;
    out["count"] = s.count;
    out["censored_count"] = s.censored_count;
    out["mean_defined"] = s.mean_defined;
    out["variance_defined"] = s.variance_defined;
    if (s.mean_defined) {
        out["mean"] = s.mean;
        out["variance"] = s.variance;
        out["std_error"] = s.std_error;
        out["ci95_low"] = s.ci95_low;
        out["ci95_high"] = s.ci95_high;
    } else {
        for (const char* key : {"mean", "variance", "std_error", "ci95_low", "ci95_high"}) {
            out[key] = nullptr;
        }
    }
    return out;
}

inline json params_json(const GaParams& params) {
    return {{"p", params.p},
            {"c", params.c},
            {"lambda_m", std::to_string(params.lambda_m)},
            {"lambda_c", std::to_string(params.lambda_c)}};
}

inline json range_json(const theory::RangeDiagnostics& r) {
    return {{"alpha", r.alpha},
            {"beta", r.beta},
            {"alpha_at_most_one", r.alpha_at_most_one},
            {"beta_at_most_one", r.beta_at_most_one},
            {"rate_at_least_2k_over_n", r.rate_at_least_2k_over_n},
            {"alpha_ratio", r.alpha_ratio},
            {"beta_ratio", r.beta_ratio},
            {"p_ratio", r.p_ratio},
            {"c_ratio", r.c_ratio},
            {"pc_ratio", r.pc_ratio},
            {"holds", r.holds}};
}

inline json bounds_json(const theory::BoundReport& report) {
    json out;
    out["in_validity_domain"] = report.runtime_bound_in_domain;
    out["exact_in_domain"] = report.exact_in_domain;
    out["q_ell_exact"] = report.q_ell_exact;
    if (report.exact_p) {
        put_log_value(out, "exact_p", report.exact_p->log_value);
    } else {
        put_null_value(out, "exact_p");
    }
    if (report.exact_time) {
        put_log_value(out, "exact_iters", report.exact_time->log_iters);
        put_log_value(out, "exact_evals", report.exact_time->log_evals);
    } else {
        put_null_value(out, "exact_iters");
        put_null_value(out, "exact_evals");
    }
    const auto runtime = [&](const std::string& name, const std::optional<theory::Runtime>& r) {
        if (r) {
            put_log_value(out, name + "_iters", r->log_iters);
            put_log_value(out, name + "_evals", r->log_evals);
        } else {
            put_null_value(out, name + "_iters");
            put_null_value(out, name + "_evals");
        }
    };
    runtime("runtime_bound", report.runtime_bound_conservative);
    runtime("runtime_bound_exact_q", report.runtime_bound_exact_q);
    if (report.upper_bound_p) {
        put_log_value(out, "upper_bound_p", report.upper_bound_p->log_value);
    } else {
        put_null_value(out, "upper_bound_p");
    }
    if (report.lower_bound_evals) {
        put_log_value(out, "lower_bound_evals", std::log(*report.lower_bound_evals));
    } else {
        put_null_value(out, "lower_bound_evals");
    }
    out["range"] = report.range ? range_json(*report.range) : json(nullptr);
    return out;
}

// ---------------------------------------------------------------------------
// Output files

inline std::string records_csv(const std::vector<RunOutcome>& records, const std::vector<std::uint64_t>& seeds) {
    std::ostringstream out;
    out << records_header << '\n';
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        out << i << ',' << seeds.at(i) << ',' << r.iterations << ',' << r.evaluations << ','
            << (r.hit_optimum ? "true" : "false") << ',';
        if (r.first_hit_evaluation) {
            out << *r.first_hit_evaluation;
        }
        out << ',' << r.final_fitness << '\n';
    }
    return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw UsageError("cannot write " + path.string());
    }
    file << content;
    file.close();
    if (!file) {
        throw UsageError("cannot write " + path.string());
    }
}

inline void prepare_output_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw UsageError("cannot create output directory " + dir.string());
    }
}

struct PlotRow {
    double x = 0.0;
    std::optional<double> mean_evals;
    std::optional<double> se_evals;
    std::optional<double> exact_evals;
    std::optional<double> bound_evals;
};

inline std::string plotdata_csv(std::vector<PlotRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const PlotRow& a, const PlotRow& b) { return a.x < b.x; });
    const auto field = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    std::ostringstream out;
    out << plotdata_header << '\n';
    for (const auto& row : rows) {
        out << format_double(row.x) << ',' << field(row.mean_evals) << ',' << field(row.se_evals) << ','
            << field(row.exact_evals) << ',' << field(row.bound_evals) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Settings resolution

inline const char* auto_params_name(theory::AutoParamsMode mode) {
    return mode == theory::AutoParamsMode::escape ? "escape" : "full";
}

inline theory::AutoParamsMode parse_auto_params(const std::string& text) {
    if (text == "escape") {
        return theory::AutoParamsMode::escape;
    }
    if (text == "full") {
        return theory::AutoParamsMode::full_run;
    }
    throw UsageError("--auto-params must be escape or full (got " + text + ")");
}

inline JumpProblem make_problem(const Settings& s) {
    if (!s.n || !s.k) {
        throw UsageError("--n and --k are required");
    }
    try {
        return JumpProblem(*s.n, *s.k);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

inline bool has_explicit_params(const Settings& s) { return s.p || s.c || s.lambda_m || s.lambda_c; }

/// The command's default parameter choice when no explicit values are given.
inline experiments::ParamsChoice default_params(const Settings& s, const JumpProblem& problem) {
    if (s.command == "run" || (s.command == "sweep" && s.experiment == "run")) {
        return theory::AutoParamsMode::full_run;
    }
    if (s.command == "reach-local" || (s.command == "sweep" && s.experiment == "reach-local")) {
        return experiments::reach_local_params(problem);
    }
    return theory::AutoParamsMode::escape;
}

inline experiments::ParamsChoice resolve_params_choice(const Settings& s, const JumpProblem& problem) {
    if (s.auto_params) {
        return *s.auto_params;
    }
    const auto base_choice = default_params(s, problem);
    if (!has_explicit_params(s)) {
        return base_choice;
    }
    GaParams params{};
    if (!(s.p && s.c && s.lambda_m && s.lambda_c)) {
        experiments::ExperimentConfig probe;
        probe.problem = problem;
        probe.params = base_choice;
        try {
            params = experiments::resolve_params(probe);
        } catch (const std::exception& e) {
            throw UsageError(std::string("give all of --p --c --lambda-m --lambda-c: ") + e.what());
        }
    }
    params.p = s.p.value_or(params.p);
    params.c = s.c.value_or(params.c);
    params.lambda_m = s.lambda_m.value_or(params.lambda_m);
    params.lambda_c = s.lambda_c.value_or(params.lambda_c);
    return params;
}

inline StartPoint parse_start(const Settings& s) {
    const std::string fallback = s.command == "escape" ? "local" : "random";
    const std::string text = s.start.value_or(
        s.command == "compare" || (s.command == "sweep" && s.experiment == "escape") ? "local" : fallback);
    if (text == "local") {
        return LocalOptimumStart{};
    }
    if (text == "random") {
        return RandomStart{};
    }
    throw UsageError("--start must be local or random (got " + text + ")");
}

inline std::string start_name(const StartPoint& start) {
    return std::holds_alternative<LocalOptimumStart>(start) ? "local" : "random";
}

inline unsigned thread_limit() {
    const char* env = std::getenv("OLLGA_THREADS");
    if (env == nullptr || *env == '\0') {
        return 0;
    }
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (*end != '\0' || value < 1 || value > 4096) {
        throw UsageError("OLLGA_THREADS must be a positive integer");
    }
    return static_cast<unsigned>(value);
}

/// 10^4 times the ceiling of the exact expected escape evaluations when that
/// is computable, else 10^8.
inline std::uint64_t default_budget(const JumpProblem& problem, const std::optional<GaParams>& params,
                                    std::optional<double> ea_rate, bool escape) {
    constexpr std::uint64_t fallback = 100'000'000;
    if (!escape) {
        return fallback;
    }
    double log_evals = theory::neg_inf;
    try {
        if (params) {
            log_evals = std::max(log_evals, theory::escape_time_exact(problem, *params).log_evals);
        }
        if (ea_rate) {
            log_evals = std::max(log_evals, theory::opoea_escape_time(problem, *ea_rate).log_evals);
        }
    } catch (const std::exception&) {
        return fallback;
    }
    if (!std::isfinite(log_evals)) {
        return fallback;
    }
    const double budget = 1e4 * std::ceil(std::exp(log_evals));
    constexpr double ceiling = 9.2e18;
    if (!(budget < ceiling)) {
        return static_cast<std::uint64_t>(ceiling);
    }
    std::uint64_t result = static_cast<std::uint64_t>(budget);
    if (params) {
        result = std::max(result, params->evaluations_per_iteration() + 1);
    }
    return result;
}

inline experiments::ExperimentKind experiment_kind(const std::string& name) {
    if (name == "escape") {
        return experiments::ExperimentKind::escape;
    }
    if (name == "run") {
        return experiments::ExperimentKind::full;
    }
    if (name == "reach-local") {
        return experiments::ExperimentKind::reach_local;
    }
    throw UsageError("--experiment must be escape, run or reach-local (got " + name + ")");
}

// ---------------------------------------------------------------------------
// Config echo

inline json config_json(const Settings& s, const experiments::ExperimentConfig& config,
                        const std::optional<GaParams>& params, std::uint64_t budget) {
    json out;
    out["n"] = config.problem.n();
    out["k"] = config.problem.k();
    if (s.auto_params) {
        out["auto_params"] = auto_params_name(*s.auto_params);
    } else if (const auto* mode = std::get_if<theory::AutoParamsMode>(&config.params)) {
        out["auto_params"] = auto_params_name(*mode);
    } else {
        out["auto_params"] = nullptr;
    }
    if (params) {
        out["params"] = params_json(*params);
    } else {
        out["params"] = nullptr;
    }
    out["trials"] = s.trials;
    out["seed"] = std::to_string(s.seed);
    out["budget"] = std::to_string(budget);
    out["start"] = start_name(config.start);
    out["ea_rate"] = s.ea_rate ? json(*s.ea_rate) : json(nullptr);
    out["bounds"] = s.bounds;
    if (s.command == "sweep") {
        out["experiment"] = s.experiment;
        json grid;
        grid["n"] = s.grid.n;
        grid["k"] = s.grid.k;
        grid["p"] = s.grid.p;
        grid["c"] = s.grid.c;
        const auto strings = [](const std::vector<std::uint64_t>& values) {
            json list = json::array();
            for (const auto v : values) {
                list.push_back(std::to_string(v));
            }
            return list;
        };
        grid["lambda"] = strings(s.grid.lambda);
        grid["lambda_m"] = strings(s.grid.lambda_m);
        grid["lambda_c"] = strings(s.grid.lambda_c);
        out["grid"] = grid;
        out["axis"] = s.axis ? json(*s.axis) : json(nullptr);
    }
    return out;
}

inline std::uint64_t parse_u64_text(const json& value, const char* what) {
    try {
        if (value.is_string()) {
            std::size_t used = 0;
            const std::string text = value.get<std::string>();
            const auto parsed = std::stoull(text, &used);
            if (used != text.size()) {
                throw std::invalid_argument(what);
            }
            return parsed;
        }
        return value.get<std::uint64_t>();
    } catch (const std::exception&) {
        throw UsageError(std::string("summary field ") + what + " is not an unsigned integer");
    }
}

/// Fills `s` from the config echoed in a previous summary.json.
inline void load_summary(Settings& s, const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw UsageError("cannot read " + path);
    }
    json doc;
    try {
        doc = json::parse(file);
        const auto& cfg = doc.at("config");
        if (doc.contains("command") && doc.at("command").get<std::string>() != s.command) {
            throw UsageError("summary was written by '" + doc.at("command").get<std::string>() + "', not '" +
                             s.command + "'");
        }
        s.n = cfg.at("n").get<std::size_t>();
        s.k = cfg.at("k").get<std::size_t>();
        if (!cfg.at("auto_params").is_null()) {
            s.auto_params = parse_auto_params(cfg.at("auto_params").get<std::string>());
        } else if (!cfg.at("params").is_null()) {
            const auto& params = cfg.at("params");
            s.p = params.at("p").get<double>();
            s.c = params.at("c").get<double>();
            s.lambda_m = parse_u64_text(params.at("lambda_m"), "lambda_m");
            s.lambda_c = parse_u64_text(params.at("lambda_c"), "lambda_c");
        }
        if (cfg.contains("trials")) {
            s.trials = parse_u64_text(cfg.at("trials"), "trials");
        }
        if (cfg.contains("seed")) {
            s.seed = parse_u64_text(cfg.at("seed"), "seed");
        }
        if (cfg.contains("budget")) {
            s.budget = parse_u64_text(cfg.at("budget"), "budget");
        }
        if (cfg.contains("start")) {
            s.start = cfg.at("start").get<std::string>();
        }
        if (cfg.contains("ea_rate") && !cfg.at("ea_rate").is_null()) {
            s.ea_rate = cfg.at("ea_rate").get<double>();
        }
        if (cfg.contains("bounds")) {
            s.bounds = cfg.at("bounds").get<bool>();
        }
        if (cfg.contains("experiment")) {
            s.experiment = cfg.at("experiment").get<std::string>();
        }
        if (cfg.contains("grid")) {
            const auto& grid = cfg.at("grid");
            s.grid.n = grid.at("n").get<std::vector<std::size_t>>();
            s.grid.k = grid.at("k").get<std::vector<std::size_t>>();
            s.grid.p = grid.at("p").get<std::vector<double>>();
            s.grid.c = grid.at("c").get<std::vector<double>>();
            const auto u64s = [&](const char* key) {
                std::vector<std::uint64_t> values;
                for (const auto& v : grid.at(key)) {
                    values.push_back(parse_u64_text(v, key));
                }
                return values;
            };
            s.grid.lambda = u64s("lambda");
            s.grid.lambda_m = u64s("lambda_m");
            s.grid.lambda_c = u64s("lambda_c");
        }
        if (cfg.contains("axis") && !cfg.at("axis").is_null()) {
            s.axis = cfg.at("axis").get<std::string>();
        }
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError("malformed summary " + path + ": " + e.what());
    }
}

inline json summary_header(const Settings& s) {
    json out;
    out["version"] = OLLGA_VERSION;
    out["command"] = s.command;
    out["base_seed"] = std::to_string(s.seed);
    return out;
}

inline std::optional<theory::BoundReport> try_bounds(const JumpProblem& problem, const std::optional<GaParams>& params) {
    if (!params) {
        return std::nullopt;
    }
    return theory::bound_report(problem, *params);
}

// ---------------------------------------------------------------------------
// Commands

inline experiments::ExperimentConfig base_config(const Settings& s, const JumpProblem& problem) {
    experiments::ExperimentConfig config;
    config.problem = problem;
    config.params = resolve_params_choice(s, problem);
    config.start = parse_start(s);
    config.trials = s.trials;
    config.base_seed = s.seed;
    config.threads = thread_limit();
    return config;
}

inline void run_theory(const Settings& s) {
    const JumpProblem problem = make_problem(s);
    experiments::ExperimentConfig config;
    config.problem = problem;
    config.params = resolve_params_choice(s, problem);
    const GaParams params = experiments::resolve_params(config);
    json summary = summary_header(s);
    json cfg;
    cfg["n"] = problem.n();
    cfg["k"] = problem.k();
    cfg["auto_params"] = s.auto_params ? json(auto_params_name(*s.auto_params)) : json(nullptr);
    cfg["params"] = params_json(params);
    summary["config"] = cfg;
    summary["params"] = params_json(params);
    summary["bounds"] = bounds_json(theory::bound_report(problem, params));
    prepare_output_dir(s.out);
    write_file(std::filesystem::path(s.out) / "summary.json", summary.dump(2) + "\n");
}

inline void run_single(const Settings& s) {
    const JumpProblem problem = make_problem(s);
    auto config = base_config(s, problem);
    const auto kind = experiment_kind(s.command);
    const std::optional<GaParams> params = experiments::resolve_params(config);
    config.budget = s.budget.value_or(default_budget(problem, params, std::nullopt,
                                                     kind == experiments::ExperimentKind::escape));
    const auto result = experiments::run_experiment(config, kind);

    json summary = summary_header(s);
    summary["config"] = config_json(s, config, params, config.budget);
    summary["params"] = params_json(*result.params);
    summary["iterations"] = stats_json(result.iterations);
    summary["evaluations"] = stats_json(result.evaluations);
    if (s.bounds || kind == experiments::ExperimentKind::escape) {
        summary["bounds"] = bounds_json(theory::bound_report(problem, *result.params));
    }
    prepare_output_dir(s.out);
    write_file(std::filesystem::path(s.out) / "records.csv", records_csv(result.records, result.seeds));
    write_file(std::filesystem::path(s.out) / "summary.json", summary.dump(2) + "\n");
}

inline void run_compare(const Settings& s) {
    const JumpProblem problem = make_problem(s);
    auto config_ga = base_config(s, problem);
    const std::optional<GaParams> params = experiments::resolve_params(config_ga);
    auto config_ea = config_ga;
    config_ea.algorithm = experiments::Algorithm::opoea;
    config_ea.opoea_rate = s.ea_rate;
    const double ea_rate = experiments::resolve_opoea_rate(config_ea);
    const bool escape = std::holds_alternative<LocalOptimumStart>(config_ga.start);
    const std::uint64_t budget = s.budget.value_or(default_budget(problem, params, ea_rate, escape));
    config_ga.budget = budget;
    config_ea.budget = budget;
    const auto kind = escape ? experiments::ExperimentKind::escape : experiments::ExperimentKind::full;
    const auto ga = experiments::run_experiment(config_ga, kind);
    const auto ea = experiments::run_experiment(config_ea, kind);
    const auto cmp = experiments::compare_stats(ga.evaluations, ea.evaluations);

    json summary = summary_header(s);
    summary["config"] = config_json(s, config_ga, params, budget);
    summary["params"] = params_json(*params);
    summary["ea_rate"] = ea_rate;
    summary["ga"] = {{"iterations", stats_json(ga.iterations)}, {"evaluations", stats_json(ga.evaluations)}};
    summary["ea"] = {{"iterations", stats_json(ea.iterations)}, {"evaluations", stats_json(ea.evaluations)}};
    summary["ratio"] = cmp.ratio;
    summary["ratio_std_error"] = cmp.ratio_std_error;
    summary["reliable"] = cmp.reliable;
    if (escape) {
        json exact;
        try {
            const double log_ga = theory::escape_time_exact(problem, *params).log_evals;
            const double log_ea = theory::opoea_escape_time(problem, ea_rate).log_evals;
            put_log_value(exact, "exact_ratio", log_ea - log_ga);
        } catch (const std::exception&) {
            put_null_value(exact, "exact_ratio");
        }
        summary["exact"] = exact;
    }
    if (s.bounds || escape) {
        summary["bounds"] = bounds_json(theory::bound_report(problem, *params));
    }
    prepare_output_dir(s.out);
    write_file(std::filesystem::path(s.out) / "records.csv", records_csv(ga.records, ga.seeds));
    write_file(std::filesystem::path(s.out) / "records_ea.csv", records_csv(ea.records, ea.seeds));
    write_file(std::filesystem::path(s.out) / "summary.json", summary.dump(2) + "\n");
}

inline double axis_value(const experiments::SweepCell& cell, const std::string& axis) {
    if (axis == "n") {
        return static_cast<double>(cell.coordinates.n);
    }
    if (axis == "k") {
        return static_cast<double>(cell.coordinates.k);
    }
    return static_cast<double>(cell.coordinates.lambda_m.value_or(0));
}

inline void check_axis(const Settings& s) {
    if (!s.axis) {
        return;
    }
    const auto& g = s.grid;
    const std::string& axis = *s.axis;
    std::size_t axis_size = 0;
    if (axis == "n") {
        axis_size = g.n.size();
    } else if (axis == "k") {
        axis_size = g.k.size();
    } else if (axis == "lambda") {
        axis_size = g.lambda.size();
    } else {
        throw UsageError("--axis must be n, lambda or k (got " + axis + ")");
    }
    if (axis_size == 0) {
        throw UsageError("--axis " + axis + " is not varied by the sweep");
    }
    const auto distinct = [](auto values) {
        std::sort(values.begin(), values.end());
        return std::adjacent_find(values.begin(), values.end()) == values.end();
    };
    if (!(axis == "n" ? distinct(g.n) : axis == "k" ? distinct(g.k) : distinct(g.lambda))) {
        throw UsageError("--axis " + axis + " values must be distinct");
    }
    const std::size_t others = std::max({axis == "n" ? 0 : g.n.size(), axis == "k" ? 0 : g.k.size(), g.p.size(),
                                         g.c.size(), axis == "lambda" ? 0 : g.lambda.size(), g.lambda_m.size(),
                                         g.lambda_c.size()});
    if (others > 1) {
        throw UsageError("--axis " + axis + " requires every other sweep axis to hold a single value");
    }
}

inline void run_sweep(const Settings& s) {
    const auto kind = experiment_kind(s.experiment);
    check_axis(s);
    Settings templ_settings = s;
    templ_settings.n = s.n ? s.n : (s.grid.n.empty() ? std::nullopt : std::optional(s.grid.n.front()));
    templ_settings.k = s.k ? s.k : (s.grid.k.empty() ? std::nullopt : std::optional(s.grid.k.front()));
    const JumpProblem problem = make_problem(templ_settings);
    auto templ = base_config(templ_settings, problem);
    if (kind == experiments::ExperimentKind::reach_local && !s.auto_params && !has_explicit_params(s)) {
        // an auto template makes the sweep derive reach-local parameters per cell
        templ.params = theory::AutoParamsMode::escape;
    }
    templ.budget = s.budget.value_or(100'000'000);

    const std::filesystem::path out(s.out);
    prepare_output_dir(out);
    prepare_output_dir(out / "records");
    json cells = json::array();
    std::vector<PlotRow> rows;
    std::size_t index = 0;
    const auto on_cell = [&](const experiments::SweepCell& cell) {
        char name[32];
        std::snprintf(name, sizeof name, "cell_%04zu.csv", index);
        json entry;
        entry["cell"] = index;
        entry["n"] = cell.coordinates.n;
        entry["k"] = cell.coordinates.k;
        entry["params"] = cell.params ? params_json(*cell.params) : json(nullptr);
        if (!cell.error.empty()) {
            entry["error"] = cell.error;
            std::cerr << "cell " << index << ": error: " << cell.error << '\n';
        } else {
            entry["error"] = nullptr;
            entry["records"] = std::string("records/") + name;
            entry["iterations"] = stats_json(cell.result->iterations);
            entry["evaluations"] = stats_json(cell.result->evaluations);
            write_file(out / "records" / name, records_csv(cell.result->records, cell.result->seeds));
            std::cerr << "cell " << index << ": n=" << cell.coordinates.n << " k=" << cell.coordinates.k
                      << " mean_evals=" << (cell.result->evaluations.mean_defined
                                                ? format_double(cell.result->evaluations.mean)
                                                : std::string("undefined"))
                      << '\n';
        }
        entry["bounds"] = cell.bounds ? bounds_json(*cell.bounds) : json(nullptr);
        if (s.axis) {
            PlotRow row;
            row.x = axis_value(cell, *s.axis);
            if (cell.result && cell.result->evaluations.mean_defined) {
                row.mean_evals = cell.result->evaluations.mean;
                row.se_evals = cell.result->evaluations.std_error;
            }
            if (cell.bounds && cell.bounds->exact_time && kind == experiments::ExperimentKind::escape) {
                row.exact_evals = cell.bounds->exact_time->evals();
            }
            if (cell.bounds && cell.bounds->runtime_bound_conservative &&
                kind == experiments::ExperimentKind::escape) {
                row.bound_evals = cell.bounds->runtime_bound_conservative->evals();
            }
            rows.push_back(row);
        }
        cells.push_back(entry);
        ++index;
    };
    try {
        (void)experiments::sweep(s.grid, templ, kind, experiments::default_sweep_cell_limit, on_cell);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    json summary = summary_header(s);
    summary["config"] = config_json(s, templ, std::nullopt, templ.budget);
    summary["cells"] = cells;
    write_file(out / "summary.json", summary.dump(2) + "\n");
    if (s.axis) {
        write_file(out / "plotdata.csv", plotdata_csv(rows));
    }
}

// ---------------------------------------------------------------------------
// Entry point

struct Flags {
    std::size_t n = 0;
    std::size_t k = 0;
    double p = 0.0;
    double c = 0.0;
    std::uint64_t lambda_m = 0;
    std::uint64_t lambda_c = 0;
    std::string auto_params;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::uint64_t budget = 0;
    std::string start;
    std::string out;
    std::string from_summary;
    double ea_rate = 0.0;
    std::string experiment;
    std::string axis;
    experiments::SweepGrid grid;
};

struct Registered {
    std::vector<std::pair<std::string, CLI::Option*>> options;

    [[nodiscard]] bool given(const std::string& name) const {
        for (const auto& [key, opt] : options) {
            if (key == name) {
                return opt->count() > 0;
            }
        }
        return false;
    }
};

inline Registered register_flags(CLI::App* cmd, Flags& f, bool experiment, bool sweep, bool compare) {
    Registered r;
    const auto add = [&](const std::string& name, auto& target, const std::string& help) {
        r.options.emplace_back(name, cmd->add_option("--" + name, target, help));
    };
    add("n", f.n, "problem size");
    add("k", f.k, "jump size");
    add("p", f.p, "mutation rate");
    add("c", f.c, "crossover bias");
    add("lambda-m", f.lambda_m, "number of mutants");
    add("lambda-c", f.lambda_c, "number of crossover offspring");
    add("auto-params", f.auto_params, "escape or full");
    add("out", f.out, "output directory");
    add("from-summary", f.from_summary, "reuse the config of a summary.json");
    if (experiment) {
        add("trials", f.trials, "number of trials");
        add("seed", f.seed, "base seed");
        add("budget", f.budget, "evaluation budget per trial");
        add("start", f.start, "local or random");
        r.options.emplace_back("bounds", cmd->add_flag("--bounds", "attach the bound report"));
    }
    if (compare) {
        add("ea-rate", f.ea_rate, "(1+1) EA mutation rate, default k/n");
    }
    if (sweep) {
        add("experiment", f.experiment, "escape, run or reach-local");
        add("axis", f.axis, "plot axis: n, lambda or k");
        r.options.emplace_back("sweep-n", cmd->add_option("--sweep-n", f.grid.n)->delimiter(','));
        r.options.emplace_back("sweep-k", cmd->add_option("--sweep-k", f.grid.k)->delimiter(','));
        r.options.emplace_back("sweep-p", cmd->add_option("--sweep-p", f.grid.p)->delimiter(','));
        r.options.emplace_back("sweep-c", cmd->add_option("--sweep-c", f.grid.c)->delimiter(','));
        r.options.emplace_back("sweep-lambda", cmd->add_option("--sweep-lambda", f.grid.lambda)->delimiter(','));
        r.options.emplace_back("sweep-lambda-m",
                               cmd->add_option("--sweep-lambda-m", f.grid.lambda_m)->delimiter(','));
        r.options.emplace_back("sweep-lambda-c",
                               cmd->add_option("--sweep-lambda-c", f.grid.lambda_c)->delimiter(','));
    }
    return r;
}

inline Settings merge(const std::string& command, const Flags& f, const Registered& r) {
    Settings s;
    s.command = command;
    if (r.given("from-summary")) {
        load_summary(s, f.from_summary);
    }
    if (r.given("n")) s.n = f.n;
    if (r.given("k")) s.k = f.k;
    const bool explicit_params = r.given("p") || r.given("c") || r.given("lambda-m") || r.given("lambda-c");
    if (explicit_params) {
        s.auto_params.reset();
    }
    if (r.given("p")) s.p = f.p;
    if (r.given("c")) s.c = f.c;
    if (r.given("lambda-m")) s.lambda_m = f.lambda_m;
    if (r.given("lambda-c")) s.lambda_c = f.lambda_c;
    if (r.given("auto-params")) {
        s.auto_params = parse_auto_params(f.auto_params);
        if (explicit_params) {
            std::cerr << "warning: --auto-params overrides --p, --c, --lambda-m and --lambda-c\n";
            s.p.reset();
            s.c.reset();
            s.lambda_m.reset();
            s.lambda_c.reset();
        }
    }
    if (r.given("trials")) s.trials = f.trials;
    if (r.given("seed")) s.seed = f.seed;
    if (r.given("budget")) s.budget = f.budget;
    if (r.given("start")) s.start = f.start;
    if (r.given("out")) s.out = f.out;
    if (r.given("bounds")) s.bounds = true;
    if (r.given("ea-rate")) s.ea_rate = f.ea_rate;
    if (r.given("experiment")) s.experiment = f.experiment;
    if (r.given("axis")) s.axis = f.axis;
    if (r.given("sweep-n")) s.grid.n = f.grid.n;
    if (r.given("sweep-k")) s.grid.k = f.grid.k;
    if (r.given("sweep-p")) s.grid.p = f.grid.p;
    if (r.given("sweep-c")) s.grid.c = f.grid.c;
    if (r.given("sweep-lambda")) s.grid.lambda = f.grid.lambda;
    if (r.given("sweep-lambda-m")) s.grid.lambda_m = f.grid.lambda_m;
    if (r.given("sweep-lambda-c")) s.grid.lambda_c = f.grid.lambda_c;
    return s;
}

/// Runs one command line (argv excluding the program name). Returns 0 on
/// success and 2 on usage or domain errors after printing one line to `err`.
inline int execute(const std::vector<std::string>& args, std::ostream& err = std::cerr) {
    CLI::App app{"ollga: experiments with the (1+(lambda,lambda)) GA on Jump_k", "ollga"};
    app.set_version_flag("--version", OLLGA_VERSION);
    app.require_subcommand(1, 1);
    Flags flags;
    struct Command {
        const char* name;
        const char* help;
        bool experiment;
        bool sweep;
        bool compare;
    };
    const std::vector<Command> commands{
        {"theory", "exact escape probability, bounds and parameter checks", false, false, false},
        {"escape", "escape experiment from the plateau", true, false, false},
        {"run", "full optimization from a random start", true, false, false},
        {"reach-local", "iterations until the parent reaches the plateau", true, false, false},
        {"sweep", "grid of experiments with plot data", true, true, false},
        {"compare", "GA against the (1+1) EA", true, false, true},
    };
    std::vector<CLI::App*> apps;
    std::vector<Registered> registered;
    for (const auto& cmd : commands) {
        apps.push_back(app.add_subcommand(cmd.name, cmd.help));
        registered.push_back(register_flags(apps.back(), flags, cmd.experiment, cmd.sweep, cmd.compare));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::CallForVersion&) {
        std::cout << OLLGA_VERSION << '\n';
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "ollga: error: " << e.what() << '\n';
        return exit_usage;
    }

    for (std::size_t i = 0; i < commands.size(); ++i) {
        if (!apps[i]->parsed()) {
            continue;
        }
        try {
            const std::string name = commands[i].name;
            const Settings settings = merge(name, flags, registered[i]);
            if (name == "theory") {
                run_theory(settings);
            } else if (name == "sweep") {
                run_sweep(settings);
            } else if (name == "compare") {
                run_compare(settings);
            } else {
                run_single(settings);
            }
            return exit_ok;
        } catch (const std::exception& e) {
            std::string message = e.what();
            std::replace(message.begin(), message.end(), '\n', ' ');
            err << "ollga: error: " << message << '\n';
            return exit_usage;
        }
    }
    err << "ollga: error: a command is required\n";
    return exit_usage;
}

inline int execute(int argc, const char* const* argv, std::ostream& err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return execute(args, err);
}

}  // namespace ollga::cli
