#pragma once

/// @file experiments.hpp
/// @brief Seeded Monte Carlo campaigns over the GA and the (1+1) EA.
///
/// Trial i always runs on RngStream(derive_seed(base_seed, i)) and results are
/// stored by trial index, so the output is a pure function of the config no
/// matter how many threads execute the trials.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include <ollga/core.hpp>
#include <ollga/engine.hpp>
#include <ollga/rng.hpp>
#include <ollga/theory.hpp>

namespace ollga::experiments {

/// splitmix64 finalizer applied to base ^ index; a bijection of 64-bit words,
/// hence injective in the trial index.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t trial_index) noexcept {
    std::uint64_t z = base_seed ^ trial_index;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct SummaryStats {
    std::uint64_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    double ci95_low = 0.0;
    double ci95_high = 0.0;
    std::uint64_t censored_count = 0;
    /// False when every trial was censored; the moments are then meaningless.
    bool mean_defined = false;
    /// False for a single sample, whose variance is reported as 0.
    bool variance_defined = false;
};

/// Sample mean, unbiased variance and a normal-approximation 95% interval.
[[nodiscard]] inline SummaryStats summarize(std::span<const double> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("summarize requires at least one sample");
    }
    SummaryStats s;
    s.count = samples.size();
    s.mean_defined = true;
    // Welford's update keeps the variance accurate for large means.
    double mean = 0.0;
    double m2 = 0.0;
    std::uint64_t i = 0;
    for (const double x : samples) {
        ++i;
        const double delta = x - mean;
        mean += delta / static_cast<double>(i);
        m2 += delta * (x - mean);
    }
    s.mean = mean;
    if (s.count > 1) {
        s.variance_defined = true;
        s.variance = m2 / static_cast<double>(s.count - 1);
        s.std_error = std::sqrt(s.variance / static_cast<double>(s.count));
    }
    s.ci95_low = s.mean - 1.96 * s.std_error;
    s.ci95_high = s.mean + 1.96 * s.std_error;
    return s;
}

enum class Algorithm { ollga, opoea };
enum class ExperimentKind { escape, full, reach_local };

using ParamsChoice = std::variant<GaParams, theory::AutoParamsMode>;

struct ExperimentConfig {
    JumpProblem problem{8, 2};
    ParamsChoice params = theory::AutoParamsMode::escape;
    StartPoint start = LocalOptimumStart{};
    std::uint64_t trials = 2000;
    std::uint64_t base_seed = 0;
    std::uint64_t budget = 100'000'000;
    Algorithm algorithm = Algorithm::ollga;
    /// (1+1) EA mutation rate; k/n when empty.
    std::optional<double> opoea_rate;
    /// Worker threads; 0 means the hardware concurrency.
    unsigned threads = 0;
    bool record_trajectory = false;
};

[[nodiscard]] inline GaParams resolve_params(const ExperimentConfig& config) {
    if (const auto* mode = std::get_if<theory::AutoParamsMode>(&config.params)) {
        return theory::optimal_params(config.problem, *mode);
    }
    GaParams params = std::get<GaParams>(config.params);
    params.validate();
    return params;
}

[[nodiscard]] inline double resolve_opoea_rate(const ExperimentConfig& config) {
    return config.opoea_rate.value_or(static_cast<double>(config.problem.k()) /
                                      static_cast<double>(config.problem.n()));
}

struct ExperimentResult {
    std::vector<RunOutcome> records;
    std::vector<std::uint64_t> seeds;
    /// Parameters the GA arm actually ran with (empty for the (1+1) EA).
    std::optional<GaParams> params;
    SummaryStats iterations;
    /// Escape runs: evaluations after the plateau start, i.e. iterations times
    /// the per-iteration cost. Full runs: index of the first optimum sample.
    /// Reach-local runs: total evaluations including the start point.
    SummaryStats evaluations;
};

namespace detail {

[[nodiscard]] inline unsigned worker_count(unsigned requested, std::uint64_t trials) {
    unsigned threads = requested != 0 ? requested : std::max(1U, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::uint64_t>(threads, trials));
}

/// Runs `trial(i)` for i in [0, trials) on a small pool, storing results by index.
template <typename Trial>
std::vector<RunOutcome> run_parallel(std::uint64_t trials, unsigned threads, Trial&& trial) {
    std::vector<RunOutcome> results(trials);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= trials) {
                return;
            }
            try {
                results[i] = trial(i);
            } catch (...) {
                const std::scoped_lock lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(trials);
            }
        }
    };
    const unsigned workers = worker_count(threads, trials);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return results;
}

[[nodiscard]] inline SummaryStats summarize_uncensored(const std::vector<RunOutcome>& records,
                                                       const std::function<double(const RunOutcome&)>& metric) {
    std::vector<double> samples;
    samples.reserve(records.size());
    std::uint64_t censored = 0;
    for (const auto& r : records) {
        if (r.reached_target) {
            samples.push_back(metric(r));
        } else {
            ++censored;
        }
    }
    SummaryStats stats;
    if (!samples.empty()) {
        stats = summarize(samples);
    }
    stats.censored_count = censored;
    return stats;
}

inline void validate_config(const ExperimentConfig& config, const std::optional<GaParams>& params) {
    if (config.trials < 1) {
        throw std::invalid_argument("trials must be >= 1");
    }
    if (params && config.budget < params->evaluations_per_iteration() + 1) {
        throw std::invalid_argument("budget must be >= lambda_m + lambda_c + 1");
    }
    if (config.budget < 1) {
        throw std::invalid_argument("budget must be >= 1");
    }
}

[[nodiscard]] inline ExperimentResult run_campaign(const ExperimentConfig& config, ExperimentKind kind) {
    ExperimentResult result;
    if (config.algorithm == Algorithm::ollga) {
        result.params = resolve_params(config);
    }
    validate_config(config, result.params);
    const double rate = resolve_opoea_rate(config);
    const RunOptions options{
        .budget = config.budget,
        .stop = kind == ExperimentKind::reach_local ? StopCondition::parent_reaches_plateau
                                                    : StopCondition::optimum_sampled,
        .record_trajectory = config.record_trajectory,
    };

    result.seeds.resize(config.trials);
    for (std::uint64_t i = 0; i < config.trials; ++i) {
        result.seeds[i] = derive_seed(config.base_seed, i);
    }
    result.records = run_parallel(config.trials, config.threads, [&](std::uint64_t i) {
        RngStream rng(result.seeds[i]);
        if (result.params) {
            return run_ga(config.problem, *result.params, config.start, options, rng);
        }
        return run_opoea(config.problem, rate, config.start, options, rng);
    });

    result.iterations = summarize_uncensored(result.records, [](const RunOutcome& r) {
        return static_cast<double>(r.iterations);
    });
    switch (kind) {
    case ExperimentKind::escape:
        result.evaluations = summarize_uncensored(result.records, [](const RunOutcome& r) {
            return static_cast<double>(r.evaluations - 1);
        });
        break;
    case ExperimentKind::full:
        result.evaluations = summarize_uncensored(result.records, [](const RunOutcome& r) {
            return static_cast<double>(r.first_hit_evaluation.value_or(r.evaluations));
        });
        break;
    case ExperimentKind::reach_local:
        result.evaluations = summarize_uncensored(result.records, [](const RunOutcome& r) {
            return static_cast<double>(r.evaluations);
        });
        break;
    }
    return result;
}

}  // namespace detail

/// Escape from a fresh uniformly random plateau point per trial.
[[nodiscard]] inline ExperimentResult run_escape_experiment(const ExperimentConfig& config) {
    if (!std::holds_alternative<LocalOptimumStart>(config.start)) {
        throw std::invalid_argument("escape experiments start on the local optimum");
    }
    return detail::run_campaign(config, ExperimentKind::escape);
}

/// Full optimization from a uniformly random start.
[[nodiscard]] inline ExperimentResult run_full_experiment(const ExperimentConfig& config) {
    if (!std::holds_alternative<RandomStart>(config.start)) {
        throw std::invalid_argument("full-run experiments start from a random point");
    }
    return detail::run_campaign(config, ExperimentKind::full);
}

/// Iterations until the parent first has at least n - k ones. Requires
/// lambda_M = lambda_C = lambda >= n/k and p = c = sqrt(k/n).
[[nodiscard]] inline ExperimentResult run_reach_local_experiment(const ExperimentConfig& config) {
    if (!std::holds_alternative<RandomStart>(config.start) && !std::holds_alternative<BitString>(config.start)) {
        throw std::invalid_argument("reach-local experiments start from a random or explicit point");
    }
    if (config.algorithm != Algorithm::ollga) {
        throw std::invalid_argument("reach-local experiments run the GA");
    }
    const GaParams params = resolve_params(config);
    const auto n = static_cast<double>(config.problem.n());
    const auto k = static_cast<double>(config.problem.k());
    const double rate = std::sqrt(k / n);
    if (params.lambda_m != params.lambda_c || static_cast<double>(params.lambda_m) * k < n) {
        throw std::invalid_argument("reach-local experiments require lambda_m = lambda_c >= n/k");
    }
    if (std::abs(params.p - rate) > 1e-9 || std::abs(params.c - rate) > 1e-9) {
        throw std::invalid_argument("reach-local experiments require p = c = sqrt(k/n)");
    }
    return detail::run_campaign(config, ExperimentKind::reach_local);
}

/// Default parameters for reach-local runs: p = c = sqrt(k/n), lambda = ceil(n/k).
[[nodiscard]] inline GaParams reach_local_params(const JumpProblem& problem) {
    const auto n = problem.n();
    const auto k = problem.k();
    const double rate = std::sqrt(static_cast<double>(k) / static_cast<double>(n));
    const std::uint64_t lambda = (n + k - 1) / k;
    return GaParams{rate, rate, lambda, lambda};
}

[[nodiscard]] inline ExperimentResult run_experiment(const ExperimentConfig& config, ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::escape:
        return run_escape_experiment(config);
    case ExperimentKind::full:
        return run_full_experiment(config);
    case ExperimentKind::reach_local:
        return run_reach_local_experiment(config);
    }
    throw std::logic_error("unknown experiment kind");
}

/// Grid values per parameter; an empty list keeps the template's value.
/// `lambda` sets lambda_M and lambda_C together.
struct SweepGrid {
    std::vector<std::size_t> n;
    std::vector<std::size_t> k;
    std::vector<double> p;
    std::vector<double> c;
    std::vector<std::uint64_t> lambda;
    std::vector<std::uint64_t> lambda_m;
    std::vector<std::uint64_t> lambda_c;
};

struct SweepCoordinates {
    std::size_t n = 0;
    std::size_t k = 0;
    std::optional<double> p;
    std::optional<double> c;
    std::optional<std::uint64_t> lambda_m;
    std::optional<std::uint64_t> lambda_c;
};

struct SweepCell {
    SweepCoordinates coordinates;
    std::optional<GaParams> params;
    std::optional<ExperimentResult> result;
    std::optional<theory::BoundReport> bounds;
    /// Non-empty when the cell was rejected; the sweep keeps going.
    std::string error;
};

inline constexpr std::size_t default_sweep_cell_limit = 10'000;

namespace detail {

template <typename T>
std::vector<std::optional<T>> axis_values(const std::vector<T>& grid) {
    if (grid.empty()) {
        return {std::nullopt};
    }
    return {grid.begin(), grid.end()};
}

}  // namespace detail

/// Runs `kind` on every cell of the Cartesian product in lexicographic order of
/// (n, k, p, c, lambda_M, lambda_C) and attaches the theory report per cell.
/// A cell overriding p, c or a population size replaces auto parameters by the
/// template's resolved parameters with that coordinate changed.
[[nodiscard]] inline std::vector<SweepCell> sweep(const SweepGrid& grid, const ExperimentConfig& templ,
                                                  ExperimentKind kind,
                                                  std::size_t cell_limit = default_sweep_cell_limit,
                                                  const std::function<void(const SweepCell&)>& on_cell = {}) {
    if (!grid.lambda.empty() && (!grid.lambda_m.empty() || !grid.lambda_c.empty())) {
        throw std::invalid_argument("sweep: lambda cannot be combined with lambda_m or lambda_c");
    }
    const auto ns = detail::axis_values(grid.n);
    const auto ks = detail::axis_values(grid.k);
    const auto ps = detail::axis_values(grid.p);
    const auto cs = detail::axis_values(grid.c);
    const auto lms = detail::axis_values(grid.lambda.empty() ? grid.lambda_m : grid.lambda);
    const auto lcs = grid.lambda.empty() ? detail::axis_values(grid.lambda_c)
                                         : std::vector<std::optional<std::uint64_t>>{std::nullopt};
    const std::size_t total = ns.size() * ks.size() * ps.size() * cs.size() * lms.size() * lcs.size();
    if (total == 0 || total > cell_limit) {
        throw std::invalid_argument("sweep has " + std::to_string(total) + " cells; limit is " +
                                    std::to_string(cell_limit));
    }

    std::vector<SweepCell> cells;
    cells.reserve(total);
    for (const auto& n : ns) {
        for (const auto& k : ks) {
            for (const auto& p : ps) {
                for (const auto& c : cs) {
                    for (const auto& lm : lms) {
                        for (const auto& lc : lcs) {
                            SweepCell cell;
                            cell.coordinates = {n.value_or(templ.problem.n()), k.value_or(templ.problem.k()), p, c,
                                                lm, grid.lambda.empty() ? lc : lm};
                            try {
                                ExperimentConfig config = templ;
                                config.problem = JumpProblem(cell.coordinates.n, cell.coordinates.k);
                                const auto& co = cell.coordinates;
                                const bool overrides = co.p || co.c || co.lambda_m || co.lambda_c;
                                if (config.algorithm == Algorithm::ollga) {
                                    if (overrides) {
                                        GaParams params = kind == ExperimentKind::reach_local &&
                                                                  std::holds_alternative<theory::AutoParamsMode>(
                                                                      config.params)
                                                              ? reach_local_params(config.problem)
                                                              : resolve_params(config);
                                        params.p = co.p.value_or(params.p);
                                        params.c = co.c.value_or(params.c);
                                        params.lambda_m = co.lambda_m.value_or(params.lambda_m);
                                        params.lambda_c = co.lambda_c.value_or(params.lambda_c);
                                        config.params = params;
                                    } else if (kind == ExperimentKind::reach_local &&
                                               std::holds_alternative<theory::AutoParamsMode>(config.params)) {
                                        config.params = reach_local_params(config.problem);
                                    }
                                    cell.params = resolve_params(config);
                                    cell.bounds = theory::bound_report(config.problem, *cell.params);
                                } else if (co.p) {
                                    config.opoea_rate = co.p;
                                }
                                cell.result = run_experiment(config, kind);
                            } catch (const std::exception& e) {
                                cell.error = e.what();
                            }
                            if (on_cell) {
                                on_cell(cell);
                            }
                            cells.push_back(std::move(cell));
                        }
                    }
                }
            }
        }
    }
    return cells;
}

struct Comparison {
    SummaryStats ga;
    SummaryStats ea;
    /// mean evaluations of the EA arm over mean evaluations of the GA arm.
    double ratio = 0.0;
    /// Delta-method standard error of the ratio.
    double ratio_std_error = 0.0;
    /// False when either arm has censored trials or an undefined mean.
    bool reliable = false;
};

[[nodiscard]] inline Comparison compare_stats(const SummaryStats& ga, const SummaryStats& ea) {
    Comparison out{ga, ea};
    out.reliable = ga.mean_defined && ea.mean_defined && ga.censored_count == 0 && ea.censored_count == 0;
    if (ga.mean_defined && ea.mean_defined && ga.mean > 0.0 && ea.mean > 0.0) {
        out.ratio = ea.mean / ga.mean;
        const double rel_ga = ga.std_error / ga.mean;
        const double rel_ea = ea.std_error / ea.mean;
        out.ratio_std_error = out.ratio * std::sqrt(rel_ga * rel_ga + rel_ea * rel_ea);
    } else {
        out.reliable = false;
    }
    return out;
}

/// Runs both arms as escape experiments (or full runs when the GA config starts
/// randomly) and compares mean evaluations.
[[nodiscard]] inline Comparison compare_baseline(const ExperimentConfig& config_ga, const ExperimentConfig& config_ea) {
    if (!(config_ga.problem == config_ea.problem)) {
        throw std::invalid_argument("compare_baseline requires the same problem in both arms");
    }
    const ExperimentKind kind =
        std::holds_alternative<RandomStart>(config_ga.start) ? ExperimentKind::full : ExperimentKind::escape;
    const ExperimentResult ga = run_experiment(config_ga, kind);
    const ExperimentResult ea = run_experiment(config_ea, kind);
    return compare_stats(ga.evaluations, ea.evaluations);
}

struct ChiSquaredFit {
    double statistic = 0.0;
    std::size_t degrees_of_freedom = 0;
    double p_value = 0.0;
};

/// Pearson chi-squared goodness of fit of positive integer samples against
/// Geometric(P) on {1, 2, ...}. Bins 1, 2, ... are kept while both the bin and
/// the remaining tail expect at least 5 samples; the tail forms the last bin.
[[nodiscard]] inline ChiSquaredFit geometric_fit(std::span<const std::uint64_t> samples, double success_probability) {
    if (samples.empty() || !(success_probability > 0.0 && success_probability <= 1.0)) {
        throw std::invalid_argument("geometric_fit needs samples and P in (0, 1]");
    }
    const auto total = static_cast<double>(samples.size());
    std::vector<double> expected;
    double tail = 1.0;
    for (;;) {
        const double bin = tail * success_probability;
        if (total * bin < 5.0 || total * (tail - bin) < 5.0) {
            break;
        }
        expected.push_back(total * bin);
        tail -= bin;
    }
    expected.push_back(total * tail);
    if (expected.size() < 2) {
        throw std::invalid_argument("geometric_fit: too few samples for two bins");
    }
    std::vector<double> observed(expected.size(), 0.0);
    for (const std::uint64_t s : samples) {
        if (s < 1) {
            throw std::invalid_argument("geometric samples start at 1");
        }
        const std::size_t bin = std::min<std::uint64_t>(s - 1, expected.size() - 1);
        observed[bin] += 1.0;
    }
    ChiSquaredFit fit;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double d = observed[i] - expected[i];
        fit.statistic += d * d / expected[i];
    }
    fit.degrees_of_freedom = expected.size() - 1;
    const boost::math::chi_squared_distribution<double> dist(static_cast<double>(fit.degrees_of_freedom));
    fit.p_value = boost::math::cdf(boost::math::complement(dist, fit.statistic));
    return fit;
}

}  // namespace ollga::experiments
