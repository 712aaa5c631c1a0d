#pragma once

/// @file engine.hpp
/// @brief The (1+(lambda,lambda)) GA with independent parameters p, c, lambda_M,
/// lambda_C, and the (1+1) EA baseline.
///
/// Runtime accounting: the start point costs one evaluation, every GA iteration
/// costs exactly lambda_M + lambda_C, and a run ends as soon as the optimum is
/// sampled by any offspring, not when it is accepted as the parent.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <ollga/core.hpp>
#include <ollga/rng.hpp>

namespace ollga {

struct GaParams {
    double p = 0.0;
    double c = 0.0;
    std::uint64_t lambda_m = 1;
    std::uint64_t lambda_c = 1;

    [[nodiscard]] std::uint64_t evaluations_per_iteration() const noexcept { return lambda_m + lambda_c; }

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("mutation rate p must be in [0, 1]");
        }
        if (!(c >= 0.0 && c <= 1.0)) {
            throw std::invalid_argument("crossover bias c must be in [0, 1]");
        }
        if (lambda_m < 1 || lambda_c < 1) {
            throw std::invalid_argument("population sizes lambda_m and lambda_c must be >= 1");
        }
    }

    friend bool operator==(const GaParams&, const GaParams&) = default;
};

/// Round half-up to an integer population size, never below one.
[[nodiscard]] inline std::uint64_t round_population(double lambda) {
    if (!(lambda < 1.0)) {
        return static_cast<std::uint64_t>(std::floor(lambda + 0.5));
    }
    return 1;
}

struct TrajectoryPoint {
    std::uint64_t iteration = 0;
    std::int64_t parent_fitness = 0;

    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct RunOutcome {
    std::uint64_t iterations = 0;
    std::uint64_t evaluations = 0;
    bool hit_optimum = false;
    /// True once the run's stop condition was met (the optimum, or the plateau
    /// for reach-local runs); false means the budget ran out.
    bool reached_target = false;
    std::int64_t final_fitness = 0;
    std::optional<std::uint64_t> first_hit_evaluation;
    std::optional<std::vector<TrajectoryPoint>> trajectory;

    friend bool operator==(const RunOutcome&, const RunOutcome&) = default;
};

struct RandomStart {};
struct LocalOptimumStart {};
using StartPoint = std::variant<RandomStart, LocalOptimumStart, BitString>;

enum class StopCondition {
    optimum_sampled,
    /// Stop when the parent first has at least n - k ones (or the optimum is sampled).
    parent_reaches_plateau,
};

struct RunOptions {
    std::uint64_t budget = 1;
    StopCondition stop = StopCondition::optimum_sampled;
    bool record_trajectory = false;
};

[[nodiscard]] inline BitString resolve_start(const JumpProblem& problem, const StartPoint& start, RngStream& rng) {
    if (std::holds_alternative<RandomStart>(start)) {
        return random_bit_string(problem.n(), rng);
    }
    if (std::holds_alternative<LocalOptimumStart>(start)) {
        return make_local_optimum(problem, rng);
    }
    const auto& explicit_start = std::get<BitString>(start);
    if (explicit_start.size() != problem.n()) {
        throw std::invalid_argument("start point length does not match problem size");
    }
    return explicit_start;
}

/// Mutation strength ell ~ Bin(n, p).
[[nodiscard]] inline std::size_t sample_ell(std::size_t n, double p, RngStream& rng) {
    return static_cast<std::size_t>(rng.binomial(n, p));
}

/// Copy of x with exactly `ell` positions flipped, the positions a uniform ell-subset.
[[nodiscard]] inline BitString mutate_exact(const BitString& x, std::size_t ell, RngStream& rng) {
    if (ell > x.size()) {
        throw std::invalid_argument("ell=" + std::to_string(ell) + " exceeds string length " +
                                    std::to_string(x.size()));
    }
    BitString y = x;
    const std::size_t n = x.size();
    // Floyd's sampling; a position is already chosen iff it differs from x.
    for (std::size_t j = n - ell; j < n; ++j) {
        const auto t = static_cast<std::size_t>(rng.uniform_below(j + 1));
        y.flip(y[t] != x[t] ? j : t);
    }
    return y;
}

/// Biased crossover: where x and x_prime differ, take x_prime's bit with
/// probability c, one coin per differing position in ascending order.
[[nodiscard]] inline BitString crossover(const BitString& x, const BitString& x_prime, double c, RngStream& rng) {
    if (x.size() != x_prime.size()) {
        throw std::invalid_argument("crossover requires parents of equal length");
    }
    if (c <= 0.0) {
        return x;
    }
    if (c >= 1.0) {
        return x_prime;
    }
    BitString y = x;
    for_each_difference(x, x_prime, [&](std::size_t i) {
        if (rng.bernoulli(c)) {
            y.flip(i);
        }
    });
    return y;
}

namespace detail {

/// Running argmax with uniform tie-breaking (reservoir sampling over ties).
class ArgmaxSelector {
public:
    /// Returns true when the candidate becomes the current winner.
    bool offer(std::int64_t fitness, RngStream& rng) {
        if (ties_ == 0 || fitness > best_) {
            best_ = fitness;
            ties_ = 1;
            return true;
        }
        if (fitness == best_) {
            ++ties_;
            return rng.uniform_below(ties_) == 0;
        }
        return false;
    }

    [[nodiscard]] std::int64_t best() const noexcept { return best_; }

private:
    std::int64_t best_ = 0;
    std::uint64_t ties_ = 0;
};

struct NoObserver {
    void operator()(const BitString&, std::int64_t) const noexcept {}
};

}  // namespace detail

struct MutationPhaseResult {
    BitString x_prime;
    std::int64_t x_prime_fitness = 0;
    std::size_t ell = 0;
    std::uint64_t evaluations = 0;
    /// 1-based index within the phase of the first mutant equal to the optimum.
    std::optional<std::uint64_t> first_optimum;
};

/// Creates lambda_m mutants at a common radius ell ~ Bin(n, p) and returns the
/// fittest one. `observer(mutant, fitness)` sees every mutant in creation order.
template <typename Observer = detail::NoObserver>
[[nodiscard]] MutationPhaseResult mutation_phase(const BitString& x, const JumpProblem& problem,
                                                 const GaParams& params, RngStream& rng,
                                                 Observer&& observer = {}) {
    MutationPhaseResult result;
    result.ell = sample_ell(problem.n(), params.p, rng);
    detail::ArgmaxSelector selector;
    for (std::uint64_t i = 0; i < params.lambda_m; ++i) {
        BitString mutant = mutate_exact(x, result.ell, rng);
        const std::size_t ones = one_max(mutant);
        const std::int64_t fitness = jump_fitness_of_ones(problem, ones);
        ++result.evaluations;
        if (ones == problem.n() && !result.first_optimum) {
            result.first_optimum = result.evaluations;
        }
        observer(std::as_const(mutant), fitness);
        if (selector.offer(fitness, rng)) {
            result.x_prime = std::move(mutant);
        }
    }
    result.x_prime_fitness = selector.best();
    return result;
}

struct CrossoverPhaseResult {
    BitString y;
    std::int64_t y_fitness = 0;
    std::uint64_t evaluations = 0;
    std::optional<std::uint64_t> first_optimum;
};

/// Creates lambda_c biased crossover offspring of (x, x_prime) and returns the
/// fittest one. x_prime itself does not compete.
[[nodiscard]] inline CrossoverPhaseResult crossover_phase(const BitString& x, const BitString& x_prime,
                                                          const JumpProblem& problem, const GaParams& params,
                                                          RngStream& rng) {
    CrossoverPhaseResult result;
    detail::ArgmaxSelector selector;
    for (std::uint64_t i = 0; i < params.lambda_c; ++i) {
        BitString child = crossover(x, x_prime, params.c, rng);
        const std::size_t ones = one_max(child);
        const std::int64_t fitness = jump_fitness_of_ones(problem, ones);
        ++result.evaluations;
        if (ones == problem.n() && !result.first_optimum) {
            result.first_optimum = result.evaluations;
        }
        if (selector.offer(fitness, rng)) {
            result.y = std::move(child);
        }
    }
    result.y_fitness = selector.best();
    return result;
}

struct IterationResult {
    BitString x_next;
    std::int64_t x_next_fitness = 0;
    std::uint64_t evaluations = 0;
    bool sampled_optimum = false;
    /// 1-based evaluation index within the iteration of the first optimum sample.
    std::optional<std::uint64_t> first_optimum;
    std::size_t ell = 0;
};

/// One GA iteration from parent x whose fitness is already known.
template <typename Observer = detail::NoObserver>
[[nodiscard]] IterationResult ga_iteration(const BitString& x, std::int64_t x_fitness, const JumpProblem& problem,
                                           const GaParams& params, RngStream& rng, Observer&& observer = {}) {
    MutationPhaseResult mutation = mutation_phase(x, problem, params, rng, std::forward<Observer>(observer));
    CrossoverPhaseResult cross = crossover_phase(x, mutation.x_prime, problem, params, rng);

    IterationResult result;
    result.ell = mutation.ell;
    result.evaluations = mutation.evaluations + cross.evaluations;
    if (mutation.first_optimum) {
        result.first_optimum = mutation.first_optimum;
    } else if (cross.first_optimum) {
        result.first_optimum = mutation.evaluations + *cross.first_optimum;
    }
    result.sampled_optimum = result.first_optimum.has_value();
    if (cross.y_fitness >= x_fitness) {
        result.x_next = std::move(cross.y);
        result.x_next_fitness = cross.y_fitness;
    } else {
        result.x_next = x;
        result.x_next_fitness = x_fitness;
    }
    return result;
}

[[nodiscard]] inline IterationResult ga_iteration(const BitString& x, const JumpProblem& problem,
                                                  const GaParams& params, RngStream& rng) {
    return ga_iteration(x, jump_fitness(problem, x), problem, params, rng);
}

namespace detail {

/// Shared driver: `step(x, fitness)` performs one iteration and returns an
/// IterationResult; stop conditions and accounting live here.
template <typename Step>
RunOutcome drive(const JumpProblem& problem, BitString x, std::uint64_t cost_per_iteration,
                 const RunOptions& options, Step&& step) {
    if (options.budget < 1) {
        throw std::invalid_argument("budget must be >= 1");
    }
    RunOutcome outcome;
    std::int64_t fitness = jump_fitness(problem, x);
    outcome.evaluations = 1;
    if (options.record_trajectory) {
        outcome.trajectory.emplace().push_back({0, fitness});
    }
    const auto plateau_ones = problem.n() - problem.k();
    auto target_met = [&](std::size_t ones) {
        return options.stop == StopCondition::parent_reaches_plateau && ones >= plateau_ones;
    };

    const std::size_t start_ones = one_max(x);
    if (start_ones == problem.n()) {
        outcome.hit_optimum = true;
        outcome.first_hit_evaluation = 1;
    }
    outcome.reached_target = outcome.hit_optimum || target_met(start_ones);

    while (!outcome.reached_target && outcome.evaluations < options.budget) {
        IterationResult it = step(x, fitness);
        ++outcome.iterations;
        if (it.first_optimum) {
            outcome.hit_optimum = true;
            outcome.first_hit_evaluation = outcome.evaluations + *it.first_optimum;
        }
        outcome.evaluations += cost_per_iteration;
        x = std::move(it.x_next);
        fitness = it.x_next_fitness;
        if (options.record_trajectory) {
            outcome.trajectory->push_back({outcome.iterations, fitness});
        }
        outcome.reached_target = outcome.hit_optimum || target_met(one_max(x));
    }
    outcome.final_fitness = fitness;
    return outcome;
}

}  // namespace detail

[[nodiscard]] inline RunOutcome run_ga(const JumpProblem& problem, const GaParams& params, const StartPoint& start,
                                       const RunOptions& options, RngStream& rng) {
    params.validate();
    BitString x = resolve_start(problem, start, rng);
    return detail::drive(problem, std::move(x), params.evaluations_per_iteration(), options,
                         [&](const BitString& parent, std::int64_t parent_fitness) {
                             return ga_iteration(parent, parent_fitness, problem, params, rng);
                         });
}

[[nodiscard]] inline RunOutcome run_ga(const JumpProblem& problem, const GaParams& params, const StartPoint& start,
                                       std::uint64_t budget, RngStream& rng) {
    return run_ga(problem, params, start, RunOptions{.budget = budget}, rng);
}

/// Standard bit mutation: every position flips independently with `rate`.
[[nodiscard]] inline BitString standard_bit_mutation(const BitString& x, double rate, RngStream& rng) {
    BitString y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (rng.bernoulli(rate)) {
            y.flip(i);
        }
    }
    return y;
}

/// (1+1) EA: one offspring per iteration, accepted if not worse.
[[nodiscard]] inline RunOutcome run_opoea(const JumpProblem& problem, double mutation_rate, const StartPoint& start,
                                          const RunOptions& options, RngStream& rng) {
    if (!(mutation_rate > 0.0 && mutation_rate < 1.0)) {
        throw std::invalid_argument("(1+1) EA mutation rate must be in (0, 1)");
    }
    BitString x = resolve_start(problem, start, rng);
    return detail::drive(problem, std::move(x), 1, options, [&](const BitString& parent, std::int64_t parent_fitness) {
        IterationResult it;
        BitString child = standard_bit_mutation(parent, mutation_rate, rng);
        const std::size_t ones = one_max(child);
        const std::int64_t fitness = jump_fitness_of_ones(problem, ones);
        it.evaluations = 1;
        if (ones == problem.n()) {
            it.first_optimum = 1;
            it.sampled_optimum = true;
        }
        if (fitness >= parent_fitness) {
            it.x_next = std::move(child);
            it.x_next_fitness = fitness;
        } else {
            it.x_next = parent;
            it.x_next_fitness = parent_fitness;
        }
        return it;
    });
}

[[nodiscard]] inline RunOutcome run_opoea(const JumpProblem& problem, double mutation_rate, const StartPoint& start,
                                          std::uint64_t budget, RngStream& rng) {
    return run_opoea(problem, mutation_rate, start, RunOptions{.budget = budget}, rng);
}

}  // namespace ollga
