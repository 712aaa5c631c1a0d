#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include <ollga/engine.hpp>
#include <ollga/theory.hpp>

using ollga::BitString;
using ollga::GaParams;
using ollga::JumpProblem;
using ollga::RngStream;

namespace {

double three_sigma(double p, double trials) { return 3.0 * std::sqrt(p * (1.0 - p) / trials); }

BitString plateau_point(std::size_t n, std::size_t k) {
    BitString x(n, true);
    for (std::size_t i = 0; i < k; ++i) {
        x.set(i, false);
    }
    return x;
}

}  // namespace

TEST(SampleEll, DegenerateRates) {
    RngStream rng(1);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(ollga::sample_ell(50, 0.0, rng), 0U);
        EXPECT_EQ(ollga::sample_ell(50, 1.0, rng), 50U);
    }
}

TEST(SampleEll, BinomialMoments) {
    RngStream rng(12345);
    constexpr int draws = 100'000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto ell = static_cast<double>(ollga::sample_ell(100, 0.3, rng));
        sum += ell;
        sum_sq += ell * ell;
    }
    const double mean = sum / draws;
    const double variance = (sum_sq - draws * mean * mean) / (draws - 1);
    EXPECT_NEAR(mean, 30.0, 3.0 * std::sqrt(21.0 / draws));
    EXPECT_NEAR(variance, 21.0, 2.1);
}

TEST(MutateExact, ExtremesAndRange) {
    RngStream rng(3);
    const BitString x = BitString::from_string("1100101");
    EXPECT_EQ(ollga::mutate_exact(x, 0, rng), x);
    EXPECT_EQ(ollga::mutate_exact(x, 7, rng), x.complement());
    EXPECT_THROW((void)ollga::mutate_exact(x, 8, rng), std::invalid_argument);
}

TEST(MutateExact, SubsetsAreUniform) {
    RngStream rng(77);
    const BitString x(5);
    constexpr int draws = 100'000;
    std::map<std::string, int> counts;
    for (int i = 0; i < draws; ++i) {
        const BitString y = ollga::mutate_exact(x, 2, rng);
        ASSERT_EQ(ollga::hamming(x, y), 2U);
        ++counts[y.to_string()];
    }
    ASSERT_EQ(counts.size(), 10U);
    for (const auto& [subset, count] : counts) {
        EXPECT_NEAR(count / static_cast<double>(draws), 0.1, three_sigma(0.1, draws)) << subset;
    }
}

TEST(MutationPhase, SingleMutantWins) {
    RngStream rng(5);
    const JumpProblem problem(16, 2);
    const GaParams params{0.3, 0.3, 1, 1};
    std::vector<BitString> seen;
    const auto result = ollga::mutation_phase(plateau_point(16, 2), problem, params, rng,
                                              [&](const BitString& m, std::int64_t) { seen.push_back(m); });
    ASSERT_EQ(seen.size(), 1U);
    EXPECT_EQ(result.x_prime, seen.front());
    EXPECT_EQ(result.evaluations, 1U);
}

TEST(MutationPhase, ZeroRadiusCopiesParent) {
    RngStream rng(5);
    const JumpProblem problem(16, 2);
    const BitString x = plateau_point(16, 2);
    const auto result = ollga::mutation_phase(x, problem, GaParams{0.0, 0.5, 5, 5}, rng);
    EXPECT_EQ(result.ell, 0U);
    EXPECT_EQ(result.x_prime, x);
    EXPECT_EQ(result.evaluations, 5U);
}

TEST(MutationPhase, OptimumProbabilityGivenRadiusK) {
    // Conditional on ell = k from the plateau, each mutant is the optimum with
    // probability 1/C(n,k); the phase finds it with 1 - (1 - 1/C(n,k))^lambda_M.
    RngStream rng(31337);
    const JumpProblem problem(6, 2);
    const GaParams params{1.0 / 3.0, 0.5, 3, 1};
    const BitString x = plateau_point(6, 2);
    int conditioned = 0;
    int hits = 0;
    for (int i = 0; i < 1'000'000; ++i) {
        const auto result = ollga::mutation_phase(x, problem, params, rng);
        if (result.ell != 2) {
            continue;
        }
        ++conditioned;
        hits += ollga::is_global_optimum(problem, result.x_prime) ? 1 : 0;
    }
    const double expected = 1.0 - std::pow(14.0 / 15.0, 3.0);
    EXPECT_NEAR(hits / static_cast<double>(conditioned), expected, three_sigma(expected, conditioned));
}

TEST(Crossover, BiasExtremesAndLength) {
    RngStream rng(8);
    const BitString x = BitString::from_string("000111");
    const BitString xp = BitString::from_string("110100");
    EXPECT_EQ(ollga::crossover(x, xp, 0.0, rng), x);
    EXPECT_EQ(ollga::crossover(x, xp, 1.0, rng), xp);
    EXPECT_THROW((void)ollga::crossover(x, BitString(5), 0.5, rng), std::invalid_argument);
}

TEST(Crossover, TakesDifferingBitsWithProbabilityC) {
    RngStream rng(4242);
    const BitString x(40);
    BitString xp(40);
    for (std::size_t i = 0; i < 40; i += 3) {
        xp.set(i, true);
    }
    const auto H = static_cast<double>(ollga::hamming(x, xp));
    constexpr double c = 0.3;
    constexpr int draws = 100'000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
        const BitString y = ollga::crossover(x, xp, c, rng);
        // agreeing positions never change
        ASSERT_EQ(ollga::hamming(y, x) + ollga::hamming(y, xp), ollga::hamming(x, xp));
        sum += static_cast<double>(ollga::hamming(y, x));
    }
    EXPECT_NEAR(sum / draws, c * H, 3.0 * std::sqrt(H * c * (1 - c) / draws));
}

TEST(CrossoverPhase, SingleOffspringAndZeroBias) {
    const JumpProblem problem(8, 2);
    const BitString x = plateau_point(8, 2);
    const BitString xp = BitString::from_string("11001111");
    RngStream a(9);
    RngStream b(9);
    const auto result = ollga::crossover_phase(x, xp, problem, GaParams{0.5, 0.5, 1, 1}, a);
    EXPECT_EQ(result.y, ollga::crossover(x, xp, 0.5, b));
    EXPECT_EQ(result.evaluations, 1U);

    RngStream c(10);
    EXPECT_EQ(ollga::crossover_phase(x, xp, problem, GaParams{0.5, 0.0, 1, 7}, c).y, x);
}

TEST(CrossoverPhase, OptimumProbabilityFromGoodWinner) {
    // x on the plateau, x' flips both zero-bits and two one-bits (ell = 4).
    const JumpProblem problem(6, 2);
    const BitString x = BitString::from_string("001111");
    const BitString xp = BitString::from_string("110011");
    const GaParams params{0.5, 0.5, 1, 2};
    RngStream rng(555);
    constexpr int trials = 1'000'000;
    int hits = 0;
    for (int i = 0; i < trials; ++i) {
        hits += ollga::crossover_phase(x, xp, problem, params, rng).first_optimum ? 1 : 0;
    }
    const double expected = 1.0 - std::pow(1.0 - 1.0 / 16.0, 2.0);
    EXPECT_NEAR(hits / static_cast<double>(trials), expected, three_sigma(expected, trials));
}

TEST(GaIteration, OptimumParentStaysAndCostIsFixed) {
    const JumpProblem problem(12, 3);
    const GaParams params{0.4, 0.4, 3, 5};
    RngStream rng(1);
    const BitString opt(12, true);
    for (int i = 0; i < 200; ++i) {
        const auto it = ollga::ga_iteration(opt, problem, params, rng);
        EXPECT_EQ(it.x_next, opt);
        EXPECT_EQ(it.evaluations, 8U);
    }
}

TEST(GaIteration, AcceptsEqualFitness) {
    // p = c = 1 with single offspring: y is the complement, which ties with x.
    const JumpProblem problem(8, 2);
    const BitString x = BitString::from_string("11110000");
    RngStream rng(2);
    const auto it = ollga::ga_iteration(x, problem, GaParams{1.0, 1.0, 1, 1}, rng);
    EXPECT_EQ(it.x_next, x.complement());
    EXPECT_EQ(it.x_next_fitness, ollga::jump_fitness(problem, x));
}

TEST(RunGa, StartingAtOptimum) {
    RngStream rng(3);
    const JumpProblem problem(10, 2);
    const auto out = ollga::run_ga(problem, GaParams{0.4, 0.4, 3, 3}, BitString(10, true), 1000, rng);
    EXPECT_TRUE(out.hit_optimum);
    EXPECT_EQ(out.iterations, 0U);
    EXPECT_EQ(out.evaluations, 1U);
    EXPECT_EQ(out.first_hit_evaluation, 1U);
}

TEST(RunGa, DeterministicAccountingAndBudget) {
    const JumpProblem problem(20, 3);
    const GaParams params{0.3, 0.3, 4, 6};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const ollga::RunOptions options{.budget = 500, .record_trajectory = true};
        RngStream a(seed);
        RngStream b(seed);
        const auto first = ollga::run_ga(problem, params, ollga::RandomStart{}, options, a);
        const auto second = ollga::run_ga(problem, params, ollga::RandomStart{}, options, b);
        ASSERT_EQ(first, second);
        EXPECT_EQ(first.evaluations, 1 + first.iterations * 10);
        EXPECT_LE(first.evaluations, 500U + 10U);
        if (first.hit_optimum) {
            EXPECT_LE(*first.first_hit_evaluation, first.evaluations);
            EXPECT_EQ(first.final_fitness, 23);
        } else {
            EXPECT_GE(first.evaluations, 500U);
        }
        const auto& traj = *first.trajectory;
        ASSERT_EQ(traj.size(), first.iterations + 1);
        for (std::size_t i = 1; i < traj.size(); ++i) {
            EXPECT_GE(traj[i].parent_fitness, traj[i - 1].parent_fitness);
        }
    }
}

TEST(RunGa, EscapeTimeMatchesExactProbability) {
    const JumpProblem problem(12, 2);
    const GaParams params = ollga::theory::optimal_params(problem, ollga::theory::AutoParamsMode::escape);
    const double expected = 1.0 / ollga::theory::escape_probability_exact(problem, params).value();
    constexpr int runs = 2000;
    double sum = 0.0;
    double sum_sq = 0.0;
    RngStream seeds(1000);
    for (int i = 0; i < runs; ++i) {
        RngStream rng(seeds.next_u64());
        const auto out = ollga::run_ga(problem, params, ollga::LocalOptimumStart{}, 1'000'000, rng);
        ASSERT_TRUE(out.hit_optimum);
        const auto iters = static_cast<double>(out.iterations);
        sum += iters;
        sum_sq += iters * iters;
    }
    const double mean = sum / runs;
    const double se = std::sqrt((sum_sq - runs * mean * mean) / (runs - 1) / runs);
    EXPECT_NEAR(mean, expected, 3.0 * se);
}

TEST(RunOpoea, StartingAtOptimum) {
    RngStream rng(4);
    const auto out = ollga::run_opoea(JumpProblem(10, 2), 0.2, BitString(10, true), 100, rng);
    EXPECT_EQ(out.iterations, 0U);
    EXPECT_EQ(out.evaluations, 1U);
    EXPECT_THROW((void)ollga::run_opoea(JumpProblem(10, 2), 1.0, BitString(10, true), 100, rng),
                 std::invalid_argument);
}

namespace {

struct Moments {
    double mean;
    double se;
};

Moments opoea_escape_iterations(const JumpProblem& problem, double rate, const ollga::StartPoint& start, int runs) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < runs; ++i) {
        RngStream rng(77'000 + i);
        const auto out = ollga::run_opoea(problem, rate, start, 100'000'000, rng);
        EXPECT_TRUE(out.hit_optimum);
        EXPECT_EQ(out.evaluations, out.iterations + 1);
        const auto iters = static_cast<double>(out.iterations);
        sum += iters;
        sum_sq += iters * iters;
    }
    const double mean = sum / runs;
    return {mean, std::sqrt((sum_sq - runs * mean * mean) / (runs - 1) / runs)};
}

}  // namespace

TEST(RunOpoea, EscapeTimeAtRateKOverN) {
    const double q = std::pow(0.2, 2) * std::pow(0.8, 8);
    const auto m = opoea_escape_iterations(JumpProblem(10, 2), 0.2, ollga::LocalOptimumStart{}, 2000);
    EXPECT_NEAR(m.mean, 1.0 / q, 3.0 * m.se);
}

TEST(RunOpoea, TwoBitJumpFromZeros) {
    const auto m = opoea_escape_iterations(JumpProblem(2, 2), 0.5, BitString(2), 10'000);
    EXPECT_NEAR(m.mean, 4.0, 3.0 * m.se);
}

TEST(EngineInvariants, ExactRadiusForEveryMutant) {
    RngStream rng(808);
    const JumpProblem problem(30, 3);
    const GaParams params{0.25, 0.4, 6, 4};
    BitString x = ollga::random_bit_string(30, rng);
    std::int64_t fx = ollga::jump_fitness(problem, x);
    for (int i = 0; i < 2000; ++i) {
        std::vector<std::size_t> radii;
        auto it = ollga::ga_iteration(x, fx, problem, params, rng, [&](const BitString& m, std::int64_t f) {
            radii.push_back(ollga::hamming(m, x));
            EXPECT_EQ(f, ollga::jump_fitness(problem, m));
        });
        ASSERT_EQ(radii.size(), 6U);
        for (auto r : radii) {
            ASSERT_EQ(r, it.ell);
        }
        x = it.x_next;
        fx = it.x_next_fitness;
    }
}
