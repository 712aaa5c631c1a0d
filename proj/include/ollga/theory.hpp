#pragma once

/// @file theory.hpp
/// @brief Exact escape probability from the plateau of Jump_k and the
/// closed-form runtime bounds and parameter choices for the GA.
///
/// Everything is evaluated in natural-log space: terms such as (p/2)^k or
/// binomial coefficients leave the double range long before the parameter
/// regimes of interest do.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include <ollga/core.hpp>
#include <ollga/engine.hpp>

namespace ollga::theory {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

/// A probability held as its natural logarithm; -inf encodes zero.
struct LogProb {
    double log_value = neg_inf;

    static LogProb zero() noexcept { return {neg_inf}; }
    static LogProb one() noexcept { return {0.0}; }
    static LogProb from_linear(double p) { return {p > 0.0 ? std::log(p) : neg_inf}; }

    [[nodiscard]] double value() const noexcept { return std::exp(log_value); }
    [[nodiscard]] bool is_zero() const noexcept { return log_value == neg_inf; }

    friend bool operator==(const LogProb&, const LogProb&) = default;
};

/// Expected runtime as logarithms of iterations and fitness evaluations.
struct Runtime {
    double log_iters = pos_inf;
    double log_evals = pos_inf;

    [[nodiscard]] double iters() const noexcept { return std::exp(log_iters); }
    [[nodiscard]] double evals() const noexcept { return std::exp(log_evals); }
};

enum class QMode { conservative, exact };
enum class AutoParamsMode { escape, full_run };

namespace detail {

/// count * log(v), with the convention 0 * log(0) = 0.
inline double xlog(double count, double v) {
    if (count == 0.0) {
        return 0.0;
    }
    return count * std::log(v);
}

/// count * log(1 - v), with 0 * log(0) = 0.
inline double xlog1m(double count, double v) {
    if (count == 0.0) {
        return 0.0;
    }
    return count * std::log1p(-v);
}

/// log(1 - exp(a)) for a <= 0.
inline double log1mexp(double a) {
    if (a == neg_inf) {
        return 0.0;
    }
    if (a > -0.6931471805599453) {
        return std::log(-std::expm1(a));
    }
    return std::log1p(-std::exp(a));
}

/// log(1 - (1 - q)^lambda) given log q; never forms (1 - q)^lambda directly.
inline double log_one_minus_pow(double log_q, double lambda) {
    if (log_q == neg_inf) {
        return neg_inf;
    }
    if (log_q >= 0.0) {
        return 0.0;
    }
    if (log_q < -575.0) {
        // (1 - q)^lambda = 1 - lambda q + O((lambda q)^2) with lambda q far below 1e-240.
        return std::log(lambda) + log_q;
    }
    return log1mexp(lambda * std::log1p(-std::exp(log_q)));
}

/// Accumulates log(sum exp(terms)) without overflow.
class LogSum {
public:
    void add(double log_term) {
        if (log_term == neg_inf) {
            return;
        }
        if (log_term <= max_) {
            sum_ += std::exp(log_term - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        }
    }

    [[nodiscard]] double value() const { return max_ == neg_inf ? neg_inf : max_ + std::log(sum_); }

private:
    double max_ = neg_inf;
    double sum_ = 0.0;
};

/// ceil/floor that treat values within 1e-9 (relative) of an integer as that integer,
/// so p*n = 3.0000000000000004 rounds as 3.
inline double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v)) ? r : v;
}

inline void require_theory_domain(const JumpProblem& problem, const char* what) {
    if (!problem.in_theory_domain()) {
        throw std::domain_error(std::string(what) + " requires k <= n/4 (got n=" + std::to_string(problem.n()) +
                                ", k=" + std::to_string(problem.k()) + ")");
    }
}

inline bool rate_meets_jump_condition(const JumpProblem& problem, double p) {
    return p * static_cast<double>(problem.n()) >= 2.0 * static_cast<double>(problem.k()) * (1.0 - 1e-12);
}

}  // namespace detail

/// ln C(n, k) through log-gamma.
[[nodiscard]] inline double log_binomial(std::int64_t n, std::int64_t k) {
    if (n < 0 || k < 0 || k > n) {
        throw std::invalid_argument("log_binomial requires 0 <= k <= n");
    }
    if (k == 0 || k == n) {
        return 0.0;
    }
    const auto dn = static_cast<double>(n);
    const auto dk = static_cast<double>(k);
    return boost::math::lgamma(dn + 1.0) - boost::math::lgamma(dk + 1.0) - boost::math::lgamma(dn - dk + 1.0);
}

/// ln Pr[ell = i] for ell ~ Bin(n, p).
[[nodiscard]] inline double log_binomial_pmf(std::int64_t n, std::int64_t i, double p) {
    return log_binomial(n, i) + detail::xlog(static_cast<double>(i), p) +
           detail::xlog1m(static_cast<double>(n - i), p);
}

/// Pr[ell in [ceil(pn) .. floor(2pn)]] for ell ~ Bin(n, p).
[[nodiscard]] inline double q_ell_interval(std::int64_t n, double p, double upper_factor) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("q_ell requires p in [0, 1]");
    }
    const double pn = p * static_cast<double>(n);
    const auto lo = static_cast<std::int64_t>(std::ceil(detail::snap(pn)));
    const auto hi = std::min<std::int64_t>(n, static_cast<std::int64_t>(std::floor(detail::snap(upper_factor * pn))));
    detail::LogSum sum;
    for (std::int64_t i = lo; i <= hi; ++i) {
        sum.add(log_binomial_pmf(n, i, p));
    }
    return std::min(1.0, std::exp(sum.value()));
}

[[nodiscard]] inline double q_ell_exact(std::int64_t n, double p) { return q_ell_interval(n, p, 2.0); }

/// Lower bound 1/2 min{1, lambda x} on 1 - (1 - x)^lambda.
[[nodiscard]] inline double bernoulli_lower(double x, double lambda) {
    if (!(x >= 0.0 && x <= 1.0) || !(lambda > 0.0)) {
        throw std::invalid_argument("bernoulli_lower requires x in [0, 1] and lambda > 0");
    }
    return 0.5 * std::min(1.0, lambda * x);
}

/// Exact probability that one iteration started on the plateau samples the optimum.
///
/// Sum over the mutation strength ell of Pr[ell] * p_M(ell) * p_C(ell), where
/// for ell = k the mutation phase already samples the optimum (p_C = 1), for
/// ell in [k+1 .. 2k-1] a good mutant lies in the valley and wins only if all
/// mutants are good, and for ell >= 2k one good mutant suffices.
///
/// The case analysis holds for every 2 <= k <= n; this entry point does not
/// enforce k <= n/4. Prefer escape_probability_exact.
[[nodiscard]] inline LogProb escape_probability_formula(const JumpProblem& problem, const GaParams& params) {
    params.validate();
    const auto n = static_cast<std::int64_t>(problem.n());
    const auto k = static_cast<std::int64_t>(problem.k());
    const double p = params.p;
    const double c = params.c;
    const auto lambda_m = static_cast<double>(params.lambda_m);
    const auto lambda_c = static_cast<double>(params.lambda_c);
    if (p == 0.0) {
        return LogProb::zero();
    }

    detail::LogSum total;
    total.add(log_binomial_pmf(n, k, p) + detail::log_one_minus_pow(-log_binomial(n, k), lambda_m));
    for (std::int64_t ell = k + 1; ell <= n; ++ell) {
        const double log_p_ell = log_binomial_pmf(n, ell, p);
        if (log_p_ell == neg_inf) {
            continue;
        }
        const double log_q_m = log_binomial(n - k, ell - k) - log_binomial(n, ell);
        const double log_q_c = detail::xlog(static_cast<double>(k), c) + detail::xlog1m(static_cast<double>(ell - k), c);
        const double log_p_m =
            ell < 2 * k ? lambda_m * log_q_m : detail::log_one_minus_pow(log_q_m, lambda_m);
        total.add(log_p_ell + log_p_m + detail::log_one_minus_pow(log_q_c, lambda_c));
    }
    return {std::min(0.0, total.value())};
}

/// escape_probability_formula restricted to k <= n/4; throws std::domain_error otherwise.
[[nodiscard]] inline LogProb escape_probability_exact(const JumpProblem& problem, const GaParams& params) {
    detail::require_theory_domain(problem, "escape probability");
    return escape_probability_formula(problem, params);
}

/// Iterations 1/P and evaluations (lambda_M + lambda_C)/P for a given P.
[[nodiscard]] inline Runtime escape_time_from(LogProb P, const GaParams& params) {
    if (P.is_zero()) {
        return {};
    }
    const double log_iters = -P.log_value;
    return {log_iters, log_iters + std::log(static_cast<double>(params.evaluations_per_iteration()))};
}

/// Expected escape time: the plateau is left with probability P per iteration,
/// so iterations are geometric with mean 1/P. P = 0 yields +inf.
[[nodiscard]] inline Runtime escape_time_exact(const JumpProblem& problem, const GaParams& params) {
    return escape_time_from(escape_probability_exact(problem, params), params);
}

/// Per-iteration escape probability of the (1+1) EA from the plateau:
/// rate^k (1-rate)^(n-k). Plateau moves keep the parent on the plateau.
[[nodiscard]] inline LogProb opoea_escape_probability(const JumpProblem& problem, double rate) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw std::invalid_argument("mutation rate must be in [0, 1]");
    }
    const auto n = static_cast<double>(problem.n());
    const auto k = static_cast<double>(problem.k());
    return {detail::xlog(k, rate) + detail::xlog1m(n - k, rate)};
}

/// Expected (1+1) EA escape time; one evaluation per iteration.
[[nodiscard]] inline Runtime opoea_escape_time(const JumpProblem& problem, double rate) {
    const LogProb P = opoea_escape_probability(problem, rate);
    if (P.is_zero()) {
        return {};
    }
    return {-P.log_value, -P.log_value};
}

/// Runtime bound for escaping the plateau,
/// 4 /(q_ell min{1, lambda_M (p/2)^k} min{1, lambda_C c^k (1-c)^(2pn-k)}),
/// with the exponent 2pn - k clamped at zero.
[[nodiscard]] inline Runtime upper_bound_escape(const JumpProblem& problem, const GaParams& params,
                                                QMode q_mode = QMode::conservative) {
    detail::require_theory_domain(problem, "escape runtime bound");
    params.validate();
    if (!detail::rate_meets_jump_condition(problem, params.p)) {
        throw std::domain_error("escape runtime bound requires p >= 2k/n");
    }
    const auto n = static_cast<double>(problem.n());
    const auto k = static_cast<double>(problem.k());
    const double q_ell = q_mode == QMode::exact ? q_ell_exact(static_cast<std::int64_t>(problem.n()), params.p) : 0.1;
    const double log_alpha = std::log(static_cast<double>(params.lambda_m)) + k * std::log(params.p / 2.0);
    const double exponent = std::max(0.0, 2.0 * params.p * n - k);
    const double log_beta = std::log(static_cast<double>(params.lambda_c)) + detail::xlog(k, params.c) +
                            detail::xlog1m(exponent, params.c);
    const double log_iters = std::log(4.0) - std::log(q_ell) - std::min(0.0, log_alpha) - std::min(0.0, log_beta);
    return {log_iters, log_iters + std::log(static_cast<double>(params.evaluations_per_iteration()))};
}

inline constexpr double default_lambda_cap = 1e9;

/// p = c = sqrt(k/n) with lambda_M = lambda_C = (n/k)^(k/2) for escaping the
/// plateau, or n^((k-1)/2) k^(-k/2) for a full run from a random start.
[[nodiscard]] inline GaParams optimal_params(const JumpProblem& problem, AutoParamsMode mode,
                                             double lambda_cap = default_lambda_cap) {
    detail::require_theory_domain(problem, "optimal parameters");
    const auto n = static_cast<double>(problem.n());
    const auto k = static_cast<double>(problem.k());
    const double log_lambda = mode == AutoParamsMode::escape ? 0.5 * k * std::log(n / k)
                                                              : 0.5 * (k - 1.0) * std::log(n) - 0.5 * k * std::log(k);
    const double lambda =
        mode == AutoParamsMode::escape ? std::pow(n / k, k / 2.0) : std::pow(n, (k - 1.0) / 2.0) * std::pow(k, -k / 2.0);
    if (log_lambda > std::log(lambda_cap) + 1.0 || static_cast<double>(round_population(lambda)) > lambda_cap) {
        std::ostringstream msg;
        msg << "population size " << std::exp(log_lambda) << " exceeds the cap " << lambda_cap;
        throw std::overflow_error(msg.str());
    }
    GaParams params;
    params.p = std::sqrt(k / n);
    params.c = params.p;
    params.lambda_m = round_population(lambda);
    params.lambda_c = params.lambda_m;
    return params;
}

/// min{1, lambda_M (lambda_C + 1) (k/2n)^k}.
[[nodiscard]] inline LogProb upper_bound_P(const JumpProblem& problem, const GaParams& params) {
    detail::require_theory_domain(problem, "upper bound on P");
    const auto n = static_cast<double>(problem.n());
    const auto k = static_cast<double>(problem.k());
    const double log_bound = std::log(static_cast<double>(params.lambda_m)) +
                             std::log(static_cast<double>(params.lambda_c) + 1.0) + k * std::log(k / (2.0 * n));
    return {std::min(0.0, log_bound)};
}

/// 2 (2n/k)^(k/2) - 1 evaluations, for any parameters, from the plateau.
[[nodiscard]] inline double lower_bound_evals(const JumpProblem& problem) {
    detail::require_theory_domain(problem, "runtime lower bound");
    const auto n = static_cast<double>(problem.n());
    const auto k = static_cast<double>(problem.k());
    return 2.0 * std::pow(2.0 * n / k, k / 2.0) - 1.0;
}

struct UnimodalMaximum {
    double argmax = 0.0;
    double value = 0.0;
};

/// Maximum of x^k (1-x)^(n-k) over [0, 1], attained at k/n.
[[nodiscard]] inline UnimodalMaximum max_unimodal(std::int64_t n, std::int64_t k) {
    if (k < 1 || k > n - 1) {
        throw std::invalid_argument("max_unimodal requires 1 <= k <= n-1");
    }
    const double x = static_cast<double>(k) / static_cast<double>(n);
    return {x, std::exp(static_cast<double>(k) * std::log(x) + static_cast<double>(n - k) * std::log1p(-x))};
}

struct StandardParamsBound {
    GaParams params;
    Runtime bound;
    /// (2n)^(k/(k+1)): below it the small-lambda regime applies.
    double regime_threshold = 0.0;
    bool small_lambda_regime = true;
    /// Order terms of the two regimes, in evaluations: 2^k n^k / lambda and lambda^k.
    double small_regime_evals = 0.0;
    double large_regime_evals = 0.0;
};

/// Bound for the standard setting p = lambda/n, c = 1/lambda, lambda_M = lambda_C = lambda.
[[nodiscard]] inline StandardParamsBound standard_params_bound(const JumpProblem& problem, std::uint64_t lambda) {
    detail::require_theory_domain(problem, "standard-parameter bound");
    const auto n = static_cast<double>(problem.n());
    const auto k = static_cast<double>(problem.k());
    const auto lam = static_cast<double>(lambda);
    if (lambda < 2 * problem.k() || lambda > problem.n()) {
        throw std::domain_error("standard-parameter bound requires lambda in [2k..n]");
    }
    StandardParamsBound out;
    out.params = GaParams{lam / n, 1.0 / lam, lambda, lambda};
    const double log_first = std::min(0.0, std::log(lam) + k * std::log(lam / (2.0 * n)));
    const double log_second = (1.0 - k) * std::log(lam) + (2.0 * lam - k) * std::log1p(-1.0 / lam);
    const double log_iters = std::log(4.0) - std::log(0.1) - log_first - log_second;
    out.bound = {log_iters, log_iters + std::log(2.0 * lam)};
    out.regime_threshold = std::pow(2.0 * n, k / (k + 1.0));
    out.small_lambda_regime = lam <= out.regime_threshold;
    out.small_regime_evals = std::pow(2.0 * n, k) / lam;
    out.large_regime_evals = std::pow(lam, k);
    return out;
}

/// Finite-n view of the sufficient conditions for beating (n/k)^k.
/// The asymptotic conditions are only reported as ratios.
struct RangeDiagnostics {
    double alpha = 0.0;  ///< lambda_M (p/2)^k
    double beta = 0.0;   ///< lambda_C c^k (1-c)^(2pn-k), exponent clamped at 0
    bool alpha_at_most_one = false;
    bool beta_at_most_one = false;
    bool rate_at_least_2k_over_n = false;
    double alpha_ratio = 0.0;  ///< alpha / (k/(nc))^k
    double beta_ratio = 0.0;   ///< beta / (2k/(pn))^k
    double p_ratio = 0.0;      ///< p / (k/n)
    double c_ratio = 0.0;      ///< c / (k/n)
    double pc_ratio = 0.0;     ///< pc / (k/n)
    bool holds = false;        ///< alpha <= 1, beta <= 1 and p >= 2k/n
};

[[nodiscard]] inline RangeDiagnostics parameter_range_check(const JumpProblem& problem, const GaParams& params) {
    detail::require_theory_domain(problem, "parameter range check");
    params.validate();
    const auto n = static_cast<double>(problem.n());
    const auto k = static_cast<double>(problem.k());
    const double p = params.p;
    const double c = params.c;
    const double log_alpha = std::log(static_cast<double>(params.lambda_m)) + detail::xlog(k, p / 2.0);
    const double exponent = std::max(0.0, 2.0 * p * n - k);
    const double log_beta =
        std::log(static_cast<double>(params.lambda_c)) + detail::xlog(k, c) + detail::xlog1m(exponent, c);

    RangeDiagnostics d;
    d.alpha = std::exp(log_alpha);
    d.beta = std::exp(log_beta);
    d.alpha_at_most_one = log_alpha <= 0.0;
    d.beta_at_most_one = log_beta <= 0.0;
    d.rate_at_least_2k_over_n = detail::rate_meets_jump_condition(problem, p);
    d.alpha_ratio = log_alpha == neg_inf ? 0.0 : std::exp(log_alpha + detail::xlog(k, n * c / k));
    d.beta_ratio = log_beta == neg_inf ? 0.0 : std::exp(log_beta + detail::xlog(k, p * n / (2.0 * k)));
    d.p_ratio = p * n / k;
    d.c_ratio = c * n / k;
    d.pc_ratio = p * c * n / k;
    d.holds = d.alpha_at_most_one && d.beta_at_most_one && d.rate_at_least_2k_over_n;
    return d;
}

/// Exact values and every applicable bound for one (problem, parameters) pair.
/// Each optional is empty exactly when that quantity's domain is violated.
struct BoundReport {
    std::optional<LogProb> exact_p;
    std::optional<Runtime> exact_time;
    std::optional<Runtime> runtime_bound_conservative;
    std::optional<Runtime> runtime_bound_exact_q;
    std::optional<LogProb> upper_bound_p;
    std::optional<double> lower_bound_evals;
    std::optional<RangeDiagnostics> range;
    double q_ell_exact = 0.0;
    bool exact_in_domain = false;
    bool runtime_bound_in_domain = false;
};

[[nodiscard]] inline BoundReport bound_report(const JumpProblem& problem, const GaParams& params) {
    params.validate();
    BoundReport r;
    r.q_ell_exact = q_ell_exact(static_cast<std::int64_t>(problem.n()), params.p);
    r.exact_in_domain = problem.in_theory_domain();
    if (!r.exact_in_domain) {
        return r;
    }
    r.exact_p = escape_probability_exact(problem, params);
    r.exact_time = escape_time_exact(problem, params);
    r.upper_bound_p = upper_bound_P(problem, params);
    r.lower_bound_evals = theory::lower_bound_evals(problem);
    r.range = parameter_range_check(problem, params);
    r.runtime_bound_in_domain = detail::rate_meets_jump_condition(problem, params.p);
    if (r.runtime_bound_in_domain) {
        r.runtime_bound_conservative = upper_bound_escape(problem, params, QMode::conservative);
        r.runtime_bound_exact_q = upper_bound_escape(problem, params, QMode::exact);
    }
    return r;
}

}  // namespace ollga::theory
