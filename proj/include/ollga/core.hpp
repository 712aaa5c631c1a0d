#pragma once

/// @file core.hpp
/// @brief Search-space primitives: packed bit strings, OneMax and Jump_k.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <ollga/rng.hpp>

namespace ollga {

/// Fixed-length binary string packed into 64-bit words.
///
/// Bits beyond `size()` in the last word are always zero, so popcount and
/// equality can work word-wise.
class BitString {
public:
    using word_type = std::uint64_t;
    static constexpr std::size_t word_bits = 64;

    BitString() = default;

    explicit BitString(std::size_t n, bool value = false)
        : size_(n), words_((n + word_bits - 1) / word_bits, value ? ~word_type{0} : word_type{0}) {
        clear_padding();
    }

    /// Parses a string of '0'/'1' characters, position 0 first.
    static BitString from_string(std::string_view text) {
        BitString result(text.size());
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] == '1') {
                result.set(i, true);
            } else if (text[i] != '0') {
                throw std::invalid_argument("bit string may only contain '0' and '1'");
            }
        }
        return result;
    }

    [[nodiscard]] std::size_t size() const noexcept { return size_; }

    [[nodiscard]] bool operator[](std::size_t i) const noexcept {
        return (words_[i / word_bits] >> (i % word_bits)) & 1U;
    }

    void set(std::size_t i, bool value) noexcept {
        const word_type mask = word_type{1} << (i % word_bits);
        if (value) {
            words_[i / word_bits] |= mask;
        } else {
            words_[i / word_bits] &= ~mask;
        }
    }

    void flip(std::size_t i) noexcept { words_[i / word_bits] ^= word_type{1} << (i % word_bits); }

    [[nodiscard]] std::size_t count() const noexcept {
        std::size_t total = 0;
        for (const word_type w : words_) {
            total += static_cast<std::size_t>(std::popcount(w));
        }
        return total;
    }

    [[nodiscard]] BitString complement() const {
        BitString result = *this;
        for (word_type& w : result.words_) {
            w = ~w;
        }
        result.clear_padding();
        return result;
    }

    [[nodiscard]] const std::vector<word_type>& words() const noexcept { return words_; }

    [[nodiscard]] std::string to_string() const {
        std::string text(size_, '0');
        for (std::size_t i = 0; i < size_; ++i) {
            if ((*this)[i]) {
                text[i] = '1';
            }
        }
        return text;
    }

    friend bool operator==(const BitString&, const BitString&) = default;

private:
    void clear_padding() noexcept {
        const std::size_t tail = size_ % word_bits;
        if (tail != 0 && !words_.empty()) {
            words_.back() &= (word_type{1} << tail) - 1;
        }
    }

    std::size_t size_ = 0;
    std::vector<word_type> words_;
};

/// Calls `fn(i)` for every position where `a` and `b` differ, in ascending order.
template <typename Fn>
void for_each_difference(const BitString& a, const BitString& b, Fn&& fn) {
    const auto& wa = a.words();
    const auto& wb = b.words();
    for (std::size_t w = 0; w < wa.size(); ++w) {
        BitString::word_type diff = wa[w] ^ wb[w];
        while (diff != 0) {
            const auto bit = static_cast<std::size_t>(std::countr_zero(diff));
            fn(w * BitString::word_bits + bit);
            diff &= diff - 1;
        }
    }
}

/// Jump_k problem instance on strings of length n, 2 <= k <= n.
class JumpProblem {
public:
    JumpProblem(std::size_t n, std::size_t k) : n_(n), k_(k) {
        if (n < 2 || k < 2 || k > n) {
            throw std::invalid_argument("k must be in [2..n] (got n=" + std::to_string(n) +
                                        ", k=" + std::to_string(k) + ")");
        }
    }

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] std::size_t k() const noexcept { return k_; }

    /// Fitness of the global optimum, n + k.
    [[nodiscard]] std::int64_t optimum_fitness() const noexcept {
        return static_cast<std::int64_t>(n_ + k_);
    }

    /// True when the jump geometry analysed for the GA applies, k <= n/4.
    [[nodiscard]] bool in_theory_domain() const noexcept { return 4 * k_ <= n_; }

    friend bool operator==(const JumpProblem&, const JumpProblem&) = default;

private:
    std::size_t n_;
    std::size_t k_;
};

[[nodiscard]] inline std::size_t one_max(const BitString& x) noexcept { return x.count(); }

/// Jump_k as a function of the number of one-bits.
[[nodiscard]] inline std::int64_t jump_fitness_of_ones(const JumpProblem& problem, std::size_t ones) noexcept {
    const auto n = static_cast<std::int64_t>(problem.n());
    const auto k = static_cast<std::int64_t>(problem.k());
    const auto om = static_cast<std::int64_t>(ones);
    if (om <= n - k || om == n) {
        return om + k;
    }
    return n - om;
}

[[nodiscard]] inline std::int64_t jump_fitness(const JumpProblem& problem, const BitString& x) {
    if (x.size() != problem.n()) {
        throw std::invalid_argument("bit string length " + std::to_string(x.size()) +
                                    " does not match problem size " + std::to_string(problem.n()));
    }
    return jump_fitness_of_ones(problem, one_max(x));
}

[[nodiscard]] inline std::size_t hamming(const BitString& x, const BitString& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("hamming distance requires equal lengths");
    }
    std::size_t total = 0;
    for (std::size_t w = 0; w < x.words().size(); ++w) {
        total += static_cast<std::size_t>(std::popcount(x.words()[w] ^ y.words()[w]));
    }
    return total;
}

[[nodiscard]] inline bool is_global_optimum(const JumpProblem& problem, const BitString& x) {
    if (x.size() != problem.n()) {
        throw std::invalid_argument("bit string length does not match problem size");
    }
    return one_max(x) == problem.n();
}

/// Places `count` distinct marks uniformly at random among n positions (Floyd's
/// sampling); the returned string has exactly `count` ones.
[[nodiscard]] inline BitString random_subset_mask(std::size_t n, std::size_t count, RngStream& rng) {
    BitString mask(n);
    for (std::size_t j = n - count; j < n; ++j) {
        const auto t = static_cast<std::size_t>(rng.uniform_below(j + 1));
        mask.set(mask[t] ? j : t, true);
    }
    return mask;
}

/// Uniformly random point of the plateau: exactly n - k ones.
[[nodiscard]] inline BitString make_local_optimum(const JumpProblem& problem, RngStream& rng) {
    return random_subset_mask(problem.n(), problem.k(), rng).complement();
}

/// Uniformly random bit string; one coin per position in ascending order.
[[nodiscard]] inline BitString random_bit_string(std::size_t n, RngStream& rng) {
    BitString x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x.set(i, rng.bernoulli(0.5));
    }
    return x;
}

}  // namespace ollga
