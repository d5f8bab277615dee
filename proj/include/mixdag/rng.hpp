#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace mixdag {

/// Counter-based random stream. Every draw is a pure function of (key, counter),
/// so streams derived from the same labels reproduce exactly regardless of which
/// thread consumes them or in what order.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t key = 0) : key_(key) {}

    /// Named sub-stream of a master seed, e.g. stream(seed, "gibbs", {block, var, iter}).
    static Rng stream(std::uint64_t seed, std::string_view label,
                      std::initializer_list<std::uint64_t> ids = {});

    /// Sub-stream keyed on this stream's key (not its position).
    Rng child(std::string_view label, std::initializer_list<std::uint64_t> ids = {}) const;

    result_type operator()();

    /// Uniform on the open interval (0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t key() const { return key_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace mixdag
