#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "kfs/bounds.hpp"

namespace kfs {

// Wilson score interval. Chosen over the normal approximation because the
// verified bounds sit near frequency 1, where normal CIs misbehave.
struct WilsonInterval {
    double lo;
    double hi;
};

inline WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                      double z = 1.959963984540054) {
    if (trials == 0) throw std::invalid_argument("wilson_interval: trials must be >= 1");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double hw = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {center - hw, center + hw};
}

// Per-experiment empirical outcome: exact counts plus the Wilson 95% CI.
struct Aggregate {
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    double frequency = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;

    static Aggregate from_counts(std::uint64_t successes, std::uint64_t trials) {
        const auto ci = wilson_interval(successes, trials);
        return Aggregate{trials, successes,
                         static_cast<double>(successes) / static_cast<double>(trials), ci.lo,
                         ci.hi};
    }

    double half_width() const noexcept { return 0.5 * (ci_hi - ci_lo); }
};

// Soundness check used throughout: the empirical frequency may not fall more
// than three CI half-widths below the clamped theoretical bound.
inline bool bound_sound(const Aggregate& empirical, const BoundValue& bound) {
    return empirical.frequency >= bound.clamped - 3.0 * empirical.half_width();
}

// An empirical frequency paired with the closed-form bound it validates.
struct VerifiedAggregate {
    Aggregate empirical;
    BoundValue bound;
    bool pass = false;

    static VerifiedAggregate check(const Aggregate& agg, const BoundValue& bound) {
        return VerifiedAggregate{agg, bound, bound_sound(agg, bound)};
    }
};

}  // namespace kfs
