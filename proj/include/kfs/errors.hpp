#pragma once

#include <stdexcept>
#include <string>

namespace kfs {

// Vector arguments with different lengths where one length is required.
class dimension_mismatch : public std::invalid_argument {
public:
    dimension_mismatch(std::size_t expected, std::size_t got)
        : std::invalid_argument("dimension mismatch: expected " + std::to_string(expected) +
                                ", got " + std::to_string(got)),
          expected_(expected), got_(got) {}

    std::size_t expected() const noexcept { return expected_; }
    std::size_t got() const noexcept { return got_; }

private:
    std::size_t expected_;
    std::size_t got_;
};

// A kernel expression that must be PSD produced a value negative beyond
// the floating-point guard band.
class psd_violation : public std::runtime_error {
public:
    explicit psd_violation(double value)
        : std::runtime_error("PSD violation: value " + std::to_string(value) +
                             " below -1e-9 guard"),
          value_(value) {}

    double value() const noexcept { return value_; }

private:
    double value_;
};

// Zero self-kernel (linear kernel at the origin) where a normalization is needed.
class degenerate_input : public std::runtime_error {
public:
    explicit degenerate_input(const std::string& what) : std::runtime_error(what) {}
};

// No delta makes the Theorem-3 feasibility margin positive.
class infeasible_error : public std::runtime_error {
public:
    infeasible_error(double d_stat, double required_d, double best_separation)
        : std::runtime_error("infeasible: D(Z) = " + std::to_string(d_stat) +
                             " but D > " + std::to_string(required_d) +
                             " is required (best separation margin achieved: " +
                             std::to_string(best_separation) + ")"),
          d_stat_(d_stat), required_d_(required_d), best_separation_(best_separation) {}

    double d_stat() const noexcept { return d_stat_; }
    double required_d() const noexcept { return required_d_; }
    double best_separation() const noexcept { return best_separation_; }

private:
    double d_stat_;
    double required_d_;
    double best_separation_;
};

// A verification routine was asked to run outside the regime where its
// constants are exact (identity map on a ball).
class unsupported_regime : public std::invalid_argument {
public:
    explicit unsupported_regime(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace kfs
