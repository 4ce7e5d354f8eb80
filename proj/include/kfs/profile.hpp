#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace kfs {

// Effective-dimension profile: the exponent governing feature-space
// volume-ratio decay, as a function of the radius it is evaluated at.
// Constant(n) is the identity-map case (Euclidean ball, C = 1).
class DimensionProfile {
public:
    struct Constant {
        double beta;
    };
    struct Tabulated {
        std::vector<double> radii;   // strictly increasing
        std::vector<double> betas;   // positive, same length
    };

    static DimensionProfile constant(double beta, std::string description = {}) {
        if (!(beta > 0.0)) throw std::invalid_argument("profile beta must be positive");
        return DimensionProfile(Constant{beta}, std::move(description));
    }

    static DimensionProfile identity_map(int n) {
        return constant(static_cast<double>(n), "identity map (beta = n)");
    }

    static DimensionProfile tabulated(std::vector<double> radii, std::vector<double> betas,
                                      std::string description = {}) {
        if (radii.empty()) throw std::invalid_argument("tabulated profile needs at least one entry");
        if (radii.size() != betas.size()) {
            throw std::invalid_argument("tabulated profile radii/betas length mismatch");
        }
        for (std::size_t i = 0; i < radii.size(); ++i) {
            if (!(betas[i] > 0.0)) throw std::invalid_argument("tabulated betas must be positive");
            if (i > 0 && !(radii[i] > radii[i - 1])) {
                throw std::invalid_argument("tabulated radii must be strictly increasing");
            }
        }
        return DimensionProfile(Tabulated{std::move(radii), std::move(betas)},
                                std::move(description));
    }

    const std::string& description() const noexcept { return description_; }
    bool is_constant() const noexcept { return std::holds_alternative<Constant>(data_); }

    friend bool operator==(const DimensionProfile& a, const DimensionProfile& b) {
        if (a.data_.index() != b.data_.index()) return false;
        if (const auto* c = std::get_if<Constant>(&a.data_)) {
            return c->beta == std::get<Constant>(b.data_).beta;
        }
        const auto& ta = std::get<Tabulated>(a.data_);
        const auto& tb = std::get<Tabulated>(b.data_);
        return ta.radii == tb.radii && ta.betas == tb.betas;
    }

    friend double beta_at(const DimensionProfile& profile, double radius);

private:
    DimensionProfile(std::variant<Constant, Tabulated> data, std::string description)
        : data_(std::move(data)), description_(std::move(description)) {}

    std::variant<Constant, Tabulated> data_;
    std::string description_;
};

// beta at a given evaluation radius: constant profiles ignore the radius;
// tabulated ones interpolate piecewise-linearly, clamped to the endpoints.
inline double beta_at(const DimensionProfile& profile, double radius) {
    if (radius < 0.0) throw std::invalid_argument("beta_at: radius must be >= 0");
    if (const auto* c = std::get_if<DimensionProfile::Constant>(&profile.data_)) {
        return c->beta;
    }
    const auto& t = std::get<DimensionProfile::Tabulated>(profile.data_);
    const auto& r = t.radii;
    if (radius <= r.front()) return t.betas.front();
    if (radius >= r.back()) return t.betas.back();
    const auto it = std::upper_bound(r.begin(), r.end(), radius);
    const std::size_t hi = static_cast<std::size_t>(it - r.begin());
    const std::size_t lo = hi - 1;
    const double w = (radius - r[lo]) / (r[hi] - r[lo]);
    return t.betas[lo] + w * (t.betas[hi] - t.betas[lo]);
}

}  // namespace kfs
