#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

#include "kfs/errors.hpp"
#include "kfs/profile.hpp"

namespace kfs {

// A closed-form probability bound. raw is the formula value (may be <= 0,
// in which case the bound carries no information); clamped lives in [0,1].
// Vacuousness is data, never an error: parameter sweeps legitimately cross
// vacuous regions.
struct BoundValue {
    double raw = 0.0;
    double clamped = 0.0;
    bool vacuous = false;

    static BoundValue from_raw(double raw) {
        return BoundValue{raw, std::clamp(raw, 0.0, 1.0), raw <= 0.0};
    }
};

// Constants every bound formula needs, for one class (X or Y): the growth
// constant A, support radius r, sample size k, the quasi-orthogonality level
// delta, norm slack epsilon, the volume-ratio constants C and C*, and the
// effective-dimension profile.
struct BoundParams {
    double A;
    double r;
    int k;
    double delta;
    double epsilon;
    double C;
    double C_star;
    DimensionProfile profile;

    BoundParams(double A_, double r_, int k_, double delta_, double epsilon_, double C_,
                double C_star_, DimensionProfile profile_)
        : A(A_), r(r_), k(k_), delta(delta_), epsilon(epsilon_), C(C_), C_star(C_star_),
          profile(std::move(profile_)) {
        if (!(A > 0.0)) throw std::invalid_argument("BoundParams: A must be positive");
        if (!(r > 0.0)) throw std::invalid_argument("BoundParams: r must be positive");
        if (k < 1) throw std::invalid_argument("BoundParams: k must be >= 1");
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("BoundParams: delta in (0,1)");
        if (!(epsilon > 0.0 && epsilon < 1.0)) {
            throw std::invalid_argument("BoundParams: epsilon in (0,1)");
        }
        if (!(C > 0.0)) throw std::invalid_argument("BoundParams: C must be positive");
        if (!(C_star > 0.0)) throw std::invalid_argument("BoundParams: C_star must be positive");
    }

    BoundParams with_delta(double d) const {
        BoundParams p = *this;
        if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("BoundParams: delta in (0,1)");
        p.delta = d;
        return p;
    }
};

// P(all pairs quasi-orthogonal):
// 1 - k(k-1) C A [(1-delta^2)^(1/2)]^beta(r*delta)
inline BoundValue quasi_orth_bound(const BoundParams& p) {
    const double k = static_cast<double>(p.k);
    const double base = std::sqrt(1.0 - p.delta * p.delta);
    const double term = k * (k - 1.0) * p.C * p.A * std::pow(base, beta_at(p.profile, p.r * p.delta));
    return BoundValue::from_raw(1.0 - term);
}

// P(all pairs quasi-orthogonal and all norms >= (1-eps) r):
// 1 - C A k [ (1-eps)^beta(0) + (k-1) [(1-delta^2)^(1/2)]^beta(r*delta) ]
inline BoundValue quasi_orth_norm_bound(const BoundParams& p) {
    const double k = static_cast<double>(p.k);
    const double pair_base = std::sqrt(1.0 - p.delta * p.delta);
    const double norm_term = std::pow(1.0 - p.epsilon, beta_at(p.profile, 0.0));
    const double pair_term = (k - 1.0) * std::pow(pair_base, beta_at(p.profile, p.r * p.delta));
    return BoundValue::from_raw(1.0 - p.C * p.A * k * (norm_term + pair_term));
}

// U(k,delta): upper bound on the squared distance of the empirical feature
// mean from the class center.
inline double lhd_u(const BoundParams& p) {
    const double k = static_cast<double>(p.k);
    return (p.r * p.r + (k - 1.0) * p.delta * p.r) / k;
}

// L(k,delta,eps): the matching lower bound; may be negative (vacuous).
inline double lhd_l(const BoundParams& p) {
    const double k = static_cast<double>(p.k);
    const double one_minus_eps = 1.0 - p.epsilon;
    return (one_minus_eps * one_minus_eps * p.r * p.r - (k - 1.0) * p.delta * p.r) / k;
}

// P(||mean - c||^2 <= U): same failure term as quasi_orth_bound.
inline BoundValue lhd_upper_prob(const BoundParams& p) {
    return quasi_orth_bound(p);
}

// P(L <= ||mean - c||^2 <= U).
inline BoundValue lhd_two_sided_prob(const BoundParams& p) {
    const double k = static_cast<double>(p.k);
    const double pair_base = std::sqrt(1.0 - p.delta * p.delta);
    const double norm_term = p.C * p.A * k * std::pow(1.0 - p.epsilon, beta_at(p.profile, 0.0));
    const double pair_term =
        p.C * p.A * k * (k - 1.0) * std::pow(pair_base, beta_at(p.profile, p.r * p.delta));
    return BoundValue::from_raw(1.0 - norm_term - pair_term);
}

// Separation margin: Delta = D - sqrt(r_Y^2/k + ((k-1)/k) r_Y delta).
// May be <= 0; feasibility is the caller's decision.
inline double delta_feasible(double d_stat, double r_y, int k, double delta) {
    if (k < 1) throw std::invalid_argument("delta_feasible: k must be >= 1");
    if (!(r_y > 0.0)) throw std::invalid_argument("delta_feasible: r_Y must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta_feasible: delta in (0,1)");
    const double kk = static_cast<double>(k);
    return d_stat - std::sqrt(r_y * r_y / kk + (kk - 1.0) / kk * r_y * delta);
}

// New-class acceptance bound. Bases as printed are (r_Y^2-(Delta-theta)^2)^(1/2)
// and r_Y (1-delta^2)^(1/2); normalized mode divides both by r_Y so they are
// dimensionless, which is the mode the empirical validation uses.
inline BoundValue p_n_bound(const BoundParams& p, double separation, double theta,
                            bool normalized = true) {
    if (!(theta >= 0.0)) throw std::domain_error("p_n_bound: theta must be >= 0");
    if (theta > separation) throw std::domain_error("p_n_bound: theta must be <= Delta");
    const double gap = separation - theta;
    if (gap > p.r) throw std::domain_error("p_n_bound: Delta - theta exceeds r_Y (negative radicand)");
    const double k = static_cast<double>(p.k);
    double tail_base = std::sqrt(p.r * p.r - gap * gap);
    double pair_base = p.r * std::sqrt(1.0 - p.delta * p.delta);
    if (normalized) {
        tail_base /= p.r;
        pair_base /= p.r;
    }
    const double tail_factor = 1.0 - p.C_star * p.A * std::pow(tail_base, beta_at(p.profile, gap));
    const double pair_factor =
        1.0 - p.C_star * p.A * k * (k - 1.0) * std::pow(pair_base, beta_at(p.profile, p.r * p.delta));
    return BoundValue::from_raw(tail_factor * pair_factor);
}

// Base-class preservation bound: 1 - C* A [(1 - theta^2/r_X^2)^(1/2)]^beta(theta).
// theta >= r_X means the decision hyperplane clears the X-support entirely
// (the cap is empty), so the bound is exactly 1 rather than a domain error.
inline BoundValue p_e_bound(const BoundParams& p, double theta) {
    if (!(theta >= 0.0)) throw std::domain_error("p_e_bound: theta must be >= 0");
    const double ratio = theta / p.r;
    const double base = std::sqrt(std::max(1.0 - ratio * ratio, 0.0));
    return BoundValue::from_raw(1.0 - p.C_star * p.A * std::pow(base, beta_at(p.profile, theta)));
}

struct GridSpec {
    int resolution = 256;  // points per axis; bound surfaces are smooth in (delta, theta)
};

struct DeltaThetaChoice {
    double delta;
    double theta;
    double separation;  // Delta at the chosen delta
    BoundValue p_n;
    BoundValue p_e;
};

// Grid search over delta in (0,1) and theta in [max(Delta-r_Y,0), Delta],
// maximizing min(p_n.raw, p_e.raw). Ties break toward larger theta
// (favouring p_e), then larger delta.
inline DeltaThetaChoice optimize_delta_theta(double d_stat, const BoundParams& y_params,
                                             const BoundParams& x_params, GridSpec grid = {},
                                             bool normalized = true) {
    if (grid.resolution < 2) throw std::invalid_argument("grid resolution must be >= 2");
    const int g = grid.resolution;
    bool found = false;
    double best_obj = 0.0;
    DeltaThetaChoice best{};
    double best_separation_seen = -std::numeric_limits<double>::infinity();
    double required_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g; ++i) {
        const double delta = static_cast<double>(i + 1) / (g + 1);
        const double separation = delta_feasible(d_stat, y_params.r, y_params.k, delta);
        best_separation_seen = std::max(best_separation_seen, separation);
        required_d = std::min(required_d, d_stat - separation);
        if (!(separation > 0.0)) continue;
        const BoundParams yp = y_params.with_delta(delta);
        const double theta_lo = std::max(separation - y_params.r, 0.0);
        const double theta_hi = separation;
        for (int j = 0; j < g; ++j) {
            const double theta =
                theta_lo + (theta_hi - theta_lo) * static_cast<double>(j) / (g - 1);
            const BoundValue pn = p_n_bound(yp, separation, theta, normalized);
            const BoundValue pe = p_e_bound(x_params, theta);
            const double obj = std::min(pn.raw, pe.raw);
            const bool better =
                !found || obj > best_obj ||
                (obj == best_obj &&
                 (theta > best.theta || (theta == best.theta && delta > best.delta)));
            if (better) {
                found = true;
                best_obj = obj;
                best = DeltaThetaChoice{delta, theta, separation, pn, pe};
            }
        }
    }
    if (!found) {
        throw infeasible_error(d_stat, required_d, best_separation_seen);
    }
    return best;
}

}  // namespace kfs
