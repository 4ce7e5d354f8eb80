#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kfs/bounds.hpp"
#include "kfs/errors.hpp"
#include "kfs/kernel.hpp"
#include "kfs/support.hpp"

namespace kfs {

// The classifier being refined. Must be total on R^n.
class BasePredictor {
public:
    virtual ~BasePredictor() = default;
    virtual Label predict(std::span<const double> x) const = 0;
};

class ConstantPredictor final : public BasePredictor {
public:
    explicit ConstantPredictor(Label label) : label_(std::move(label)) {}
    Label predict(std::span<const double>) const override { return label_; }

private:
    Label label_;
};

struct DeltaFixed {
    double delta;
};
struct DeltaOptimize {
    BoundParams y_params;
    BoundParams x_params;
    GridSpec grid{};
    bool normalized = true;
};
using DeltaPolicy = std::variant<DeltaFixed, DeltaOptimize>;

struct ThetaFixed {
    double theta;
};
struct ThetaMidRange {};
struct ThetaOptimize {
    // With DeltaOptimize this is the optimizer's theta; with DeltaFixed the
    // grid search runs over theta alone at the fixed delta.
    BoundParams y_params;
    BoundParams x_params;
    GridSpec grid{};
    bool normalized = true;
};
using ThetaPolicy = std::variant<ThetaFixed, ThetaMidRange, ThetaOptimize>;

// The fitted rule: accept the new label iff mean_score(x) - theta * D >= 0,
// fall back to the base classifier otherwise.
class FewShotModel {
public:
    FewShotModel(SupportSample support, double r_y, double delta, double theta)
        : support_(std::move(support)), r_y_(r_y), delta_(delta), theta_(theta) {
        mean_norm_ = d_statistic(support_.kernel(), support_);
        separation_ = delta_feasible(mean_norm_, r_y_, static_cast<int>(support_.size()), delta_);
        if (!(separation_ > 0.0)) {
            const double kk = static_cast<double>(support_.size());
            throw infeasible_error(
                mean_norm_, std::sqrt(r_y_ * r_y_ / kk + (kk - 1.0) / kk * r_y_ * delta_),
                separation_);
        }
        const double lo = std::max(separation_ - r_y_, 0.0);
        if (!(theta_ >= lo && theta_ <= separation_)) {
            throw std::out_of_range("theta " + std::to_string(theta_) + " outside [" +
                                    std::to_string(lo) + ", " + std::to_string(separation_) + "]");
        }
    }

    const Kernel& kernel() const noexcept { return support_.kernel(); }
    const SupportSample& support() const noexcept { return support_; }
    const Label& new_label() const noexcept { return support_.label(); }
    double mean_norm() const noexcept { return mean_norm_; }     // D(Z)
    double r_y() const noexcept { return r_y_; }
    double delta() const noexcept { return delta_; }
    double separation() const noexcept { return separation_; }   // Delta
    double theta() const noexcept { return theta_; }

    std::pair<double, double> theta_interval() const noexcept {
        return {std::max(separation_ - r_y_, 0.0), separation_};
    }

private:
    SupportSample support_;
    double r_y_;
    double delta_;
    double theta_;
    double mean_norm_ = 0.0;
    double separation_ = 0.0;
};

namespace detail {

inline double resolve_theta(const FewShotModel& probe, const ThetaPolicy& policy,
                            double fixed_delta) {
    const auto [lo, hi] = probe.theta_interval();
    if (const auto* f = std::get_if<ThetaFixed>(&policy)) {
        return f->theta;  // validated by the FewShotModel constructor
    }
    if (std::holds_alternative<ThetaMidRange>(policy)) {
        return 0.5 * (lo + hi);
    }
    const auto& opt = std::get<ThetaOptimize>(policy);
    const BoundParams yp = opt.y_params.with_delta(fixed_delta);
    const int g = opt.grid.resolution;
    double best_theta = lo;
    double best_obj = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < g; ++j) {
        const double theta = lo + (hi - lo) * static_cast<double>(j) / (g - 1);
        const double pn = p_n_bound(yp, probe.separation(), theta, opt.normalized).raw;
        const double pe = p_e_bound(opt.x_params, theta).raw;
        const double obj = std::min(pn, pe);
        if (obj > best_obj || (obj == best_obj && theta > best_theta)) {
            best_obj = obj;
            best_theta = theta;
        }
    }
    return best_theta;
}

}  // namespace detail

// Fit the Theorem-3 rule: compute D, resolve delta and theta per policy,
// and verify the feasibility margin is positive.
inline FewShotModel fit(const Kernel& kernel, SupportSample support, double r_y,
                        const DeltaPolicy& delta_policy,
                        const ThetaPolicy& theta_policy = ThetaMidRange{}) {
    detail::check_same_kernel(kernel, support);
    if (!(r_y > 0.0)) throw std::invalid_argument("fit: r_Y must be positive");

    if (const auto* opt = std::get_if<DeltaOptimize>(&delta_policy)) {
        const double d_stat = d_statistic(kernel, support);
        BoundParams yp = opt->y_params;
        if (yp.k != static_cast<int>(support.size()) || yp.r != r_y) {
            yp = BoundParams(yp.A, r_y, static_cast<int>(support.size()), yp.delta, yp.epsilon,
                             yp.C, yp.C_star, yp.profile);
        }
        const DeltaThetaChoice choice =
            optimize_delta_theta(d_stat, yp, opt->x_params, opt->grid, opt->normalized);
        if (std::holds_alternative<ThetaOptimize>(theta_policy)) {
            return FewShotModel(std::move(support), r_y, choice.delta, choice.theta);
        }
        FewShotModel probe(support, r_y, choice.delta, choice.theta);
        const double theta = detail::resolve_theta(probe, theta_policy, choice.delta);
        return FewShotModel(std::move(support), r_y, choice.delta, theta);
    }

    const double delta = std::get<DeltaFixed>(delta_policy).delta;
    // Probe with a theta that is always admissible, then resolve the policy.
    const double d_stat = d_statistic(kernel, support);
    const double separation = delta_feasible(d_stat, r_y, static_cast<int>(support.size()), delta);
    if (!(separation > 0.0)) {
        const double kk = static_cast<double>(support.size());
        throw infeasible_error(d_stat,
                               std::sqrt(r_y * r_y / kk + (kk - 1.0) / kk * r_y * delta),
                               separation);
    }
    FewShotModel probe(support, r_y, delta, separation);
    const double theta = detail::resolve_theta(probe, theta_policy, delta);
    return FewShotModel(std::move(support), r_y, delta, theta);
}

// Decision functional (1/k) sum_i kernel(x_i, x) - theta * D.
inline double margin(const FewShotModel& model, std::span<const double> x) {
    return mean_score(model.kernel(), model.support(), x) - model.theta() * model.mean_norm();
}

// The >= at the boundary assigns the new label.
inline Label classify(const FewShotModel& model, std::span<const double> x,
                      const BasePredictor& base) {
    if (margin(model, x) >= 0.0) return model.new_label();
    return base.predict(x);
}

// Several new labels: models are evaluated in registration order, first
// accept wins, otherwise the base classifier decides.
inline Label classify_cascade(std::span<const FewShotModel> models, std::span<const double> x,
                              const BasePredictor& base) {
    for (const auto& model : models) {
        if (margin(model, x) >= 0.0) return model.new_label();
    }
    return base.predict(x);
}

}  // namespace kfs
