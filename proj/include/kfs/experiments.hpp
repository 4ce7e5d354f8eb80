#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "kfs/accum.hpp"
#include "kfs/bounds.hpp"
#include "kfs/errors.hpp"
#include "kfs/fewshot.hpp"
#include "kfs/kernel.hpp"
#include "kfs/parallel.hpp"
#include "kfs/profile.hpp"
#include "kfs/rng.hpp"
#include "kfs/sampling.hpp"
#include "kfs/stats.hpp"
#include "kfs/support.hpp"

namespace kfs {

struct UniformBallClass {
    std::vector<double> center;
    double radius;
};

struct UniformCubeClass {
    double half_width;
};

// Synthetic data satisfying the growth assumptions: with the linear kernel a
// uniform ball has A = 1, C = 1 and effective dimension exactly n, which is
// the regime the pass/fail verification runs in.
struct SyntheticScenario {
    std::size_t n;
    UniformBallClass x_class;  // centered at the origin
    std::variant<UniformBallClass, UniformCubeClass> y_class;
    Kernel kernel;

    void validate() const {
        if (n == 0) throw std::invalid_argument("scenario: n must be >= 1");
        if (x_class.center.size() != n) throw dimension_mismatch(n, x_class.center.size());
        for (double c : x_class.center) {
            if (c != 0.0) throw std::invalid_argument("scenario: x-class center must be the origin");
        }
        if (!(x_class.radius > 0.0)) throw std::invalid_argument("scenario: r_X must be positive");
        if (const auto* ball = std::get_if<UniformBallClass>(&y_class)) {
            if (ball->center.size() != n) throw dimension_mismatch(n, ball->center.size());
            if (!(ball->radius > 0.0)) throw std::invalid_argument("scenario: r_Y must be positive");
        } else if (!(std::get<UniformCubeClass>(y_class).half_width > 0.0)) {
            throw std::invalid_argument("scenario: half_width must be positive");
        }
    }

    const UniformBallClass& y_ball_or_throw(const char* who) const {
        const auto* ball = std::get_if<UniformBallClass>(&y_class);
        if (!ball || !std::holds_alternative<LinearKernel>(kernel)) {
            throw unsupported_regime(std::string(who) +
                                     ": requires the linear kernel and a uniform-ball Y class "
                                     "(the regime where C = A = 1 and beta = n are exact)");
        }
        return *ball;
    }
};

inline SyntheticScenario identity_ball_scenario(std::size_t n, double r_x,
                                                std::vector<double> c_y, double r_y) {
    SyntheticScenario s{n, UniformBallClass{std::vector<double>(n, 0.0), r_x},
                        UniformBallClass{std::move(c_y), r_y}, make_linear()};
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Figure-style estimators on the cube [-1,1]^n
// ---------------------------------------------------------------------------

struct QuasiOrthEstimate {
    Aggregate aggregate;
    std::uint64_t degenerate_resamples = 0;
};

// Frequency of |feature_cosine(x, y)| <= delta over independent pairs drawn
// uniformly from [-1,1]^n.
inline QuasiOrthEstimate estimate_pairwise_quasi_orth(const Kernel& kernel, std::size_t n,
                                                      double delta, std::uint64_t trials,
                                                      const RngStream& stream, int workers = 1) {
    if (trials < 1) throw std::invalid_argument("quasi-orth: trials must be >= 1");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("quasi-orth: delta in (0,1]");
    if (n == 0) throw std::invalid_argument("quasi-orth: n must be >= 1");
    std::vector<std::uint8_t> hits(trials, 0);
    std::vector<std::uint32_t> resamples(trials, 0);
    for_each_trial(trials, workers, [&](std::uint64_t t) {
        TrialRng rng = stream.trial(t);
        std::vector<double> x(n), y(n);
        for (;;) {
            sample_uniform_cube(1.0, rng, x);
            sample_uniform_cube(1.0, rng, y);
            if (eval(kernel, x, x) > 0.0 && eval(kernel, y, y) > 0.0) break;
            ++resamples[t];  // linear kernel at the exact origin; probability zero
        }
        hits[t] = std::abs(feature_cosine(kernel, x, y)) <= delta ? 1 : 0;
    });
    std::uint64_t successes = 0;
    std::uint64_t degenerate = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        successes += hits[t];
        degenerate += resamples[t];
    }
    return {Aggregate::from_counts(successes, trials), degenerate};
}

namespace detail {

// Kernel value from a raw dot product and the two squared norms, so slabs of
// pairwise products can be turned into kernel values in one pass.
inline double kernel_from_dot(const Kernel& kernel, double dot, double sq_a, double sq_b) {
    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LinearKernel>) {
                return dot;
            } else if constexpr (std::is_same_v<K, PolynomialKernel>) {
                return ipow(dot + 1.0, k.degree);
            } else {
                const double d2 = std::max(sq_a + sq_b - 2.0 * dot, 0.0);
                if constexpr (std::is_same_v<K, GaussianKernel>) {
                    return std::exp(-d2 / (2.0 * k.sigma * k.sigma));
                } else {
                    return std::exp(-k.alpha * std::sqrt(d2));
                }
            }
        },
        kernel);
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One separability trial: is x separated from the set Y by the mean-centered
// linear surface in feature space,
//   (phi(x) - mu, phi(x)) > (phi(x) - mu, phi(y))  for every y in Y,
// evaluated through the kernel trick as
//   k(x,x) - sbar(x) > k(x,y) - sbar(y),  sbar(z) = (1/|Y|) sum_j k(y_j, z).
// The kernel-mean column sums dominate the cost, so they are computed in
// lazily-grown Eigen slabs; the comparison scan early-exits on the first
// violating y.
inline bool mean_separated_impl(const Kernel& kernel, std::span<const double> x,
                                const RowMat& points) {
    const std::size_t n = x.size();
    const std::size_t set_size = static_cast<std::size_t>(points.rows());
    if (static_cast<std::size_t>(points.cols()) != n) {
        throw dimension_mismatch(n, static_cast<std::size_t>(points.cols()));
    }
    const double inv_m = 1.0 / static_cast<double>(set_size);
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd sq_norms = points.rowwise().squaredNorm();
    const double x_sq = xv.squaredNorm();
    const Eigen::VectorXd x_dots = points * xv;  // dot(y_j, x) for all j

    const double kxx = detail::kernel_from_dot(kernel, x_sq, x_sq, x_sq);
    std::vector<double> kxy(set_size);
    CompensatedSum sx;
    for (std::size_t j = 0; j < set_size; ++j) {
        kxy[j] = detail::kernel_from_dot(kernel, x_dots[static_cast<Eigen::Index>(j)], x_sq,
                                         sq_norms[static_cast<Eigen::Index>(j)]);
        sx.add(kxy[j]);
    }
    const double lhs = kxx - inv_m * sx.value();

    std::size_t done = 0;
    std::size_t block = 8;
    Eigen::MatrixXd slab;
    while (done < set_size) {
        const std::size_t count = std::min(block, set_size - done);
        slab.noalias() = points * points.middleRows(static_cast<Eigen::Index>(done),
                                                    static_cast<Eigen::Index>(count))
                                      .transpose();
        for (std::size_t c = 0; c < count; ++c) {
            const std::size_t j = done + c;
            CompensatedSum col;
            for (std::size_t l = 0; l < set_size; ++l) {
                col.add(detail::kernel_from_dot(
                    kernel, slab(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(c)),
                    sq_norms[static_cast<Eigen::Index>(l)],
                    sq_norms[static_cast<Eigen::Index>(j)]));
            }
            const double rhs = kxy[j] - inv_m * col.value();
            if (!(lhs > rhs)) return false;
            // Identical vectors have identical feature images; a strict
            // inequality between them can only be rounding noise.
            if (std::equal(x.begin(), x.end(), points.data() + j * n)) return false;
        }
        done += count;
        block *= 4;
    }
    return true;
}

}  // namespace detail

inline bool mean_separated(const Kernel& kernel, std::span<const double> x,
                           const std::vector<std::vector<double>>& ys) {
    if (ys.empty()) throw std::invalid_argument("mean_separated: Y must be non-empty");
    detail::RowMat points(static_cast<Eigen::Index>(ys.size()),
                          static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < ys.size(); ++j) {
        if (ys[j].size() != x.size()) throw dimension_mismatch(x.size(), ys[j].size());
        for (std::size_t d = 0; d < x.size(); ++d) {
            points(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d)) = ys[j][d];
        }
    }
    return detail::mean_separated_impl(kernel, x, points);
}

// Frequency of mean-centered separability over trials with x and Y drawn
// uniformly from [-1,1]^n.
inline Aggregate estimate_separability(const Kernel& kernel, std::size_t n, std::size_t set_size,
                                       std::uint64_t trials, const RngStream& stream,
                                       int workers = 1) {
    if (trials < 1) throw std::invalid_argument("separability: trials must be >= 1");
    if (set_size < 1) throw std::invalid_argument("separability: set_size must be >= 1");
    if (n == 0) throw std::invalid_argument("separability: n must be >= 1");

    std::vector<std::uint8_t> hits(trials, 0);
    for_each_trial(trials, workers, [&](std::uint64_t t) {
        TrialRng rng = stream.trial(t);
        std::vector<double> x(n);
        sample_uniform_cube(1.0, rng, x);
        detail::RowMat points(set_size, n);
        for (std::size_t j = 0; j < set_size; ++j) {
            std::span<double> row(points.data() + j * n, n);
            sample_uniform_cube(1.0, rng, row);
        }
        hits[t] = detail::mean_separated_impl(kernel, x, points) ? 1 : 0;
    });

    std::uint64_t successes = 0;
    for (std::uint64_t t = 0; t < trials; ++t) successes += hits[t];
    return Aggregate::from_counts(successes, trials);
}

// ---------------------------------------------------------------------------
// Bound verification in the identity-map regime
// ---------------------------------------------------------------------------

namespace detail {

inline BoundParams identity_params(const SyntheticScenario& scenario, double r_y, int k,
                                   double delta, double epsilon) {
    return BoundParams(1.0, r_y, k, delta, epsilon, 1.0, 1.0,
                       DimensionProfile::identity_map(static_cast<int>(scenario.n)));
}

}  // namespace detail

struct QuasiOrthVerification {
    VerifiedAggregate pairwise;        // event A1
    VerifiedAggregate pairwise_norms;  // event A1 and A2
};

inline QuasiOrthVerification verify_quasi_orth(const SyntheticScenario& scenario, int k,
                                               double delta, double epsilon, std::uint64_t trials,
                                               const RngStream& stream, int workers = 1) {
    scenario.validate();
    const auto& ball = scenario.y_ball_or_throw("verify_quasi_orth");
    if (trials < 1) throw std::invalid_argument("verify_quasi_orth: trials must be >= 1");
    const BoundParams params = detail::identity_params(scenario, ball.radius, k, delta, epsilon);

    const std::size_t n = scenario.n;
    const double ip_limit = delta * ball.radius;
    const double norm_limit = (1.0 - epsilon) * ball.radius;
    std::vector<std::uint8_t> a1_hit(trials, 0), both_hit(trials, 0);

    for_each_trial(trials, workers, [&](std::uint64_t t) {
        TrialRng rng = stream.trial(t);
        std::vector<double> centered(static_cast<std::size_t>(k) * n);
        std::vector<double> point(n);
        bool norms_ok = true;
        for (int i = 0; i < k; ++i) {
            sample_uniform_ball(ball.center, ball.radius, rng, point);
            double sq = 0.0;
            for (std::size_t d = 0; d < n; ++d) {
                const double c = point[d] - ball.center[d];
                centered[static_cast<std::size_t>(i) * n + d] = c;
                sq += c * c;
            }
            if (std::sqrt(sq) < norm_limit) norms_ok = false;
        }
        bool pairs_ok = true;
        for (int i = 0; i < k && pairs_ok; ++i) {
            for (int j = i + 1; j < k; ++j) {
                double ip = 0.0;
                for (std::size_t d = 0; d < n; ++d) {
                    ip += centered[static_cast<std::size_t>(i) * n + d] *
                          centered[static_cast<std::size_t>(j) * n + d];
                }
                if (std::abs(ip) > ip_limit) {
                    pairs_ok = false;
                    break;
                }
            }
        }
        a1_hit[t] = pairs_ok ? 1 : 0;
        both_hit[t] = (pairs_ok && norms_ok) ? 1 : 0;
    });

    std::uint64_t a1 = 0, both = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        a1 += a1_hit[t];
        both += both_hit[t];
    }
    return {VerifiedAggregate::check(Aggregate::from_counts(a1, trials), quasi_orth_bound(params)),
            VerifiedAggregate::check(Aggregate::from_counts(both, trials),
                                     quasi_orth_norm_bound(params))};
}

struct LhdVerification {
    VerifiedAggregate upper;      // ||mean - c_Y||^2 <= U
    VerifiedAggregate two_sided;  // L <= ||mean - c_Y||^2 <= U
    double u;
    double l;
};

inline LhdVerification verify_lhd(const SyntheticScenario& scenario, int k, double delta,
                                  double epsilon, std::uint64_t trials, const RngStream& stream,
                                  int workers = 1) {
    scenario.validate();
    const auto& ball = scenario.y_ball_or_throw("verify_lhd");
    if (trials < 1) throw std::invalid_argument("verify_lhd: trials must be >= 1");
    const BoundParams params = detail::identity_params(scenario, ball.radius, k, delta, epsilon);
    const double u = lhd_u(params);
    const double l = lhd_l(params);

    const std::size_t n = scenario.n;
    std::vector<std::uint8_t> upper_hit(trials, 0), both_hit(trials, 0);
    for_each_trial(trials, workers, [&](std::uint64_t t) {
        TrialRng rng = stream.trial(t);
        std::vector<double> mean(n, 0.0), point(n);
        for (int i = 0; i < k; ++i) {
            sample_uniform_ball(ball.center, ball.radius, rng, point);
            for (std::size_t d = 0; d < n; ++d) mean[d] += point[d];
        }
        double sq = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            const double c = mean[d] / k - ball.center[d];
            sq += c * c;
        }
        upper_hit[t] = sq <= u ? 1 : 0;
        both_hit[t] = (sq <= u && sq >= l) ? 1 : 0;
    });

    std::uint64_t up = 0, both = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        up += upper_hit[t];
        both += both_hit[t];
    }
    return {VerifiedAggregate::check(Aggregate::from_counts(up, trials), lhd_upper_prob(params)),
            VerifiedAggregate::check(Aggregate::from_counts(both, trials),
                                     lhd_two_sided_prob(params)),
            u, l};
}

struct FewShotVerification {
    VerifiedAggregate p_n;  // bound fields are means of the per-trial bounds
    VerifiedAggregate p_e;
    std::uint64_t fit_trials = 0;
    std::uint64_t eval_draws = 0;
    std::uint64_t infeasible_trials = 0;
    bool infeasible_flagged = false;  // more than 1% of fits infeasible
    double mean_theta = 0.0;
    double mean_separation = 0.0;
    double mean_d = 0.0;
};

// Per trial: draw a support sample from the Y ball, fit the rule, then
// estimate acceptance over fresh Y draws and base-preservation over fresh X
// draws (constant base predictor). Pooled frequencies are compared against
// the mean of the per-trial closed-form bounds.
inline FewShotVerification verify_fewshot(const SyntheticScenario& scenario, int k, double delta,
                                          const ThetaPolicy& theta_policy,
                                          std::uint64_t fit_trials, std::uint64_t eval_draws,
                                          const RngStream& stream, int workers = 1,
                                          bool normalized = true) {
    scenario.validate();
    const auto& ball = scenario.y_ball_or_throw("verify_fewshot");
    if (fit_trials < 1) throw std::invalid_argument("verify_fewshot: fit_trials must be >= 1");
    if (eval_draws < 1) throw std::invalid_argument("verify_fewshot: eval_draws must be >= 1");
    if (std::holds_alternative<ThetaOptimize>(theta_policy)) {
        throw std::invalid_argument("verify_fewshot: theta policy must be Fixed or MidRange");
    }
    const double r_y = ball.radius;
    const double r_x = scenario.x_class.radius;
    const std::size_t n = scenario.n;
    const BoundParams y_params = detail::identity_params(scenario, r_y, k, delta, 0.5);
    const BoundParams x_params = detail::identity_params(scenario, r_x, k, delta, 0.5);

    struct TrialOutcome {
        bool feasible = false;
        std::uint32_t pn_hits = 0;
        std::uint32_t pe_hits = 0;
        double pn_raw = 0.0, pn_clamped = 0.0;
        double pe_raw = 0.0, pe_clamped = 0.0;
        double theta = 0.0, separation = 0.0, d_stat = 0.0;
        std::string diagnostic;
    };
    std::vector<TrialOutcome> outcomes(fit_trials);

    for_each_trial(fit_trials, workers, [&](std::uint64_t t) {
        TrialRng rng = stream.trial(t);
        TrialOutcome& out = outcomes[t];
        std::vector<std::vector<double>> support_points;
        support_points.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            support_points.push_back(sample_uniform_ball(n, ball.center, r_y, rng));
        }
        SupportSample support(scenario.kernel, std::move(support_points), "new");
        std::optional<FewShotModel> model;
        try {
            model.emplace(fit(scenario.kernel, std::move(support), r_y, DeltaFixed{delta},
                              theta_policy));
        } catch (const infeasible_error& e) {
            out.diagnostic = e.what();
            return;
        } catch (const std::out_of_range& e) {
            out.diagnostic = e.what();  // fixed theta outside this trial's interval
            return;
        }
        out.feasible = true;
        out.theta = model->theta();
        out.separation = model->separation();
        out.d_stat = model->mean_norm();

        const BoundValue pn = p_n_bound(y_params, model->separation(), model->theta(), normalized);
        const BoundValue pe = p_e_bound(x_params, model->theta());
        out.pn_raw = pn.raw;
        out.pn_clamped = pn.clamped;
        out.pe_raw = pe.raw;
        out.pe_clamped = pe.clamped;

        std::vector<double> draw(n);
        const std::vector<double> origin(n, 0.0);
        for (std::uint64_t e = 0; e < eval_draws; ++e) {
            sample_uniform_ball(ball.center, r_y, rng, draw);
            if (margin(*model, draw) >= 0.0) ++out.pn_hits;
        }
        for (std::uint64_t e = 0; e < eval_draws; ++e) {
            sample_uniform_ball(origin, r_x, rng, draw);
            if (margin(*model, draw) < 0.0) ++out.pe_hits;
        }
    });

    std::uint64_t feasible = 0, pn_hits = 0, pe_hits = 0;
    CompensatedSum pn_raw, pn_clamped, pe_raw, pe_clamped, theta_sum, sep_sum, d_sum;
    std::string first_diagnostic;
    for (const auto& out : outcomes) {
        if (!out.feasible) {
            if (first_diagnostic.empty()) first_diagnostic = out.diagnostic;
            continue;
        }
        ++feasible;
        pn_hits += out.pn_hits;
        pe_hits += out.pe_hits;
        pn_raw.add(out.pn_raw);
        pn_clamped.add(out.pn_clamped);
        pe_raw.add(out.pe_raw);
        pe_clamped.add(out.pe_clamped);
        theta_sum.add(out.theta);
        sep_sum.add(out.separation);
        d_sum.add(out.d_stat);
    }
    if (feasible == 0) {
        throw std::runtime_error("verify_fewshot: every fit was infeasible; first diagnostic: " +
                                 first_diagnostic);
    }
    const double nf = static_cast<double>(feasible);
    auto mean_bound = [&](const CompensatedSum& raw, const CompensatedSum& clamped) {
        BoundValue b;
        b.raw = raw.value() / nf;
        b.clamped = clamped.value() / nf;
        b.vacuous = b.raw <= 0.0;
        return b;
    };
    FewShotVerification result;
    result.fit_trials = fit_trials;
    result.eval_draws = eval_draws;
    result.infeasible_trials = fit_trials - feasible;
    result.infeasible_flagged =
        static_cast<double>(result.infeasible_trials) > 0.01 * static_cast<double>(fit_trials);
    result.p_n = VerifiedAggregate::check(Aggregate::from_counts(pn_hits, feasible * eval_draws),
                                          mean_bound(pn_raw, pn_clamped));
    result.p_e = VerifiedAggregate::check(Aggregate::from_counts(pe_hits, feasible * eval_draws),
                                          mean_bound(pe_raw, pe_clamped));
    result.mean_theta = theta_sum.value() / nf;
    result.mean_separation = sep_sum.value() / nf;
    result.mean_d = d_sum.value() / nf;
    return result;
}

// ---------------------------------------------------------------------------
// Effective-dimension estimation from volume ratios
// ---------------------------------------------------------------------------

struct BallRegion {
    std::vector<double> center;
    double radius;
};
struct CubeRegion {
    double half_width;
};
using SamplingRegion = std::variant<BallRegion, CubeRegion>;

// Feature-space center: an explicit input-space point (identity map only) or
// the kernel mean of an anchor set, which any kernel can measure distances to.
struct ExplicitCenter {
    std::vector<double> point;
};
struct AnchorCenter {
    std::vector<std::vector<double>> anchors;
};
using FeatureCenter = std::variant<ExplicitCenter, AnchorCenter>;

struct BetaEstimate {
    struct Row {
        double radius;
        double volume_est;
        double beta_hat;  // local log-log slope of the segment ending here
        double ci_lo;
        double ci_hi;
    };
    std::optional<DimensionProfile> profile;  // absent when degenerate
    bool degenerate = false;
    double alpha_hat = 0.0;  // global least-squares slope of log V vs log r
    double alpha_ci_lo = 0.0;
    double alpha_ci_hi = 0.0;
    std::vector<Row> rows;
    std::uint64_t samples = 0;
};

namespace detail {

inline double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

struct SlopeSet {
    double alpha;
    std::vector<double> locals;  // locals[0] duplicates locals[1]
};

inline SlopeSet slopes_from_counts(const std::vector<double>& log_radii,
                                   const std::vector<double>& counts, double total) {
    std::vector<double> log_v(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        log_v[i] = std::log(counts[i] / total);
    }
    SlopeSet s;
    s.alpha = ls_slope(log_radii, log_v);
    s.locals.resize(counts.size());
    for (std::size_t i = 1; i < counts.size(); ++i) {
        s.locals[i] = (log_v[i] - log_v[i - 1]) / (log_radii[i] - log_radii[i - 1]);
    }
    s.locals[0] = s.locals.size() > 1 ? s.locals[1] : s.alpha;
    return s;
}

}  // namespace detail

// Monte Carlo volume-ratio estimator: V(r) is the fraction of region samples
// whose feature distance to the center is <= r; the decay exponent of V(r)
// is the effective dimension. For the linear kernel on a ball it must
// recover n.
inline BetaEstimate estimate_beta(const Kernel& kernel, std::size_t n,
                                  const SamplingRegion& region, const FeatureCenter& center,
                                  std::vector<double> radii, std::uint64_t samples,
                                  const RngStream& stream, int workers = 1,
                                  int bootstrap_resamples = 100) {
    if (radii.size() < 2) throw std::invalid_argument("estimate_beta: need at least 2 radii");
    if (radii.size() > 255) throw std::invalid_argument("estimate_beta: at most 255 radii");
    if (samples < 2) throw std::invalid_argument("estimate_beta: samples must be >= 2");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw std::invalid_argument("estimate_beta: radii must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1])) {
            throw std::invalid_argument("estimate_beta: radii must be strictly increasing");
        }
    }
    const auto* explicit_center = std::get_if<ExplicitCenter>(&center);
    if (explicit_center) {
        if (!std::holds_alternative<LinearKernel>(kernel)) {
            throw unsupported_regime(
                "estimate_beta: explicit feature-space centers require the linear kernel; "
                "supply an anchor set instead");
        }
        if (explicit_center->point.size() != n) {
            throw dimension_mismatch(n, explicit_center->point.size());
        }
    }
    const auto* anchor_center = std::get_if<AnchorCenter>(&center);
    double anchor_const = 0.0;
    if (anchor_center) {
        const auto& a = anchor_center->anchors;
        if (a.empty()) throw std::invalid_argument("estimate_beta: anchor set must be non-empty");
        CompensatedSum cross;
        for (const auto& ai : a) {
            if (ai.size() != n) throw dimension_mismatch(n, ai.size());
            for (const auto& aj : a) cross.add(eval(kernel, ai, aj));
        }
        const double m = static_cast<double>(a.size());
        anchor_const = cross.value() / (m * m);
    }
    if (const auto* ball = std::get_if<BallRegion>(&region)) {
        if (ball->center.size() != n) throw dimension_mismatch(n, ball->center.size());
        if (!(ball->radius > 0.0)) throw std::invalid_argument("estimate_beta: region radius > 0");
    } else if (!(std::get<CubeRegion>(region).half_width > 0.0)) {
        throw std::invalid_argument("estimate_beta: region half_width > 0");
    }

    constexpr std::uint64_t kBlock = 4096;
    const std::uint64_t blocks = (samples + kBlock - 1) / kBlock;
    const std::size_t n_radii = radii.size();

    // bin = index of the first radius >= distance (n_radii means beyond all)
    std::vector<std::uint8_t> bins(samples);
    std::vector<double> min_dist_per_block(blocks, std::numeric_limits<double>::infinity());

    for_each_trial(blocks, workers, [&](std::uint64_t b) {
        TrialRng rng = stream.trial(b);
        const std::uint64_t lo = b * kBlock;
        const std::uint64_t hi = std::min(samples, lo + kBlock);
        std::vector<double> x(n);
        double min_dist = std::numeric_limits<double>::infinity();
        for (std::uint64_t s = lo; s < hi; ++s) {
            if (const auto* ball = std::get_if<BallRegion>(&region)) {
                sample_uniform_ball(ball->center, ball->radius, rng, x);
            } else {
                sample_uniform_cube(std::get<CubeRegion>(region).half_width, rng, x);
            }
            double dist;
            if (explicit_center) {
                double sq = 0.0;
                for (std::size_t d = 0; d < n; ++d) {
                    const double c = x[d] - explicit_center->point[d];
                    sq += c * c;
                }
                dist = std::sqrt(sq);
            } else {
                CompensatedSum mean_k;
                for (const auto& a : anchor_center->anchors) mean_k.add(eval(kernel, a, x));
                const double m = static_cast<double>(anchor_center->anchors.size());
                const double sq =
                    eval(kernel, x, x) - 2.0 * mean_k.value() / m + anchor_const;
                dist = std::sqrt(std::max(sq, 0.0));
            }
            min_dist = std::min(min_dist, dist);
            const auto it = std::lower_bound(radii.begin(), radii.end(), dist);
            bins[s] = static_cast<std::uint8_t>(it - radii.begin());
        }
        min_dist_per_block[b] = min_dist;
    });

    std::vector<std::uint64_t> hist(n_radii + 1, 0);
    for (std::uint64_t s = 0; s < samples; ++s) ++hist[bins[s]];
    std::vector<double> counts(n_radii, 0.0);
    std::uint64_t cum = 0;
    for (std::size_t i = 0; i < n_radii; ++i) {
        cum += hist[i];
        counts[i] = static_cast<double>(cum);
    }
    if (counts.front() == 0.0) {
        const double min_dist =
            *std::min_element(min_dist_per_block.begin(), min_dist_per_block.end());
        throw std::domain_error("estimate_beta: no samples within radius " +
                                std::to_string(radii.front()) +
                                "; smallest observed feature distance is " +
                                std::to_string(min_dist));
    }

    std::vector<double> log_radii(n_radii);
    for (std::size_t i = 0; i < n_radii; ++i) log_radii[i] = std::log(radii[i]);
    const double total = static_cast<double>(samples);
    const detail::SlopeSet point_est = detail::slopes_from_counts(log_radii, counts, total);

    // Nonparametric bootstrap over stored per-sample bins, preserving the
    // cross-radius correlation of the nested indicator events.
    const int b_count = bootstrap_resamples;
    std::vector<double> alpha_b(static_cast<std::size_t>(b_count));
    std::vector<std::vector<double>> local_b(n_radii,
                                             std::vector<double>(static_cast<std::size_t>(b_count)));
    for_each_trial(static_cast<std::uint64_t>(b_count), workers, [&](std::uint64_t b) {
        TrialRng rng = stream.trial(blocks + b);
        std::vector<std::uint64_t> h(n_radii + 1, 0);
        for (std::uint64_t s = 0; s < samples; ++s) ++h[bins[rng.below(samples)]];
        std::vector<double> c(n_radii);
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < n_radii; ++i) {
            acc += h[i];
            // zero resampled counts get a continuity correction so the
            // log-log fit stays finite
            c[i] = acc == 0 ? 0.5 : static_cast<double>(acc);
        }
        const detail::SlopeSet resampled = detail::slopes_from_counts(log_radii, c, total);
        alpha_b[b] = resampled.alpha;
        for (std::size_t i = 0; i < n_radii; ++i) local_b[i][b] = resampled.locals[i];
    });

    auto percentile_pair = [b_count](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const auto lo = static_cast<std::size_t>(std::floor(0.025 * (b_count - 1)));
        const auto hi = static_cast<std::size_t>(std::ceil(0.975 * (b_count - 1)));
        return std::pair<double, double>(v[lo], v[hi]);
    };

    BetaEstimate result;
    result.samples = samples;
    result.alpha_hat = point_est.alpha;
    std::tie(result.alpha_ci_lo, result.alpha_ci_hi) = percentile_pair(alpha_b);
    result.rows.resize(n_radii);
    bool all_positive = true;
    for (std::size_t i = 0; i < n_radii; ++i) {
        auto& row = result.rows[i];
        row.radius = radii[i];
        row.volume_est = counts[i] / total;
        row.beta_hat = point_est.locals[i];
        std::tie(row.ci_lo, row.ci_hi) = percentile_pair(local_b[i]);
        if (!(row.beta_hat > 0.0)) all_positive = false;
    }
    result.degenerate = !(result.alpha_hat > 0.0) || !all_positive;
    if (!result.degenerate) {
        result.profile = DimensionProfile::tabulated(std::move(radii), point_est.locals,
                                                     "estimated from volume ratios");
    }
    return result;
}

}  // namespace kfs
