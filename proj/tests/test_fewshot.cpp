#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kfs/fewshot.hpp"
#include "kfs/rng.hpp"
#include "kfs/sampling.hpp"

using namespace kfs;

namespace {

SupportSample gaussian_single(Label label = "new") {
    return SupportSample(make_gaussian(1.0), {{0.3, -0.2}}, std::move(label));
}

}  // namespace

TEST_CASE("fit with a single gaussian support point") {
    const Kernel g = make_gaussian(1.0);
    const auto model = fit(g, gaussian_single(), 0.5, DeltaFixed{0.5});
    CHECK(model.mean_norm() == 1.0);
    CHECK_THAT(model.separation(), Catch::Matchers::WithinRel(0.5, 1e-12));
    CHECK_THAT(model.theta(), Catch::Matchers::WithinRel(0.25, 1e-12));  // midrange of [0, 0.5]
    const auto [lo, hi] = model.theta_interval();
    CHECK(lo == 0.0);
    CHECK_THAT(hi, Catch::Matchers::WithinRel(0.5, 1e-12));
}

TEST_CASE("fit infeasibility carries diagnostics") {
    const Kernel g = make_gaussian(1.0);
    CHECK_THROWS_AS(fit(g, gaussian_single(), 2.0, DeltaFixed{0.5}), infeasible_error);
    try {
        fit(g, gaussian_single(), 2.0, DeltaFixed{0.5});
    } catch (const infeasible_error& e) {
        CHECK(e.d_stat() == 1.0);
        CHECK_THAT(e.required_d(), Catch::Matchers::WithinRel(2.0, 1e-12));  // sqrt(r^2/1)
        CHECK(e.best_separation() < 0.0);
    }
}

TEST_CASE("identical support points behave like k = 1 in the first term") {
    const Kernel g = make_gaussian(1.0);
    SupportSample z(g, {{0.1, 0.4}, {0.1, 0.4}, {0.1, 0.4}}, "new");
    const double delta = 0.3;
    const auto model = fit(g, z, 0.5, DeltaFixed{delta});
    CHECK_THAT(model.mean_norm(), Catch::Matchers::WithinRel(1.0, 1e-12));
    const double expected =
        1.0 - std::sqrt(0.25 / 3.0 + (2.0 / 3.0) * 0.5 * delta);
    CHECK_THAT(model.separation(), Catch::Matchers::WithinRel(expected, 1e-12));
}

TEST_CASE("fixed theta is validated against the admissible interval") {
    const Kernel g = make_gaussian(1.0);
    CHECK_THROWS_AS(fit(g, gaussian_single(), 0.5, DeltaFixed{0.5}, ThetaFixed{0.6}),
                    std::out_of_range);
    CHECK_THROWS_AS(fit(g, gaussian_single(), 0.5, DeltaFixed{0.5}, ThetaFixed{-0.1}),
                    std::out_of_range);
    const auto model = fit(g, gaussian_single(), 0.5, DeltaFixed{0.5}, ThetaFixed{0.5});
    CHECK(model.theta() == 0.5);  // upper endpoint allowed
}

TEST_CASE("classify on support and far points") {
    const Kernel g = make_gaussian(1.0);
    const auto model = fit(g, gaussian_single(), 0.5, DeltaFixed{0.5});  // theta = 0.25 < 1
    const ConstantPredictor base("base");

    const std::vector<double> support_point{0.3, -0.2};
    CHECK(classify(model, support_point, base) == "new");
    CHECK_THAT(margin(model, support_point),
               Catch::Matchers::WithinRel(1.0 - 0.25, 1e-12));

    const std::vector<double> far{250.0, 250.0};
    CHECK(classify(model, far, base) == "base");
}

TEST_CASE("margin of exactly zero assigns the new label") {
    const Kernel lin = make_linear();
    SupportSample z(lin, {{1.0, 0.0}}, "new");
    const auto model = fit(lin, z, 0.5, DeltaFixed{0.5}, ThetaFixed{0.5});
    // mean_score((0.5, anything)) = 0.5 = theta * D exactly
    const std::vector<double> boundary{0.5, 7.0};
    CHECK(margin(model, boundary) == 0.0);
    const ConstantPredictor base("base");
    CHECK(classify(model, boundary, base) == "new");
}

TEST_CASE("margin equals mean_score at theta zero, and -theta*D off-support") {
    const Kernel g = make_gaussian(1.0);
    const auto model = fit(g, gaussian_single(), 0.8, DeltaFixed{0.5}, ThetaFixed{0.0});
    const std::vector<double> q{1.0, 1.0};
    CHECK(margin(model, q) == mean_score(g, model.support(), q));
    CHECK(margin(model, q) > 0.0);

    const Kernel lin = make_linear();
    SupportSample z(lin, {{1.0, 0.0}}, "new");
    const auto m2 = fit(lin, z, 0.9, DeltaFixed{0.5}, ThetaFixed{0.05});
    const std::vector<double> orth{0.0, 1.0};
    CHECK_THAT(margin(m2, orth), Catch::Matchers::WithinAbs(-0.05, 1e-15));
}

TEST_CASE("decision consistency: new label iff margin >= 0") {
    const Kernel g = make_gaussian(0.8);
    SupportSample z(g, {{0.5, 0.0, 0.1}, {0.4, 0.1, -0.1}, {0.6, -0.1, 0.0}}, "new");
    const auto model = fit(g, z, 0.6, DeltaFixed{0.4});
    const ConstantPredictor base("base");
    RngStream stream(0x7777ULL, 0);
    TrialRng rng = stream.trial(0);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                              rng.uniform(-2.0, 2.0)};
        const bool accepted = classify(model, x, base) == "new";
        CHECK(accepted == (margin(model, x) >= 0.0));
    }
}

TEST_CASE("acceptance rate is non-increasing in theta") {
    const Kernel g = make_gaussian(1.0);
    SupportSample z(g, {{0.2, 0.1}, {0.0, 0.3}}, "new");
    RngStream stream(0x7777ULL, 1);
    TrialRng rng = stream.trial(0);
    std::vector<std::vector<double>> sample;
    for (int i = 0; i < 400; ++i) {
        sample.push_back({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
    }
    const auto probe = fit(g, z, 0.7, DeltaFixed{0.5});
    const auto [lo, hi] = probe.theta_interval();
    double prev_rate = 2.0;
    for (int step = 0; step <= 8; ++step) {
        const double theta = lo + (hi - lo) * step / 8.0;
        const auto model = fit(g, z, 0.7, DeltaFixed{0.5}, ThetaFixed{theta});
        int accepted = 0;
        for (const auto& x : sample) {
            if (margin(model, x) >= 0.0) ++accepted;
        }
        const double rate = accepted / 400.0;
        CHECK(rate <= prev_rate);
        prev_rate = rate;
    }
}

TEST_CASE("margins stay in [-theta D, 1 - theta D] for bounded kernels") {
    for (const Kernel& kernel : {make_gaussian(0.9), make_laplacian(1.2)}) {
        SupportSample z(kernel, {{0.2, 0.1}, {0.0, 0.3}, {-0.1, 0.2}}, "new");
        const auto model = fit(kernel, z, 0.7, DeltaFixed{0.5});
        const double lo = -model.theta() * model.mean_norm();
        const double hi = 1.0 - model.theta() * model.mean_norm();
        RngStream stream(0x7777ULL, 2);
        TrialRng rng = stream.trial(0);
        for (int i = 0; i < 300; ++i) {
            std::vector<double> x{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
            const double m = margin(model, x);
            CHECK(m >= lo - 1e-12);
            CHECK(m <= hi + 1e-12);
        }
    }
}

TEST_CASE("optimizing policies produce admissible models") {
    const Kernel lin = make_linear();
    SupportSample z(lin, {{2.0, 0.1, 0.0}, {1.9, -0.1, 0.1}, {2.1, 0.0, -0.1}}, "new");
    const auto profile = DimensionProfile::constant(50.0);
    const BoundParams yp(1.0, 1.0, 3, 0.5, 0.1, 1.0, 1.0, profile);
    const BoundParams xp(1.0, 1.0, 3, 0.5, 0.1, 1.0, 1.0, profile);

    const auto opt = fit(lin, z, 1.0, DeltaOptimize{yp, xp, GridSpec{64}},
                         ThetaOptimize{yp, xp, GridSpec{64}});
    const auto [lo, hi] = opt.theta_interval();
    CHECK(opt.theta() >= lo);
    CHECK(opt.theta() <= hi);
    CHECK(opt.separation() > 0.0);

    // delta optimized, theta midrange
    const auto mid = fit(lin, z, 1.0, DeltaOptimize{yp, xp, GridSpec{64}}, ThetaMidRange{});
    const auto [mlo, mhi] = mid.theta_interval();
    CHECK_THAT(mid.theta(), Catch::Matchers::WithinRel(0.5 * (mlo + mhi), 1e-12));

    // fixed delta, theta optimized over the 1-D grid
    const auto fixed = fit(lin, z, 1.0, DeltaFixed{0.3}, ThetaOptimize{yp, xp, GridSpec{64}});
    const auto [flo, fhi] = fixed.theta_interval();
    CHECK(fixed.theta() >= flo);
    CHECK(fixed.theta() <= fhi);
}

TEST_CASE("cascade evaluates models in registration order") {
    const Kernel g = make_gaussian(1.0);
    std::vector<FewShotModel> models;
    models.push_back(fit(g, SupportSample(g, {{5.0, 5.0}}, "alpha"), 0.5, DeltaFixed{0.5}));
    models.push_back(fit(g, SupportSample(g, {{5.1, 5.1}}, "beta"), 0.5, DeltaFixed{0.5}));
    const ConstantPredictor base("base");

    // near both supports: the first registered model wins
    const std::vector<double> near{5.05, 5.05};
    REQUIRE(margin(models[0], near) >= 0.0);
    REQUIRE(margin(models[1], near) >= 0.0);
    CHECK(classify_cascade(models, near, base) == "alpha");

    const std::vector<double> far{-40.0, -40.0};
    CHECK(classify_cascade(models, far, base) == "base");

    // a point only the second model accepts
    TrialRng rng = RngStream(0x7777ULL, 3).trial(0);
    bool exercised = false;
    for (int i = 0; i < 2000 && !exercised; ++i) {
        std::vector<double> x{rng.uniform(4.0, 6.5), rng.uniform(4.0, 6.5)};
        if (margin(models[0], x) < 0.0 && margin(models[1], x) >= 0.0) {
            CHECK(classify_cascade(models, x, base) == "beta");
            exercised = true;
        }
    }
    CHECK(exercised);
}
