#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kfs/experiments.hpp"

using namespace kfs;

namespace {
constexpr std::uint64_t kSeed = 0xbead5ULL;
}

TEST_CASE("pairwise quasi-orthogonality estimator") {
    SECTION("delta = 1 accepts every pair") {
        const auto est = estimate_pairwise_quasi_orth(make_gaussian(1.0), 3, 1.0, 300,
                                                      RngStream(kSeed, 1));
        CHECK(est.aggregate.frequency == 1.0);
    }
    SECTION("narrow gaussian makes typical pairs quasi-orthogonal") {
        const auto est = estimate_pairwise_quasi_orth(make_gaussian(0.1), 5, 0.1, 2000,
                                                      RngStream(kSeed, 2));
        CHECK(est.aggregate.frequency >= 0.99);
    }
    SECTION("linear-kernel frequency rises with dimension") {
        double prev_lo = -1.0;
        for (std::size_t n : {2u, 10u, 50u, 200u}) {
            const auto est = estimate_pairwise_quasi_orth(make_linear(), n, 0.2, 1000,
                                                          RngStream(kSeed, 3 + n));
            CHECK(est.aggregate.ci_hi >= prev_lo);  // no significant decrease
            prev_lo = est.aggregate.ci_lo;
        }
    }
    SECTION("validation") {
        CHECK_THROWS_AS(
            estimate_pairwise_quasi_orth(make_linear(), 3, 0.2, 0, RngStream(kSeed, 9)),
            std::invalid_argument);
        CHECK_THROWS_AS(
            estimate_pairwise_quasi_orth(make_linear(), 3, 1.5, 10, RngStream(kSeed, 9)),
            std::invalid_argument);
    }
}

TEST_CASE("mean-centered separability predicate") {
    const std::vector<double> x{0.3, -0.4};

    SECTION("a point is never separated from itself") {
        for (const auto& kernel :
             {make_linear(), make_polynomial(2), make_gaussian(1.0), make_laplacian(1.0)}) {
            CHECK_FALSE(mean_separated(kernel, x, {{0.3, -0.4}}));
        }
    }
    SECTION("two distinct points always separate under the gaussian kernel") {
        CHECK(mean_separated(make_gaussian(1.0), x, {{0.1, 0.9}}));
        const auto agg =
            estimate_separability(make_gaussian(1.0), 4, 1, 500, RngStream(kSeed, 10));
        CHECK(agg.frequency == 1.0);
    }
    SECTION("a surrounded point is not separable") {
        // x at the centroid of a symmetric cloud: lhs equals 0, violations exist
        const std::vector<double> origin{0.0, 0.0};
        CHECK_FALSE(mean_separated(make_linear(), origin,
                                   {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}));
    }
    SECTION("separability frequency rises with dimension") {
        double prev_lo = -1.0;
        for (std::size_t n : {2u, 10u, 50u}) {
            const auto agg = estimate_separability(make_linear(), n, 200, 300,
                                                   RngStream(kSeed, 20 + n));
            CHECK(agg.ci_hi >= prev_lo);
            prev_lo = agg.ci_lo;
        }
    }
}

TEST_CASE("verify_quasi_orth") {
    SECTION("k = 1 has no pairs and the norm event follows the volume law") {
        const std::size_t n = 10;
        const double epsilon = 0.2;
        const auto scenario =
            identity_ball_scenario(n, 1.0, std::vector<double>(n, 0.0), 1.0);
        const auto v =
            verify_quasi_orth(scenario, 1, 0.5, epsilon, 5000, RngStream(kSeed, 30));
        CHECK(v.pairwise.empirical.frequency == 1.0);
        const double expected = 1.0 - std::pow(1.0 - epsilon, static_cast<double>(n));
        CHECK_THAT(v.pairwise_norms.empirical.frequency,
                   Catch::Matchers::WithinAbs(expected,
                                              3.0 * v.pairwise_norms.empirical.half_width() +
                                                  0.01));
    }
    SECTION("bounds hold in the exact regime") {
        const auto scenario =
            identity_ball_scenario(100, 1.0, std::vector<double>(100, 0.0), 1.0);
        const auto v = verify_quasi_orth(scenario, 5, 0.5, 0.1, 2000, RngStream(kSeed, 31));
        CHECK(v.pairwise.pass);
        CHECK(v.pairwise_norms.pass);
        CHECK_THAT(v.pairwise.bound.raw,
                   Catch::Matchers::WithinRel(1.0 - 20.0 * std::pow(0.75, 50), 1e-12));
    }
    SECTION("A1 frequency falls with k and rises with delta") {
        const auto scenario =
            identity_ball_scenario(20, 1.0, std::vector<double>(20, 0.0), 1.0);
        Aggregate small_k =
            verify_quasi_orth(scenario, 2, 0.3, 0.1, 2000, RngStream(kSeed, 32)).pairwise.empirical;
        Aggregate big_k =
            verify_quasi_orth(scenario, 8, 0.3, 0.1, 2000, RngStream(kSeed, 33)).pairwise.empirical;
        CHECK(big_k.ci_lo <= small_k.ci_hi);
        CHECK(big_k.frequency <= small_k.frequency + 2.0 * (small_k.half_width() + big_k.half_width()));

        Aggregate small_d =
            verify_quasi_orth(scenario, 5, 0.2, 0.1, 2000, RngStream(kSeed, 34)).pairwise.empirical;
        Aggregate big_d =
            verify_quasi_orth(scenario, 5, 0.6, 0.1, 2000, RngStream(kSeed, 35)).pairwise.empirical;
        CHECK(big_d.ci_hi >= small_d.ci_lo);
    }
    SECTION("unsupported regimes are rejected") {
        SyntheticScenario bad{4, UniformBallClass{std::vector<double>(4, 0.0), 1.0},
                              UniformBallClass{std::vector<double>(4, 0.0), 1.0},
                              make_gaussian(1.0)};
        CHECK_THROWS_AS(verify_quasi_orth(bad, 3, 0.5, 0.1, 10, RngStream(kSeed, 36)),
                        unsupported_regime);
        SyntheticScenario cube{4, UniformBallClass{std::vector<double>(4, 0.0), 1.0},
                               UniformCubeClass{1.0}, make_linear()};
        CHECK_THROWS_AS(verify_quasi_orth(cube, 3, 0.5, 0.1, 10, RngStream(kSeed, 36)),
                        unsupported_regime);
        const auto scenario =
            identity_ball_scenario(4, 1.0, std::vector<double>(4, 0.0), 1.0);
        CHECK_THROWS_AS(verify_quasi_orth(scenario, 3, 1.0, 0.1, 10, RngStream(kSeed, 36)),
                        std::invalid_argument);  // delta outside (0,1)
    }
}

TEST_CASE("verify_lhd") {
    SECTION("k = 1 upper event always holds") {
        const auto scenario =
            identity_ball_scenario(6, 1.0, std::vector<double>(6, 0.0), 1.0);
        const auto v = verify_lhd(scenario, 1, 0.5, 0.1, 2000, RngStream(kSeed, 40));
        CHECK(v.upper.empirical.frequency == 1.0);
        CHECK(v.u == 1.0);
    }
    SECTION("negative L makes the two-sided event match the upper event") {
        const auto scenario =
            identity_ball_scenario(30, 1.0, std::vector<double>(30, 0.0), 1.0);
        const auto v = verify_lhd(scenario, 5, 0.5, 0.1, 3000, RngStream(kSeed, 41));
        REQUIRE(v.l < 0.0);
        CHECK(v.two_sided.empirical.successes == v.upper.empirical.successes);
    }
    SECTION("bounds hold in the exact regime") {
        const auto scenario =
            identity_ball_scenario(100, 1.0, std::vector<double>(100, 0.0), 1.0);
        const auto v = verify_lhd(scenario, 5, 0.5, 0.1, 2000, RngStream(kSeed, 42));
        CHECK(v.upper.pass);
        CHECK(v.two_sided.pass);
        CHECK_THAT(v.u, Catch::Matchers::WithinRel(0.6, 1e-12));
    }
}

TEST_CASE("verify_fewshot") {
    SECTION("well-separated classes reach near-perfect rates") {
        std::vector<double> c_y(40, 0.0);
        c_y[0] = 10.0;
        const auto scenario = identity_ball_scenario(40, 1.0, c_y, 1.0);
        const auto v = verify_fewshot(scenario, 5, 0.2, ThetaMidRange{}, 30, 200,
                                      RngStream(kSeed, 50));
        CHECK(v.p_n.empirical.frequency >= 0.99);
        CHECK(v.p_e.empirical.frequency >= 0.99);
        CHECK(v.p_n.pass);
        CHECK(v.p_e.pass);
        CHECK(v.infeasible_trials == 0);
    }
    SECTION("base preservation improves as theta grows") {
        std::vector<double> c_y(30, 0.0);
        c_y[0] = 2.0;
        const auto scenario = identity_ball_scenario(30, 1.0, c_y, 1.0);
        const auto lo_theta = verify_fewshot(scenario, 4, 0.3, ThetaFixed{0.9}, 40, 300,
                                             RngStream(kSeed, 51));
        const auto hi_theta = verify_fewshot(scenario, 4, 0.3, ThetaFixed{1.3}, 40, 300,
                                             RngStream(kSeed, 51));
        CHECK(hi_theta.p_e.empirical.frequency >=
              lo_theta.p_e.empirical.frequency - 3.0 * lo_theta.p_e.empirical.half_width());
        CHECK(hi_theta.p_n.empirical.frequency <=
              lo_theta.p_n.empirical.frequency + 3.0 * lo_theta.p_n.empirical.half_width());
    }
    SECTION("infeasible fits are counted and flagged") {
        std::vector<double> c_y(10, 0.0);
        c_y[0] = 0.87;
        const auto scenario = identity_ball_scenario(10, 1.0, c_y, 1.0);
        const auto v = verify_fewshot(scenario, 2, 0.5, ThetaMidRange{}, 60, 50,
                                      RngStream(kSeed, 52));
        CHECK(v.infeasible_trials > 0);
        CHECK(v.infeasible_trials < 60);
        CHECK(v.infeasible_flagged);
    }
    SECTION("a hopeless scenario reports total infeasibility") {
        const auto scenario =
            identity_ball_scenario(10, 1.0, std::vector<double>(10, 0.0), 1.0);
        CHECK_THROWS_WITH(verify_fewshot(scenario, 1, 0.5, ThetaMidRange{}, 20, 10,
                                         RngStream(kSeed, 53)),
                          Catch::Matchers::ContainsSubstring("infeasible"));
    }
}

TEST_CASE("estimate_beta") {
    SECTION("linear kernel on the unit ball recovers n") {
        const std::size_t n = 6;
        const auto est = estimate_beta(
            make_linear(), n, BallRegion{std::vector<double>(n, 0.0), 1.0},
            ExplicitCenter{std::vector<double>(n, 0.0)}, {0.5, 0.75, 1.0}, 100000,
            RngStream(kSeed, 60));
        CHECK_FALSE(est.degenerate);
        CHECK_THAT(est.alpha_hat, Catch::Matchers::WithinAbs(6.0, 0.3));
        CHECK(est.alpha_ci_lo <= est.alpha_hat);
        CHECK(est.alpha_ci_hi >= est.alpha_hat);
        REQUIRE(est.profile.has_value());
        CHECK_THAT(beta_at(*est.profile, 0.9), Catch::Matchers::WithinAbs(6.0, 0.5));
        // V(0.5)/V(1.0) should be close to 2^-6
        CHECK_THAT(est.rows[0].volume_est / est.rows[2].volume_est,
                   Catch::Matchers::WithinAbs(std::pow(0.5, 6.0), 0.004));
        CHECK(est.rows[2].volume_est == 1.0);
    }
    SECTION("flat volume curves are flagged degenerate") {
        const std::size_t n = 4;
        const auto est = estimate_beta(
            make_linear(), n, BallRegion{std::vector<double>(n, 0.0), 1.0},
            ExplicitCenter{std::vector<double>(n, 0.0)}, {2.0, 3.0}, 5000,
            RngStream(kSeed, 61));
        CHECK(est.degenerate);
        CHECK(est.alpha_hat == 0.0);
        CHECK_FALSE(est.profile.has_value());
    }
    SECTION("an unreachable radius reports the smallest observed distance") {
        const std::size_t n = 8;
        CHECK_THROWS_WITH(
            estimate_beta(make_linear(), n, BallRegion{std::vector<double>(n, 0.0), 1.0},
                          ExplicitCenter{std::vector<double>(n, 0.0)}, {1e-7, 1.0}, 20000,
                          RngStream(kSeed, 62)),
            Catch::Matchers::ContainsSubstring("smallest observed"));
    }
    SECTION("anchor centers agree with explicit centers for the linear kernel") {
        const std::size_t n = 5;
        std::vector<double> c(n, 0.1);
        const auto explicit_est = estimate_beta(
            make_linear(), n, BallRegion{std::vector<double>(n, 0.0), 1.0}, ExplicitCenter{c},
            {0.6, 0.8, 1.0}, 40000, RngStream(kSeed, 63));
        const auto anchor_est = estimate_beta(
            make_linear(), n, BallRegion{std::vector<double>(n, 0.0), 1.0}, AnchorCenter{{c}},
            {0.6, 0.8, 1.0}, 40000, RngStream(kSeed, 63));
        CHECK_THAT(anchor_est.alpha_hat,
                   Catch::Matchers::WithinAbs(explicit_est.alpha_hat, 1e-6));
    }
    SECTION("non-linear kernels require anchors") {
        const std::size_t n = 4;
        CHECK_THROWS_AS(
            estimate_beta(make_gaussian(1.0), n, CubeRegion{1.0},
                          ExplicitCenter{std::vector<double>(n, 0.0)}, {0.5, 1.0}, 1000,
                          RngStream(kSeed, 64)),
            unsupported_regime);
        // with anchors it runs and reports an exploratory estimate
        const auto est = estimate_beta(
            make_gaussian(1.0), n, CubeRegion{1.0},
            AnchorCenter{{std::vector<double>(n, 0.0)}}, {0.5, 0.8, 1.1}, 20000,
            RngStream(kSeed, 65));
        CHECK(est.rows.size() == 3);
    }
}

TEST_CASE("experiments replay identically across worker counts") {
    const auto scenario =
        identity_ball_scenario(25, 1.0, std::vector<double>(25, 0.0), 1.0);
    const auto v1 = verify_quasi_orth(scenario, 4, 0.4, 0.2, 800, RngStream(kSeed, 70), 1);
    const auto v3 = verify_quasi_orth(scenario, 4, 0.4, 0.2, 800, RngStream(kSeed, 70), 3);
    CHECK(v1.pairwise.empirical.successes == v3.pairwise.empirical.successes);
    CHECK(v1.pairwise_norms.empirical.successes == v3.pairwise_norms.empirical.successes);

    const auto s1 = estimate_separability(make_gaussian(1.0), 8, 50, 400, RngStream(kSeed, 71), 1);
    const auto s4 = estimate_separability(make_gaussian(1.0), 8, 50, 400, RngStream(kSeed, 71), 4);
    CHECK(s1.successes == s4.successes);

    const auto b1 = estimate_beta(make_linear(), 5, BallRegion{std::vector<double>(5, 0.0), 1.0},
                                  ExplicitCenter{std::vector<double>(5, 0.0)}, {0.5, 1.0}, 30000,
                                  RngStream(kSeed, 72), 1);
    const auto b2 = estimate_beta(make_linear(), 5, BallRegion{std::vector<double>(5, 0.0), 1.0},
                                  ExplicitCenter{std::vector<double>(5, 0.0)}, {0.5, 1.0}, 30000,
                                  RngStream(kSeed, 72), 2);
    CHECK(b1.alpha_hat == b2.alpha_hat);
    CHECK(b1.alpha_ci_lo == b2.alpha_ci_lo);
    CHECK(b1.rows[0].volume_est == b2.rows[0].volume_est);
}
