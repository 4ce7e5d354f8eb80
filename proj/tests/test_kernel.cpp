#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kfs/kernel.hpp"
#include "kfs/rng.hpp"
#include "oracles.hpp"

using namespace kfs;

namespace {
const std::vector<Kernel> all_kernels = {make_linear(), make_polynomial(2), make_polynomial(3),
                                         make_gaussian(0.7), make_laplacian(1.3)};
}

TEST_CASE("eval matches the closed forms") {
    const std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
    CHECK(eval(make_linear(), e1, e2) == 0.0);

    const std::vector<double> v{3.0, -2.0, 5.0};
    CHECK(eval(make_gaussian(0.7), v, v) == 1.0);

    const std::vector<double> a{1.0, 1.0}, b{1.0, 0.0};
    CHECK(eval(make_polynomial(2), a, b) == 4.0);  // ((1)+1)^2

    const std::vector<double> o{0.0, 0.0}, ex{1.0, 0.0};
    CHECK_THAT(eval(make_laplacian(1.0), o, ex),
               Catch::Matchers::WithinRel(std::exp(-1.0), 1e-15));
}

TEST_CASE("eval rejects dimension mismatches") {
    const std::vector<double> x{1.0, 2.0}, y{1.0, 2.0, 3.0};
    for (const auto& k : all_kernels) CHECK_THROWS_AS(eval(k, x, y), dimension_mismatch);
}

TEST_CASE("kernel parameter validation") {
    CHECK_THROWS_AS(make_polynomial(0), std::invalid_argument);
    CHECK_THROWS_AS(make_gaussian(0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_gaussian(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_laplacian(0.0), std::invalid_argument);
}

TEST_CASE("kernel symmetry and range over random pairs") {
    RngStream stream(0x5eedULL, 1);
    for (std::uint64_t t = 0; t < 200; ++t) {
        TrialRng rng = stream.trial(t);
        const std::size_t n = 1 + static_cast<std::size_t>(rng.below(6));
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        for (auto& v : y) v = rng.uniform(-1.0, 1.0);
        for (const auto& k : all_kernels) {
            CHECK(eval(k, x, y) == eval(k, y, x));
        }
        for (const auto& k : {make_gaussian(0.7), make_laplacian(1.3)}) {
            CHECK(eval(k, x, x) == 1.0);
            const double v = eval(k, x, y);
            CHECK(v > 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("polynomial degree 1 is the linear kernel plus one") {
    RngStream stream(0x5eedULL, 2);
    for (std::uint64_t t = 0; t < 100; ++t) {
        TrialRng rng = stream.trial(t);
        std::vector<double> x(3), y(3);
        for (auto& v : x) v = rng.uniform(0.0, 1.0);  // (x,y) >= 0
        for (auto& v : y) v = rng.uniform(0.0, 1.0);
        CHECK_THAT(eval(make_polynomial(1), x, y),
                   Catch::Matchers::WithinRel(eval(make_linear(), x, y) + 1.0, 1e-15));
    }
}

TEST_CASE("feature_distance_sq") {
    const std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
    for (const auto& k : all_kernels) {
        CHECK(feature_distance_sq(k, e1, e1) == 0.0);
    }
    CHECK(feature_distance_sq(make_linear(), e1, e2) == 2.0);

    RngStream stream(0x5eedULL, 3);
    for (std::uint64_t t = 0; t < 200; ++t) {
        TrialRng rng = stream.trial(t);
        std::vector<double> x(4), y(4);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        for (auto& v : y) v = rng.uniform(-1.0, 1.0);
        const double d = feature_distance_sq(make_gaussian(1.0), x, y);
        CHECK(d > 0.0);
        CHECK(d < 2.0);
        for (const auto& k : all_kernels) CHECK(feature_distance_sq(k, x, y) >= 0.0);
    }
}

TEST_CASE("feature_cosine") {
    const std::vector<double> a{2.0, 0.0}, b{0.0, 3.0};
    for (const auto& k : all_kernels) {
        CHECK_THAT(feature_cosine(k, a, a), Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
    CHECK(feature_cosine(make_linear(), a, b) == 0.0);

    const std::vector<double> o{0.0, 0.0}, x2{2.0, 0.0};
    CHECK_THAT(feature_cosine(make_gaussian(1.0), o, x2),
               Catch::Matchers::WithinRel(std::exp(-2.0), 1e-15));
    CHECK_THROWS_AS(feature_cosine(make_linear(), o, x2), degenerate_input);

    RngStream stream(0x5eedULL, 4);
    for (std::uint64_t t = 0; t < 300; ++t) {
        TrialRng rng = stream.trial(t);
        std::vector<double> x(5), y(5);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        for (auto& v : y) v = rng.uniform(-1.0, 1.0);
        for (const auto& k : all_kernels) {
            const double c = feature_cosine(k, x, y);
            CHECK(c >= -1.0 - 1e-12);
            CHECK(c <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("kernel trick matches explicit monomial features") {
    for (int degree : {1, 2, 3}) {
        for (std::size_t n : {2u, 3u, 4u}) {
            const kfs_test::MonomialFeatureMap phi(n, degree);
            const Kernel kernel = make_polynomial(degree);
            RngStream stream(0xfacadeULL, degree * 10 + static_cast<int>(n));
            double worst = 0.0;
            for (std::uint64_t t = 0; t < 1000; ++t) {
                TrialRng rng = stream.trial(t);
                std::vector<double> x(n), y(n);
                for (auto& v : x) v = rng.uniform(-1.0, 1.0);
                for (auto& v : y) v = rng.uniform(-1.0, 1.0);
                const double via_features =
                    kfs_test::MonomialFeatureMap::inner(phi.map(x), phi.map(y));
                worst = std::max(worst, std::abs(via_features - eval(kernel, x, y)));
            }
            CHECK(worst <= 1e-10);
        }
    }
    // identity map: explicit features are the inputs themselves
    RngStream stream(0xfacadeULL, 99);
    for (std::uint64_t t = 0; t < 1000; ++t) {
        TrialRng rng = stream.trial(t);
        std::vector<double> x(4), y(4);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        for (auto& v : y) v = rng.uniform(-1.0, 1.0);
        double dot = 0.0;
        for (std::size_t i = 0; i < 4; ++i) dot += x[i] * y[i];
        CHECK_THAT(eval(make_linear(), x, y), Catch::Matchers::WithinAbs(dot, 1e-10));
    }
}

TEST_CASE("kernel spec strings round-trip") {
    for (const auto& k : all_kernels) {
        CHECK(parse_kernel(format_kernel(k)) == k);
    }
    CHECK(parse_kernel("linear") == make_linear());
    CHECK(parse_kernel("poly:2") == make_polynomial(2));
    CHECK(parse_kernel("gauss:1.5") == make_gaussian(1.5));
    CHECK(parse_kernel("laplace:0.25") == make_laplacian(0.25));
    CHECK_THROWS_AS(parse_kernel("rbf:1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel("gaussian:abc"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel("linear:1"), std::invalid_argument);
}
