#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "kfs/errors.hpp"

namespace kfs {

struct LinearKernel {
    friend bool operator==(const LinearKernel&, const LinearKernel&) = default;
};

struct PolynomialKernel {
    int degree = 1;  // ((x,y)+1)^degree
    friend bool operator==(const PolynomialKernel&, const PolynomialKernel&) = default;
};

struct GaussianKernel {
    double sigma = 1.0;  // exp(-||x-y||^2 / (2 sigma^2))
    friend bool operator==(const GaussianKernel&, const GaussianKernel&) = default;
};

struct LaplacianKernel {
    double alpha = 1.0;  // exp(-alpha ||x-y||)
    friend bool operator==(const LaplacianKernel&, const LaplacianKernel&) = default;
};

using Kernel = std::variant<LinearKernel, PolynomialKernel, GaussianKernel, LaplacianKernel>;

inline Kernel make_linear() { return LinearKernel{}; }

inline Kernel make_polynomial(int degree) {
    if (degree < 1) throw std::invalid_argument("polynomial kernel requires degree >= 1");
    return PolynomialKernel{degree};
}

inline Kernel make_gaussian(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian kernel requires sigma > 0");
    return GaussianKernel{sigma};
}

inline Kernel make_laplacian(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("laplacian kernel requires alpha > 0");
    return LaplacianKernel{alpha};
}

namespace detail {

inline void check_same_dim(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw dimension_mismatch(x.size(), y.size());
}

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double dist_sq(std::span<const double> x, std::span<const double> y) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

// base^e by binary exponentiation; deterministic across platforms.
inline double ipow(double base, int e) noexcept {
    double result = 1.0;
    double b = base;
    for (int k = e; k > 0; k >>= 1) {
        if (k & 1) result *= b;
        b *= b;
    }
    return result;
}

}  // namespace detail

inline double eval(const Kernel& kernel, std::span<const double> x, std::span<const double> y) {
    detail::check_same_dim(x, y);
    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LinearKernel>) {
                return detail::dot(x, y);
            } else if constexpr (std::is_same_v<K, PolynomialKernel>) {
                return detail::ipow(detail::dot(x, y) + 1.0, k.degree);
            } else if constexpr (std::is_same_v<K, GaussianKernel>) {
                return std::exp(-detail::dist_sq(x, y) / (2.0 * k.sigma * k.sigma));
            } else {
                return std::exp(-k.alpha * std::sqrt(detail::dist_sq(x, y)));
            }
        },
        kernel);
}

// ||phi(x) - phi(y)||^2 via the kernel trick. Values in [-1e-9, 0) are
// round-off and clamp to 0; anything lower signals a non-PSD bug.
inline double feature_distance_sq(const Kernel& kernel, std::span<const double> x,
                                  std::span<const double> y) {
    const double v = eval(kernel, x, x) - 2.0 * eval(kernel, x, y) + eval(kernel, y, y);
    if (v < 0.0) {
        if (v < -1e-9) throw psd_violation(v);
        return 0.0;
    }
    return v;
}

inline double feature_cosine(const Kernel& kernel, std::span<const double> x,
                             std::span<const double> y) {
    const double kxx = eval(kernel, x, x);
    const double kyy = eval(kernel, y, y);
    if (!(kxx > 0.0) || !(kyy > 0.0)) {
        throw degenerate_input("feature_cosine: zero self-kernel (linear kernel at the origin)");
    }
    return eval(kernel, x, y) / std::sqrt(kxx * kyy);
}

inline std::string kernel_name(const Kernel& kernel) {
    return std::visit(
        [](const auto& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LinearKernel>) return "linear";
            else if constexpr (std::is_same_v<K, PolynomialKernel>) return "polynomial";
            else if constexpr (std::is_same_v<K, GaussianKernel>) return "gaussian";
            else return "laplacian";
        },
        kernel);
}

// Spec string: linear | polynomial:<degree> | gaussian:<sigma> | laplacian:<alpha>.
// Used for CLI flags, CSV cells and model files (no commas, CSV-safe).
inline std::string format_kernel(const Kernel& kernel, int precision) {
    return std::visit(
        [&](const auto& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            char buf[64];
            if constexpr (std::is_same_v<K, LinearKernel>) {
                return "linear";
            } else if constexpr (std::is_same_v<K, PolynomialKernel>) {
                return "polynomial:" + std::to_string(k.degree);
            } else if constexpr (std::is_same_v<K, GaussianKernel>) {
                std::snprintf(buf, sizeof(buf), "gaussian:%.*g", precision, k.sigma);
                return buf;
            } else {
                std::snprintf(buf, sizeof(buf), "laplacian:%.*g", precision, k.alpha);
                return buf;
            }
        },
        kernel);
}

inline std::string format_kernel(const Kernel& kernel) { return format_kernel(kernel, 17); }

inline Kernel parse_kernel(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto parse_param = [&](const char* what) -> double {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), v);
        if (ec != std::errc{} || p != arg.data() + arg.size()) {
            throw std::invalid_argument(std::string("kernel spec '") + spec + "': bad " + what);
        }
        return v;
    };
    if (head == "linear") {
        if (!arg.empty()) throw std::invalid_argument("linear kernel takes no parameter");
        return make_linear();
    }
    if (head == "polynomial" || head == "poly") {
        int d = 0;
        const auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), d);
        if (ec != std::errc{} || p != arg.data() + arg.size()) {
            throw std::invalid_argument("kernel spec '" + spec + "': bad degree");
        }
        return make_polynomial(d);
    }
    if (head == "gaussian" || head == "gauss") return make_gaussian(parse_param("sigma"));
    if (head == "laplacian" || head == "laplace") return make_laplacian(parse_param("alpha"));
    throw std::invalid_argument("unknown kernel spec '" + spec + "'");
}

}  // namespace kfs
