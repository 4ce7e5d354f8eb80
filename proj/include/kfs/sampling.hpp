#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "kfs/errors.hpp"
#include "kfs/rng.hpp"

namespace kfs {

// Exactly uniform on the ball: center + radius * u^(1/n) * g/||g|| with g
// standard normal and u uniform on (0,1).
inline void sample_uniform_ball(std::span<const double> center, double radius, TrialRng& rng,
                                std::span<double> out) {
    const std::size_t n = out.size();
    if (n == 0) throw std::invalid_argument("sample_uniform_ball: n must be >= 1");
    if (center.size() != n) throw dimension_mismatch(n, center.size());
    if (!(radius > 0.0)) throw std::invalid_argument("sample_uniform_ball: radius must be positive");
    rng.normals(out);
    double norm_sq = 0.0;
    for (double v : out) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    const double u = rng.uniform_open01();
    const double scale = radius * std::pow(u, 1.0 / static_cast<double>(n)) / norm;
    for (std::size_t i = 0; i < n; ++i) out[i] = center[i] + scale * out[i];
}

inline std::vector<double> sample_uniform_ball(std::size_t n, std::span<const double> center,
                                               double radius, TrialRng& rng) {
    std::vector<double> out(n);
    sample_uniform_ball(center, radius, rng, out);
    return out;
}

// Each coordinate independent uniform on [-half_width, half_width].
inline void sample_uniform_cube(double half_width, TrialRng& rng, std::span<double> out) {
    if (out.empty()) throw std::invalid_argument("sample_uniform_cube: n must be >= 1");
    if (!(half_width > 0.0)) {
        throw std::invalid_argument("sample_uniform_cube: half_width must be positive");
    }
    for (double& v : out) v = rng.uniform(-half_width, half_width);
}

inline std::vector<double> sample_uniform_cube(std::size_t n, double half_width, TrialRng& rng) {
    std::vector<double> out(n);
    sample_uniform_cube(half_width, rng, out);
    return out;
}

}  // namespace kfs
