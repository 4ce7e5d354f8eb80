#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace kfs {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Draw handle for one trial. Transforms are hand-rolled on top of the raw
// 64-bit stream so the sequence does not depend on the standard library's
// distribution implementations.
class TrialRng {
public:
    explicit TrialRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // [0, 1)
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // (0, 1): strictly positive, safe under log()
    double uniform_open01() {
        return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t below(std::uint64_t bound) { return engine_() % bound; }

    // Box-Muller; fills pairs, always consuming two uniforms per pair.
    void normals(std::span<double> out) {
        std::size_t i = 0;
        while (i + 1 < out.size()) {
            const auto [a, b] = normal_pair();
            out[i++] = a;
            out[i++] = b;
        }
        if (i < out.size()) out[i] = normal_pair().first;
    }

    double normal() { return normal_pair().first; }

private:
    std::pair<double, double> normal_pair() {
        const double u1 = uniform_open01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * 3.14159265358979323846 * u2;
        return {r * std::cos(t), r * std::sin(t)};
    }

    std::mt19937_64 engine_;
};

// Identifies (master_seed, stream_id). Trial t always derives the same
// substream from (master_seed, stream_id, t), so replays are exact across
// runs and across any number of workers.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id) {}

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    TrialRng trial(std::uint64_t trial_index) const {
        std::uint64_t s = detail::splitmix64(master_seed_);
        s = detail::splitmix64(s ^ stream_id_);
        s = detail::splitmix64(s ^ trial_index);
        return TrialRng(s);
    }

    RngStream substream(std::uint64_t child_id) const {
        return RngStream(master_seed_, detail::splitmix64(stream_id_ ^ (child_id + 1)));
    }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
};

}  // namespace kfs
