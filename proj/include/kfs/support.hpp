#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kfs/accum.hpp"
#include "kfs/errors.hpp"
#include "kfs/kernel.hpp"

namespace kfs {

using Label = std::string;

// The k labelled points of the new class, with the Gram matrix computed once
// at construction and cached (k stays small, so O(k^2) storage buys O(1) reuse).
class SupportSample {
public:
    SupportSample(Kernel kernel, std::vector<std::vector<double>> points, Label label)
        : kernel_(std::move(kernel)), label_(std::move(label)) {
        if (points.empty()) throw std::invalid_argument("support sample needs k >= 1 points");
        dim_ = points.front().size();
        if (dim_ == 0) throw std::invalid_argument("support points must have dimension >= 1");
        k_ = points.size();
        flat_.reserve(k_ * dim_);
        for (const auto& p : points) {
            if (p.size() != dim_) throw dimension_mismatch(dim_, p.size());
            flat_.insert(flat_.end(), p.begin(), p.end());
        }
        gram_.resize(k_ * k_);
        for (std::size_t i = 0; i < k_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = eval(kernel_, point(i), point(j));
                gram_[i * k_ + j] = v;
                gram_[j * k_ + i] = v;
            }
        }
        CompensatedSum total;
        for (double g : gram_) total.add(g);
        gram_sum_ = total.value();
    }

    std::size_t size() const noexcept { return k_; }
    std::size_t dim() const noexcept { return dim_; }
    const Kernel& kernel() const noexcept { return kernel_; }
    const Label& label() const noexcept { return label_; }

    std::span<const double> point(std::size_t i) const noexcept {
        return {flat_.data() + i * dim_, dim_};
    }

    double gram(std::size_t i, std::size_t j) const noexcept { return gram_[i * k_ + j]; }
    double gram_sum() const noexcept { return gram_sum_; }

private:
    Kernel kernel_;
    Label label_;
    std::size_t k_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> flat_;
    std::vector<double> gram_;
    double gram_sum_ = 0.0;
};

namespace detail {

inline void check_same_kernel(const Kernel& kernel, const SupportSample& sample) {
    if (!(kernel == sample.kernel())) {
        throw std::invalid_argument("kernel does not match the one the Gram cache was built with");
    }
}

}  // namespace detail

// (1/k) sum_i kernel(x_i, x): the feature-space inner product of the empirical
// feature mean with phi(x). Compensated sum, so permuting Z moves the result
// by well under 1e-12.
inline double mean_score(const Kernel& kernel, const SupportSample& sample,
                         std::span<const double> x) {
    detail::check_same_kernel(kernel, sample);
    if (x.size() != sample.dim()) throw dimension_mismatch(sample.dim(), x.size());
    CompensatedSum acc;
    for (std::size_t i = 0; i < sample.size(); ++i) acc.add(eval(kernel, sample.point(i), x));
    return acc.value() / static_cast<double>(sample.size());
}

// D(Z) = (1/k) sqrt(sum_ij gram[i][j]) = the norm of the empirical feature mean.
inline double d_statistic(const Kernel& kernel, const SupportSample& sample) {
    detail::check_same_kernel(kernel, sample);
    double s = sample.gram_sum();
    if (s < 0.0) {
        if (s < -1e-9) throw psd_violation(s);
        s = 0.0;
    }
    return std::sqrt(s) / static_cast<double>(sample.size());
}

}  // namespace kfs
