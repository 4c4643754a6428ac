#pragma once
// Finite-sample machinery for univariate empirical measures: ECDF, quantile
// function (generalized inverse), tie-breaking jitter, and the exact squared
// Wasserstein-2 distance between two empirical distributions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fairmtl/errors.hpp"
#include "fairmtl/rng.hpp"

namespace fairmtl {

struct JitterConfig {
    double half_width = 0.001;  // u; draws are uniform on (-u, u)
    std::uint64_t seed = 0;
};

// Empirical distribution of a finite sample. The CDF is the right-continuous
// step function F(u) = #{x_i <= u} / n; the quantile is its generalized
// inverse Q(v) = inf{u : F(u) >= v}. The pair satisfies the Galois property
// Q(v) <= u  <=>  v <= F(u).
class EmpiricalDistribution {
public:
    EmpiricalDistribution() = default;

    explicit EmpiricalDistribution(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) fail(errc::empty_sample, "empirical distribution needs at least one value");
        for (double v : values_)
            if (!std::isfinite(v)) fail(errc::invalid_value, "empirical distribution values must be finite");
        std::sort(values_.begin(), values_.end());
    }

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    // sorted sample values (the support, with multiplicity)
    const std::vector<double>& values() const { return values_; }

    double min() const { return values_.front(); }
    double max() const { return values_.back(); }

    double cdf(double u) const {
        require_nonempty();
        const auto it = std::upper_bound(values_.begin(), values_.end(), u);
        return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
    }

    // smallest sample value whose CDF reaches v; v = 0 yields the minimum
    double quantile(double v) const {
        require_nonempty();
        if (!(v >= 0.0 && v <= 1.0)) fail(errc::invalid_probability, "quantile level must lie in [0,1]");
        std::size_t lo = 0, hi = values_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (cdf(values_[mid]) >= v)
                hi = mid;
            else
                lo = mid + 1;
        }
        return values_[lo];
    }

private:
    void require_nonempty() const {
        if (values_.empty()) fail(errc::empty_sample, "empirical distribution is empty");
    }

    std::vector<double> values_;
};

// Adds i.i.d. uniform noise on (-u, u) to every value; used to break ties so
// that empirical quantile maps act like proper transports. u = 0 is an exact
// identity (no draws are consumed).
inline std::vector<double> apply_jitter(const std::vector<double>& values, const JitterConfig& cfg) {
    if (!(cfg.half_width >= 0.0))
        fail(errc::invalid_config, "jitter half-width must be >= 0");
    std::vector<double> out(values);
    if (cfg.half_width == 0.0) return out;
    Rng rng(cfg.seed);
    for (double& v : out) v += rng.symmetric(cfg.half_width);
    return out;
}

// Exact squared Wasserstein-2 distance between two empirical measures,
// W2^2 = integral over (0,1] of (Q_a - Q_b)^2. Both quantile functions are
// piecewise constant, so the integral is a finite sum over the merged
// probability grid {i/n} union {j/m}; grid points are compared through
// cross-multiplied integer ranks, never through rounded divisions.
inline double wasserstein2_squared(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
    const std::vector<double>& x = a.values();
    const std::vector<double>& y = b.values();
    const std::size_t n = x.size(), m = y.size();
    if (n == m) {
        // aligned grids: mean squared difference of the sorted samples
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x[i] - y[i];
            acc += d * d;
        }
        return acc / static_cast<double>(n);
    }
    double acc = 0.0;
    double pos = 0.0;  // probability mass already integrated
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        const std::uint64_t ra = static_cast<std::uint64_t>(i + 1) * m;  // (i+1)/n vs (j+1)/m
        const std::uint64_t rb = static_cast<std::uint64_t>(j + 1) * n;
        double next;
        const double d = x[i] - y[j];
        if (ra <= rb)
            next = static_cast<double>(i + 1) / static_cast<double>(n);
        else
            next = static_cast<double>(j + 1) / static_cast<double>(m);
        acc += (next - pos) * d * d;
        pos = next;
        if (ra <= rb) ++i;
        if (rb <= ra) ++j;
    }
    return acc;
}

}  // namespace fairmtl
