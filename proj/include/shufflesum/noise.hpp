#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "shufflesum/rng.hpp"

namespace shufflesum {

// Shape r (the protocol uses r = 1/n) and magnitude alpha of the Polya
// distribution whose differences aggregate to discrete Laplace noise.
struct NoiseParams {
    double r;
    double alpha;

    NoiseParams(double r_, double alpha_) : r(r_), alpha(alpha_) {
        if (!(r > 0.0)) throw std::invalid_argument("shape r must be > 0");
        if (!(alpha >= 0.0 && alpha < 1.0))
            throw std::invalid_argument("alpha must lie in [0,1)");
    }
};

namespace detail {

// log of the Polya pmf at j: r*log(1-a) + j*log(a) + log C(j+r-1, j).
inline double log_polya_pmf(double r, double alpha, std::int64_t j) {
    if (alpha == 0.0) return j == 0 ? 0.0 : -INFINITY;
    return r * std::log1p(-alpha) + static_cast<double>(j) * std::log(alpha) +
           std::lgamma(static_cast<double>(j) + r) - std::lgamma(r) -
           std::lgamma(static_cast<double>(j) + 1.0);
}

}  // namespace detail

// Polya(r, alpha) pmf: C(j+r-1, j) * alpha^j * (1-alpha)^r, evaluated with
// the stable ratio recursion pmf(j+1) = pmf(j) * alpha*(j+r)/(j+1) from the
// base (1-alpha)^r. Falls back to log space when the base underflows.
inline double polya_pmf(double r, double alpha, std::int64_t j) {
    NoiseParams check(r, alpha);  // validates
    if (j < 0) throw std::invalid_argument("pmf index j must be >= 0");
    if (alpha == 0.0) return j == 0 ? 1.0 : 0.0;
    double p = std::exp(r * std::log1p(-alpha));
    if (p <= 0.0 || !std::isfinite(p))
        return std::exp(detail::log_polya_pmf(r, alpha, j));
    for (std::int64_t i = 0; i < j; ++i)
        p *= alpha * (static_cast<double>(i) + r) / (static_cast<double>(i) + 1.0);
    return p;
}

// Discrete Laplace pmf: ((1-alpha)/(1+alpha)) * alpha^|j|.
inline double dlap_pmf(double alpha, std::int64_t j) {
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in [0,1)");
    if (alpha == 0.0) return j == 0 ? 1.0 : 0.0;
    return (1.0 - alpha) / (1.0 + alpha) *
           std::pow(alpha, static_cast<double>(j < 0 ? -j : j));
}

enum class PolyaBackend {
    kInverseCdf,     // exact inverse-CDF walk over the pmf recursion
    kGammaPoisson,   // Gamma(r, alpha/(1-alpha)) mixed Poisson
};

// Sampler with precomputed constants; cheap to call in tight loops. The two
// backends are distributionally identical and cross-checked in tests.
class PolyaSampler {
  public:
    explicit PolyaSampler(NoiseParams params,
                          PolyaBackend backend = PolyaBackend::kInverseCdf)
        : params_(params), backend_(backend) {
        if (params_.alpha > 0.0) {
            base_pmf_ = std::exp(params_.r * std::log1p(-params_.alpha));
            gamma_scale_ = params_.alpha / (1.0 - params_.alpha);
        }
    }

    const NoiseParams& params() const { return params_; }

    template <RandomStream S>
    std::int64_t sample(S& rng) const {
        if (params_.alpha == 0.0) return 0;
        if (backend_ == PolyaBackend::kGammaPoisson) return sample_gamma_poisson(rng);
        return sample_inverse_cdf(rng);
    }

    // Difference of two independent Polya draws; symmetric about 0.
    template <RandomStream S>
    std::int64_t sample_difference(S& rng) const {
        return sample(rng) - sample(rng);
    }

  private:
    template <RandomStream S>
    std::int64_t sample_inverse_cdf(S& rng) const {
        const double u = uniform01(rng);
        double pmf = base_pmf_;
        if (pmf <= 0.0 || !std::isfinite(pmf))
            pmf = std::exp(detail::log_polya_pmf(params_.r, params_.alpha, 0));
        double cdf = pmf;
        std::int64_t j = 0;
        constexpr std::int64_t kMaxSteps = 1000000;
        while (u >= cdf) {
            if (j >= kMaxSteps)
                throw std::runtime_error(
                    "Polya inverse-CDF walk exceeded 10^6 steps; refusing to truncate");
            pmf *= params_.alpha * (static_cast<double>(j) + params_.r) /
                   (static_cast<double>(j) + 1.0);
            cdf += pmf;
            ++j;
        }
        return j;
    }

    template <RandomStream S>
    std::int64_t sample_gamma_poisson(S& rng) const {
        BitGenRef<S> gen{rng};
        std::gamma_distribution<double> gamma(params_.r, gamma_scale_);
        const double lambda = gamma(gen);
        if (lambda <= 0.0) return 0;
        std::poisson_distribution<std::int64_t> poisson(lambda);
        return poisson(gen);
    }

    NoiseParams params_;
    PolyaBackend backend_;
    double base_pmf_ = 1.0;
    double gamma_scale_ = 0.0;
};

template <RandomStream S>
std::int64_t sample_polya(const NoiseParams& params, S& rng,
                          PolyaBackend backend = PolyaBackend::kInverseCdf) {
    return PolyaSampler(params, backend).sample(rng);
}

template <RandomStream S>
std::int64_t sample_polya_difference(const NoiseParams& params, S& rng,
                                     PolyaBackend backend = PolyaBackend::kInverseCdf) {
    return PolyaSampler(params, backend).sample_difference(rng);
}

// Geometric number of failures with success probability 1-alpha.
template <RandomStream S>
std::int64_t sample_geometric(double alpha, S& rng) {
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in [0,1)");
    if (alpha == 0.0) return 0;
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    return static_cast<std::int64_t>(std::floor(std::log(u) / std::log(alpha)));
}

// DLap(alpha) as a difference of two independent geometrics; reference
// sampler used by the goodness-of-fit suites.
template <RandomStream S>
std::int64_t sample_discrete_laplace(double alpha, S& rng) {
    return sample_geometric(alpha, rng) - sample_geometric(alpha, rng);
}

}  // namespace shufflesum
