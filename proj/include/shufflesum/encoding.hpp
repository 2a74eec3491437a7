#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "shufflesum/rng.hpp"

namespace shufflesum {

// Fixed-point encoding of x in [0,1] with randomized rounding:
// floor(x*p) + Ber(x*p - floor(x*p)). Unbiased: E[encode(x,p)] = x*p.
// Fractional parts within 2^-40 of an endpoint are snapped so that integral
// x*p encodes deterministically despite float dust.
template <RandomStream S>
std::uint64_t encode(double x, std::uint64_t p, S& rng) {
    if (p < 1) throw std::invalid_argument("precision p must be >= 1");
    if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("input must lie in [0,1]");
    const double xp = x * static_cast<double>(p);
    double fl = std::floor(xp);
    double frac = xp - fl;
    constexpr double snap = 0x1.0p-40;
    if (frac < snap) {
        frac = 0.0;
    } else if (frac > 1.0 - snap) {
        fl += 1.0;
        frac = 0.0;
    }
    auto out = static_cast<std::uint64_t>(fl);
    if (frac > 0.0 && bernoulli(rng, frac)) out += 1;
    return out;
}

// Upper bound n/(4p^2) on the MSE of sum(encode(x_i,p))/p versus sum(x_i).
inline double rounding_mse_bound(std::uint64_t n, std::uint64_t p) {
    if (n < 1 || p < 1) throw std::invalid_argument("n and p must be >= 1");
    const double pd = static_cast<double>(p);
    return static_cast<double>(n) / (4.0 * pd * pd);
}

}  // namespace shufflesum
