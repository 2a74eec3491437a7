#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "shufflesum/protocol.hpp"

namespace shufflesum {

enum class PlanVariant { kPaperLiteral, kImprovedConstants };
enum class SigmaRule { kPaperLiteral, kExactLemma4 };

struct PlanMode {
    PlanVariant variant = PlanVariant::kPaperLiteral;
    SigmaRule sigma_rule = SigmaRule::kPaperLiteral;
};

inline std::uint64_t ceil_log2(std::uint64_t q) {
    if (q < 2) throw std::invalid_argument("ceil_log2 requires q >= 2");
    return std::bit_width(q - 1);
}

// Smallest sigma meeting the target delta.
//   exact rule: smallest integer with (1+e^eps)*2^(-sigma-1) <= delta
//   paper-literal rule: sigma = ceil(log2(1/delta))
inline std::uint32_t sigma_from_delta(double epsilon, double delta,
                                      SigmaRule rule = SigmaRule::kPaperLiteral) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("delta must lie in (0,1)");
    double sigma;
    if (rule == SigmaRule::kExactLemma4) {
        sigma = std::ceil(std::log2(1.0 + std::exp(epsilon)) - std::log2(delta) - 1.0);
    } else {
        sigma = std::ceil(-std::log2(delta));
    }
    if (sigma < 1.0) sigma = 1.0;
    return static_cast<std::uint32_t>(sigma);
}

// k = 2 + 5*ceil(log2 q) + ceil(2*sigma + 2*log2(n-1)).
inline std::uint64_t message_count_basic(std::uint64_t q, std::uint32_t sigma,
                                         std::uint64_t n) {
    if (sigma < 1) throw std::invalid_argument("sigma must be >= 1");
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    const double tail = 2.0 * sigma + 2.0 * std::log2(static_cast<double>(n - 1));
    return 2 + 5 * ceil_log2(q) + static_cast<std::uint64_t>(std::ceil(tail));
}

// Alternative ceiling grouping of the same count:
// k = 2 + 5*ceil(log2 q) + 2*ceil(log2(1/delta) + log2(n-1)).
inline std::uint64_t message_count_theorem_grouping(std::uint64_t q, double delta,
                                                    std::uint64_t n) {
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    const double tail = -std::log2(delta) + std::log2(static_cast<double>(n - 1));
    return 2 + 5 * ceil_log2(q) + 2 * static_cast<std::uint64_t>(std::ceil(tail));
}

// Sharper count from the binomial bound C(2k,k) >= 4^k / sqrt(pi*(k+1/2)):
// iterate k = 1 + sigma + 5*ceil(log2 q)/2 + (1/4)*log2(pi*(k+1/2)) to its
// root, add log2(n-1), take the ceiling.
inline std::uint64_t message_count_improved(std::uint64_t q, std::uint32_t sigma,
                                            std::uint64_t n) {
    if (sigma < 1) throw std::invalid_argument("sigma must be >= 1");
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    const double fixed = 1.0 + sigma + 5.0 * static_cast<double>(ceil_log2(q)) / 2.0;
    double k = fixed;
    for (int iter = 0; iter < 200; ++iter) {
        const double next = fixed + 0.25 * std::log2(std::numbers::pi * (k + 0.5));
        if (std::abs(next - k) < 1e-9) {
            k = next;
            break;
        }
        k = next;
        if (iter == 199)
            throw std::runtime_error("message-count fixed point failed to converge");
    }
    return static_cast<std::uint64_t>(
        std::ceil(k + std::log2(static_cast<double>(n - 1))));
}

// Predicted MSE of the estimate in real-sum units:
// (2*alpha/(1-alpha)^2)/p^2 + n/(4*p^2). The first term is the DLap variance
// on the integer grid, rescaled by 1/p^2 to match the output scale.
inline double predicted_mse(const ProtocolParams& params) {
    if (!(params.alpha < 1.0)) throw std::invalid_argument("alpha must be < 1");
    const double p2 = static_cast<double>(params.p) * static_cast<double>(params.p);
    const double a = params.alpha;
    const double dlap_var = a == 0.0 ? 0.0 : 2.0 * a / ((1.0 - a) * (1.0 - a));
    return dlap_var / p2 + static_cast<double>(params.n) / (4.0 * p2);
}

// Same expression without the 1/p^2 rescaling of the noise term (the
// integer-grid reading); reported for reference alongside the value above.
inline double predicted_mse_grid_units(const ProtocolParams& params) {
    if (!(params.alpha < 1.0)) throw std::invalid_argument("alpha must be < 1");
    const double p2 = static_cast<double>(params.p) * static_cast<double>(params.p);
    const double a = params.alpha;
    const double dlap_var = a == 0.0 ? 0.0 : 2.0 * a / ((1.0 - a) * (1.0 - a));
    return dlap_var + static_cast<double>(params.n) / (4.0 * p2);
}

struct SdBound {
    double simplified;  // (n-1) * 2^(-k/2 + 1 + 5*ceil(log2 q)/2), clamped to 1
    double exact;       // (n-1) * 2q^2 * sqrt(2^ceil(log2 q) / C(2k,k)), clamped
};

// Statistical-distance bound on equal-sum views, in both the simplified and
// exact-binomial forms. Values are clamped into (0, 1].
inline SdBound sd_bound(std::uint64_t k, std::uint64_t q, std::uint64_t n) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    const double L = static_cast<double>(ceil_log2(q));
    const double parties = static_cast<double>(n - 1);
    const double simplified =
        parties * std::exp2(-static_cast<double>(k) / 2.0 + 1.0 + 5.0 * L / 2.0);
    // log2 C(2k,k) via lgamma keeps the huge binomials in range.
    const double kd = static_cast<double>(k);
    const double log2_binom =
        (std::lgamma(2.0 * kd + 1.0) - 2.0 * std::lgamma(kd + 1.0)) / std::numbers::ln2;
    const double qd = static_cast<double>(q);
    const double exact =
        parties * 2.0 * qd * qd * std::exp2((L - log2_binom) / 2.0);
    return {std::min(1.0, simplified), std::min(1.0, exact)};
}

struct PlanReport {
    ProtocolParams params{};
    PlanMode mode{};
    double predicted_mse = 0.0;
    double predicted_mse_grid_units = 0.0;
    std::uint64_t bits_per_party = 0;
    double sd_bound_simplified = 1.0;
    double sd_bound_exact = 1.0;
    double delta_achieved = 0.0;
    std::uint64_t k_alternate_grouping = 0;  // Theorem-style ceiling of the basic count
};

inline std::uint64_t isqrt_ceil(std::uint64_t n) {
    std::uint64_t r = static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    while (r * r < n) ++r;
    while (r >= 1 && (r - 1) * (r - 1) >= n) --r;
    return r;
}

// Derive a full parameter set from (n, epsilon, delta):
// p = ceil(sqrt(n)), q = 2np, alpha = e^(-epsilon/p), sigma per sigma_rule,
// k per variant, plus the predicted error, communication, and security
// bounds for the resulting instance.
inline PlanReport plan(std::uint64_t n, double epsilon, double delta,
                       PlanMode mode = {}) {
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("delta must lie in (0,1)");

    PlanReport report;
    report.mode = mode;
    ProtocolParams& pp = report.params;
    pp.n = n;
    pp.p = isqrt_ceil(n);
    pp.q = 2 * n * pp.p;
    pp.alpha = std::exp(-epsilon / static_cast<double>(pp.p));
    pp.epsilon = epsilon;
    pp.delta = delta;
    pp.sigma = sigma_from_delta(epsilon, delta, mode.sigma_rule);
    pp.k = mode.variant == PlanVariant::kImprovedConstants
               ? message_count_improved(pp.q, pp.sigma, n)
               : message_count_basic(pp.q, pp.sigma, n);
    pp.validate();

    report.predicted_mse = shufflesum::predicted_mse(pp);
    report.predicted_mse_grid_units = shufflesum::predicted_mse_grid_units(pp);
    report.bits_per_party = pp.k * ceil_log2(pp.q);
    const SdBound sd = sd_bound(pp.k, pp.q, n);
    report.sd_bound_simplified = sd.simplified;
    report.sd_bound_exact = sd.exact;
    report.delta_achieved =
        mode.sigma_rule == SigmaRule::kExactLemma4
            ? (1.0 + std::exp(epsilon)) * std::exp2(-static_cast<double>(pp.sigma) - 1.0)
            : std::exp2(-static_cast<double>(pp.sigma));
    report.k_alternate_grouping = message_count_theorem_grouping(pp.q, delta, n);
    return report;
}

}  // namespace shufflesum
