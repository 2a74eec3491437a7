#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "shufflesum/planner.hpp"
#include "shufflesum/protocol.hpp"

namespace shufflesum {

// Worker pool size: SHUFFLE_SUM_THREADS caps hardware concurrency.
inline unsigned worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("SHUFFLE_SUM_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned long>(cap) < hw)
            hw = static_cast<unsigned>(cap);
    }
    return hw;
}

// Runs f(begin, end) over a partition of [0, count); results must be written
// to disjoint, index-addressed storage so the schedule cannot matter.
template <class F>
void parallel_for(std::uint64_t count, F f) {
    const unsigned workers = worker_count();
    if (workers <= 1 || count < 2 * workers) {
        f(std::uint64_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t begin = w * chunk;
        const std::uint64_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(f, begin, end);
    }
    for (auto& t : pool) t.join();
}

inline double chi_square_p_value(double statistic, std::uint64_t df) {
    if (df == 0) return 1.0;
    const boost::math::chi_squared dist(static_cast<double>(df));
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

struct FitResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double tv_estimate = 0.0;
    std::uint64_t samples = 0;
};

// Chi-square goodness of fit of an integer histogram against a pmf.
// Out-of-range pmf mass goes to the two tail bins and bins are merged until
// every expected count is >= 5. The TV estimate is the plug-in
// (1/2)*sum|emp - pmf| including the unobserved tail mass.
inline FitResult goodness_of_fit(const std::map<std::int64_t, std::uint64_t>& hist,
                                 const std::function<double(std::int64_t)>& pmf,
                                 std::uint64_t samples) {
    if (samples == 0) throw std::invalid_argument("no samples");
    FitResult result;
    result.samples = samples;
    if (hist.empty()) throw std::invalid_argument("empty histogram");

    const std::int64_t lo = hist.begin()->first;
    const std::int64_t hi = hist.rbegin()->first;
    const double ns = static_cast<double>(samples);

    std::vector<double> observed, expected;
    double range_mass = 0.0, tv = 0.0;
    for (std::int64_t j = lo; j <= hi; ++j) {
        const auto it = hist.find(j);
        const double obs = it == hist.end() ? 0.0 : static_cast<double>(it->second);
        const double mass = pmf(j);
        observed.push_back(obs);
        expected.push_back(mass * ns);
        range_mass += mass;
        tv += std::abs(obs / ns - mass);
    }
    const double tail_mass = std::max(0.0, 1.0 - range_mass);
    result.tv_estimate = 0.5 * (tv + tail_mass);
    // split the unobserved tail between the end bins
    expected.front() += 0.5 * tail_mass * ns;
    expected.back() += 0.5 * tail_mass * ns;

    // merge under-filled bins into a neighbor until all expectations are >= 5
    while (expected.size() > 1) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < expected.size(); ++i)
            if (expected[i] < expected[worst]) worst = i;
        if (expected[worst] >= 5.0) break;
        const std::size_t into = worst == 0 ? 1 : worst - 1;
        expected[into] += expected[worst];
        observed[into] += observed[worst];
        expected.erase(expected.begin() + static_cast<std::ptrdiff_t>(worst));
        observed.erase(observed.begin() + static_cast<std::ptrdiff_t>(worst));
    }

    double stat = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double d = observed[i] - expected[i];
        stat += d * d / expected[i];
    }
    result.statistic = stat;
    result.p_value = chi_square_p_value(stat, expected.size() - 1);
    return result;
}

// Fit of `samples` sums of n Polya(1/n, alpha) differences against
// DLap(alpha); the infinite-divisibility claim at finite sample size.
inline FitResult divisibility_fit(std::uint64_t n, double alpha, std::uint64_t samples,
                                  std::uint64_t seed,
                                  PolyaBackend backend = PolyaBackend::kInverseCdf) {
    if (samples < 10000) throw std::invalid_argument("need at least 10^4 samples");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    const PolyaSampler sampler(NoiseParams(1.0 / static_cast<double>(n), alpha), backend);

    std::vector<std::int64_t> sums(samples);
    parallel_for(samples, [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t s = begin; s < end; ++s) {
            DeterministicStream rng(derive_seed(seed, s));
            std::int64_t total = 0;
            for (std::uint64_t i = 0; i < n; ++i) total += sampler.sample_difference(rng);
            sums[s] = total;
        }
    });
    std::map<std::int64_t, std::uint64_t> hist;
    for (std::int64_t s : sums) ++hist[s];
    return goodness_of_fit(hist, [alpha](std::int64_t j) { return dlap_pmf(alpha, j); },
                           samples);
}

struct MseResult {
    double empirical_mse = 0.0;
    double ci_low = 0.0;   // 99% bootstrap interval
    double ci_high = 0.0;
    double mean_error = 0.0;
    double predicted = 0.0;
    std::uint64_t trials = 0;
};

namespace detail {

// Percentile bootstrap of the mean of `values` (here: squared errors).
inline std::pair<double, double> bootstrap_mean_ci(std::span<const double> values,
                                                   std::uint64_t seed,
                                                   int resamples = 1000,
                                                   double coverage = 0.99) {
    DeterministicStream rng(derive_seed(seed, 0xb00f));
    const std::size_t n = values.size();
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (auto& m : means) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += values[uniform_below(rng, n)];
        m = sum / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double edge = (1.0 - coverage) / 2.0;
    const auto lo = static_cast<std::size_t>(edge * (resamples - 1));
    const auto hi = static_cast<std::size_t>((1.0 - edge) * (resamples - 1));
    return {means[lo], means[hi]};
}

}  // namespace detail

struct MseOptions {
    PolyaBackend backend = PolyaBackend::kInverseCdf;
    bool estimate_only = true;  // skip shares/shuffle; identical estimate law
};

// Monte-Carlo MSE of the protocol estimate against the true sum, with a 99%
// bootstrap interval and the planner's prediction attached. Trials use
// derived per-trial streams and may run on the worker pool.
inline MseResult empirical_mse(const ProtocolParams& params,
                               std::span<const double> inputs, std::uint64_t trials,
                               std::uint64_t seed, MseOptions opts = {}) {
    if (trials < 100) throw std::invalid_argument("need at least 100 trials");
    params.validate();
    const double true_sum = std::accumulate(inputs.begin(), inputs.end(), 0.0);

    std::vector<double> errors(trials);
    parallel_for(trials, [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t t = begin; t < end; ++t) {
            double est;
            if (opts.estimate_only) {
                est = run_protocol_estimate_only_seeded(inputs, params, seed, t,
                                                        opts.backend);
            } else {
                est = run_protocol_seeded(inputs, params, seed, t, opts.backend).first;
            }
            errors[t] = est - true_sum;
        }
    });

    MseResult result;
    result.trials = trials;
    result.predicted = predicted_mse(params);
    std::vector<double> sq(trials);
    double sum_err = 0.0, sum_sq = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        sum_err += errors[t];
        sq[t] = errors[t] * errors[t];
        sum_sq += sq[t];
    }
    result.mean_error = sum_err / static_cast<double>(trials);
    result.empirical_mse = sum_sq / static_cast<double>(trials);
    std::tie(result.ci_low, result.ci_high) = detail::bootstrap_mean_ci(sq, seed);
    return result;
}

// Exact distribution of the analyzer's view over all share-randomness
// assignments of the noise-free protocol. Masses are exact rationals
// count / q^((k-1)*n).
struct ViewDistribution {
    std::map<std::vector<std::uint32_t>, std::uint64_t> counts;
    std::uint64_t total = 0;  // q^((k-1)*n)

    double mass(const std::vector<std::uint32_t>& transcript) const {
        const auto it = counts.find(transcript);
        return it == counts.end()
                   ? 0.0
                   : static_cast<double>(it->second) / static_cast<double>(total);
    }
};

inline ViewDistribution brute_force_view_distribution(
    std::span<const std::uint64_t> inputs, std::uint64_t k, std::uint64_t q) {
    if (inputs.empty()) throw std::invalid_argument("no inputs");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (q < 2) throw std::invalid_argument("q must be >= 2");
    for (std::uint64_t x : inputs)
        if (x >= q) throw std::invalid_argument("input outside Z_q");

    const std::uint64_t n = inputs.size();
    const std::uint64_t free_draws = (k - 1) * n;
    double size = std::pow(static_cast<double>(q), static_cast<double>(free_draws));
    if (size > 1e8)
        throw std::invalid_argument("enumeration size q^((k-1)n) exceeds 10^8");

    ViewDistribution dist;
    dist.total = 1;
    for (std::uint64_t i = 0; i < free_draws; ++i) dist.total *= q;

    std::vector<std::uint32_t> digits(free_draws, 0);  // odometer over Z_q draws
    std::vector<std::uint32_t> transcript(n * k);
    for (std::uint64_t outcome = 0; outcome < dist.total; ++outcome) {
        std::size_t m = 0;
        for (std::uint64_t party = 0; party < n; ++party) {
            std::uint64_t acc = 0;
            for (std::uint64_t j = 0; j < k - 1; ++j) {
                const std::uint32_t r = digits[party * (k - 1) + j];
                transcript[m++] = r;
                acc += r;
            }
            transcript[m++] =
                static_cast<std::uint32_t>((inputs[party] + q * k - acc % q) % q);
        }
        std::sort(transcript.begin(), transcript.end());
        ++dist.counts[transcript];
        for (std::uint64_t d = 0; d < free_draws; ++d) {  // advance odometer
            if (++digits[d] < q) break;
            digits[d] = 0;
        }
    }
    return dist;
}

// Exact statistical (total variation) distance between the views induced by
// two equal-sum input vectors. Computed from integer counts over a common
// denominator, so the result is exact up to the final division.
inline double brute_force_sd(std::span<const std::uint64_t> xa,
                             std::span<const std::uint64_t> xb, std::uint64_t k,
                             std::uint64_t q) {
    if (xa.size() != xb.size())
        throw std::invalid_argument("input vectors must have equal length");
    std::uint64_t sum_a = 0, sum_b = 0;
    for (std::uint64_t x : xa) sum_a = (sum_a + x) % q;
    for (std::uint64_t x : xb) sum_b = (sum_b + x) % q;
    if (sum_a != sum_b)
        throw std::invalid_argument("security bound only covers equal-sum inputs");

    const ViewDistribution da = brute_force_view_distribution(xa, k, q);
    const ViewDistribution db = brute_force_view_distribution(xb, k, q);
    std::uint64_t diff = 0;
    for (const auto& [t, c] : da.counts) {
        const auto it = db.counts.find(t);
        const std::uint64_t other = it == db.counts.end() ? 0 : it->second;
        diff += c > other ? c - other : other - c;
    }
    for (const auto& [t, c] : db.counts)
        if (!da.counts.contains(t)) diff += c;
    return static_cast<double>(diff) / (2.0 * static_cast<double>(da.total));
}

// Plug-in TV distance between an exact view distribution and an empirical
// sample of canonical transcripts.
inline double view_tv(const ViewDistribution& exact,
                      const std::map<std::vector<std::uint32_t>, std::uint64_t>& empirical,
                      std::uint64_t samples) {
    double tv = 0.0;
    const double ns = static_cast<double>(samples);
    for (const auto& [t, c] : exact.counts) {
        const auto it = empirical.find(t);
        const double emp = it == empirical.end() ? 0.0 : static_cast<double>(it->second) / ns;
        tv += std::abs(exact.mass(t) - emp);
    }
    for (const auto& [t, c] : empirical)
        if (!exact.counts.contains(t)) tv += static_cast<double>(c) / ns;
    return 0.5 * tv;
}

}  // namespace shufflesum
