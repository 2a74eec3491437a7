#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shufflesum/encoding.hpp"
#include "shufflesum/group.hpp"
#include "shufflesum/noise.hpp"
#include "shufflesum/rng.hpp"

namespace shufflesum {

// Full parameter tuple governing one protocol instance.
struct ProtocolParams {
    std::uint64_t n;     // parties
    std::uint64_t k;     // messages per party
    std::uint64_t p;     // fixed-point precision
    std::uint64_t q;     // group order, q > n*p
    double alpha;        // noise magnitude, DLap(alpha) in aggregate
    double epsilon;
    double delta;
    std::uint32_t sigma; // security parameter, bits

    void validate() const {
        if (n < 2) throw std::invalid_argument("n must be >= 2");
        if (k < 1) throw std::invalid_argument("k must be >= 1");
        if (p < 1) throw std::invalid_argument("p must be >= 1");
        if (q <= n * p) throw std::invalid_argument("group order must satisfy q > n*p");
        GroupModulus check(q);  // overflow headroom
        if (!(alpha >= 0.0 && alpha < 1.0))
            throw std::invalid_argument("alpha must lie in [0,1)");
        if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
        if (!(delta > 0.0 && delta < 1.0))
            throw std::invalid_argument("delta must lie in (0,1)");
        if (sigma < 1) throw std::invalid_argument("sigma must be >= 1");
    }

    GroupModulus modulus() const { return GroupModulus(q); }
    NoiseParams noise() const {
        return NoiseParams(1.0 / static_cast<double>(n), alpha);
    }
};

// Local randomizer: encode x with precision p, add a Polya difference, reduce
// mod q, and split into k additive shares.
template <RandomStream S>
ShareVector local_randomize(double x, const ProtocolParams& params, S& rng,
                            PolyaBackend backend = PolyaBackend::kInverseCdf) {
    const PolyaSampler sampler(params.noise(), backend);
    const auto encoded = static_cast<std::int64_t>(encode(x, params.p, rng));
    const std::int64_t noisy = encoded + sampler.sample_difference(rng);
    const GroupElement y = GroupElement::from_signed(noisy, params.modulus());
    return split_shares(y, params.k, rng);
}

// Shuffler: the canonical multiset union of all n*k messages. Every consumer
// is permutation-invariant, so the random permutation is absorbed by
// canonicalization; explicit_permutation applies a Fisher-Yates pass first
// for transcript realism (identical output distribution).
template <RandomStream S>
Transcript shuffle(std::span<const ShareVector> all_shares, S& rng,
                   bool explicit_permutation = false) {
    if (all_shares.empty()) throw std::invalid_argument("no share vectors");
    const std::uint64_t n = all_shares.size();
    const std::uint64_t k = all_shares.front().size();
    std::vector<GroupElement> pool;
    pool.reserve(n * k);
    for (const ShareVector& sv : all_shares) {
        if (sv.size() != k)
            throw std::invalid_argument("inconsistent share-vector length k");
        pool.insert(pool.end(), sv.begin(), sv.end());
    }
    if (explicit_permutation) {
        for (std::size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[uniform_below(rng, i)]);
    }
    return make_transcript(pool, n, k, GroupModulus(pool.front().modulus()));
}

// Analyzer: add all messages mod q, correct for underflow when the sum
// landed above (np+q)/2 (strictly), rescale by 1/p.
inline double analyze(const Transcript& t, const ProtocolParams& params) {
    if (t.messages.size() != params.n * params.k)
        throw std::invalid_argument("transcript size does not match n*k");
    const GroupModulus q = params.modulus();
    std::vector<GroupElement> elems;
    elems.reserve(t.messages.size());
    for (std::uint64_t m : t.messages) {
        if (m >= params.q) throw std::invalid_argument("message out of range");
        elems.emplace_back(m, q);
    }
    const std::uint64_t z = sum_mod(elems, q).value();
    std::int64_t corrected = static_cast<std::int64_t>(z);
    if (2 * z > params.n * params.p + params.q)
        corrected -= static_cast<std::int64_t>(params.q);
    return static_cast<double>(corrected) / static_cast<double>(params.p);
}

// End-to-end execution: randomize every party, shuffle, analyze. Returns the
// estimate together with the adversary-view transcript.
template <RandomStream S>
std::pair<double, Transcript> run_protocol(std::span<const double> inputs,
                                           const ProtocolParams& params, S& rng,
                                           PolyaBackend backend = PolyaBackend::kInverseCdf) {
    if (inputs.size() != params.n)
        throw std::invalid_argument("input count does not match n");
    std::vector<ShareVector> all_shares;
    all_shares.reserve(params.n);
    for (double x : inputs)
        all_shares.push_back(local_randomize(x, params, rng, backend));
    Transcript t = shuffle(std::span<const ShareVector>(all_shares), rng);
    return {analyze(t, params), std::move(t)};
}

// Same estimate distribution without materializing shares or transcripts:
// shares recombine exactly and analyze depends only on the message sum, so
// accumulating (encoded + noise) mod q directly is equivalent. Used by the
// Monte-Carlo error suites where only the estimate matters.
template <RandomStream S>
double run_protocol_estimate_only(std::span<const double> inputs,
                                  const ProtocolParams& params, S& rng,
                                  PolyaBackend backend = PolyaBackend::kInverseCdf) {
    if (inputs.size() != params.n)
        throw std::invalid_argument("input count does not match n");
    const PolyaSampler sampler(params.noise(), backend);
    const auto q = static_cast<std::int64_t>(params.q);
    std::int64_t z = 0;
    for (double x : inputs) {
        const auto encoded = static_cast<std::int64_t>(encode(x, params.p, rng));
        std::int64_t y = (encoded + sampler.sample_difference(rng)) % q;
        if (y < 0) y += q;
        z = (z + y) % q;
    }
    if (2 * static_cast<std::uint64_t>(z) > params.n * params.p + params.q) z -= q;
    return static_cast<double>(z) / static_cast<double>(params.p);
}

// Seeded estimate-only trial with per-party derived streams.
inline double run_protocol_estimate_only_seeded(
    std::span<const double> inputs, const ProtocolParams& params,
    std::uint64_t master_seed, std::uint64_t trial,
    PolyaBackend backend = PolyaBackend::kInverseCdf) {
    if (inputs.size() != params.n)
        throw std::invalid_argument("input count does not match n");
    const PolyaSampler sampler(params.noise(), backend);
    const auto q = static_cast<std::int64_t>(params.q);
    std::int64_t z = 0;
    for (std::uint64_t i = 0; i < params.n; ++i) {
        DeterministicStream rng(derive_seed(master_seed, trial, i + 1));
        const auto encoded = static_cast<std::int64_t>(encode(inputs[i], params.p, rng));
        std::int64_t y = (encoded + sampler.sample_difference(rng)) % q;
        if (y < 0) y += q;
        z = (z + y) % q;
    }
    if (2 * static_cast<std::uint64_t>(z) > params.n * params.p + params.q) z -= q;
    return static_cast<double>(z) / static_cast<double>(params.p);
}

// Per-trial execution with streams derived from (master seed, trial, party);
// reproducible under any parallel trial schedule.
inline std::pair<double, Transcript> run_protocol_seeded(
    std::span<const double> inputs, const ProtocolParams& params,
    std::uint64_t master_seed, std::uint64_t trial,
    PolyaBackend backend = PolyaBackend::kInverseCdf) {
    if (inputs.size() != params.n)
        throw std::invalid_argument("input count does not match n");
    std::vector<ShareVector> all_shares;
    all_shares.reserve(params.n);
    for (std::uint64_t i = 0; i < params.n; ++i) {
        DeterministicStream rng(derive_seed(master_seed, trial, i + 1));
        all_shares.push_back(local_randomize(inputs[i], params, rng, backend));
    }
    DeterministicStream shuffle_rng(derive_seed(master_seed, trial, 0));
    Transcript t = shuffle(std::span<const ShareVector>(all_shares), shuffle_rng);
    return {analyze(t, params), std::move(t)};
}

}  // namespace shufflesum
