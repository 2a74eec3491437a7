#pragma once

#include <concepts>
#include <cstdint>
#include <random>

namespace shufflesum {

// Anything that yields 64 uniform bits per call. Protocol and sampler code is
// templated on this so tests can inject scripted streams.
template <class S>
concept RandomStream = requires(S s) {
    { s.next_u64() } -> std::convertible_to<std::uint64_t>;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable hash of (master seed, trial index, party index). Streams derived for
// different (trial, party) pairs are independent for simulation purposes.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial,
                                 std::uint64_t party = 0) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= trial * 0xd1342543de82ef95ULL;
    std::uint64_t b = splitmix64(s);
    s ^= party * 0xaf251af3b0f025b5ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b << 1) ^ (c >> 1);
}

// Seeded splitmix64 stream for reproducible simulation. Trivial to
// construct, so per-party streams can be derived in tight loops.
class DeterministicStream {
  public:
    explicit DeterministicStream(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next_u64() { return splitmix64(state_); }

  private:
    std::uint64_t state_;
};

// Entropy-backed stream for --secure runs; not reproducible.
class SecureStream {
  public:
    std::uint64_t next_u64() {
        return (static_cast<std::uint64_t>(rd_()) << 32) ^ rd_();
    }

  private:
    std::random_device rd_;
};

// Unbiased uniform draw from [0, q-1] by rejection.
template <RandomStream S>
std::uint64_t uniform_below(S& s, std::uint64_t q) {
    const std::uint64_t reject_below = (-q) % q;  // 2^64 mod q
    std::uint64_t x;
    do {
        x = s.next_u64();
    } while (x < reject_below);
    return x % q;
}

// Uniform double in [0, 1) with 53 bits of precision.
template <RandomStream S>
double uniform01(S& s) {
    return static_cast<double>(s.next_u64() >> 11) * 0x1.0p-53;
}

template <RandomStream S>
bool bernoulli(S& s, double prob) {
    return uniform01(s) < prob;
}

// Adapter so a RandomStream can feed <random> distributions.
template <RandomStream S>
struct BitGenRef {
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~std::uint64_t{0}; }
    result_type operator()() { return stream.next_u64(); }
    S& stream;
};

}  // namespace shufflesum
