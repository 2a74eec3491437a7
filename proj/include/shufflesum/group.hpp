#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "shufflesum/rng.hpp"

namespace shufflesum {

// Order of the additive group Z_q. Capped at 2^62 so that (q-1)+(q-1) and
// the incremental sums in sum_mod never overflow a 64-bit word.
class GroupModulus {
  public:
    explicit GroupModulus(std::uint64_t q) : q_(q) {
        if (q < 2) throw std::invalid_argument("group modulus must be >= 2");
        if (q > (std::uint64_t{1} << 62))
            throw std::invalid_argument("group modulus too large for 64-bit arithmetic");
    }
    std::uint64_t value() const { return q_; }
    friend bool operator==(GroupModulus a, GroupModulus b) { return a.q_ == b.q_; }

  private:
    std::uint64_t q_;
};

// An element of Z_q. Every constructor reduces into [0, q-1].
class GroupElement {
  public:
    GroupElement(std::uint64_t value, GroupModulus modulus)
        : value_(value % modulus.value()), q_(modulus.value()) {}

    static GroupElement from_signed(std::int64_t value, GroupModulus modulus) {
        const auto q = static_cast<std::int64_t>(modulus.value());
        std::int64_t r = value % q;
        if (r < 0) r += q;
        return GroupElement(static_cast<std::uint64_t>(r), modulus);
    }

    std::uint64_t value() const { return value_; }
    std::uint64_t modulus() const { return q_; }

    GroupElement operator+(GroupElement other) const {
        require_same_modulus(other);
        std::uint64_t s = value_ + other.value_;
        if (s >= q_) s -= q_;
        return GroupElement(s, GroupModulus(q_));
    }
    GroupElement operator-(GroupElement other) const {
        require_same_modulus(other);
        std::uint64_t s = value_ + q_ - other.value_;
        if (s >= q_) s -= q_;
        return GroupElement(s, GroupModulus(q_));
    }

    friend bool operator==(GroupElement a, GroupElement b) {
        return a.value_ == b.value_ && a.q_ == b.q_;
    }
    friend bool operator<(GroupElement a, GroupElement b) { return a.value_ < b.value_; }

  private:
    void require_same_modulus(GroupElement other) const {
        if (q_ != other.q_)
            throw std::invalid_argument("mixed group moduli");
    }
    std::uint64_t value_;
    std::uint64_t q_;
};

// The k messages one party submits.
using ShareVector = std::vector<GroupElement>;

// Draw k-1 uniform elements and solve for the last so the shares sum to v.
// The output is uniform over all k-tuples summing to v mod q.
template <RandomStream S>
ShareVector split_shares(GroupElement v, std::uint64_t k, S& rng) {
    if (k == 0) throw std::invalid_argument("share count k must be >= 1");
    const GroupModulus q(v.modulus());
    ShareVector shares;
    shares.reserve(k);
    GroupElement acc(0, q);
    for (std::uint64_t i = 0; i + 1 < k; ++i) {
        GroupElement r(uniform_below(rng, q.value()), q);
        shares.push_back(r);
        acc = acc + r;
    }
    shares.push_back(v - acc);
    return shares;
}

// (sum of messages) mod q with incremental reduction; empty sum is 0.
inline GroupElement sum_mod(std::span<const GroupElement> messages, GroupModulus q) {
    GroupElement acc(0, q);
    for (const GroupElement& m : messages) {
        if (m.modulus() != q.value())
            throw std::invalid_argument("message modulus does not match group");
        acc = acc + m;
    }
    return acc;
}

// The shuffled multiset of all n*k messages, stored sorted so that equal
// multisets compare equal. This is everything the analyzer (and adversary)
// observes.
struct Transcript {
    std::uint64_t n = 0;
    std::uint64_t k = 0;
    std::uint64_t q = 0;
    std::vector<std::uint64_t> messages;  // non-decreasing

    friend bool operator==(const Transcript& a, const Transcript& b) = default;
};

// Canonical (sorted, permutation-invariant) representation of a message
// multiset. Idempotent by construction.
inline std::vector<std::uint64_t> canonicalize(std::span<const GroupElement> messages) {
    std::vector<std::uint64_t> out;
    out.reserve(messages.size());
    for (const GroupElement& m : messages) out.push_back(m.value());
    std::sort(out.begin(), out.end());
    return out;
}

inline Transcript make_transcript(std::span<const GroupElement> messages,
                                  std::uint64_t n, std::uint64_t k,
                                  GroupModulus q) {
    if (messages.size() != n * k)
        throw std::invalid_argument("transcript must contain exactly n*k messages");
    Transcript t;
    t.n = n;
    t.k = k;
    t.q = q.value();
    t.messages = canonicalize(messages);
    return t;
}

// Text format: line 1 is "n k q", then n*k lines of one decimal value each,
// in canonical order.
inline void write_transcript(std::ostream& os, const Transcript& t) {
    os << t.n << ' ' << t.k << ' ' << t.q << '\n';
    for (std::uint64_t m : t.messages) os << m << '\n';
}

inline Transcript read_transcript(std::istream& is) {
    Transcript t;
    if (!(is >> t.n >> t.k >> t.q))
        throw std::runtime_error("transcript header malformed, expected 'n k q'");
    t.messages.resize(t.n * t.k);
    for (auto& m : t.messages) {
        if (!(is >> m)) throw std::runtime_error("transcript truncated");
        if (m >= t.q) throw std::runtime_error("transcript message out of range");
    }
    if (!std::is_sorted(t.messages.begin(), t.messages.end()))
        throw std::runtime_error("transcript not in canonical order");
    return t;
}

}  // namespace shufflesum
