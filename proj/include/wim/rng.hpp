#pragma once

#include <cstdint>

namespace wim {

/// Counter-based, splittable pseudo-random stream.
///
/// Output k of a stream is a pure function of (key, k): the key is a mixed
/// form of the seed and the counter is advanced once per 64-bit draw. Child
/// streams obtained with split() have keys derived from the parent key and a
/// caller-chosen id, so every training example / repetition can own a stream
/// that does not depend on how many draws other streams consumed.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 bits of resolution. One draw.
    double uniform();

    /// Standard normal via Box-Muller. Consumes exactly two draws.
    double normal();

    /// Uniform integer in [0, n). One draw.
    std::uint64_t below(std::uint64_t n);

    /// Independent child stream; does not advance this stream.
    RngStream split(std::uint64_t id) const;

private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace wim
