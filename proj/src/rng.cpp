#include "wim/rng.hpp"

#include <cmath>
#include <numbers>

namespace wim {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
    // SplitMix64 finalizer
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), key_(mix64(seed + kGolden)) {}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) {
    if (n <= 1) {
        next_u64();
        return 0;
    }
    // Multiply-shift; the bias is < n / 2^64 and irrelevant at our sizes.
    const unsigned __int128 prod = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(prod >> 64);
}

RngStream RngStream::split(std::uint64_t id) const {
    RngStream child(0);
    child.seed_ = mix64(key_ ^ mix64(id * kGolden + 0x632BE59BD9B4E019ULL));
    child.key_ = mix64(child.seed_ + kGolden);
    return child;
}

}  // namespace wim
