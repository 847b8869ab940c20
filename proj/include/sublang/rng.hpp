#pragma once

#include <cstdint>

namespace sublang {

// splitmix64: tiny, seedable, and identical on every platform. All randomness
// in the toolkit flows through this so that deterministic mode is bit-exact
// regardless of standard library implementation.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in [0, n); fine for test/bench use where n << 2^64
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

  private:
    std::uint64_t state_;
};

// Derives an independent stream from (seed, index), e.g. one per worker.
inline SplitMix64 derived_stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mix(seed ^ (0x632be59bd9b4e019ULL * (index + 1)));
    return SplitMix64(mix.next());
}

}  // namespace sublang
