#pragma once

#include <cstdint>
#include <random>

namespace ssrecon {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna). Small state, fast, and cheap to seed, so
/// we can afford one independent generator per (dataset, pair index).
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        s_[0] = splitmix64(sm);
        s_[1] = splitmix64(sm);
        s_[2] = splitmix64(sm);
        s_[3] = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

/// Derives the generator for a named substream. Each distinct key tuple
/// (seed, k1, k2, k3) yields an independent stream; sweep cells and dataset
/// pairs get their own keys, so results do not depend on evaluation order or
/// thread count.
inline Xoshiro256pp substream(std::uint64_t seed, std::uint64_t k1 = 0,
                              std::uint64_t k2 = 0, std::uint64_t k3 = 0) {
    std::uint64_t h = seed;
    splitmix64(h);
    h ^= k1;
    splitmix64(h);
    h ^= k2;
    splitmix64(h);
    h ^= k3;
    return Xoshiro256pp(splitmix64(h));
}

/// A substream together with a standard-normal distribution.
class GaussianStream {
public:
    explicit GaussianStream(Xoshiro256pp engine) : engine_(engine) {}

    double operator()() { return normal_(engine_); }

    Xoshiro256pp& engine() { return engine_; }

private:
    Xoshiro256pp engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stream tags used when deriving substreams, kept in one place so the keying
// scheme is easy to audit.
namespace stream_tag {
inline constexpr std::uint64_t kBasis = 0x6261736973ull;       // "basis"
inline constexpr std::uint64_t kPair = 0x70616972ull;          // "pair"
inline constexpr std::uint64_t kMask = 0x6d61736bull;          // "mask"
inline constexpr std::uint64_t kSplit = 0x73706c6974ull;       // "split"
inline constexpr std::uint64_t kTrain = 0x747261696eull;       // "train"
inline constexpr std::uint64_t kValidation = 0x76616cull;      // "val"
inline constexpr std::uint64_t kTest = 0x74657374ull;          // "test"
inline constexpr std::uint64_t kPowerIter = 0x706f776572ull;   // "power"
inline constexpr std::uint64_t kCsSignal = 0x63737369ull;      // "cssi"
}  // namespace stream_tag

}  // namespace ssrecon
