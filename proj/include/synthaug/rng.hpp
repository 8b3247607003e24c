#ifndef SYNTHAUG_RNG_HPP
#define SYNTHAUG_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace synthaug::rng {

// SplitMix64 finalizer. Used both as a hash combiner for deriving stream
// keys and as the output function of the counter-based generator below.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Combine an arbitrary list of parts (seed, epoch, record index, stream tag,
// ...) into one stream key. Order-sensitive.
inline std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t k = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t p : parts) k = mix64(k ^ p);
    return k;
}

// FNV-1a, used for stage-completion hashes. Not cryptographic.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stream tags keep independent draws (shuffling, flips, latents, ...) from
// colliding even when keyed by the same (seed, epoch/step, index).
enum StreamTag : std::uint64_t {
    kStreamShuffle = 1,
    kStreamAugment = 2,
    kStreamBatch = 3,
    kStreamLatent = 4,
    kStreamNoise = 5,
    kStreamDiffAug = 6,
    kStreamInit = 7,
};

// Counter-based generator: the i-th output is a pure function of (key, i),
// so streams can be split per record/step/index with no shared state.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static CounterRng keyed(std::initializer_list<std::uint64_t> parts) {
        return CounterRng(derive_key(parts));
    }

    std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive on both ends.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        auto v = static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * span) >> 64);
        return lo + static_cast<std::int64_t>(v);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // UniformRandomBitGenerator interface, so std::shuffle can consume this.
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ULL; }
    result_type operator()() { return next_u64(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace synthaug::rng

#endif
