#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace riskctl {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based 64-bit generator: output k of a stream is mix64(key + k*phi).
// Streams are keyed by (seed, ids...) so trial t / instance i always see the
// same numbers no matter which worker generates them or in which order.
// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}

    CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept
        : key_(mix64(seed)) {
        for (auto id : ids) key_ = mix64(key_ ^ mix64(id + 0x632be59bd9b4e019ULL));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        return mix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
    }

    // Independent child stream; does not advance this one.
    [[nodiscard]] CounterRng substream(std::uint64_t id) const noexcept {
        return CounterRng(key_ ^ mix64(id + 0xd1b54a32d192ed03ULL));
    }

    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace riskctl
