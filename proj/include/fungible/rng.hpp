#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace fungible {

/// Counter-based 64-bit generator: the n-th output is a SplitMix64 finalizer
/// applied to key + n * golden gamma, so any stream can be addressed directly
/// from its key without shared state. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix(key_ + (++counter_) * kGamma); }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Order-sensitive combination of stream coordinates into a key.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept;
/// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t hash_string(std::string_view text) noexcept;
std::uint64_t hash_double(double value) noexcept;

/// Key of one Monte Carlo replication.
std::uint64_t replication_key(std::uint64_t seed, std::string_view condition, long n,
                              double epsilon, long replication) noexcept;

}  // namespace fungible
