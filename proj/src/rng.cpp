#include "fungible/rng.hpp"

#include <bit>

namespace fungible {

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
    return CounterRng::mix(seed ^ (CounterRng::mix(value) + 0x9E3779B97F4A7C15ULL + (seed << 6) +
                                   (seed >> 2)));
}

std::uint64_t hash_string(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t hash_double(double value) noexcept {
    if (value == 0.0) value = 0.0;  // -0.0 and 0.0 name the same stream
    return std::bit_cast<std::uint64_t>(value);
}

std::uint64_t replication_key(std::uint64_t seed, std::string_view condition, long n,
                              double epsilon, long replication) noexcept {
    std::uint64_t key = CounterRng::mix(seed);
    key = hash_combine(key, hash_string(condition));
    key = hash_combine(key, static_cast<std::uint64_t>(n));
    key = hash_combine(key, hash_double(epsilon));
    key = hash_combine(key, static_cast<std::uint64_t>(replication));
    return key;
}

}  // namespace fungible
