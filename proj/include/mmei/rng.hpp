#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mmei {

/// Generator for the stream identified by (seed, tags...). Distinct tag
/// tuples give independent, reproducible streams.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
    std::vector<std::uint32_t> words;
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    for (std::uint64_t t : tags) {
        words.push_back(static_cast<std::uint32_t>(t));
        words.push_back(static_cast<std::uint32_t>(t >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

/// Stream tags used across the library.
namespace stream {
inline constexpr std::uint64_t kShuffle = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kSynth = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kDropout = 5;
inline constexpr std::uint64_t kPairs = 6;
inline constexpr std::uint64_t kValPairs = 7;
inline constexpr std::uint64_t kSimulation = 8;
}  // namespace stream

}  // namespace mmei
