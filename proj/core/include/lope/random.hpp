#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace lope {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a path of tags,
/// e.g. derive_seed(seed, {replication, kHistoricalStream}). Equal inputs give
/// equal outputs on every platform.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

double standard_normal(Rng& rng);
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

/// Inverse-CDF draw from a probability vector. The last index with positive
/// mass absorbs rounding, so a draw never lands on a zero-probability entry.
std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

// Stream tags used with derive_seed.
inline constexpr std::uint64_t kEnvStream = 0x656e76;
inline constexpr std::uint64_t kHistoricalStream = 0x6448;
inline constexpr std::uint64_t kShortStream = 0x6453;
inline constexpr std::uint64_t kLongStream = 0x6445;
inline constexpr std::uint64_t kNuisanceStream = 0x6e7573;
inline constexpr std::uint64_t kLearnerStream = 0x6c726e;

}  // namespace lope
