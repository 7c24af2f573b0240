#pragma once

#include <cstdint>
#include <random>

namespace spreadlab {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a root seed and two counters.
///
///   derive_seed(root, a, b) = splitmix64(splitmix64(splitmix64(root) ^ a) ^ b)
///
/// Every random stream in the library (cell, trial, chain, noise) is keyed
/// through this function, so any single unit of work can be replayed in
/// isolation from its coordinates alone.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) noexcept
{
    return splitmix64(splitmix64(splitmix64(root) ^ a) ^ b);
}

} // namespace spreadlab
