#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace v2sim {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Stable 64-bit FNV-1a; used to turn stream labels into seed material.
std::uint64_t fnv1a(std::string_view s);

// Seed for an independent stream identified by (master seed, label, index).
// Adding a new label never perturbs the existing streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0);

inline Rng make_stream(std::uint64_t master, std::string_view label,
                       std::uint64_t index = 0) {
  return Rng(derive_seed(master, label, index));
}

// Counter-based uniform in [0, 1): no state, so a vehicle's noise depends
// only on (key, counter) and not on how many other vehicles exist.
double hashed_uniform(std::uint64_t key, std::uint64_t counter);

}  // namespace v2sim
