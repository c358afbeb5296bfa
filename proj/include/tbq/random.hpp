// Seed derivation. Every stochastic component draws from its own engine,
// seeded from the run seed through a named path "module:purpose:index".

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tbq {

using Rng = std::mt19937_64;

std::uint64_t derive_seed(std::uint64_t root, std::string_view path);
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index);

inline Rng make_rng(std::uint64_t root, std::string_view path) { return Rng(derive_seed(root, path)); }

}  // namespace tbq
