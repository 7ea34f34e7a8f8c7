#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace slr {

// All randomness in the project flows from one root seed. Components derive
// independent streams as make_rng(root, "component-tag"), so a full pipeline
// is reproducible from a single declared seed.

// Stable 64-bit tag hash (FNV-1a) mixed with the root through splitmix64.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);

std::mt19937_64 make_rng(std::uint64_t root, std::string_view tag);

// Fisher-Yates permutation of {0,...,n-1}.
std::vector<int> random_permutation(int n, std::mt19937_64& rng);

}  // namespace slr
