#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "muonpp/linalg.hpp"

namespace muonpp {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based split: (master, a, b) -> independent 64-bit stream key.
/// Experiments use a = problem size, b = trial index.
std::uint64_t stream_key(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Human-readable statement of the split rule, echoed in report headers.
std::string stream_key_rule();

Rng make_rng(std::uint64_t key);

/// Fills row-major order with iid standard normals.
linalg::Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace muonpp
