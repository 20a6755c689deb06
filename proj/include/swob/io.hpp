#pragma once

#include "swob/grid.hpp"

#include <cstdint>
#include <string>

namespace swob {

/// FNV-1a 64-bit over a byte buffer.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t h);

/// Shortest round-trip decimal formatting (printf %.17g).
std::string fmt_g17(double x);

/// Binary solution cache. The header carries a format version and the full
/// grid spec; loading verifies both and an embedded payload checksum.
void save_field(const std::string& path, const SolutionField& field);
SolutionField load_field(const std::string& path);

/// True when the file exists and deserializes to the given grid and method.
bool cache_matches(const std::string& path, const GridSpec& grid, SolveMethod method);

}  // namespace swob
