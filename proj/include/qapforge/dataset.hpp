// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qapforge/instance.hpp"

namespace qapforge {

struct DatasetHeader {
  std::uint64_t seed = 0;
  int n = 0;
  int count = 0;
  std::string rng_name{SplitMix64::kName};

  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<QapInstance> instances;
};

/// `count` instances of size `n` drawn sequentially from one SplitMix64
/// stream seeded with `seed`.
Dataset generate_dataset(std::uint64_t seed, int n, int count);

/// Text format, one record per line:
///
///   qapds v1 seed=<u64> n=<int> count=<int> rng=<name>
///   <n> x_0 y_0 ... x_{n-1} y_{n-1} F_01 F_02 ... F_0{n-1} F_12 ... F_{n-2}{n-1}
///
/// Reals are printed with 17 significant digits, which round-trips IEEE
/// doubles exactly.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
std::string format_dataset(const Dataset& dataset);

/// Throws ParseError (with line number) on malformed content and
/// CorruptionError when the record count disagrees with the header.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::string_view text);

/// FNV-1a 64-bit over raw bytes, printed by `gen` as a reproducibility check.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t file_fnv1a64(const std::filesystem::path& path);

/// Shortest text form that parses back to the same double ("%.17g").
std::string format_real(double v);

}  // namespace qapforge
