// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qapforge/errors.hpp"
#include "qapforge/kernels.hpp"
#include "qapforge/report.hpp"

namespace qapforge::cli {

/// Bad flags or flag combinations; mapped to exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete configuration (e.g. a dataset path that does not
/// exist).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GenOptions {
  int n = 10;
  int count = 1000;
  std::uint64_t seed = 42;
  std::filesystem::path out;
};
/// Returns the FNV-1a hash of the written file.
std::uint64_t cmd_gen(const GenOptions& o, std::ostream& log);

struct TrainOptions {
  std::filesystem::path config;
};
void cmd_train(const TrainOptions& o, std::ostream& log);

struct SolveOptions {
  std::string method;
  int beam = 10;
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::optional<int> threads;
};
/// A solver for `method` (swap | swap-best | exact | rl-greedy | rl-beam);
/// `rl-beam:<B>` overrides `beam`. Loads the checkpoint when needed.
Solver make_solver(const std::string& method, int beam, const std::filesystem::path& checkpoint,
                   int n);
std::vector<ResultRecord> cmd_solve(const SolveOptions& o, std::ostream& log);

struct EvalOptions {
  std::filesystem::path solutions;
  std::filesystem::path baseline;
};
GapSummary cmd_eval(const EvalOptions& o, std::ostream& out);

struct BenchOptions {
  std::vector<std::string> methods;
  int beam = 10;
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
};
std::vector<RuntimeSummary> cmd_bench(const BenchOptions& o, std::ostream& out);

struct VizOptions {
  std::filesystem::path instance_file;
  int index = 0;
  /// Comma-separated permutation or a results file.
  std::string assignment;
  int top_k = 20;
  std::filesystem::path out;
};
VizResult cmd_viz(const VizOptions& o, std::ostream& log);

std::vector<ResultRecord> to_records(const std::vector<Solution>& solutions);

}  // namespace qapforge::cli
