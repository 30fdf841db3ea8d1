// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qapforge/instance.hpp"

namespace qapforge {

/// One line of a results file:
/// `idx=<int> cost=<real> seconds=<real> perm=<comma-separated ints>`
struct ResultRecord {
  int idx = 0;
  double cost = 0.0;
  double seconds = 0.0;
  std::vector<int> perm;
};

std::string format_result(const ResultRecord& r);
ResultRecord parse_result(std::string_view line, std::size_t lineno);
void save_results(const std::filesystem::path& path, std::span<const ResultRecord> records);
std::vector<ResultRecord> load_results(const std::filesystem::path& path);

struct GapSummary {
  double mean = 0.0;
  double p95 = 0.0;
  double frac_within_10 = 0.0;
  double frac_nonpositive = 0.0;
  int count = 0;
};

/// Nearest-rank percentile: the element at 1-based rank ceil(q * count) of
/// the sorted values.
double nearest_rank_percentile(std::vector<double> values, double q);

GapSummary summarize_gaps(std::span<const double> gaps);

/// Per-instance gaps of `solutions` against `baseline`. Throws AlignmentError
/// unless both cover the same indices in the same order.
std::vector<double> aligned_gaps(std::span<const ResultRecord> solutions,
                                 std::span<const ResultRecord> baseline);

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Sample mean and standard error (sample stdev / sqrt(count)).
MeanStderr mean_stderr(std::span<const double> values);

struct RuntimeSummary {
  std::string method;
  MeanStderr cost;
  MeanStderr seconds;
  int count = 0;
};

RuntimeSummary summarize_runtime(std::string method, std::span<const ResultRecord> records);

/// Table row in percent, matching the gap table layout:
/// method, average, 95th percentile, gap <= 10%, gap <= 0%.
std::string format_gap_row(std::string_view method, const GapSummary& s);
std::string format_runtime_row(const RuntimeSummary& s);

/// Facility label: A..Z, then AA, AB, ...
std::string facility_label(int facility);

struct VizResult {
  std::string svg;
  int edges = 0;
  bool clamped = false;
};

/// SVG 1.1 drawing of the unit square: one labeled node per facility at its
/// assigned location and straight edges for the `top_k` largest flows
/// (pairs i < j). `top_k` above n(n-1)/2 is clamped.
VizResult render_assignment_svg(const QapInstance& instance, const Assignment& assignment,
                                int top_k);

}  // namespace qapforge
