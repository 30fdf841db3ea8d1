// SPDX-License-Identifier: Apache-2.0
#include "qapforge/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qapforge/baselines.hpp"
#include "qapforge/dataset.hpp"
#include "qapforge/errors.hpp"

namespace qapforge {

std::string format_result(const ResultRecord& r) {
  std::string s = "idx=" + std::to_string(r.idx) + " cost=" + format_real(r.cost) +
                  " seconds=" + format_real(r.seconds) + " perm=";
  for (std::size_t i = 0; i < r.perm.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(r.perm[i]);
  }
  return s;
}

namespace {

std::string_view field(std::string_view tok, std::string_view key, std::size_t lineno) {
  if (!tok.starts_with(key) || tok.size() < key.size() + 1 || tok[key.size()] != '=') {
    throw ParseError(lineno, "expected field '" + std::string(key) + "='");
  }
  return tok.substr(key.size() + 1);
}

template <class T>
T num(std::string_view s, std::size_t lineno) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(lineno, "bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

ResultRecord parse_result(std::string_view line, std::size_t lineno) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\r') ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j + 1;
  }
  if (toks.size() != 4) throw ParseError(lineno, "expected 4 fields");
  ResultRecord r;
  r.idx = num<int>(field(toks[0], "idx", lineno), lineno);
  r.cost = num<double>(field(toks[1], "cost", lineno), lineno);
  r.seconds = num<double>(field(toks[2], "seconds", lineno), lineno);
  std::string_view perm = field(toks[3], "perm", lineno);
  while (!perm.empty()) {
    const auto comma = perm.find(',');
    r.perm.push_back(num<int>(perm.substr(0, comma), lineno));
    if (comma == std::string_view::npos) break;
    perm.remove_prefix(comma + 1);
  }
  if (!is_permutation_of_range(r.perm)) throw ParseError(lineno, "perm is not a permutation");
  return r;
}

void save_results(const std::filesystem::path& path, std::span<const ResultRecord> records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  for (const auto& r : records) os << format_result(r) << '\n';
  if (!os) throw Error("write failed for '" + path.string() + "'");
}

std::vector<ResultRecord> load_results(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open results '" + path.string() + "'");
  std::vector<ResultRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \r") == std::string::npos) continue;
    out.push_back(parse_result(line, lineno));
  }
  return out;
}

double nearest_rank_percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("percentile of an empty list");
  std::sort(values.begin(), values.end());
  const auto count = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * count - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

GapSummary summarize_gaps(std::span<const double> gaps) {
  if (gaps.empty()) throw InvalidInput("no gaps to summarize");
  GapSummary s;
  s.count = static_cast<int>(gaps.size());
  s.mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / s.count;
  s.p95 = nearest_rank_percentile({gaps.begin(), gaps.end()}, 0.95);
  int within = 0;
  int nonpos = 0;
  for (double g : gaps) {
    within += g <= 0.10;
    nonpos += g <= 0.0;
  }
  s.frac_within_10 = static_cast<double>(within) / s.count;
  s.frac_nonpositive = static_cast<double>(nonpos) / s.count;
  return s;
}

std::vector<double> aligned_gaps(std::span<const ResultRecord> solutions,
                                 std::span<const ResultRecord> baseline) {
  if (solutions.size() != baseline.size()) {
    throw AlignmentError("solutions cover " + std::to_string(solutions.size()) +
                         " instances, baseline covers " + std::to_string(baseline.size()));
  }
  std::vector<double> gaps;
  gaps.reserve(solutions.size());
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    if (solutions[i].idx != baseline[i].idx || solutions[i].perm.size() != baseline[i].perm.size()) {
      throw AlignmentError("record " + std::to_string(i) + " refers to different instances");
    }
    gaps.push_back(percentage_gap(solutions[i].cost, baseline[i].cost));
  }
  return gaps;
}

MeanStderr mean_stderr(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

RuntimeSummary summarize_runtime(std::string method, std::span<const ResultRecord> records) {
  std::vector<double> costs;
  std::vector<double> secs;
  for (const auto& r : records) {
    costs.push_back(r.cost);
    secs.push_back(r.seconds);
  }
  return {std::move(method), mean_stderr(costs), mean_stderr(secs),
          static_cast<int>(records.size())};
}

std::string format_gap_row(std::string_view method, const GapSummary& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %8.2f %16.2f %12.1f %12.1f",
                std::string(method).c_str(), 100.0 * s.mean, 100.0 * s.p95,
                100.0 * s.frac_within_10, 100.0 * s.frac_nonpositive);
  return buf;
}

std::string format_runtime_row(const RuntimeSummary& s) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-12s %10.2f +- %-8.2f %12.6f +- %-10.6f %6d", s.method.c_str(),
                s.cost.mean, s.cost.std_error, s.seconds.mean, s.seconds.std_error, s.count);
  return buf;
}

std::string facility_label(int facility) {
  std::string label;
  int v = facility;
  do {
    label.insert(label.begin(), static_cast<char>('A' + v % 26));
    v = v / 26 - 1;
  } while (v >= 0);
  return label;
}

VizResult render_assignment_svg(const QapInstance& instance, const Assignment& assignment,
                                int top_k) {
  const int n = instance.n();
  if (assignment.size() != n) throw InvalidInput("assignment does not match instance size");
  if (top_k < 0) throw InvalidInput("top-k must be nonnegative");
  VizResult out;
  const int pairs = n * (n - 1) / 2;
  if (top_k > pairs) {
    top_k = pairs;
    out.clamped = true;
  }
  struct Edge {
    double flow;
    int i;
    int j;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.push_back({instance.flow(i, j), i, j});
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& a, const Edge& b) { return a.flow > b.flow; });
  edges.resize(static_cast<std::size_t>(top_k));

  const std::vector<int> loc_of = assignment.inverse();
  constexpr double kSize = 500.0;
  constexpr double kMargin = 30.0;
  auto px = [&](int facility) {
    const int loc = loc_of[static_cast<std::size_t>(facility)];
    return std::pair{kMargin + kSize * instance.coords()(loc, 0),
                     kMargin + kSize * (1.0 - instance.coords()(loc, 1))};
  };
  const double max_flow = edges.empty() ? 1.0 : std::max(edges.front().flow, 1e-12);

  std::ostringstream svg;
  svg.setf(std::ios::fixed);
  svg.precision(2);
  const double total = kSize + 2 * kMargin;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << total
      << "\" height=\"" << total << "\" viewBox=\"0 0 " << total << ' ' << total << "\">\n"
      << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize
      << "\" height=\"" << kSize << "\" fill=\"white\" stroke=\"#888\"/>\n"
      << "<g class=\"edges\">\n";
  for (const Edge& e : edges) {
    auto [x1, y1] = px(e.i);
    auto [x2, y2] = px(e.j);
    svg << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
        << "\" stroke=\"#36c\" stroke-width=\"" << 0.5 + 2.5 * e.flow / max_flow << "\"/>\n";
  }
  svg << "</g>\n<g class=\"nodes\">\n";
  for (int f = 0; f < n; ++f) {
    auto [x, y] = px(f);
    svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"9\" fill=\"#f6c343\" stroke=\"black\"/>\n"
        << "<text x=\"" << x << "\" y=\"" << y + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << facility_label(f) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  out.svg = svg.str();
  out.edges = top_k;
  return out;
}

}  // namespace qapforge
