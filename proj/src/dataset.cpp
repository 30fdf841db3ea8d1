// SPDX-License-Identifier: Apache-2.0
#include "qapforge/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qapforge/errors.hpp"

namespace qapforge {

namespace {

constexpr std::string_view kMagic = "qapds";
constexpr std::string_view kVersion = "v1";

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T parse_number(std::string_view tok, std::size_t line, std::string_view what) {
  T value{};
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, "bad " + std::string(what) + " '" + std::string(tok) + "'");
  }
  return value;
}

std::string_view expect_key(std::string_view tok, std::string_view key, std::size_t line) {
  if (tok.size() <= key.size() || tok.substr(0, key.size()) != key || tok[key.size()] != '=') {
    throw ParseError(line, "expected '" + std::string(key) + "=<value>', got '" +
                               std::string(tok) + "'");
  }
  return tok.substr(key.size() + 1);
}

DatasetHeader parse_header(std::string_view line) {
  const auto toks = split_ws(line);
  if (toks.size() != 6 || toks[0] != kMagic || toks[1] != kVersion) {
    throw ParseError(1, "not a qapds v1 header");
  }
  DatasetHeader h;
  h.seed = parse_number<std::uint64_t>(expect_key(toks[2], "seed", 1), 1, "seed");
  h.n = parse_number<int>(expect_key(toks[3], "n", 1), 1, "n");
  h.count = parse_number<int>(expect_key(toks[4], "count", 1), 1, "count");
  h.rng_name = std::string(expect_key(toks[5], "rng", 1));
  if (h.n < 1) throw ParseError(1, "n must be positive");
  if (h.count < 1) throw ParseError(1, "count must be positive");
  return h;
}

QapInstance parse_record(std::string_view line, std::size_t lineno, int n) {
  const auto toks = split_ws(line);
  const std::size_t un = static_cast<std::size_t>(n);
  const std::size_t expected = 1 + 2 * un + un * (un - 1) / 2;
  if (toks.empty()) throw ParseError(lineno, "empty record");
  const int rn = parse_number<int>(toks[0], lineno, "size");
  if (rn != n) {
    throw ParseError(lineno, "record size " + std::to_string(rn) + " differs from header n=" +
                                 std::to_string(n));
  }
  if (toks.size() != expected) {
    throw ParseError(lineno, "expected " + std::to_string(expected) + " fields, got " +
                                 std::to_string(toks.size()));
  }
  Matrix coords(n, 2);
  std::size_t t = 1;
  for (int i = 0; i < n; ++i) {
    coords(i, 0) = parse_number<double>(toks[t++], lineno, "coordinate");
    coords(i, 1) = parse_number<double>(toks[t++], lineno, "coordinate");
  }
  Matrix flows = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      flows(i, j) = flows(j, i) = parse_number<double>(toks[t++], lineno, "flow");
    }
  }
  try {
    return QapInstance(std::move(coords), std::move(flows));
  } catch (const InvalidInput& e) {
    throw ParseError(lineno, e.what());
  }
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

Dataset generate_dataset(std::uint64_t seed, int n, int count) {
  if (count < 1) throw InvalidInput("dataset count must be >= 1");
  SplitMix64 rng(seed);
  Dataset ds;
  ds.header = {seed, n, count, std::string(SplitMix64::kName)};
  ds.instances.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) ds.instances.push_back(generate_instance(rng, n));
  return ds;
}

std::string format_dataset(const Dataset& ds) {
  if (ds.header.count != static_cast<int>(ds.instances.size())) {
    throw InvalidInput("header count does not match instance count");
  }
  std::string out;
  out += "qapds v1 seed=" + std::to_string(ds.header.seed) + " n=" + std::to_string(ds.header.n) +
         " count=" + std::to_string(ds.header.count) + " rng=" + ds.header.rng_name + "\n";
  for (const auto& inst : ds.instances) {
    if (inst.n() != ds.header.n) throw InvalidInput("instance size does not match header n");
    out += std::to_string(inst.n());
    for (int i = 0; i < inst.n(); ++i) {
      out += ' ' + format_real(inst.coords()(i, 0));
      out += ' ' + format_real(inst.coords()(i, 1));
    }
    for (int i = 0; i < inst.n(); ++i) {
      for (int j = i + 1; j < inst.n(); ++j) out += ' ' + format_real(inst.flow(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  const std::string text = format_dataset(ds);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw Error("write failed for '" + path.string() + "'");
}

Dataset parse_dataset(std::string_view text) {
  std::size_t pos = 0;
  std::size_t lineno = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    line = text.substr(pos, end - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++lineno;
    return true;
  };
  if (text.empty()) throw CorruptionError("empty dataset file");
  // Every record, including the last, ends in a newline.
  if (text.back() != '\n') throw CorruptionError("dataset file is truncated mid-record");
  std::string_view line;
  next_line(line);
  Dataset ds;
  ds.header = parse_header(line);
  while (next_line(line)) {
    if (split_ws(line).empty()) continue;
    if (static_cast<int>(ds.instances.size()) == ds.header.count) {
      throw CorruptionError("more records than header count " + std::to_string(ds.header.count));
    }
    ds.instances.push_back(parse_record(line, lineno, ds.header.n));
  }
  if (static_cast<int>(ds.instances.size()) != ds.header.count) {
    throw CorruptionError("header declares " + std::to_string(ds.header.count) +
                          " instances, file holds " + std::to_string(ds.instances.size()));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open dataset '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_dataset(ss.str());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_fnv1a64(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return fnv1a64(ss.str());
}

}  // namespace qapforge
