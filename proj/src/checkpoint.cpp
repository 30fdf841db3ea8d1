// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "qapforge/errors.hpp"
#include "qapforge/trainer.hpp"

namespace qapforge {

namespace {

constexpr std::string_view kMagic = "qapckpt v1";

void append_le(std::string& blob, const nn::Matrix& m) {
  static_assert(sizeof(double) == 8);
  const std::size_t start = blob.size();
  blob.resize(start + static_cast<std::size_t>(m.size()) * 8);
  std::memcpy(blob.data() + start, m.data(), static_cast<std::size_t>(m.size()) * 8);
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = start; i < blob.size(); i += 8) {
      std::reverse(blob.begin() + static_cast<std::ptrdiff_t>(i),
                   blob.begin() + static_cast<std::ptrdiff_t>(i + 8));
    }
  }
}

void read_le(const std::string& blob, std::size_t offset, nn::Matrix& m) {
  const std::size_t bytes = static_cast<std::size_t>(m.size()) * 8;
  std::string chunk = blob.substr(offset, bytes);
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < chunk.size(); i += 8) {
      std::reverse(chunk.begin() + static_cast<std::ptrdiff_t>(i),
                   chunk.begin() + static_cast<std::ptrdiff_t>(i + 8));
    }
  }
  std::memcpy(m.data(), chunk.data(), bytes);
}

// Visits every tensor of a checkpoint in manifest order. Works for const and
// mutable checkpoints alike.
template <class Ckpt, class Fn>
void for_each_tensor(Ckpt& c, Fn&& fn) {
  auto params = [&](const std::string& prefix, auto& store) {
    for (int i = 0; i < store.size(); ++i) fn(prefix + store.name(i), store.value(i));
  };
  auto moments = [&](const std::string& prefix, const auto& store, auto& tensors) {
    for (int i = 0; i < store.size(); ++i) {
      fn(prefix + store.name(i), tensors[static_cast<std::size_t>(i)]);
    }
  };
  params("policy/", c.policy.params());
  params("critic/", c.critic.params());
  moments("policy.adam_m/", c.policy.params(), c.policy_opt.m);
  moments("policy.adam_v/", c.policy.params(), c.policy_opt.v);
  moments("critic.adam_m/", c.critic.params(), c.critic_opt.m);
  moments("critic.adam_v/", c.critic.params(), c.critic_opt.v);
}

std::string to_text(const Checkpoint& c, std::string& blob) {
  std::string head;
  head += std::string(kMagic) + "\n";
  head += "dtype=f64\n";
  head += "layout=column-major\n";
  head += "epoch=" + std::to_string(c.epoch) + "\n";
  head += "val_gap=" + format_real(c.val_gap) + "\n";
  head += "policy.adam_step=" + std::to_string(c.policy_opt.step) + "\n";
  head += "critic.adam_step=" + std::to_string(c.critic_opt.step) + "\n";
  for (const auto& [k, v] : c.config.to_key_values()) head += "config." + k + "=" + v + "\n";
  for_each_tensor(c, [&](const std::string& name, const nn::Matrix& m) {
    head += "param " + name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) +
            " " + std::to_string(blob.size()) + "\n";
    append_le(blob, m);
  });
  head += "blob " + std::to_string(blob.size()) + "\n";
  return head;
}

template <class T>
T number(std::string_view s, const std::string& what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw CorruptionError("checkpoint manifest: bad " + what + " '" + std::string(s) + "'");
  }
  return v;
}

struct ParamEntry {
  Eigen::Index rows;
  Eigen::Index cols;
  std::size_t offset;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::string blob;
  const std::string head = to_text(ckpt, blob);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os.write(head.data(), static_cast<std::streamsize>(head.size()));
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!os) throw Error("write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  const std::string data = ss.str();

  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    const auto nl = data.find('\n', pos);
    if (nl == std::string::npos) throw CorruptionError("checkpoint manifest is truncated");
    std::string_view line(data.data() + pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  if (next_line() != kMagic) throw CorruptionError("not a qapckpt v1 file");
  KeyValues config_kv;
  std::map<std::string, ParamEntry> entries;
  int epoch = -1;
  double val_gap = 0.0;
  std::int64_t policy_step = 0;
  std::int64_t critic_step = 0;
  std::size_t blob_size = 0;
  for (;;) {
    const std::string_view line = next_line();
    if (line.starts_with("blob ")) {
      blob_size = number<std::size_t>(line.substr(5), "blob size");
      break;
    }
    if (line.starts_with("param ")) {
      std::istringstream ps{std::string(line.substr(6))};
      std::string name;
      long long rows = 0;
      long long cols = 0;
      std::size_t offset = 0;
      if (!(ps >> name >> rows >> cols >> offset) || rows < 0 || cols < 0) {
        throw CorruptionError("checkpoint manifest: bad param line '" + std::string(line) + "'");
      }
      entries[name] = {rows, cols, offset};
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw CorruptionError("checkpoint manifest: unexpected line '" + std::string(line) + "'");
    }
    const std::string key(line.substr(0, eq));
    const std::string_view val = line.substr(eq + 1);
    if (key == "dtype") {
      if (val != "f64") throw CorruptionError("unsupported checkpoint dtype");
    } else if (key == "layout") {
      if (val != "column-major") throw CorruptionError("unsupported checkpoint layout");
    } else if (key == "epoch") {
      epoch = number<int>(val, "epoch");
    } else if (key == "val_gap") {
      val_gap = std::stod(std::string(val));
    } else if (key == "policy.adam_step") {
      policy_step = number<std::int64_t>(val, "adam step");
    } else if (key == "critic.adam_step") {
      critic_step = number<std::int64_t>(val, "adam step");
    } else if (key.starts_with("config.")) {
      config_kv[key.substr(7)] = std::string(val);
    } else {
      throw CorruptionError("checkpoint manifest: unknown key '" + key + "'");
    }
  }
  if (data.size() - pos != blob_size) {
    throw CorruptionError("checkpoint blob holds " + std::to_string(data.size() - pos) +
                          " bytes, manifest declares " + std::to_string(blob_size));
  }
  const std::string blob = data.substr(pos);

  TrainConfig config;
  try {
    config = TrainConfig::from_key_values(config_kv);
  } catch (const InvalidInput& e) {
    throw CorruptionError(std::string("checkpoint config: ") + e.what());
  }
  Checkpoint ckpt = initial_checkpoint(config);
  ckpt.epoch = epoch;
  ckpt.val_gap = val_gap;
  ckpt.policy_opt.step = policy_step;
  ckpt.critic_opt.step = critic_step;

  std::size_t expected_entries = 0;
  auto fill = [&](const std::string& name, nn::Matrix& m) {
    auto it = entries.find(name);
    if (it == entries.end()) throw CorruptionError("checkpoint is missing tensor '" + name + "'");
    const ParamEntry& e = it->second;
    if (e.rows != m.rows() || e.cols != m.cols()) {
      throw CorruptionError("checkpoint tensor '" + name + "' has the wrong shape");
    }
    if (e.offset + static_cast<std::size_t>(m.size()) * 8 > blob.size()) {
      throw CorruptionError("checkpoint tensor '" + name + "' runs past the blob");
    }
    read_le(blob, e.offset, m);
    ++expected_entries;
  };
  for_each_tensor(ckpt, fill);
  if (expected_entries != entries.size()) {
    throw CorruptionError("checkpoint holds tensors the model does not define");
  }
  return ckpt;
}

Checkpoint load_checkpoint_for(const std::filesystem::path& path, int n) {
  Checkpoint c = load_checkpoint(path);
  if (c.config.n != n) {
    throw CompatibilityError("checkpoint was trained for n = " + std::to_string(c.config.n) +
                             ", data has n = " + std::to_string(n));
  }
  return c;
}

}  // namespace qapforge
