// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include "qapforge/baselines.hpp"
#include "qapforge/config.hpp"
#include "qapforge/dataset.hpp"
#include "qapforge/exact.hpp"
#include "qapforge/inference.hpp"
#include "qapforge/trainer.hpp"

namespace qapforge::cli {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Dataset load_existing(const std::filesystem::path& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is not set");
  if (!std::filesystem::exists(path)) {
    throw ConfigError(std::string(what) + " '" + path.string() + "' does not exist");
  }
  return load_dataset(path);
}

}  // namespace

std::uint64_t cmd_gen(const GenOptions& o, std::ostream& log) {
  if (o.n < 2) throw UsageError("--n must be at least 2");
  if (o.count < 1) throw UsageError("--count must be positive");
  if (o.out.empty()) throw UsageError("--out is required");
  save_dataset(o.out, generate_dataset(o.seed, o.n, o.count));
  const std::uint64_t h = file_fnv1a64(o.out);
  log << "wrote " << o.count << " instances (n=" << o.n << ") to " << o.out.string()
      << " fnv1a64=" << hex64(h) << '\n';
  return h;
}

void cmd_train(const TrainOptions& o, std::ostream& log) {
  if (o.config.empty()) throw UsageError("--config is required");
  if (!std::filesystem::exists(o.config)) {
    throw ConfigError("config '" + o.config.string() + "' does not exist");
  }
  TrainConfig cfg = TrainConfig::from_key_values(load_key_values(o.config));
  cfg.validate();
  const Dataset train_set = load_existing(cfg.train_path, "train_path");
  const Dataset validation = load_existing(cfg.validation_path, "validation_path");
  if (cfg.out_dir.empty()) throw ConfigError("out_dir is not set");
  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  configure_threads(cfg.threads > 0 ? std::optional<int>(cfg.threads) : std::nullopt);

  std::optional<Checkpoint> start;
  if (!cfg.resume.empty()) {
    if (!std::filesystem::exists(cfg.resume)) {
      throw ConfigError("resume checkpoint '" + cfg.resume + "' does not exist");
    }
    start = load_checkpoint_for(cfg.resume, cfg.n);
    log << "resuming after epoch " << start->epoch << '\n';
  }
  const auto metrics_path = out / "metrics.log";
  std::ofstream metrics(metrics_path, start ? std::ios::app : std::ios::trunc);
  if (!metrics) throw Error("cannot open '" + metrics_path.string() + "'");

  auto on_epoch = [&](const EpochMetrics& m, const Checkpoint& latest) {
    metrics << format_metrics(m) << '\n';
    metrics.flush();
    save_checkpoint(out / "last.ckpt", latest);
    log << format_metrics(m) << '\n';
  };
  TrainResult r = train(cfg, train_set, validation, std::move(start), on_epoch);
  save_checkpoint(out / "best.ckpt", r.best);
  if (r.aborted) throw NumericalError("training aborted: " + r.abort_reason);
  log << "best epoch " << r.best.epoch << " val_gap=" << format_real(r.best.val_gap) << '\n';
}

Solver make_solver(const std::string& method_spec, int beam, const std::filesystem::path& checkpoint,
                   int n) {
  std::string method = method_spec;
  if (method.starts_with("rl-beam:")) {
    const std::string b = method.substr(8);
    auto [p, ec] = std::from_chars(b.data(), b.data() + b.size(), beam);
    if (ec != std::errc() || p != b.data() + b.size()) throw UsageError("bad beam width in " + method);
    method = "rl-beam";
  }
  if (method == "swap") {
    return [](const QapInstance& inst) {
      SwapResult r = swap_solve(inst);
      return Solution{r.assignment, r.cost, 0.0};
    };
  }
  if (method == "swap-best") {
    return [](const QapInstance& inst) {
      SwapResult r = swap_solve(inst, SwapRule::kBestImprovement);
      return Solution{r.assignment, r.cost, 0.0};
    };
  }
  if (method == "exact") {
    if (n > kExactMaxSize) {
      throw SizeLimitError("exact solver supports n <= " + std::to_string(kExactMaxSize) +
                           ", dataset has n = " + std::to_string(n));
    }
    return [](const QapInstance& inst) {
      ExactResult r = exact_solve(inst);
      return Solution{r.assignment, r.cost, 0.0};
    };
  }
  if (method == "rl-greedy" || method == "rl-beam") {
    if (checkpoint.empty()) throw UsageError(method + " requires --checkpoint");
    if (method == "rl-beam" && beam < 1) throw UsageError("--beam must be positive");
    auto ckpt = std::make_shared<Checkpoint>(load_checkpoint_for(checkpoint, n));
    if (method == "rl-greedy") {
      return [ckpt](const QapInstance& inst) {
        InferenceResult r = solve_greedy(ckpt->policy, inst);
        return Solution{r.assignment, r.cost, 0.0};
      };
    }
    return [ckpt, beam](const QapInstance& inst) {
      InferenceResult r = solve_beam(ckpt->policy, inst, beam);
      return Solution{r.assignment, r.cost, 0.0};
    };
  }
  throw UsageError("unknown method '" + method_spec + "'");
}

std::vector<ResultRecord> to_records(const std::vector<Solution>& solutions) {
  std::vector<ResultRecord> out;
  out.reserve(solutions.size());
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    out.push_back({static_cast<int>(i), solutions[i].cost, solutions[i].seconds,
                   solutions[i].assignment.perm()});
  }
  return out;
}

std::vector<ResultRecord> cmd_solve(const SolveOptions& o, std::ostream& log) {
  if (o.method.empty()) throw UsageError("--method is required");
  if (o.dataset.empty()) throw UsageError("--dataset is required");
  if (o.out.empty()) throw UsageError("--out is required");
  const Dataset ds = load_existing(o.dataset, "dataset");
  const Solver solver = make_solver(o.method, o.beam, o.checkpoint, ds.header.n);
  const int threads = configure_threads(o.threads);
  const Execution exec = threads > 1 ? Execution::kParallel : Execution::kSerial;
  const auto records = to_records(solve_all(ds.instances, solver, exec));
  save_results(o.out, records);
  log << "solved " << records.size() << " instances with " << o.method << " -> "
      << o.out.string() << '\n';
  return records;
}

GapSummary cmd_eval(const EvalOptions& o, std::ostream& out) {
  if (o.solutions.empty() || o.baseline.empty()) {
    throw UsageError("--solutions and --baseline-solutions are required");
  }
  const auto sol = load_results(o.solutions);
  const auto base = load_results(o.baseline);
  const auto gaps = aligned_gaps(sol, base);
  const GapSummary s = summarize_gaps(gaps);
  char header[160];
  std::snprintf(header, sizeof header, "%-12s %8s %16s %12s %12s", "Method", "Average",
                "95th percentile", "Gap<=10%", "Gap<=0%");
  out << header << '\n' << format_gap_row(o.solutions.stem().string(), s) << '\n';
  return s;
}

std::vector<RuntimeSummary> cmd_bench(const BenchOptions& o, std::ostream& out) {
  if (o.methods.empty()) throw UsageError("--methods is required");
  if (o.dataset.empty()) throw UsageError("--dataset is required");
  const Dataset ds = load_existing(o.dataset, "dataset");
  configure_threads(1);
  std::vector<RuntimeSummary> rows;
  char header[200];
  std::snprintf(header, sizeof header, "%-12s %22s %28s %6s", "Method", "Cost", "Seconds", "Count");
  out << header << '\n';
  for (const auto& m : o.methods) {
    const Solver solver = make_solver(m, o.beam, o.checkpoint, ds.header.n);
    const auto records = to_records(solve_all(ds.instances, solver, Execution::kSerial));
    rows.push_back(summarize_runtime(m, records));
    out << format_runtime_row(rows.back()) << '\n';
  }
  return rows;
}

VizResult cmd_viz(const VizOptions& o, std::ostream& log) {
  if (o.out.empty()) throw UsageError("--out is required");
  if (o.assignment.empty()) throw UsageError("--assignment is required");
  const Dataset ds = load_existing(o.instance_file, "instance file");
  if (o.index < 0 || o.index >= static_cast<int>(ds.instances.size())) {
    throw UsageError("--index out of range");
  }
  const QapInstance& inst = ds.instances[static_cast<std::size_t>(o.index)];

  std::vector<int> perm;
  if (std::filesystem::exists(o.assignment)) {
    for (const auto& r : load_results(o.assignment)) {
      if (r.idx == o.index) perm = r.perm;
    }
    if (perm.empty()) throw AlignmentError("results file has no record idx=" + std::to_string(o.index));
  } else {
    perm = parse_result("idx=0 cost=0 seconds=0 perm=" + o.assignment, 1).perm;
  }
  const Assignment a(perm);
  if (a.size() != inst.n()) throw InvalidInput("assignment does not match instance size");

  VizResult r = render_assignment_svg(inst, a, o.top_k);
  if (r.clamped) {
    log << "warning: --top-k " << o.top_k << " exceeds " << inst.n() * (inst.n() - 1) / 2
        << " facility pairs; clamped\n";
  }
  std::ofstream os(o.out, std::ios::trunc);
  if (!os) throw Error("cannot open '" + o.out.string() + "' for writing");
  os << r.svg;
  log << "wrote " << o.out.string() << " (" << inst.n() << " nodes, " << r.edges << " edges)\n";
  return r;
}

}  // namespace qapforge::cli
