// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "commands.hpp"

using namespace qapforge;
using namespace qapforge::cli;

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qapforge: quadratic assignment solvers and benchmarks"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a dataset of random instances");
  g->add_option("--n", gen.n, "Instance size")->required();
  g->add_option("--count", gen.count, "Number of instances")->required();
  g->add_option("--seed", gen.seed, "Generator seed")->required();
  g->add_option("--out", gen.out, "Output dataset file")->required();

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a policy from a key=value config file");
  t->add_option("--config", tr.config, "Config file")->required();

  SolveOptions so;
  int solve_threads = 0;
  auto* s = app.add_subcommand("solve", "Solve every instance of a dataset");
  s->add_option("--method", so.method, "swap | swap-best | exact | rl-greedy | rl-beam")->required();
  s->add_option("--beam", so.beam, "Beam width for rl-beam");
  s->add_option("--checkpoint", so.checkpoint, "Trained checkpoint (rl-* methods)");
  s->add_option("--dataset", so.dataset, "Dataset file")->required();
  s->add_option("--out", so.out, "Results file")->required();
  auto* threads_opt = s->add_option("--threads", solve_threads, "Worker threads");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Gap statistics against baseline solutions");
  e->add_option("--solutions", ev.solutions, "Results file")->required();
  e->add_option("--baseline-solutions", ev.baseline, "Baseline results file")->required();

  BenchOptions be;
  std::string methods;
  auto* b = app.add_subcommand("bench", "Single-threaded cost and runtime table");
  b->add_option("--methods", methods, "Comma-separated methods (rl-beam:<B> allowed)")->required();
  b->add_option("--dataset", be.dataset, "Dataset file")->required();
  b->add_option("--checkpoint", be.checkpoint, "Trained checkpoint (rl-* methods)");
  b->add_option("--beam", be.beam, "Beam width for rl-beam");

  VizOptions vz;
  auto* v = app.add_subcommand("viz", "SVG of an assignment with its largest flows");
  v->add_option("--instance-file", vz.instance_file, "Dataset file")->required();
  v->add_option("--index", vz.index, "Instance index in the dataset");
  v->add_option("--assignment", vz.assignment, "Comma-separated permutation or results file")
      ->required();
  v->add_option("--top-k", vz.top_k, "Number of flow edges");
  v->add_option("--out", vz.out, "SVG output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (g->parsed()) cmd_gen(gen, std::cout);
    if (t->parsed()) cmd_train(tr, std::cout);
    if (s->parsed()) {
      if (threads_opt->count() > 0) so.threads = solve_threads;
      cmd_solve(so, std::cout);
    }
    if (e->parsed()) cmd_eval(ev, std::cout);
    if (b->parsed()) {
      be.methods = split_commas(methods);
      cmd_bench(be, std::cout);
    }
    if (v->parsed()) cmd_viz(vz, std::cerr);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
