#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ctxjudge/config.h"
#include "ctxjudge/error.h"
#include "ctxjudge/runner.h"

namespace fs = std::filesystem;
using namespace ctxjudge;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> backend_url;
  std::optional<int> max_concurrency;
  std::vector<std::string> sets;
};

std::map<std::string, std::string> overrides(const Options& o) {
  std::map<std::string, std::string> m;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects section.key=value, got '" + s + "'");
    m[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (o.seed) m["experiment.seed"] = std::to_string(*o.seed);
  // Relative to the working directory, not the config file.
  if (o.out) m["experiment.out"] = fs::absolute(*o.out).string();
  if (o.backend_url) {
    m["backend.url"] = *o.backend_url;
    m["backend.kind"] = "remote";
  }
  if (o.max_concurrency) m["backend.max_concurrency"] = std::to_string(*o.max_concurrency);
  return m;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const BackendError*>(&e)) return 3;
  if (dynamic_cast<const DataError*>(&e)) return 4;
  if (dynamic_cast<const FormulaSyntaxError*>(&e)) return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prefix-context acceptability judgement harness"};
  app.require_subcommand(1);
  Options opt;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"validate", "Check the config and load every dataset"},
      {"trials", "Build the trial manifest (trials.jsonl)"},
      {"score", "Score every trial (results.jsonl)"},
      {"analyze", "Aggregate, summarize and fit the regression"},
      {"plot", "Render SVG plots from summary.csv"},
      {"run", "Run every stage that is not already complete"},
      {"cross-prime", "Single-source priming matrix across suites"},
      {"similarity", "Phenomenon similarity matrices and correlations"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", opt.config, "INI experiment config")->required();
    sub->add_option("--seed", opt.seed, "Override experiment.seed");
    sub->add_option("--out", opt.out, "Override experiment.out");
    sub->add_option("--backend-url", opt.backend_url, "Use the remote backend at this URL");
    sub->add_option("--max-concurrency", opt.max_concurrency, "Scoring workers");
    sub->add_option("--set", opt.sets, "Override any key: section.key=value");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    auto config = ExperimentConfig::load(opt.config, overrides(opt));
    Runner runner(std::move(config));
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "validate") {
      runner.validate();
      const auto& d = runner.dataset();
      std::cout << "ok: " << d.pair_suites.size() << " pair suites, "
                << d.region_suites.size() << " region suites\n";
    } else if (cmd == "trials") {
      runner.check_backend();
      runner.trials();
    } else if (cmd == "score") {
      runner.check_backend();
      runner.score();
    } else if (cmd == "analyze") {
      runner.analyze();
    } else if (cmd == "plot") {
      runner.plot();
    } else if (cmd == "run") {
      runner.run();
    } else if (cmd == "cross-prime") {
      runner.cross_prime();
    } else if (cmd == "similarity") {
      runner.similarity();
    }
    for (const auto& stage : runner.executed()) std::cerr << "done: " << stage << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return 0;
}
