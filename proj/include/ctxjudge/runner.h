#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxjudge/config.h"
#include "ctxjudge/dataset.h"
#include "ctxjudge/scorer.h"

namespace ctxjudge {

// Output tree under config.out:
//   manifest.json, trials.jsonl, results.jsonl, cells.csv, summary.csv,
//   margins.csv, regression.csv, regression.txt, plots/*.svg,
//   cross_prime/{trials.jsonl,results.jsonl,matrix.csv},
//   similarity/*.csv
class Runner {
 public:
  // `backend` replaces the one described by the config.
  explicit Runner(ExperimentConfig config, std::unique_ptr<ScoringBackend> backend = nullptr);
  ~Runner();
  Runner(const Runner&) = delete;
  Runner& operator=(const Runner&) = delete;

  // Loads datasets and checks the config; the backend is not contacted.
  void validate();
  // Health check of the backend.
  void check_backend();

  void trials();
  void score();
  void analyze();
  void plot();
  // Every stage whose recorded inputs or outputs are stale, in order.
  void run();

  void cross_prime();
  void similarity();

  const ExperimentConfig& config() const;
  const Dataset& dataset() const;
  ScoringBackend& backend();
  const nlohmann::json& manifest() const;
  // Stages executed (not skipped) by this Runner, in order.
  const std::vector<std::string>& executed() const;

 private:
  struct State;
  std::unique_ptr<State> s_;
};

std::unique_ptr<ScoringBackend> make_backend(const ExperimentConfig& config);

}  // namespace ctxjudge
