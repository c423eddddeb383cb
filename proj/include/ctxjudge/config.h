#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxjudge/analysis.h"
#include "ctxjudge/context.h"
#include "ctxjudge/similarity.h"

namespace ctxjudge {

// Loaded from an INI file; see docs/config.md. Relative paths are resolved
// against the directory holding the file.
struct ExperimentConfig {
  // [experiment]
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::filesystem::path out;
  Averaging averaging = Averaging::kMacro;

  // [data]
  std::string dataset = "dataset";
  std::vector<std::filesystem::path> pair_suites;
  std::vector<std::filesystem::path> region_suites;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> annotations;
  ExcludeScope exclude_scope = ExcludeScope::kSuite;

  // [backend]
  std::string backend_kind = "reference";  // reference | remote
  std::string model_id = "reference-trigram";
  double alpha = 0.1;
  long context_limit = 4096;
  std::optional<std::filesystem::path> train_corpus;  // defaults to corpus
  std::string url;
  int max_concurrency = 1;
  double timeout_seconds = 60.0;
  int retry_base_ms = 200;
  std::optional<std::filesystem::path> cache_dir;  // defaults to <out>/cache
  std::string tokenizer = "auto";  // auto | characters | words | backend

  // [trials]
  std::vector<PrefixStrategy> strategies;
  LengthGrid grid;

  // [analysis]
  bool regression = true;
  bool margins = true;
  bool similarity = false;
  double ridge_lambda = 1.0;
  int bootstrap = 1000;
  double level = 0.95;
  bool log_x = false;

  // [cross_prime]
  std::string diagonal = "exclude";  // exclude | mark
  int max_sentences = 0;             // 0: every source sentence

  // [similarity]
  std::size_t sample_size = 10000;
  int prefix_count = 10;
  similarity::OverlapMode overlap = similarity::OverlapMode::kMultiset;

  // Raw key/value pairs after overrides, for the manifest.
  std::map<std::string, std::string> raw;

  static ExperimentConfig load(const std::filesystem::path& path,
                               const std::map<std::string, std::string>& overrides = {});
  // `base` resolves relative paths.
  static ExperimentConfig parse(const std::string& ini, const std::filesystem::path& base,
                                const std::map<std::string, std::string>& overrides = {});

  // Throws ConfigError.
  void validate() const;

  std::filesystem::path cache_path() const { return cache_dir ? *cache_dir : out / "cache"; }
};

}  // namespace ctxjudge
