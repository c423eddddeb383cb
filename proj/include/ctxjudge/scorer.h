#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctxjudge/dataset.h"

namespace ctxjudge {

struct ScoreRequest {
  std::string model_id;
  std::string prefix;  // may be empty; joined to continuation verbatim
  std::string continuation;
};

// Per-token conditional log-probabilities of a continuation. Offsets are
// half-open code-point spans into the continuation.
struct ScoredSequence {
  std::vector<std::string> tokens;
  std::vector<double> logprobs;
  std::vector<std::pair<std::size_t, std::size_t>> offsets;

  bool operator==(const ScoredSequence&) const = default;
};

void to_json(nlohmann::json& j, const ScoredSequence& s);
void from_json(const nlohmann::json& j, ScoredSequence& s);

// Throws TokenizationError unless the three lists have equal length and the
// offsets are ascending, non-overlapping, in range, and cover every
// non-whitespace character of the continuation.
void validate_scored(const ScoredSequence& s, std::string_view continuation);

struct BackendInfo {
  std::string backend_id;
  std::string model_id;
  long context_limit = 0;
  int max_concurrency = 1;
  // Whether a beginning-of-sequence token conditions an unprefixed request.
  bool bos_when_unprefixed = false;
};

class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  virtual BackendInfo info() const = 0;
  // Throws BackendError (unreachable/failed) or ContextOverflowError.
  virtual ScoredSequence score(const ScoreRequest& req) = 0;
  // Results in request order. The default scores one at a time.
  virtual std::vector<ScoredSequence> score_batch(std::span<const ScoreRequest> reqs);
  virtual void check_health() {}
};

// On-disk content-addressed store, one JSON record per key. Records are
// written to a temporary file and renamed into place, so concurrent writers
// may duplicate work but readers never see a partial record.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path dir);

  // SHA-256 over the length-prefixed (model, backend, prefix, continuation).
  static std::string key(std::string_view model_id, std::string_view backend_id,
                         std::string_view prefix, std::string_view continuation);

  std::optional<ScoredSequence> get(const std::string& key) const;
  void put(const std::string& key, const ScoreRequest& req,
           std::string_view backend_id, const ScoredSequence& s) const;

  const std::filesystem::path& dir() const { return dir_; }
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path dir_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

// Cache lookup, then backend, then validation and cache fill. `cache` may be
// null.
ScoredSequence score_continuation(const ScoreRequest& req, ScoringBackend& backend,
                                  ScoreCache* cache);

double sequence_loglik(const ScoredSequence& s);

// Surprisal (negated summed logprob) per region number. A token belongs to
// the region holding its first character; the space joining a region to its
// predecessor counts as part of that region. Empty regions map to 0.
std::map<int, double> region_surprisals(const ScoredSequence& s,
                                        const RegionSequence& regions,
                                        std::string_view continuation);

}  // namespace ctxjudge
