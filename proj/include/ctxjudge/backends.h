#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctxjudge/dataset.h"
#include "ctxjudge/scorer.h"

namespace ctxjudge {

// Deterministic offline backend: a character trigram model with add-alpha
// smoothing over the corpus alphabet plus one unknown symbol. One token per
// code point. Training text is the corpus sentences joined by single spaces;
// positions before the start of the text use a boundary symbol that never
// occurs in training, so the first two characters are scored uniformly.
class ReferenceBackend final : public ScoringBackend {
 public:
  ReferenceBackend(const CorpusSource& corpus, double alpha,
                   std::string model_id = "reference-trigram",
                   long context_limit = 4096);

  BackendInfo info() const override;
  ScoredSequence score(const ScoreRequest& req) override;

  // p(c | a b) for code points; characters outside the alphabet map to the
  // unknown symbol.
  double probability(char32_t a, char32_t b, char32_t c) const;
  std::size_t alphabet_size() const { return alphabet_size_; }
  std::size_t calls() const { return calls_.load(); }

 private:
  using Sym = std::uint32_t;
  Sym symbol(char32_t c) const;
  double log_prob(Sym a, Sym b, Sym c) const;
  static std::uint64_t pack(Sym a, Sym b) { return (std::uint64_t{a} << 32) | b; }

  std::string model_id_;
  std::string backend_id_;
  long context_limit_;
  double alpha_;
  std::unordered_map<char32_t, Sym> alphabet_;
  std::size_t alphabet_size_ = 0;  // including the unknown symbol
  Sym unk_ = 0;
  Sym boundary_ = 0;
  std::unordered_map<std::uint64_t, std::unordered_map<Sym, std::uint32_t>> trigrams_;
  std::unordered_map<std::uint64_t, std::uint32_t> contexts_;
  std::atomic<std::size_t> calls_{0};
};

// HTTP client for the scoring service:
//   POST /v1/score, POST /v1/batch_score, GET /v1/models, GET /health.
class RemoteBackend final : public ScoringBackend {
 public:
  // `url` like "http://127.0.0.1:8080". Contacts /v1/models lazily.
  RemoteBackend(std::string url, std::string model_id, int max_concurrency = 4,
                double timeout_seconds = 60.0);
  ~RemoteBackend() override;

  BackendInfo info() const override;
  ScoredSequence score(const ScoreRequest& req) override;
  std::vector<ScoredSequence> score_batch(std::span<const ScoreRequest> reqs) override;
  void check_health() override;

  struct ModelEntry {
    std::string id;
    long context_limit = 0;
    bool bos_when_unprefixed = false;
  };
  std::vector<ModelEntry> list_models() const;

  // Number of live RemoteBackend objects in this process.
  static int instances();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ctxjudge
