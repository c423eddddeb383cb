#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxjudge/dataset.h"
#include "ctxjudge/stats.h"

namespace ctxjudge {
class ScoringBackend;
class ScoreCache;
}  // namespace ctxjudge

namespace ctxjudge::similarity {

class TokenBag {
 public:
  TokenBag() = default;
  // Throws DataError on an empty token.
  explicit TokenBag(std::span<const std::string> tokens);

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const std::map<std::string, int>& counts() const { return counts_; }

 private:
  std::map<std::string, int> counts_;
  std::size_t size_ = 0;
};

enum class OverlapMode { kMultiset, kSet };

// F1 of the bag overlap. Multiset mode counts min(count_a, count_b) per type;
// set mode compares distinct types. Throws DataError on an empty bag.
double bag_f1(const TokenBag& a, const TokenBag& b,
              OverlapMode mode = OverlapMode::kMultiset);

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
};

// Lowercased; whitespace separates tokens and every ASCII punctuation mark is
// its own token.
class SimpleTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> tokenize(std::string_view text) const override;
};

// Asks the scoring backend for its tokenization of the text (empty prefix).
class BackendTokenizer final : public Tokenizer {
 public:
  BackendTokenizer(ScoringBackend& backend, std::string model_id, ScoreCache* cache);
  std::vector<std::string> tokenize(std::string_view text) const override;

 private:
  ScoringBackend& backend_;
  std::string model_id_;
  ScoreCache* cache_;
};

// sentence id -> dependency labels.
using AnnotationTable = std::map<std::string, std::vector<std::string>>;

// "sentence-id<TAB>label label ..." per line. Throws DataError on malformed
// lines or duplicate ids.
AnnotationTable load_annotations(const std::filesystem::path& path);
AnnotationTable parse_annotations(const std::string& contents);

enum class Kind { kToken, kDependency };
std::string to_string(Kind k);

struct SentenceRef {
  std::string id;
  std::string text;
};

// Bag for one sentence under the requested kind. Dependency kind needs the
// sentence in `annotations` and throws DataError otherwise.
TokenBag sentence_bag(const SentenceRef& s, Kind kind, const AnnotationTable* annotations,
                      const Tokenizer& tokenizer);

// Mean of per-prefix-sentence F1 against the target.
double mean_prefix_similarity(std::span<const SentenceRef> prefix_sentences,
                              const SentenceRef& target, Kind kind,
                              const AnnotationTable* annotations,
                              const Tokenizer& tokenizer,
                              OverlapMode mode = OverlapMode::kMultiset);

struct SimilarityMatrix {
  std::vector<std::string> phenomena;         // alphabetical
  std::vector<std::vector<double>> values;    // [test][prefix]
  std::vector<std::vector<std::size_t>> samples;
  std::size_t sample_size = 0;                // requested
};

// For every ordered (test, prefix) phenomenon pair, the mean F1 over
// `sample_size` seeded draws of (test sentence, prefix sentence); all pairs
// are used when fewer exist. Sentences are the acceptable members.
SimilarityMatrix phenomenon_matrix(const Dataset& dataset, Kind kind,
                                   const AnnotationTable* annotations,
                                   std::size_t sample_size, std::uint64_t seed,
                                   const Tokenizer& tokenizer,
                                   OverlapMode mode = OverlapMode::kMultiset,
                                   int threads = 1);

// Row per test phenomenon, columns in the same alphabetical order.
std::string matrix_to_csv(const SimilarityMatrix& m);

// Point-biserial correlation of similarity against per-instance correctness.
stats::Correlation correlate_similarity_accuracy(
    std::span<const std::pair<double, int>> per_instance);

}  // namespace ctxjudge::similarity
