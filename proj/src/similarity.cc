#include "ctxjudge/similarity.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <thread>

#include "ctxjudge/context.h"
#include "ctxjudge/error.h"
#include "ctxjudge/random.h"
#include "ctxjudge/scorer.h"
#include "ctxjudge/text.h"

namespace ctxjudge::similarity {

TokenBag::TokenBag(std::span<const std::string> tokens) {
  for (const auto& t : tokens) {
    if (t.empty()) throw DataError("empty token in bag");
    ++counts_[t];
    ++size_;
  }
}

double bag_f1(const TokenBag& a, const TokenBag& b, OverlapMode mode) {
  if (a.empty() || b.empty()) throw DataError("bag_f1 needs non-empty bags");
  double overlap = 0.0;
  double size_a = 0.0;
  double size_b = 0.0;
  if (mode == OverlapMode::kMultiset) {
    size_a = static_cast<double>(a.size());
    size_b = static_cast<double>(b.size());
    for (const auto& [tok, ca] : a.counts()) {
      const auto it = b.counts().find(tok);
      if (it != b.counts().end()) overlap += std::min(ca, it->second);
    }
  } else {
    size_a = static_cast<double>(a.counts().size());
    size_b = static_cast<double>(b.counts().size());
    for (const auto& [tok, ca] : a.counts())
      if (b.counts().contains(tok)) overlap += 1.0;
  }
  if (overlap == 0.0) return 0.0;
  const double precision = overlap / size_a;
  const double recall = overlap / size_b;
  return 2.0 * precision * recall / (precision + recall);
}

std::vector<std::string> SimpleTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      flush();
    } else if (uc < 0x80 && std::ispunct(uc)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
    }
  }
  flush();
  return out;
}

BackendTokenizer::BackendTokenizer(ScoringBackend& backend, std::string model_id,
                                   ScoreCache* cache)
    : backend_(backend), model_id_(std::move(model_id)), cache_(cache) {}

std::vector<std::string> BackendTokenizer::tokenize(std::string_view text) const {
  const ScoreRequest req{model_id_, "", std::string(text)};
  const auto scored = score_continuation(req, backend_, cache_);
  std::vector<std::string> out;
  for (const auto& t : scored.tokens) {
    const auto trimmed = trim(t);
    if (!trimmed.empty()) out.emplace_back(trimmed);
  }
  return out;
}

AnnotationTable parse_annotations(const std::string& contents) {
  AnnotationTable table;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("annotations line " + std::to_string(line_no) + ": missing TAB");
    const std::string id(trim(std::string_view(line).substr(0, tab)));
    if (id.empty())
      throw DataError("annotations line " + std::to_string(line_no) + ": empty id");
    std::vector<std::string> labels;
    std::istringstream ls(line.substr(tab + 1));
    std::string label;
    while (ls >> label) labels.push_back(label);
    if (labels.empty())
      throw DataError("annotations line " + std::to_string(line_no) + ": no labels");
    if (!table.emplace(id, std::move(labels)).second)
      throw DataError("annotations line " + std::to_string(line_no) +
                      ": duplicate sentence id '" + id + "'");
  }
  return table;
}

AnnotationTable load_annotations(const std::filesystem::path& path) {
  try {
    return parse_annotations(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string to_string(Kind k) { return k == Kind::kToken ? "token" : "dependency"; }

TokenBag sentence_bag(const SentenceRef& s, Kind kind, const AnnotationTable* annotations,
                      const Tokenizer& tokenizer) {
  if (kind == Kind::kToken) {
    const auto toks = tokenizer.tokenize(s.text);
    return TokenBag(toks);
  }
  if (annotations == nullptr)
    throw DataError("dependency similarity requested without annotations");
  const auto it = annotations->find(s.id);
  if (it == annotations->end())
    throw DataError("no dependency annotation for sentence '" + s.id + "'");
  return TokenBag(it->second);
}

double mean_prefix_similarity(std::span<const SentenceRef> prefix_sentences,
                              const SentenceRef& target, Kind kind,
                              const AnnotationTable* annotations,
                              const Tokenizer& tokenizer, OverlapMode mode) {
  if (prefix_sentences.empty()) throw DataError("no prefix sentences");
  const TokenBag target_bag = sentence_bag(target, kind, annotations, tokenizer);
  double sum = 0.0;
  for (const auto& s : prefix_sentences)
    sum += bag_f1(sentence_bag(s, kind, annotations, tokenizer), target_bag, mode);
  return sum / static_cast<double>(prefix_sentences.size());
}

SimilarityMatrix phenomenon_matrix(const Dataset& dataset, Kind kind,
                                   const AnnotationTable* annotations,
                                   std::size_t sample_size, std::uint64_t seed,
                                   const Tokenizer& tokenizer, OverlapMode mode,
                                   int threads) {
  if (sample_size < 1) throw ConfigError("sample_size must be >= 1");
  std::map<std::string, std::vector<TokenBag>> bags;
  for (const auto& suite : suite_ids(dataset)) {
    const auto phen = suite_phenomenon(dataset, suite);
    for (const auto& s : suite_sentences(dataset, suite, Polarity::kAcceptable))
      bags[phen].push_back(sentence_bag({s.id, s.text}, kind, annotations, tokenizer));
  }
  SimilarityMatrix m;
  m.sample_size = sample_size;
  for (const auto& [phen, b] : bags) m.phenomena.push_back(phen);
  const std::size_t k = m.phenomena.size();
  m.values.assign(k, std::vector<double>(k, 0.0));
  m.samples.assign(k, std::vector<std::size_t>(k, 0));

  auto fill_row = [&](std::size_t row) {
    const auto& test = bags.at(m.phenomena[row]);
    for (std::size_t col = 0; col < k; ++col) {
      const auto& prefix = bags.at(m.phenomena[col]);
      const std::size_t available = test.size() * prefix.size();
      double sum = 0.0;
      std::size_t count = 0;
      if (sample_size >= available) {
        for (const auto& t : test)
          for (const auto& p : prefix) sum += bag_f1(p, t, mode);
        count = available;
      } else {
        Rng rng(mix_seed(seed, m.phenomena[row] + "\x1f" + m.phenomena[col]));
        for (std::size_t i = 0; i < sample_size; ++i) {
          const auto& t = test[rng.below(test.size())];
          const auto& p = prefix[rng.below(prefix.size())];
          sum += bag_f1(p, t, mode);
        }
        count = sample_size;
      }
      m.values[row][col] = sum / static_cast<double>(count);
      m.samples[row][col] = count;
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(k, 1));
  if (workers <= 1) {
    for (std::size_t r = 0; r < k; ++r) fill_row(r);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < k; r += workers) fill_row(r);
      });
    }
  }
  return m;
}

std::string matrix_to_csv(const SimilarityMatrix& m) {
  std::string out = "test_phenomenon";
  for (const auto& p : m.phenomena) out += "," + p;
  out += "\n";
  for (std::size_t r = 0; r < m.phenomena.size(); ++r) {
    out += m.phenomena[r];
    for (double v : m.values[r]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

stats::Correlation correlate_similarity_accuracy(
    std::span<const std::pair<double, int>> per_instance) {
  std::vector<int> binary;
  std::vector<double> continuous;
  binary.reserve(per_instance.size());
  continuous.reserve(per_instance.size());
  for (const auto& [sim, correct] : per_instance) {
    continuous.push_back(sim);
    binary.push_back(correct);
  }
  return stats::point_biserial(binary, continuous);
}

}  // namespace ctxjudge::similarity
