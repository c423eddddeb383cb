#include <cmath>

#include "ctxjudge/backends.h"
#include "ctxjudge/error.h"
#include "ctxjudge/text.h"

namespace ctxjudge {

ReferenceBackend::ReferenceBackend(const CorpusSource& corpus, double alpha,
                                   std::string model_id, long context_limit)
    : model_id_(std::move(model_id)), context_limit_(context_limit), alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ConfigError("reference backend alpha must be > 0");
  if (context_limit <= 0) throw ConfigError("context limit must be > 0");
  if (corpus.sentences.empty()) throw DataError("reference backend: empty corpus");

  std::string joined;
  for (const auto& s : corpus.sentences) {
    if (!joined.empty()) joined.push_back(' ');
    joined += s;
  }
  const auto text = utf8_decode(joined);
  // Symbols are assigned in order of first occurrence.
  for (char32_t c : text) {
    if (!alphabet_.contains(c)) {
      const Sym next = static_cast<Sym>(alphabet_.size());
      alphabet_.emplace(c, next);
    }
  }
  unk_ = static_cast<Sym>(alphabet_.size());
  boundary_ = unk_ + 1;
  alphabet_size_ = alphabet_.size() + 1;

  for (std::size_t i = 2; i < text.size(); ++i) {
    const auto ctx = pack(symbol(text[i - 2]), symbol(text[i - 1]));
    ++trigrams_[ctx][symbol(text[i])];
    ++contexts_[ctx];
  }
  backend_id_ = "reference-trigram:alpha=" + format_double(alpha) +
                ":corpus=" + sha256_hex(joined).substr(0, 16);
}

ReferenceBackend::Sym ReferenceBackend::symbol(char32_t c) const {
  const auto it = alphabet_.find(c);
  return it == alphabet_.end() ? unk_ : it->second;
}

double ReferenceBackend::log_prob(Sym a, Sym b, Sym c) const {
  const auto ctx = pack(a, b);
  double joint = 0.0;
  double total = 0.0;
  if (const auto it = contexts_.find(ctx); it != contexts_.end()) {
    total = it->second;
    const auto& next = trigrams_.at(ctx);
    if (const auto jt = next.find(c); jt != next.end()) joint = jt->second;
  }
  return std::log(joint + alpha_) -
         std::log(total + alpha_ * static_cast<double>(alphabet_size_));
}

double ReferenceBackend::probability(char32_t a, char32_t b, char32_t c) const {
  return std::exp(log_prob(symbol(a), symbol(b), symbol(c)));
}

BackendInfo ReferenceBackend::info() const {
  return BackendInfo{backend_id_, model_id_, context_limit_, 64, false};
}

ScoredSequence ReferenceBackend::score(const ScoreRequest& req) {
  ++calls_;
  const auto prefix = utf8_decode(req.prefix);
  const auto cont = utf8_decode(req.continuation);
  const auto total = static_cast<long>(prefix.size() + cont.size());
  if (total > context_limit_)
    throw ContextOverflowError("input of " + std::to_string(total) +
                                   " tokens exceeds the context limit of " +
                                   std::to_string(context_limit_),
                               context_limit_);
  std::u32string full = prefix;
  full += cont;
  auto sym_at = [&](long i) { return i < 0 ? boundary_ : symbol(full[i]); };

  ScoredSequence s;
  s.tokens.reserve(cont.size());
  s.logprobs.reserve(cont.size());
  s.offsets.reserve(cont.size());
  const long base = static_cast<long>(prefix.size());
  for (std::size_t k = 0; k < cont.size(); ++k) {
    const long i = base + static_cast<long>(k);
    s.tokens.push_back(utf8_encode(std::u32string_view(&cont[k], 1)));
    s.logprobs.push_back(log_prob(sym_at(i - 2), sym_at(i - 1), sym_at(i)));
    s.offsets.emplace_back(k, k + 1);
  }
  return s;
}

}  // namespace ctxjudge
