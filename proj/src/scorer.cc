#include "ctxjudge/scorer.h"

#include <cwctype>
#include <numeric>

#include "ctxjudge/error.h"
#include "ctxjudge/text.h"

namespace ctxjudge {

using nlohmann::json;

void to_json(json& j, const ScoredSequence& s) {
  json offsets = json::array();
  for (const auto& [a, b] : s.offsets) offsets.push_back({a, b});
  j = json{{"tokens", s.tokens}, {"logprobs", s.logprobs}, {"offsets", offsets}};
}

void from_json(const json& j, ScoredSequence& s) {
  s.tokens = j.at("tokens").get<std::vector<std::string>>();
  s.logprobs = j.at("logprobs").get<std::vector<double>>();
  s.offsets.clear();
  for (const auto& o : j.at("offsets")) {
    if (!o.is_array() || o.size() != 2)
      throw BackendError("offset entry must be a [start, end] pair");
    s.offsets.emplace_back(o[0].get<std::size_t>(), o[1].get<std::size_t>());
  }
}

namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v' || c == 0x00A0 || c == 0x3000 || (c >= 0x2000 && c <= 0x200B);
}

}  // namespace

void validate_scored(const ScoredSequence& s, std::string_view continuation) {
  if (s.tokens.size() != s.logprobs.size() || s.tokens.size() != s.offsets.size())
    throw TokenizationError("tokens, logprobs and offsets differ in length");
  const auto chars = utf8_decode(continuation);
  std::vector<bool> covered(chars.size(), false);
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < s.offsets.size(); ++i) {
    const auto [start, end] = s.offsets[i];
    if (start >= end)
      throw TokenizationError("empty or inverted offset span at token " +
                              std::to_string(i));
    if (end > chars.size())
      throw TokenizationError("offset beyond continuation at token " +
                              std::to_string(i));
    if (start < prev_end)
      throw TokenizationError("overlapping or descending offsets at token " +
                              std::to_string(i));
    for (std::size_t k = start; k < end; ++k) covered[k] = true;
    prev_end = end;
  }
  for (std::size_t k = 0; k < chars.size(); ++k) {
    if (!covered[k] && !is_space(chars[k]))
      throw TokenizationError("character " + std::to_string(k) +
                              " of the continuation is not covered by any token");
  }
}

std::vector<ScoredSequence> ScoringBackend::score_batch(
    std::span<const ScoreRequest> reqs) {
  std::vector<ScoredSequence> out;
  out.reserve(reqs.size());
  for (const auto& r : reqs) out.push_back(score(r));
  return out;
}

ScoreCache::ScoreCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string ScoreCache::key(std::string_view model_id, std::string_view backend_id,
                            std::string_view prefix, std::string_view continuation) {
  std::string material = "ctxjudge-score-v1";
  for (auto field : {model_id, backend_id, prefix, continuation}) {
    material.push_back('\n');
    material += std::to_string(field.size());
    material.push_back(':');
    material.append(field);
  }
  return sha256_hex(material);
}

std::filesystem::path ScoreCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<ScoredSequence> ScoreCache::get(const std::string& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    ++misses_;
    return std::nullopt;
  }
  try {
    const json rec = json::parse(read_file(path));
    if (rec.at("key").get<std::string>() != key) {
      ++misses_;
      return std::nullopt;
    }
    ++hits_;
    return rec.at("result").get<ScoredSequence>();
  } catch (const std::exception&) {
    // Unreadable record: treat as absent, it will be rewritten.
    ++misses_;
    return std::nullopt;
  }
}

void ScoreCache::put(const std::string& key, const ScoreRequest& req,
                     std::string_view backend_id, const ScoredSequence& s) const {
  const json rec = {{"key", key},
                    {"model", req.model_id},
                    {"backend", backend_id},
                    {"prefix", req.prefix},
                    {"continuation", req.continuation},
                    {"result", s}};
  write_file_atomic(path_for(key), rec.dump());
}

ScoredSequence score_continuation(const ScoreRequest& req, ScoringBackend& backend,
                                  ScoreCache* cache) {
  if (req.continuation.empty()) throw DataError("empty continuation");
  const BackendInfo info = backend.info();
  std::string key;
  if (cache != nullptr) {
    key = ScoreCache::key(req.model_id, info.backend_id, req.prefix,
                          req.continuation);
    if (auto hit = cache->get(key)) return *std::move(hit);
  }
  ScoredSequence s = backend.score(req);
  validate_scored(s, req.continuation);
  if (cache != nullptr) cache->put(key, req, info.backend_id, s);
  return s;
}

double sequence_loglik(const ScoredSequence& s) {
  return std::accumulate(s.logprobs.begin(), s.logprobs.end(), 0.0);
}

std::map<int, double> region_surprisals(const ScoredSequence& s,
                                        const RegionSequence& regions,
                                        std::string_view continuation) {
  if (regions.sentence() != continuation)
    throw DataError("region/continuation mismatch");
  struct Span {
    int region;
    std::size_t start;
    std::size_t end;
  };
  std::vector<Span> spans;
  std::map<int, double> out;
  std::size_t pos = 0;
  for (const auto& r : regions.regions) {
    out[r.number] = 0.0;
    if (r.content.empty()) continue;
    const std::size_t start = pos;
    if (!spans.empty()) ++pos;  // joining space
    pos += utf8_length(r.content);
    spans.push_back({r.number, start, pos});
  }
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < s.offsets.size(); ++i) {
    const std::size_t first = s.offsets[i].first;
    while (cursor < spans.size() && first >= spans[cursor].end) ++cursor;
    if (cursor == spans.size() || first < spans[cursor].start)
      throw TokenizationError("token " + std::to_string(i) +
                              " lies outside every region");
    out[spans[cursor].region] -= s.logprobs[i];
  }
  return out;
}

}  // namespace ctxjudge
