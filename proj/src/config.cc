#include "ctxjudge/config.h"

#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ctxjudge/error.h"
#include "ctxjudge/text.h"

namespace ctxjudge {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

const std::set<std::string> kKnownKeys = {
    "experiment.name",      "experiment.seed",        "experiment.out",
    "experiment.averaging", "data.dataset",           "data.pair_suites",
    "data.region_suites",   "data.corpus",            "data.annotations",
    "data.exclude_scope",   "backend.kind",           "backend.model",
    "backend.alpha",        "backend.context_limit",  "backend.train_corpus",
    "backend.url",          "backend.max_concurrency", "backend.timeout",
    "backend.retry_base_ms", "backend.cache_dir",     "backend.tokenizer",
    "trials.strategies",    "trials.grid",            "trials.budget_cap",
    "analysis.regression",  "analysis.margins",       "analysis.similarity",
    "analysis.ridge_lambda", "analysis.bootstrap",    "analysis.level",
    "analysis.log_x",       "cross_prime.diagonal",   "cross_prime.max_sentences",
    "similarity.sample_size", "similarity.prefix_count", "similarity.overlap",
};

template <typename T>
T convert(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !in.eof())
    throw ConfigError("config key " + key + ": cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "yes" || value == "on" || value == "1") return true;
  if (value == "false" || value == "no" || value == "off" || value == "0") return false;
  throw ConfigError("config key " + key + ": expected a boolean, got '" + value + "'");
}

std::vector<std::string> list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& part : split(value, ',')) {
    const auto t = trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const fs::path& path,
                                        const std::map<std::string, std::string>& overrides) {
  std::string contents;
  try {
    contents = read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse(contents, fs::absolute(path).parent_path(), overrides);
}

ExperimentConfig ExperimentConfig::parse(const std::string& ini, const fs::path& base,
                                         const std::map<std::string, std::string>& overrides) {
  pt::ptree tree;
  std::istringstream in(ini);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }

  std::map<std::string, std::string> raw;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) raw[section + "." + key] = std::string(trim(value.data()));
  }
  for (const auto& [key, value] : overrides) raw[key] = value;
  for (const auto& [key, value] : raw)
    if (!kKnownKeys.contains(key)) throw ConfigError("config: unknown key '" + key + "'");

  ExperimentConfig c;
  c.raw = raw;
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };

  if (auto v = get("experiment.name")) c.name = *v;
  if (auto v = get("experiment.seed")) c.seed = convert<std::uint64_t>("experiment.seed", *v);
  if (auto v = get("experiment.out"); v && !v->empty()) c.out = resolve(base, *v);
  if (auto v = get("experiment.averaging")) c.averaging = parse_averaging(*v);

  if (auto v = get("data.dataset")) c.dataset = *v;
  if (auto v = get("data.pair_suites"))
    for (const auto& p : list(*v)) c.pair_suites.push_back(resolve(base, p));
  if (auto v = get("data.region_suites"))
    for (const auto& p : list(*v)) c.region_suites.push_back(resolve(base, p));
  if (auto v = get("data.corpus"); v && !v->empty()) c.corpus = resolve(base, *v);
  if (auto v = get("data.annotations"); v && !v->empty()) c.annotations = resolve(base, *v);
  if (auto v = get("data.exclude_scope")) {
    if (*v == "suite")
      c.exclude_scope = ExcludeScope::kSuite;
    else if (*v == "phenomenon")
      c.exclude_scope = ExcludeScope::kPhenomenon;
    else
      throw ConfigError("data.exclude_scope must be suite or phenomenon");
  }

  if (auto v = get("backend.kind")) c.backend_kind = *v;
  if (auto v = get("backend.model")) c.model_id = *v;
  if (auto v = get("backend.alpha")) c.alpha = convert<double>("backend.alpha", *v);
  if (auto v = get("backend.context_limit"))
    c.context_limit = convert<long>("backend.context_limit", *v);
  if (auto v = get("backend.train_corpus"); v && !v->empty())
    c.train_corpus = resolve(base, *v);
  if (auto v = get("backend.url")) c.url = *v;
  if (auto v = get("backend.max_concurrency"))
    c.max_concurrency = convert<int>("backend.max_concurrency", *v);
  if (auto v = get("backend.timeout"))
    c.timeout_seconds = convert<double>("backend.timeout", *v);
  if (auto v = get("backend.retry_base_ms"))
    c.retry_base_ms = convert<int>("backend.retry_base_ms", *v);
  if (auto v = get("backend.cache_dir"); v && !v->empty()) c.cache_dir = resolve(base, *v);
  if (auto v = get("backend.tokenizer")) c.tokenizer = *v;

  if (auto v = get("trials.strategies"))
    for (const auto& s : list(*v)) c.strategies.push_back(PrefixStrategy::parse(s));
  if (auto v = get("trials.grid")) {
    c.grid.checkpoints.clear();
    for (const auto& s : list(*v)) c.grid.checkpoints.push_back(convert<int>("trials.grid", s));
  }
  if (auto v = get("trials.budget_cap"))
    c.grid.budget_cap = convert<int>("trials.budget_cap", *v);

  if (auto v = get("analysis.regression")) c.regression = parse_bool("analysis.regression", *v);
  if (auto v = get("analysis.margins")) c.margins = parse_bool("analysis.margins", *v);
  if (auto v = get("analysis.similarity")) c.similarity = parse_bool("analysis.similarity", *v);
  if (auto v = get("analysis.ridge_lambda"))
    c.ridge_lambda = convert<double>("analysis.ridge_lambda", *v);
  if (auto v = get("analysis.bootstrap")) c.bootstrap = convert<int>("analysis.bootstrap", *v);
  if (auto v = get("analysis.level")) c.level = convert<double>("analysis.level", *v);
  if (auto v = get("analysis.log_x")) c.log_x = parse_bool("analysis.log_x", *v);

  if (auto v = get("cross_prime.diagonal")) c.diagonal = *v;
  if (auto v = get("cross_prime.max_sentences"))
    c.max_sentences = convert<int>("cross_prime.max_sentences", *v);

  if (auto v = get("similarity.sample_size"))
    c.sample_size = convert<std::size_t>("similarity.sample_size", *v);
  if (auto v = get("similarity.prefix_count"))
    c.prefix_count = convert<int>("similarity.prefix_count", *v);
  if (auto v = get("similarity.overlap")) {
    if (*v == "multiset")
      c.overlap = similarity::OverlapMode::kMultiset;
    else if (*v == "set")
      c.overlap = similarity::OverlapMode::kSet;
    else
      throw ConfigError("similarity.overlap must be multiset or set");
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (out.empty()) throw ConfigError("experiment.out is required");
  if (pair_suites.empty() && region_suites.empty())
    throw ConfigError("data.pair_suites or data.region_suites is required");
  if (strategies.empty()) throw ConfigError("trials.strategies needs at least one strategy");
  std::set<std::string> seen;
  for (const auto& s : strategies) {
    s.validate();
    if (!seen.insert(s.name()).second)
      throw ConfigError("strategy '" + s.name() + "' listed twice");
    if (s.domain == Domain::kControl && !corpus)
      throw ConfigError("the control strategy needs data.corpus");
  }
  grid.validate();
  if (backend_kind == "reference") {
    if (!train_corpus && !corpus)
      throw ConfigError("the reference backend needs backend.train_corpus or data.corpus");
    if (!(alpha > 0.0)) throw ConfigError("backend.alpha must be > 0");
    if (context_limit < 1) throw ConfigError("backend.context_limit must be >= 1");
  } else if (backend_kind == "remote") {
    if (url.empty()) throw ConfigError("the remote backend needs backend.url");
    if (!(timeout_seconds > 0.0)) throw ConfigError("backend.timeout must be > 0");
  } else {
    throw ConfigError("backend.kind must be reference or remote");
  }
  if (max_concurrency < 1) throw ConfigError("backend.max_concurrency must be >= 1");
  if (retry_base_ms < 0) throw ConfigError("backend.retry_base_ms must be >= 0");
  static const std::set<std::string> tokenizers{"auto", "characters", "words", "backend"};
  if (!tokenizers.contains(tokenizer))
    throw ConfigError("backend.tokenizer must be auto, characters, words or backend");
  if (bootstrap < 100) throw ConfigError("analysis.bootstrap must be >= 100");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("analysis.level must be in (0, 1)");
  if (ridge_lambda < 0.0) throw ConfigError("analysis.ridge_lambda must be >= 0");
  if (diagonal != "exclude" && diagonal != "mark")
    throw ConfigError("cross_prime.diagonal must be exclude or mark");
  if (max_sentences < 0) throw ConfigError("cross_prime.max_sentences must be >= 0");
  if (sample_size < 1) throw ConfigError("similarity.sample_size must be >= 1");
  if (prefix_count < 1) throw ConfigError("similarity.prefix_count must be >= 1");
}

}  // namespace ctxjudge
