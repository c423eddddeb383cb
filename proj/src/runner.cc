#include "ctxjudge/runner.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "ctxjudge/analysis.h"
#include "ctxjudge/backends.h"
#include "ctxjudge/context.h"
#include "ctxjudge/error.h"
#include "ctxjudge/metrics.h"
#include "ctxjudge/plot.h"
#include "ctxjudge/similarity.h"
#include "ctxjudge/stats.h"
#include "ctxjudge/text.h"

namespace ctxjudge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Keys that change where or how fast a run happens but not what it computes.
const std::set<std::string> kNonResultKeys = {
    "experiment.out", "backend.max_concurrency", "backend.timeout",
    "backend.retry_base_ms", "backend.cache_dir"};

// Token counts from the backend's own tokenizer (the continuation of an
// unprefixed request), memoized.
class BackendCounter final : public TokenCounter {
 public:
  BackendCounter(ScoringBackend& backend, ScoreCache* cache, std::string model_id)
      : backend_(backend), cache_(cache), model_id_(std::move(model_id)) {}

  std::size_t count(std::string_view text) const override {
    if (trim(text).empty()) return 0;
    const std::string key(text);
    {
      std::lock_guard lock(mu_);
      if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    const auto scored = score_continuation({model_id_, "", key}, backend_, cache_);
    std::lock_guard lock(mu_);
    memo_[key] = scored.tokens.size();
    return scored.tokens.size();
  }
  std::string name() const override { return "backend"; }

 private:
  ScoringBackend& backend_;
  ScoreCache* cache_;
  std::string model_id_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, std::size_t> memo_;
};

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

std::vector<json> read_jsonl(const fs::path& path) {
  if (!fs::exists(path))
    throw DataError(path.string() + " does not exist; run the earlier stage first");
  std::vector<json> rows;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<TrialSpec> read_trials(const fs::path& path) {
  std::vector<TrialSpec> trials;
  for (const auto& j : read_jsonl(path)) {
    try {
      trials.push_back(j.get<TrialSpec>());
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": malformed trial: " + e.what());
    }
  }
  return trials;
}

std::vector<TrialResult> read_results(const fs::path& path) {
  std::vector<TrialResult> results;
  for (const auto& j : read_jsonl(path)) {
    try {
      results.push_back(j.get<TrialResult>());
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": malformed result: " + e.what());
    }
  }
  return results;
}

std::string file_digest(const fs::path& path) { return sha256_hex(read_file(path)); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::unique_ptr<ScoringBackend> make_backend(const ExperimentConfig& config) {
  if (config.backend_kind == "remote")
    return std::make_unique<RemoteBackend>(config.url, config.model_id,
                                           config.max_concurrency, config.timeout_seconds);
  const auto corpus_path = config.train_corpus ? *config.train_corpus : *config.corpus;
  return std::make_unique<ReferenceBackend>(load_corpus(corpus_path), config.alpha,
                                            config.model_id, config.context_limit);
}

struct Runner::State {
  ExperimentConfig config;
  std::unique_ptr<ScoringBackend> backend;
  bool validated = false;
  Dataset dataset;
  std::optional<CorpusSource> corpus;
  std::optional<similarity::AnnotationTable> annotations;
  std::map<std::string, std::string> dataset_digests;
  std::unique_ptr<ScoreCache> cache;
  std::unique_ptr<TokenCounter> counter;
  json manifest;
  std::string run_digest;
  std::vector<std::string> executed;

  fs::path out(const std::string& rel) const { return config.out / rel; }

  ScoringBackend& ensure_backend() {
    if (!backend) backend = make_backend(config);
    return *backend;
  }

  void begin() {
    ensure_backend();
    if (run_digest.empty()) {
      compute_run_digest();
      load_manifest();
    }
  }

  ScoreCache& ensure_cache() {
    if (!cache) cache = std::make_unique<ScoreCache>(config.cache_path());
    return *cache;
  }

  const TokenCounter& ensure_counter() {
    if (counter) return *counter;
    std::string kind = config.tokenizer;
    if (kind == "auto")
      kind = config.backend_kind == "reference" ? "characters" : "backend";
    if (kind == "characters")
      counter = std::make_unique<CharacterCounter>();
    else if (kind == "words")
      counter = std::make_unique<WordCounter>();
    else
      counter = std::make_unique<BackendCounter>(ensure_backend(), &ensure_cache(),
                                                 ensure_backend().info().model_id);
    return *counter;
  }

  // Everything that affects results: config minus placement keys, dataset
  // contents, backend identity, token counter.
  void compute_run_digest() {
    json j;
    json cfg = json::object();
    for (const auto& [k, v] : config.raw)
      if (!kNonResultKeys.contains(k)) cfg[k] = v;
    j["config"] = cfg;
    std::vector<std::string> digests;
    for (const auto& [path, d] : dataset_digests) digests.push_back(d);
    std::sort(digests.begin(), digests.end());
    j["datasets"] = digests;
    const auto info = ensure_backend().info();
    j["backend"] = info.backend_id;
    j["model"] = info.model_id;
    j["counter"] = ensure_counter().name();
    run_digest = sha256_hex(j.dump());
  }

  void load_manifest() {
    const auto path = out("manifest.json");
    json previous;
    if (fs::exists(path)) {
      try {
        previous = json::parse(read_file(path));
      } catch (const json::exception&) {
        previous = json();
      }
    }
    const auto info = ensure_backend().info();
    manifest = json::object();
    manifest["name"] = config.name;
    manifest["config"] = config.raw;
    manifest["datasets"] = dataset_digests;
    manifest["backend"] = {{"backend_id", info.backend_id},
                           {"model_id", info.model_id},
                           {"context_limit", info.context_limit},
                           {"max_concurrency", info.max_concurrency},
                           {"bos_when_unprefixed", info.bos_when_unprefixed}};
    manifest["token_counter"] = ensure_counter().name();
    manifest["averaging"] = to_string(config.averaging);
    manifest["run_digest"] = run_digest;
    manifest["stages"] = json::object();
    if (previous.is_object() && previous.value("run_digest", "") == run_digest &&
        previous.contains("stages"))
      manifest["stages"] = previous["stages"];
  }

  void save_manifest() { write_file_atomic(out("manifest.json"), manifest.dump(2) + "\n"); }

  bool stage_current(const std::string& stage, const std::string& input_digest) const {
    const auto& stages = manifest["stages"];
    if (!stages.contains(stage)) return false;
    const auto& rec = stages[stage];
    if (rec.value("input_digest", "") != input_digest) return false;
    for (const auto& [rel, digest] : rec["outputs"].items()) {
      const auto p = out(rel);
      if (!fs::exists(p) || file_digest(p) != digest.get<std::string>()) return false;
    }
    return true;
  }

  void write_output(json& outputs, const std::string& rel, const std::string& contents) {
    write_file_atomic(out(rel), contents);
    outputs[rel] = sha256_hex(contents);
  }

  void complete_stage(const std::string& stage, const std::string& input_digest,
                      json outputs, double seconds, json extra = json::object()) {
    json rec = {{"input_digest", input_digest},
                {"outputs", std::move(outputs)},
                {"seconds", seconds},
                {"completed", true}};
    for (auto& [k, v] : extra.items()) rec[k] = v;
    manifest["stages"][stage] = std::move(rec);
    save_manifest();
    executed.push_back(stage);
  }

  std::string input_digest(const std::string& stage) const {
    if (stage == "trials") return run_digest;
    if (stage == "score") return sha256_hex(run_digest + file_or_empty("trials.jsonl"));
    if (stage == "analyze") return sha256_hex(run_digest + file_or_empty("results.jsonl"));
    if (stage == "plot") return sha256_hex(run_digest + file_or_empty("summary.csv"));
    if (stage == "cross_prime") return run_digest;
    if (stage == "similarity")
      return sha256_hex(run_digest + file_or_empty("results.jsonl") +
                        file_or_empty("cross_prime/results.jsonl"));
    return run_digest;
  }

  std::string file_or_empty(const std::string& rel) const {
    const auto p = out(rel);
    return fs::exists(p) ? file_digest(p) : std::string();
  }

  ScoredSequence score_with_retry(const ScoreRequest& req) {
    for (int attempt = 1;; ++attempt) {
      try {
        return score_continuation(req, *backend, &ensure_cache());
      } catch (const ContextOverflowError&) {
        throw;
      } catch (const BackendError& e) {
        if (!e.transient() || attempt >= 3) throw;
        std::this_thread::sleep_for(
            std::chrono::milliseconds(config.retry_base_ms * (1 << (attempt - 1))));
      }
    }
  }

  const MinimalPair& find_pair(const TargetRef& t) const {
    for (const auto& s : dataset.pair_suites)
      if (s.suite_id == t.suite_id)
        for (const auto& p : s.pairs)
          if (p.id == t.target_id) return p;
    throw DataError("unknown pair target '" + t.key() + "'");
  }

  std::pair<const RegionSuite*, const ConditionedItem*> find_item(const TargetRef& t) const {
    for (const auto& s : dataset.region_suites)
      if (s.suite_id == t.suite_id)
        for (const auto& item : s.items)
          if (std::to_string(item.item_id) == t.target_id) return {&s, &item};
    throw DataError("unknown item target '" + t.key() + "'");
  }

  TrialResult score_trial(const TrialSpec& t, std::size_t index) {
    TrialResult r;
    r.index = index;
    r.kind = t.target.kind;
    r.dataset = t.dataset;
    r.suite_id = t.target.suite_id;
    r.phenomenon = suite_phenomenon(dataset, t.target.suite_id);
    r.target_id = t.target.target_id;
    r.strategy = t.strategy;
    r.source_suite = t.source_suite;
    r.checkpoint = t.prefix.checkpoint;
    r.prefix_tokens = t.prefix.token_length;
    const std::string prefix = t.prefix.text.empty() ? "" : t.prefix.text + " ";
    const std::string model = backend->info().model_id;
    if (t.target.kind == TargetKind::kPair) {
      const auto& pair = find_pair(t.target);
      r.loglik_acceptable = sequence_loglik(score_with_retry({model, prefix, pair.acceptable}));
      r.loglik_unacceptable =
          sequence_loglik(score_with_retry({model, prefix, pair.unacceptable}));
      r.correct = pair_accuracy(r.loglik_acceptable, r.loglik_unacceptable) == 1;
    } else {
      const auto [suite, item] = find_item(t.target);
      for (const auto& [cond, seq] : item->conditions) {
        const std::string sentence = seq.sentence();
        r.tables[cond] = region_surprisals(score_with_retry({model, prefix, sentence}), seq,
                                           sentence);
      }
      r.correct = item_accuracy(*item, r.tables) == 1;
    }
    return r;
  }

  // Bounded worker pool; results land by index so the output order does not
  // depend on scheduling.
  std::vector<TrialResult> score_all(const std::vector<TrialSpec>& trials) {
    ensure_backend();
    ensure_cache();
    const int declared = backend->info().max_concurrency;
    const std::size_t workers = static_cast<std::size_t>(
        std::max(1, std::min(config.max_concurrency, std::max(declared, 1))));
    std::vector<std::optional<TrialResult>> slots(trials.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mu;
    std::exception_ptr error;
    std::size_t error_index = trials.size();

    auto work = [&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= trials.size()) return;
        try {
          slots[i] = score_trial(trials[i], i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (i < error_index) {
            error_index = i;
            error = std::current_exception();
          }
          failed = true;
        }
      }
    };
    if (workers == 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < std::min(workers, trials.size()); ++w)
        pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    std::vector<TrialResult> results;
    results.reserve(trials.size());
    for (auto& s : slots) results.push_back(std::move(*s));
    return results;
  }

  std::map<std::string, std::string> sentence_texts() const {
    std::map<std::string, std::string> texts;
    for (const auto& s : dataset.pair_suites)
      for (const auto& p : s.pairs) {
        const std::string owner = s.suite_id + "/" + p.id;
        texts[owner + "/acceptable"] = p.acceptable;
        texts[owner + "/unacceptable"] = p.unacceptable;
      }
    for (const auto& s : dataset.region_suites)
      for (const auto& item : s.items)
        for (const auto& [cond, seq] : item.conditions)
          texts[s.suite_id + "/" + std::to_string(item.item_id) + "/" + cond] = seq.sentence();
    if (corpus)
      for (const auto& c : corpus_sentences(*corpus)) texts[c.id] = c.text;
    return texts;
  }

  // Id of the acceptable sentence of a target.
  std::string target_sentence_id(const TrialResult& r) const {
    if (r.kind == TargetKind::kPair) return r.suite_id + "/" + r.target_id + "/acceptable";
    const auto [suite, item] = find_item({r.kind, r.suite_id, r.target_id});
    (void)item;
    return r.suite_id + "/" + r.target_id + "/" + suite->acceptable_condition;
  }

  std::unique_ptr<similarity::Tokenizer> make_tokenizer() {
    if (config.tokenizer == "backend")
      return std::make_unique<similarity::BackendTokenizer>(
          ensure_backend(), ensure_backend().info().model_id, &ensure_cache());
    return std::make_unique<similarity::SimpleTokenizer>();
  }

  std::vector<similarity::Kind> similarity_kinds() const {
    std::vector<similarity::Kind> kinds{similarity::Kind::kToken};
    if (annotations) kinds.push_back(similarity::Kind::kDependency);
    return kinds;
  }

  // similarity/instances.csv and similarity/instance_correlations.csv.
  void instance_similarity(json& outputs) {
    const auto trials = read_trials(out("trials.jsonl"));
    const auto results = read_results(out("results.jsonl"));
    if (trials.size() != results.size())
      throw DataError("trials.jsonl and results.jsonl differ in length");
    const auto texts = sentence_texts();
    const auto tokenizer = make_tokenizer();
    const auto* ann = annotations ? &*annotations : nullptr;
    auto lookup = [&](const std::string& id) {
      const auto it = texts.find(id);
      if (it == texts.end()) throw DataError("unknown sentence id '" + id + "'");
      return similarity::SentenceRef{id, it->second};
    };

    std::string rows =
        "index,suite,target,strategy_domain,strategy_polarity,checkpoint,kind,similarity,"
        "correct\n";
    // (kind, strategy) -> (similarity, correct)
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, int>>> groups;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      if (!r.strategy || r.source_suite || trials[i].prefix.sentence_ids.empty()) continue;
      std::vector<similarity::SentenceRef> prefix;
      const auto& ids = trials[i].prefix.sentence_ids;
      const std::size_t k = std::min(ids.size(), static_cast<std::size_t>(config.prefix_count));
      for (std::size_t j = 0; j < k; ++j) prefix.push_back(lookup(ids[j]));
      const auto target = lookup(target_sentence_id(r));
      for (const auto kind : similarity_kinds()) {
        if (kind == similarity::Kind::kDependency && r.strategy->domain == Domain::kControl)
          continue;
        const double sim = similarity::mean_prefix_similarity(prefix, target, kind, ann,
                                                              *tokenizer, config.overlap);
        const int correct = r.correct ? 1 : 0;
        rows += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.index, r.suite_id, r.target_id,
                            to_string(r.strategy->domain), to_string(r.strategy->polarity),
                            r.checkpoint, similarity::to_string(kind), format_double(sim),
                            correct);
        groups[{similarity::to_string(kind), r.strategy->name()}].push_back({sim, correct});
        groups[{similarity::to_string(kind), "all"}].push_back({sim, correct});
      }
    }
    std::string corr = "kind,strategy,n,rho,p_value\n";
    for (const auto& [key, values] : groups) {
      std::string rho;
      std::string p;
      try {
        const auto c = similarity::correlate_similarity_accuracy(values);
        rho = format_double(c.rho);
        p = format_double(c.p_value);
      } catch (const StatsError&) {
        // Undefined (a single class or constant similarity): left blank.
      }
      corr += fmt::format("{},{},{},{},{}\n", key.first, key.second, values.size(), rho, p);
    }
    write_output(outputs, "similarity/instances.csv", rows);
    write_output(outputs, "similarity/instance_correlations.csv", corr);
  }
};

Runner::Runner(ExperimentConfig config, std::unique_ptr<ScoringBackend> backend)
    : s_(std::make_unique<State>()) {
  s_->config = std::move(config);
  s_->backend = std::move(backend);
}

Runner::~Runner() = default;

const ExperimentConfig& Runner::config() const { return s_->config; }
const Dataset& Runner::dataset() const { return s_->dataset; }
ScoringBackend& Runner::backend() { return s_->ensure_backend(); }
const nlohmann::json& Runner::manifest() const { return s_->manifest; }
const std::vector<std::string>& Runner::executed() const { return s_->executed; }

void Runner::validate() {
  if (s_->validated) return;
  auto& c = s_->config;
  c.validate();

  Dataset d;
  d.name = c.dataset;
  std::set<std::string> ids;
  auto record = [&](const fs::path& root, const std::string& ext) {
    for (const auto& file : expand_inputs(root, ext))
      s_->dataset_digests[file.string()] = file_digest(file);
  };
  for (const auto& p : c.pair_suites) {
    record(p, ".jsonl");
    for (auto& s : load_pair_suites(p)) d.pair_suites.push_back(std::move(s));
  }
  for (const auto& p : c.region_suites) {
    record(p, ".json");
    for (auto& s : load_region_suites(p)) d.region_suites.push_back(std::move(s));
  }
  for (const auto& id : suite_ids(d))
    if (!ids.insert(id).second) throw DataError("duplicate suite id '" + id + "'");
  if (d.suite_count() == 0) throw DataError("no suites loaded");
  s_->dataset = std::move(d);

  if (c.corpus) {
    s_->corpus = load_corpus(*c.corpus);
    s_->dataset_digests[c.corpus->string()] = file_digest(*c.corpus);
  }
  if (c.train_corpus)
    s_->dataset_digests[c.train_corpus->string()] = file_digest(*c.train_corpus);
  if (c.annotations) {
    s_->annotations = similarity::load_annotations(*c.annotations);
    s_->dataset_digests[c.annotations->string()] = file_digest(*c.annotations);
    const auto texts = s_->sentence_texts();
    for (const auto& [id, labels] : *s_->annotations)
      if (!texts.contains(id))
        throw DataError("annotation for unknown sentence id '" + id + "'");
  }

  std::error_code ec;
  fs::create_directories(c.out, ec);
  const auto probe = c.out / ".write-probe";
  try {
    write_file_atomic(probe, "");
    fs::remove(probe, ec);
  } catch (const Error&) {
    throw ConfigError("output directory " + c.out.string() + " is not writable");
  }
  s_->validated = true;
}

void Runner::check_backend() { s_->ensure_backend().check_health(); }

void Runner::trials() {
  validate();
  auto& s = *s_;
  s.begin();
  const auto start = std::chrono::steady_clock::now();
  TrialOptions options;
  options.exclude_scope = s.config.exclude_scope;
  const auto specs =
      build_all_trials(s.dataset, s.corpus ? &*s.corpus : nullptr, s.config.strategies,
                       s.config.grid, s.config.seed, s.ensure_counter(), options);
  std::vector<json> rows;
  std::size_t underfilled = 0;
  for (const auto& t : specs) {
    rows.push_back(t);
    underfilled += t.prefix.underfilled ? 1 : 0;
  }
  json outputs = json::object();
  const auto digest = s.input_digest("trials");
  s.write_output(outputs, "trials.jsonl", jsonl(rows));
  s.complete_stage("trials", digest, outputs, seconds_since(start),
                   {{"trials", specs.size()}, {"underfilled", underfilled}});
}

void Runner::score() {
  validate();
  auto& s = *s_;
  s.begin();
  const auto start = std::chrono::steady_clock::now();
  const auto digest = s.input_digest("score");
  const auto specs = read_trials(s.out("trials.jsonl"));
  const std::size_t hits0 = s.ensure_cache().hits();
  const std::size_t misses0 = s.ensure_cache().misses();
  const auto results = s.score_all(specs);
  std::vector<json> rows(results.begin(), results.end());
  json outputs = json::object();
  s.write_output(outputs, "results.jsonl", jsonl(rows));
  s.complete_stage("score", digest, outputs, seconds_since(start),
                   {{"cache_hits", s.cache->hits() - hits0},
                    {"cache_misses", s.cache->misses() - misses0}});
}

void Runner::analyze() {
  validate();
  auto& s = *s_;
  s.begin();
  const auto start = std::chrono::steady_clock::now();
  const auto digest = s.input_digest("analyze");
  const auto results = read_results(s.out("results.jsonl"));
  const auto& c = s.config;
  json outputs = json::object();
  json extra = json::object();

  const auto cells = aggregate(results);
  s.write_output(outputs, "cells.csv", cells_to_csv(cells));
  const BootstrapOptions boot{c.bootstrap, c.level, c.seed};
  const auto summary = summarize(results, s.dataset.name, c.averaging, boot);
  s.write_output(outputs, "summary.csv", summary_to_csv(summary));
  if (c.margins) s.write_output(outputs, "margins.csv", margins_to_csv(results));

  if (c.regression) {
    const auto rows = regression_rows(results);
    std::string csv = "term,estimate,std_error,z,p_value\n";
    std::string text;
    if (rows.empty()) {
      text = "regression not fitted: no prefixed in-domain or out-of-domain trials\n";
    } else {
      try {
        const auto spec = regression_spec_for(rows, c.ridge_lambda);
        const auto fit = stats::fit_acceptability(spec, rows);
        csv = stats::fit_to_csv(fit);
        std::string formula = "correct ~";
        for (std::size_t i = 0; i < spec.terms.size(); ++i)
          formula += (i == 0 ? " " : " + ") + stats::term_name(spec.terms[i]);
        if (spec.suite_intercepts) formula += " + suite";
        text = stats::fit_to_text(fit, formula);
        if (spec.suite_intercepts)
          text += fmt::format("suite intercepts are fixed effects with ridge penalty {}\n",
                              format_double(spec.ridge_lambda));
        extra["regression"] = {{"converged", fit.converged},
                               {"separation", fit.separation},
                               {"iterations", fit.iterations}};
      } catch (const StatsError& e) {
        text = std::string("regression not fitted: ") + e.what() + "\n";
      }
    }
    s.write_output(outputs, "regression.csv", csv);
    s.write_output(outputs, "regression.txt", text);
  }
  if (c.similarity) s.instance_similarity(outputs);
  s.complete_stage("analyze", digest, outputs, seconds_since(start), extra);
}

void Runner::plot() {
  validate();
  auto& s = *s_;
  s.begin();
  const auto start = std::chrono::steady_clock::now();
  const auto digest = s.input_digest("plot");
  const auto summary_path = s.out("summary.csv");
  if (!fs::exists(summary_path))
    throw DataError(summary_path.string() + " does not exist; run the analyze stage first");
  const auto rows = parse_summary_csv(read_file(summary_path));
  if (rows.empty()) throw DataError("summary.csv holds no rows");
  std::set<std::string> datasets;
  bool any_margin = false;
  for (const auto& r : rows) {
    datasets.insert(r.dataset);
    any_margin = any_margin || !std::isnan(r.mean_margin);
  }
  json outputs = json::object();
  for (const auto& d : datasets) {
    std::vector<PlotMetric> metrics{PlotMetric::kAccuracy, PlotMetric::kBaselinedAccuracy};
    if (any_margin) metrics.push_back(PlotMetric::kMargin);
    for (const auto m : metrics)
      s.write_output(outputs, "plots/" + d + "_" + to_string(m) + ".svg",
                     render_svg(summary_plot(rows, d, m, s.config.log_x)));
  }
  s.complete_stage("plot", digest, outputs, seconds_since(start));
}

void Runner::run() {
  validate();
  auto& s = *s_;
  check_backend();
  s.begin();
  if (!s.stage_current("trials", s.input_digest("trials"))) trials();
  if (!s.stage_current("score", s.input_digest("score"))) score();
  if (!s.stage_current("analyze", s.input_digest("analyze"))) analyze();
  if (!s.stage_current("plot", s.input_digest("plot"))) plot();
}

void Runner::cross_prime() {
  validate();
  auto& s = *s_;
  check_backend();
  s.begin();
  const auto digest = s.input_digest("cross_prime");
  if (s.stage_current("cross_prime", digest)) return;
  const auto start = std::chrono::steady_clock::now();
  const auto suites = suite_ids(s.dataset);
  if (suites.size() < 2) throw DataError("cross-priming needs at least two suites");
  std::vector<TrialSpec> specs;
  for (const auto& target : suites) {
    for (auto& t : build_baseline_trials(s.dataset, target)) specs.push_back(std::move(t));
    for (const auto& source : suites) {
      if (source == target) continue;
      int count = static_cast<int>(
          suite_sentences(s.dataset, source, Polarity::kAcceptable).size());
      if (s.config.max_sentences > 0) count = std::min(count, s.config.max_sentences);
      for (auto& t : build_single_phenomenon_trials(s.dataset, target, source,
                                                    Polarity::kAcceptable, count,
                                                    s.config.seed, s.ensure_counter()))
        specs.push_back(std::move(t));
    }
  }
  const auto results = s.score_all(specs);
  json outputs = json::object();
  std::vector<json> trial_rows(specs.begin(), specs.end());
  std::vector<json> result_rows(results.begin(), results.end());
  s.write_output(outputs, "cross_prime/trials.jsonl", jsonl(trial_rows));
  s.write_output(outputs, "cross_prime/results.jsonl", jsonl(result_rows));
  const auto matrix = cross_prime_matrix(results, suites);
  s.write_output(outputs, "cross_prime/matrix.csv",
                 cross_prime_to_csv(matrix, s.config.diagonal == "mark" ? "diag" : ""));
  s.complete_stage("cross_prime", digest, outputs, seconds_since(start),
                   {{"diagonal", s.config.diagonal}});
}

void Runner::similarity() {
  validate();
  auto& s = *s_;
  s.begin();
  const auto start = std::chrono::steady_clock::now();
  const auto digest = s.input_digest("similarity");
  const auto& c = s.config;
  const auto tokenizer = s.make_tokenizer();
  const auto* ann = s.annotations ? &*s.annotations : nullptr;
  json outputs = json::object();
  std::map<std::string, similarity::SimilarityMatrix> matrices;
  for (const auto kind : s.similarity_kinds()) {
    const auto m = similarity::phenomenon_matrix(
        s.dataset, kind, ann, c.sample_size, c.seed, *tokenizer, c.overlap,
        c.max_concurrency);
    const std::string name = similarity::to_string(kind);
    s.write_output(outputs, "similarity/phenomenon_" + name + ".csv",
                   similarity::matrix_to_csv(m));
    std::string samples = "test_phenomenon";
    for (const auto& p : m.phenomena) samples += "," + p;
    samples += "\n";
    for (std::size_t r = 0; r < m.phenomena.size(); ++r) {
      samples += m.phenomena[r];
      for (auto n : m.samples[r]) samples += "," + std::to_string(n);
      samples += "\n";
    }
    s.write_output(outputs, "similarity/phenomenon_" + name + "_samples.csv", samples);
    matrices[name] = m;
  }

  if (fs::exists(s.out("results.jsonl")) && fs::exists(s.out("trials.jsonl")))
    s.instance_similarity(outputs);

  if (fs::exists(s.out("cross_prime/results.jsonl"))) {
    const auto results = read_results(s.out("cross_prime/results.jsonl"));
    const auto matrix = cross_prime_matrix(results, suite_ids(s.dataset));
    // Improvement averaged over suite pairs sharing a phenomenon pair.
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> by_phen;
    for (const auto& [key, value] : matrix.improvement) {
      auto& acc = by_phen[{suite_phenomenon(s.dataset, key.first),
                           suite_phenomenon(s.dataset, key.second)}];
      acc.first += value;
      ++acc.second;
    }
    std::string csv = "kind,n,rho,p_value\n";
    for (const auto& [name, m] : matrices) {
      std::vector<double> sim;
      std::vector<double> imp;
      for (std::size_t i = 0; i < m.phenomena.size(); ++i)
        for (std::size_t j = 0; j < m.phenomena.size(); ++j) {
          if (i == j) continue;
          const auto it = by_phen.find({m.phenomena[i], m.phenomena[j]});
          if (it == by_phen.end()) continue;
          sim.push_back(m.values[i][j]);
          imp.push_back(it->second.first / it->second.second);
        }
      std::string rho;
      std::string p;
      try {
        const auto corr = stats::spearman(sim, imp);
        rho = format_double(corr.rho);
        p = format_double(corr.p_value);
      } catch (const StatsError&) {
      }
      csv += fmt::format("{},{},{},{}\n", name, sim.size(), rho, p);
    }
    s.write_output(outputs, "similarity/cross_prime_correlation.csv", csv);
  }
  s.complete_stage("similarity", digest, outputs, seconds_since(start));
}

}  // namespace ctxjudge
