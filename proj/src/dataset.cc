#include "ctxjudge/dataset.h"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctxjudge/error.h"
#include "ctxjudge/text.h"

namespace ctxjudge {

using nlohmann::json;

std::string RegionSequence::sentence() const {
  std::string out;
  for (const auto& r : regions) {
    if (r.content.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += r.content;
  }
  return out;
}

namespace {

std::string field_as_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

PairSuite parse_pair_suite(const std::string& contents,
                           const std::string& fallback_suite_id) {
  PairSuite suite;
  std::set<std::string> seen_ids;
  std::istringstream in(contents);
  std::string raw;
  std::size_t line_no = 0;
  bool have_suite = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (trim(raw).empty()) continue;
    json rec;
    try {
      rec = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw DataError(line_error(line_no, "malformed record: " + std::string(e.what())));
    }
    if (!rec.is_object())
      throw DataError(line_error(line_no, "record is not an object"));
    for (const char* key : {"sentence_good", "sentence_bad"}) {
      if (!rec.contains(key) || !rec[key].is_string())
        throw DataError(line_error(line_no, std::string("missing string field ") + key));
    }
    MinimalPair p;
    p.acceptable = std::string(trim(rec["sentence_good"].get<std::string>()));
    p.unacceptable = std::string(trim(rec["sentence_bad"].get<std::string>()));
    if (p.acceptable.empty() || p.unacceptable.empty())
      throw DataError(line_error(line_no, "empty sentence"));
    if (p.acceptable == p.unacceptable)
      throw DataError(line_error(line_no, "sentence_good equals sentence_bad"));
    p.suite_id = rec.contains("UID") ? field_as_string(rec["UID"]) : fallback_suite_id;
    if (rec.contains("linguistics_term"))
      p.phenomenon = field_as_string(rec["linguistics_term"]);
    else
      p.phenomenon = p.suite_id;
    p.id = rec.contains("pairID") ? field_as_string(rec["pairID"])
                                  : std::to_string(line_no);
    if (!have_suite) {
      suite.suite_id = p.suite_id;
      suite.phenomenon = p.phenomenon;
      have_suite = true;
    } else if (p.suite_id != suite.suite_id) {
      throw DataError(line_error(line_no, "record belongs to suite '" + p.suite_id +
                                              "', expected '" + suite.suite_id + "'"));
    } else if (p.phenomenon != suite.phenomenon) {
      throw DataError(line_error(line_no, "phenomenon '" + p.phenomenon +
                                              "' differs from suite phenomenon '" +
                                              suite.phenomenon + "'"));
    }
    if (!seen_ids.insert(p.id).second)
      throw DataError(line_error(line_no, "duplicate pair id '" + p.id + "'"));
    suite.pairs.push_back(std::move(p));
  }
  if (suite.pairs.empty()) throw DataError("empty pair suite (no records)");
  return suite;
}

PairSuite load_pair_suite(const std::filesystem::path& path) {
  try {
    return parse_pair_suite(read_file(path), path.stem().string());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_pair_suite(const PairSuite& suite) {
  std::string out;
  for (const auto& p : suite.pairs) {
    json rec = {{"sentence_good", p.acceptable},
                {"sentence_bad", p.unacceptable},
                {"linguistics_term", p.phenomenon},
                {"UID", p.suite_id},
                {"pairID", p.id}};
    out += rec.dump();
    out.push_back('\n');
  }
  return out;
}

RegionSuite parse_region_suite(const std::string& contents,
                               const std::string& fallback_suite_id) {
  json doc;
  try {
    doc = json::parse(contents);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed region suite: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("region suite must be a JSON object");
  RegionSuite suite;
  suite.suite_id = doc.value("suite", fallback_suite_id);
  suite.phenomenon = doc.value("phenomenon", suite.suite_id);
  suite.acceptable_condition = doc.value("acceptable_condition", std::string());
  suite.unacceptable_condition = doc.value("unacceptable_condition", std::string());
  if (doc.contains("region_names"))
    suite.region_names = doc["region_names"].get<std::vector<std::string>>();
  const std::string default_prediction = doc.value("prediction", std::string());
  if (!doc.contains("items") || !doc["items"].is_array() || doc["items"].empty())
    throw DataError("region suite has no items");

  std::set<int> seen_items;
  int index = 0;
  for (const auto& it : doc["items"]) {
    ++index;
    ConditionedItem item;
    item.item_id = it.value("item", index);
    const std::string where = "item " + std::to_string(item.item_id);
    if (!seen_items.insert(item.item_id).second)
      throw DataError(where + ": duplicate item id");
    if (!it.contains("conditions") || !it["conditions"].is_object())
      throw DataError(where + ": missing conditions object");
    std::size_t region_count = 0;
    for (const auto& [name, regions] : it["conditions"].items()) {
      if (name.empty()) throw DataError(where + ": empty condition name");
      if (!regions.is_array() || regions.empty())
        throw DataError(where + ": condition '" + name + "' has no regions");
      RegionSequence seq;
      int number = 0;
      for (const auto& r : regions) {
        if (!r.is_string())
          throw DataError(where + ": region content must be a string");
        seq.regions.push_back({++number, std::string(trim(r.get<std::string>()))});
      }
      if (region_count == 0) {
        region_count = seq.regions.size();
      } else if (seq.regions.size() != region_count) {
        throw DataError(where + ": region count mismatch (" +
                        std::to_string(region_count) + " vs " +
                        std::to_string(seq.regions.size()) + " in condition '" +
                        name + "')");
      }
      if (seq.sentence().empty())
        throw DataError(where + ": condition '" + name + "' is empty");
      item.conditions.emplace(name, std::move(seq));
    }
    if (item.conditions.size() < 2)
      throw DataError(where + ": needs at least two conditions");
    if (!suite.region_names.empty() && suite.region_names.size() != region_count)
      throw DataError(where + ": region count mismatch with region_names");
    item.prediction = it.value("prediction", default_prediction);
    if (item.prediction.empty()) throw DataError(where + ": no prediction");
    try {
      item.formula = prediction::parse(item.prediction);
    } catch (const FormulaSyntaxError& e) {
      throw DataError(where + ": unparseable prediction: " + e.what());
    }
    for (const auto& ref : prediction::region_refs(item.formula)) {
      const auto c = item.conditions.find(ref.condition);
      if (c == item.conditions.end())
        throw DataError(where + ": prediction references unknown condition '" +
                        ref.condition + "'");
      if (static_cast<std::size_t>(ref.region) > c->second.regions.size())
        throw DataError(where + ": prediction references missing region " +
                        prediction::to_string(ref));
    }
    for (const auto* cond : {&suite.acceptable_condition, &suite.unacceptable_condition}) {
      if (!cond->empty() && !item.conditions.contains(*cond))
        throw DataError(where + ": lacks designated condition '" + *cond + "'");
    }
    suite.items.push_back(std::move(item));
  }
  return suite;
}

RegionSuite load_region_suite(const std::filesystem::path& path) {
  try {
    return parse_region_suite(read_file(path), path.stem().string());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

CorpusSource load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path))
    throw DataError("corpus file missing: " + path.string());
  CorpusSource corpus;
  corpus.name = path.stem().string();
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty()) corpus.sentences.emplace_back(t);
  }
  if (corpus.sentences.empty())
    throw DataError(path.string() + ": zero usable sentences");
  return corpus;
}

std::vector<std::filesystem::path> expand_inputs(
    const std::filesystem::path& path, const std::string& extension) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == extension)
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw DataError("no *" + extension + " files in " + path.string());
  } else if (fs::is_regular_file(path)) {
    files.push_back(path);
  } else {
    throw DataError("dataset path not found: " + path.string());
  }
  return files;
}

std::vector<PairSuite> load_pair_suites(const std::filesystem::path& path) {
  std::vector<PairSuite> suites;
  std::set<std::string> ids;
  for (const auto& f : expand_inputs(path, ".jsonl")) {
    suites.push_back(load_pair_suite(f));
    if (!ids.insert(suites.back().suite_id).second)
      throw DataError("duplicate suite id '" + suites.back().suite_id + "'");
  }
  return suites;
}

std::vector<RegionSuite> load_region_suites(const std::filesystem::path& path) {
  std::vector<RegionSuite> suites;
  std::set<std::string> ids;
  for (const auto& f : expand_inputs(path, ".json")) {
    suites.push_back(load_region_suite(f));
    if (!ids.insert(suites.back().suite_id).second)
      throw DataError("duplicate suite id '" + suites.back().suite_id + "'");
  }
  return suites;
}

}  // namespace ctxjudge
