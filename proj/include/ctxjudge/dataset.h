#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ctxjudge/prediction.h"

namespace ctxjudge {

struct MinimalPair {
  std::string id;
  std::string suite_id;
  std::string phenomenon;
  std::string acceptable;
  std::string unacceptable;

  bool operator==(const MinimalPair&) const = default;
};

struct PairSuite {
  std::string suite_id;
  std::string phenomenon;
  std::vector<MinimalPair> pairs;

  bool operator==(const PairSuite&) const = default;
};

struct Region {
  int number = 1;
  std::string content;

  bool operator==(const Region&) const = default;
};

struct RegionSequence {
  std::vector<Region> regions;

  // Non-empty region contents joined with single spaces.
  std::string sentence() const;

  bool operator==(const RegionSequence&) const = default;
};

struct ConditionedItem {
  int item_id = 0;
  std::map<std::string, RegionSequence> conditions;
  std::string prediction;
  prediction::Formula formula;

  bool operator==(const ConditionedItem&) const = default;
};

// A multi-condition suite. The acceptable/unacceptable condition names say
// which condition's sentence serves as an acceptable or unacceptable prefix
// sentence when the suite is used as a prefix source.
struct RegionSuite {
  std::string suite_id;
  std::string phenomenon;
  std::string acceptable_condition;
  std::string unacceptable_condition;
  std::vector<std::string> region_names;
  std::vector<ConditionedItem> items;

  bool operator==(const RegionSuite&) const = default;
};

struct CorpusSource {
  std::string name;
  std::vector<std::string> sentences;

  bool operator==(const CorpusSource&) const = default;
};

// One benchmark: pair suites, region suites, or (unusually) both.
// Out-of-domain prefixes for a target are drawn from the other suites of the
// same Dataset.
struct Dataset {
  std::string name;
  std::vector<PairSuite> pair_suites;
  std::vector<RegionSuite> region_suites;

  std::size_t suite_count() const {
    return pair_suites.size() + region_suites.size();
  }
};

// BLiMP-layout JSONL: sentence_good, sentence_bad, linguistics_term, UID,
// pairID. Throws DataError naming the offending line.
PairSuite load_pair_suite(const std::filesystem::path& path);
PairSuite parse_pair_suite(const std::string& contents,
                           const std::string& fallback_suite_id);

// Inverse of parse_pair_suite (one JSON object per line).
std::string serialize_pair_suite(const PairSuite& suite);

// Region-suite JSON document; see docs/region-suite-format.md.
RegionSuite load_region_suite(const std::filesystem::path& path);
RegionSuite parse_region_suite(const std::string& contents,
                               const std::string& fallback_suite_id);

CorpusSource load_corpus(const std::filesystem::path& path);

// A directory is expanded to its *.jsonl (pairs) or *.json (regions) files in
// lexicographic order; a file is loaded directly.
std::vector<PairSuite> load_pair_suites(const std::filesystem::path& path);
std::vector<RegionSuite> load_region_suites(const std::filesystem::path& path);

// Files a path expands to, in load order.
std::vector<std::filesystem::path> expand_inputs(
    const std::filesystem::path& path, const std::string& extension);

}  // namespace ctxjudge
