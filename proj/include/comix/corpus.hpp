#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "comix/rng.hpp"

#include "json.hpp"

namespace comix::corpus {

inline constexpr int kNumIntents = 10;

// Fixed intent inventory; index in this array is the intent id.
extern const std::array<std::string, kNumIntents> kIntentNames;

int intent_id(const std::string& name);  // throws on unknown name
const std::string& intent_name(int id);

// Canonical split tags, in generation order.
extern const std::array<std::string, 8> kSplitTags;
extern const std::array<int, 8> kSplitSizes;

inline constexpr const char* kTrainSingle = "train_single";
inline constexpr const char* kTrainPairSeen = "train_pair_seen";
inline constexpr const char* kTestPairSeen = "test_pair_seen";
inline constexpr const char* kTestPairUnseen = "test_pair_unseen";
inline constexpr const char* kTestPairShift = "test_pair_shift";
inline constexpr const char* kTestPairLongShift = "test_pair_long_shift";
inline constexpr const char* kTestPairTemplate = "test_pair_template";
inline constexpr const char* kTestTripleShift = "test_triple_shift";

struct Span {
  int begin = 0;  // byte offsets, [begin, end)
  int end = 0;
  bool operator==(const Span&) const = default;
};

struct TemplateRegistry {
  struct IntentEntry {
    std::string name;
    std::vector<std::string> templates;  // exactly 5
    int reserved = 0;                    // index of the held-out template
  };
  std::vector<IntentEntry> intents;                        // exactly 10, canonical order
  std::map<std::string, std::vector<std::string>> lexicons;  // slot kind -> values
};

struct Connector {
  std::string id;
  int arity = 2;
  std::vector<std::string> parts;  // arity + 1 literal pieces around clause slots
};

struct Wrapper {
  std::string id;
  std::string prefix;
  std::string suffix;
};

struct ConnectorPool {
  std::vector<Connector> train;           // two-clause, training + easy test splits
  std::vector<Connector> shifted;         // two-clause, never in training
  std::vector<Connector> triple_shifted;  // three-clause, never in training
  std::vector<Wrapper> wrappers;          // long-shift scaffolds
};

struct PairSplit {
  std::vector<std::pair<int, int>> seen;    // 27 unordered pairs, a < b
  std::vector<std::pair<int, int>> unseen;  // 18 unordered pairs, a < b
  uint64_t seed = 0;
};

struct ExampleMeta {
  std::string pair_id;                  // sorted intent names joined with '+'
  std::vector<int> clause_intents;      // utterance order
  std::vector<std::string> templates;   // "intent_name/index", utterance order
  std::string connector;                // connector id, empty for singletons
  std::string wrapper;                  // wrapper id, empty if none
  std::vector<std::map<std::string, std::string>> slots;  // per clause
};

struct Example {
  std::string text;
  std::vector<int> intents;  // sorted, unique
  std::vector<Span> clause_spans;
  std::string split;
  ExampleMeta meta;
};

struct BenchmarkDataset {
  std::map<std::string, std::vector<Example>> splits;
  PairSplit pair_split;
  uint64_t generation_seed = 0;
};

enum class TemplateChoice { kTrainOnly, kAny, kReservedOnly };

// --- construction ---------------------------------------------------------

TemplateRegistry build_registry(const nlohmann::json& author_config);
TemplateRegistry builtin_registry();

ConnectorPool build_connector_pool(const nlohmann::json& config);
ConnectorPool builtin_connector_pool();

PairSplit assign_pair_splits(uint64_t seed);

Example sample_singleton(const TemplateRegistry& registry, int intent, Rng& rng,
                         bool allow_reserved);

Example compose_multi(const TemplateRegistry& registry,
                      const std::vector<int>& intents,
                      const Connector& connector, const Wrapper* wrapper,
                      Rng& rng, TemplateChoice choice);

BenchmarkDataset generate_benchmark(const TemplateRegistry& registry,
                                    const ConnectorPool& pool,
                                    const PairSplit& pair_split, uint64_t seed);

// Named invariant checks; returns failure descriptions ("check_name: detail").
std::vector<std::string> validate_dataset(const BenchmarkDataset& ds,
                                          const TemplateRegistry& registry,
                                          const ConnectorPool& pool);

// --- serialization --------------------------------------------------------

nlohmann::json example_to_json(const Example& e);
Example example_from_json(const nlohmann::json& j);

std::string serialize_examples(const std::vector<Example>& examples);
std::vector<Example> parse_examples(const std::string& jsonl);

// Writes <split>.jsonl per split plus manifest.json (counts, pair split,
// reserved templates, per-file and combined content hashes).
void save_dataset(const BenchmarkDataset& ds, const std::string& dir,
                  const TemplateRegistry* registry = nullptr);

// Verifies manifest hashes; throws on mismatch or missing files.
BenchmarkDataset load_dataset(const std::string& dir);

// Loads a standalone example file (external / manually authored sets).
std::vector<Example> load_examples_file(const std::string& path);

uint64_t dataset_content_hash(const std::string& dir);  // combined hash from manifest

}  // namespace comix::corpus
