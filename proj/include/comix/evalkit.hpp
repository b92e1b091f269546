#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "comix/corpus.hpp"
#include "comix/systems.hpp"

#include "json.hpp"

namespace comix::evalkit {

struct MetricsRecord {
  std::string model;
  std::string split;
  uint64_t seed = 0;
  double em = 0;
  double micro_f1 = 0;
  double macro_f1 = 0;
  double count_acc = 0;
  int n_examples = 0;
};

struct PredGold {
  std::vector<int> gold;  // sorted intent ids
  std::vector<int> pred;
};

bool exact_match(const std::vector<int>& pred, const std::vector<int>& gold);
double exact_match_rate(const std::vector<PredGold>& records);
double micro_f1(const std::vector<PredGold>& records);
double macro_f1(const std::vector<PredGold>& records,
                int n_intents = corpus::kNumIntents);
double count_accuracy(const std::vector<PredGold>& records);

MetricsRecord evaluate(const systems::System& sys,
                       const std::vector<corpus::Example>& examples,
                       const std::string& split, uint64_t seed,
                       std::vector<systems::Prediction>* predictions_out = nullptr);

// One record per tag; throws on unknown tag.
std::vector<MetricsRecord> evaluate_splits(const systems::System& sys,
                                           const corpus::BenchmarkDataset& ds,
                                           const std::vector<std::string>& tags,
                                           uint64_t seed);

struct CellStat {
  double mean = 0;
  double stddev = 0;  // population standard deviation over seeds
  int n_seeds = 0;
};

struct ResultsTable {
  // model -> split -> aggregated exact match
  std::map<std::string, std::map<std::string, CellStat>> em;
  std::vector<uint64_t> seeds;
};

// Aggregates per-(model, split) across seeds; throws on ragged seed coverage.
ResultsTable aggregate(const std::vector<MetricsRecord>& records);

std::string format_cell(const CellStat& cell);  // "96.0 ± 0.8"
std::string render_table(const ResultsTable& table);

nlohmann::json record_to_json(const MetricsRecord& r);
MetricsRecord record_from_json(const nlohmann::json& j);

}  // namespace comix::evalkit
