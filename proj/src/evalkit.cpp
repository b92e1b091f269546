#include "comix/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

using nlohmann::json;

namespace comix::evalkit {

bool exact_match(const std::vector<int>& pred, const std::vector<int>& gold) {
  return pred == gold;  // both sorted unique
}

double exact_match_rate(const std::vector<PredGold>& records) {
  if (records.empty()) throw std::runtime_error("metrics need >= 1 record");
  int hits = 0;
  for (const auto& r : records) hits += exact_match(r.pred, r.gold);
  return static_cast<double>(hits) / records.size();
}

double micro_f1(const std::vector<PredGold>& records) {
  if (records.empty()) throw std::runtime_error("metrics need >= 1 record");
  long tp = 0, fp = 0, fn = 0;
  for (const auto& r : records) {
    std::set<int> gold(r.gold.begin(), r.gold.end());
    std::set<int> pred(r.pred.begin(), r.pred.end());
    for (int i : pred) (gold.count(i) ? tp : fp) += 1;
    for (int i : gold) fn += !pred.count(i);
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
}

double macro_f1(const std::vector<PredGold>& records, int n_intents) {
  if (records.empty()) throw std::runtime_error("metrics need >= 1 record");
  double sum = 0.0;
  for (int intent = 0; intent < n_intents; ++intent) {
    long tp = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
      const bool in_gold =
          std::find(r.gold.begin(), r.gold.end(), intent) != r.gold.end();
      const bool in_pred =
          std::find(r.pred.begin(), r.pred.end(), intent) != r.pred.end();
      tp += in_gold && in_pred;
      fp += in_pred && !in_gold;
      fn += in_gold && !in_pred;
    }
    // Intent absent from both gold and predictions everywhere scores 1.
    sum += (tp + fp + fn == 0) ? 1.0
                               : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  }
  return sum / n_intents;
}

double count_accuracy(const std::vector<PredGold>& records) {
  if (records.empty()) throw std::runtime_error("metrics need >= 1 record");
  int hits = 0;
  for (const auto& r : records) hits += r.pred.size() == r.gold.size();
  return static_cast<double>(hits) / records.size();
}

MetricsRecord evaluate(const systems::System& sys,
                       const std::vector<corpus::Example>& examples,
                       const std::string& split, uint64_t seed,
                       std::vector<systems::Prediction>* predictions_out) {
  std::vector<PredGold> records;
  records.reserve(examples.size());
  for (const auto& e : examples) {
    systems::Prediction p = sys.predict(e);
    records.push_back({e.intents, p.intents});
    if (predictions_out) predictions_out->push_back(std::move(p));
  }
  MetricsRecord out;
  out.model = sys.name();
  out.split = split;
  out.seed = seed;
  out.em = exact_match_rate(records);
  out.micro_f1 = micro_f1(records);
  out.macro_f1 = macro_f1(records);
  out.count_acc = count_accuracy(records);
  out.n_examples = static_cast<int>(examples.size());
  return out;
}

std::vector<MetricsRecord> evaluate_splits(const systems::System& sys,
                                           const corpus::BenchmarkDataset& ds,
                                           const std::vector<std::string>& tags,
                                           uint64_t seed) {
  std::vector<MetricsRecord> out;
  for (const auto& tag : tags) {
    auto it = ds.splits.find(tag);
    if (it == ds.splits.end())
      throw std::runtime_error("unknown split tag: " + tag);
    out.push_back(evaluate(sys, it->second, tag, seed));
  }
  return out;
}

ResultsTable aggregate(const std::vector<MetricsRecord>& records) {
  ResultsTable table;
  std::set<uint64_t> seed_set;
  for (const auto& r : records) seed_set.insert(r.seed);
  table.seeds.assign(seed_set.begin(), seed_set.end());

  std::map<std::string, std::map<std::string, std::vector<double>>> cells;
  for (const auto& r : records) cells[r.model][r.split].push_back(r.em);

  for (const auto& [model, splits] : cells) {
    for (const auto& [split, values] : splits) {
      if (values.size() != table.seeds.size())
        throw std::runtime_error("ragged seed coverage for " + model + "/" +
                                 split);
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= values.size();
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      var /= values.size();  // population variance
      table.em[model][split] = {mean, std::sqrt(var),
                                static_cast<int>(values.size())};
    }
  }
  return table;
}

std::string format_cell(const CellStat& cell) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", cell.mean * 100.0,
                cell.stddev * 100.0);
  return buf;
}

std::string render_table(const ResultsTable& table) {
  // Canonical split columns first, extras (e.g. external sets) afterwards.
  std::vector<std::string> columns;
  for (const auto& tag : corpus::kSplitTags)
    if (tag.rfind("test_", 0) == 0) columns.push_back(tag);
  std::set<std::string> extra;
  for (const auto& [model, cells] : table.em)
    for (const auto& [split, stat] : cells)
      if (std::find(columns.begin(), columns.end(), split) == columns.end())
        extra.insert(split);
  columns.insert(columns.end(), extra.begin(), extra.end());

  const std::vector<std::string> model_order = {
      "AtomicSet", "WholeMultiLabel", "ClauseCompose", "ClauseComposeOracle"};
  std::vector<std::string> rows;
  for (const auto& m : model_order)
    if (table.em.count(m)) rows.push_back(m);
  for (const auto& [model, cells] : table.em)
    if (std::find(rows.begin(), rows.end(), model) == rows.end())
      rows.push_back(model);

  std::ostringstream out;
  out << "Exact match, mean ± std over " << table.seeds.size()
      << " seed(s)\n\n";
  const int name_w = 20, cell_w = 22;
  out << std::string(name_w, ' ');
  for (const auto& c : columns) {
    std::string label = c.rfind("test_", 0) == 0 ? c.substr(5) : c;
    label.resize(std::max<size_t>(label.size(), 1));
    out << label << std::string(cell_w > static_cast<int>(label.size())
                                    ? cell_w - label.size()
                                    : 1,
                                ' ');
  }
  out << "\n";
  for (const auto& model : rows) {
    std::string name = model;
    if (static_cast<int>(name.size()) < name_w)
      name += std::string(name_w - name.size(), ' ');
    out << name;
    for (const auto& c : columns) {
      std::string cell = "-";
      auto mit = table.em.find(model);
      if (mit != table.em.end()) {
        auto cit = mit->second.find(c);
        if (cit != mit->second.end()) cell = format_cell(cit->second);
      }
      // The ± glyph is 2 bytes; pad on display width.
      const size_t width = cell.size() - (cell.find("±") == std::string::npos ? 0 : 1);
      out << cell
          << std::string(cell_w > static_cast<int>(width) ? cell_w - width : 1,
                         ' ');
    }
    out << "\n";
  }
  return out.str();
}

json record_to_json(const MetricsRecord& r) {
  return {{"model", r.model},     {"split", r.split},
          {"seed", r.seed},       {"em", r.em},
          {"micro_f1", r.micro_f1}, {"macro_f1", r.macro_f1},
          {"count_acc", r.count_acc}, {"n_examples", r.n_examples}};
}

MetricsRecord record_from_json(const json& j) {
  MetricsRecord r;
  r.model = j.at("model").get<std::string>();
  r.split = j.at("split").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  r.em = j.at("em").get<double>();
  r.micro_f1 = j.at("micro_f1").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.count_acc = j.at("count_acc").get<double>();
  r.n_examples = j.at("n_examples").get<int>();
  return r;
}

}  // namespace comix::evalkit
