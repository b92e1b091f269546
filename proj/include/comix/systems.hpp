#pragma once

#include <memory>
#include <string>
#include <vector>

#include "comix/corpus.hpp"
#include "comix/netcore.hpp"
#include "comix/segmenter.hpp"

namespace comix::systems {

enum class SystemKind {
  kAtomicSet,
  kWholeMultiLabel,
  kClauseCompose,
  kClauseComposeOracle,
};

std::string system_name(SystemKind kind);
SystemKind system_from_name(const std::string& name);  // also accepts CLI ids

struct Prediction {
  std::vector<int> intents;  // sorted, unique, non-empty
  std::vector<corpus::Span> segments;
  std::vector<netcore::Vec> segment_scores;
  int predicted_count = -1;  // WholeMultiLabel k, -1 otherwise
};

class System {
 public:
  virtual ~System() = default;
  virtual SystemKind kind() const = 0;
  virtual Prediction predict(const corpus::Example& example) const = 0;
  std::string name() const { return system_name(kind()); }
};

// Softmax over the inventory of intent sets observed in training.
struct AtomicSetModel final : System {
  netcore::Model net;
  std::vector<std::vector<int>> class_sets;  // class id -> sorted intent set

  SystemKind kind() const override { return SystemKind::kAtomicSet; }
  Prediction predict(const corpus::Example& example) const override;
};

// Per-intent sigmoid scores plus a 3-way count head; predicts the top-k
// intents under the predicted count.
struct WholeMultiLabelModel final : System {
  netcore::Model net;

  SystemKind kind() const override { return SystemKind::kWholeMultiLabel; }
  Prediction predict(const corpus::Example& example) const override;
};

// Singleton classifier (trained on train_single only) applied per clause
// segment, with greedy duplicate-discouraging set decoding. With
// use_gold_spans the heuristic segmentation is replaced by the example's
// gold clause spans; wrapper stripping still applies.
struct ClauseComposeModel final : System {
  netcore::Model net;
  segmenter::Grammar grammar;
  double duplicate_margin = 0.5;
  bool use_gold_spans = false;

  SystemKind kind() const override {
    return use_gold_spans ? SystemKind::kClauseComposeOracle
                          : SystemKind::kClauseCompose;
  }
  Prediction predict(const corpus::Example& example) const override;
};

// Vocabulary comes from the union of all training-split texts.
netcore::Vocab build_training_vocab(const corpus::BenchmarkDataset& ds);

struct TrainedAtomic {
  AtomicSetModel model;
  std::vector<double> loss_trace;
};
struct TrainedWholeML {
  WholeMultiLabelModel model;
  std::vector<double> loss_trace;
};
struct TrainedClauseCompose {
  ClauseComposeModel model;
  std::vector<double> loss_trace;
};

TrainedAtomic train_atomic(const corpus::BenchmarkDataset& ds,
                           const netcore::TrainConfig& cfg);
TrainedWholeML train_wholeml(const corpus::BenchmarkDataset& ds,
                             const netcore::TrainConfig& cfg);
TrainedClauseCompose train_clausecompose(const corpus::BenchmarkDataset& ds,
                                         const netcore::TrainConfig& cfg,
                                         segmenter::Grammar grammar,
                                         double duplicate_margin);

// Splits each system trains on.
std::vector<std::string> training_splits(SystemKind kind);

void save_system(const System& sys, const std::string& path);
std::unique_ptr<System> load_system(const std::string& path,
                                    const segmenter::Grammar& grammar,
                                    double duplicate_margin,
                                    bool oracle_spans = false);

}  // namespace comix::systems
