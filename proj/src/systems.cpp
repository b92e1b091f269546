#include "comix/systems.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

using nlohmann::json;

namespace comix::systems {

std::string system_name(SystemKind kind) {
  switch (kind) {
    case SystemKind::kAtomicSet: return "AtomicSet";
    case SystemKind::kWholeMultiLabel: return "WholeMultiLabel";
    case SystemKind::kClauseCompose: return "ClauseCompose";
    case SystemKind::kClauseComposeOracle: return "ClauseComposeOracle";
  }
  throw std::logic_error("unreachable");
}

SystemKind system_from_name(const std::string& name) {
  if (name == "AtomicSet" || name == "atomic") return SystemKind::kAtomicSet;
  if (name == "WholeMultiLabel" || name == "wholeml")
    return SystemKind::kWholeMultiLabel;
  if (name == "ClauseCompose" || name == "clausecompose")
    return SystemKind::kClauseCompose;
  if (name == "ClauseComposeOracle" || name == "oracle")
    return SystemKind::kClauseComposeOracle;
  throw std::runtime_error("unknown system: " + name);
}

namespace {

std::vector<int> ids_or_unk(const netcore::Model& m, const std::string& text) {
  auto ids = m.vocab.ids(text);
  if (ids.empty()) ids.push_back(netcore::Vocab::kUnk);
  return ids;
}

netcore::Activations run(const netcore::Model& m, const std::string& text) {
  netcore::Activations act;
  netcore::encode(m, ids_or_unk(m, text), act);
  netcore::forward_heads(m, act);
  return act;
}

int argmax(const netcore::Vec& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

uint64_t system_init_seed(uint64_t seed, const std::string& name) {
  return mix_seed(seed, "init:" + name);
}

}  // namespace

Prediction AtomicSetModel::predict(const corpus::Example& example) const {
  netcore::Activations act = run(net, example.text);
  const int cls = argmax(act.probs);
  Prediction p;
  p.intents = class_sets.at(cls);
  p.segments = {{0, static_cast<int>(example.text.size())}};
  p.segment_scores = {act.probs};
  return p;
}

Prediction WholeMultiLabelModel::predict(const corpus::Example& example) const {
  netcore::Activations act = run(net, example.text);
  const int k = argmax(act.count_probs) + 1;

  std::vector<int> order(act.probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (act.probs[a] != act.probs[b]) return act.probs[a] > act.probs[b];
    return a < b;  // score ties go to the lower intent id
  });

  Prediction p;
  p.predicted_count = k;
  p.intents.assign(order.begin(), order.begin() + k);
  std::sort(p.intents.begin(), p.intents.end());
  p.segments = {{0, static_cast<int>(example.text.size())}};
  p.segment_scores = {act.probs};
  return p;
}

Prediction ClauseComposeModel::predict(const corpus::Example& example) const {
  std::vector<corpus::Span> spans;
  std::vector<std::string> stripped;

  if (use_gold_spans) {
    if (example.clause_spans.empty())
      throw std::runtime_error("oracle prediction requires gold clause spans");
    for (const auto& s : example.clause_spans) {
      spans.push_back(s);
      stripped.push_back(segmenter::strip_wrappers(
          grammar, example.text.substr(s.begin, s.end - s.begin)));
    }
  } else {
    segmenter::Segmentation seg = segmenter::segment(grammar, example.text);
    spans = std::move(seg.spans);
    stripped = std::move(seg.stripped);
  }

  if (spans.empty()) {
    // Segmentation produced nothing; classify the whole utterance.
    spans.push_back({0, static_cast<int>(example.text.size())});
    stripped.push_back(example.text);
  }

  Prediction p;
  p.segments = spans;

  std::vector<bool> selected(corpus::kNumIntents, false);
  for (size_t si = 0; si < spans.size(); ++si) {
    const std::string& clause =
        stripped[si].empty() ? example.text : stripped[si];
    netcore::Activations act = run(net, clause);
    p.segment_scores.push_back(act.probs);

    int best_unsel = -1, best_sel = -1;
    for (int i = 0; i < corpus::kNumIntents; ++i) {
      if (selected[i]) {
        if (best_sel < 0 || act.probs[i] > act.probs[best_sel]) best_sel = i;
      } else {
        if (best_unsel < 0 || act.probs[i] > act.probs[best_unsel])
          best_unsel = i;
      }
    }
    if (best_unsel < 0) continue;  // every intent already selected
    // A segment that confidently repeats an already-selected intent adds
    // nothing; otherwise it contributes its best unselected intent.
    if (best_sel >= 0 &&
        act.probs[best_sel] - act.probs[best_unsel] >= duplicate_margin)
      continue;
    selected[best_unsel] = true;
  }

  for (int i = 0; i < corpus::kNumIntents; ++i)
    if (selected[i]) p.intents.push_back(i);
  return p;
}

netcore::Vocab build_training_vocab(const corpus::BenchmarkDataset& ds) {
  std::vector<std::string> texts;
  for (const char* tag : {corpus::kTrainSingle, corpus::kTrainPairSeen})
    for (const auto& e : ds.splits.at(tag)) texts.push_back(e.text);
  return netcore::Vocab::build(texts);
}

std::vector<std::string> training_splits(SystemKind kind) {
  switch (kind) {
    case SystemKind::kAtomicSet:
    case SystemKind::kWholeMultiLabel:
      return {corpus::kTrainSingle, corpus::kTrainPairSeen};
    case SystemKind::kClauseCompose:
    case SystemKind::kClauseComposeOracle:
      return {corpus::kTrainSingle};
  }
  throw std::logic_error("unreachable");
}

TrainedAtomic train_atomic(const corpus::BenchmarkDataset& ds,
                           const netcore::TrainConfig& cfg) {
  netcore::Vocab vocab = build_training_vocab(ds);

  // Class inventory: every distinct gold intent set observed in training,
  // ordered by (size, ids) for a stable class indexing.
  std::map<std::vector<int>, int> inventory;
  std::vector<std::vector<int>> class_sets;
  std::vector<const corpus::Example*> pool;
  for (const char* tag : {corpus::kTrainSingle, corpus::kTrainPairSeen})
    for (const auto& e : ds.splits.at(tag)) pool.push_back(&e);

  std::vector<std::vector<int>> all_sets;
  for (const auto* e : pool) all_sets.push_back(e->intents);
  std::sort(all_sets.begin(), all_sets.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) {
              if (a.size() != b.size()) return a.size() < b.size();
              return a < b;
            });
  for (const auto& s : all_sets)
    if (!inventory.count(s)) {
      inventory[s] = static_cast<int>(class_sets.size());
      class_sets.push_back(s);
    }

  std::vector<netcore::TrainItem> items;
  for (const auto* e : pool) {
    netcore::TrainItem item;
    item.ids = vocab.ids(e->text);
    item.target.label = inventory.at(e->intents);
    items.push_back(std::move(item));
  }

  TrainedAtomic out;
  out.model.net = netcore::make_model(
      netcore::HeadKind::kSoftmax, std::move(vocab),
      static_cast<int>(class_sets.size()),
      system_init_seed(cfg.seed, "atomic"));
  out.model.net.config = cfg;
  out.model.class_sets = std::move(class_sets);
  out.loss_trace = netcore::train(out.model.net, items, cfg).epoch_loss;
  return out;
}

TrainedWholeML train_wholeml(const corpus::BenchmarkDataset& ds,
                             const netcore::TrainConfig& cfg) {
  netcore::Vocab vocab = build_training_vocab(ds);
  std::vector<netcore::TrainItem> items;
  for (const char* tag : {corpus::kTrainSingle, corpus::kTrainPairSeen}) {
    for (const auto& e : ds.splits.at(tag)) {
      netcore::TrainItem item;
      item.ids = vocab.ids(e.text);
      for (int id : e.intents) item.target.intent_bits |= 1u << id;
      item.target.count_label = static_cast<int>(e.intents.size()) - 1;
      items.push_back(std::move(item));
    }
  }

  TrainedWholeML out;
  out.model.net = netcore::make_model(
      netcore::HeadKind::kMultiLabel, std::move(vocab), corpus::kNumIntents,
      system_init_seed(cfg.seed, "wholeml"));
  out.model.net.config = cfg;
  out.loss_trace = netcore::train(out.model.net, items, cfg).epoch_loss;
  return out;
}

TrainedClauseCompose train_clausecompose(const corpus::BenchmarkDataset& ds,
                                         const netcore::TrainConfig& cfg,
                                         segmenter::Grammar grammar,
                                         double duplicate_margin) {
  netcore::Vocab vocab = build_training_vocab(ds);
  std::vector<netcore::TrainItem> items;
  for (const auto& e : ds.splits.at(corpus::kTrainSingle)) {
    netcore::TrainItem item;
    item.ids = vocab.ids(e.text);
    item.target.label = e.intents.at(0);
    items.push_back(std::move(item));
  }

  TrainedClauseCompose out;
  out.model.net = netcore::make_model(
      netcore::HeadKind::kSoftmax, std::move(vocab), corpus::kNumIntents,
      system_init_seed(cfg.seed, "clausecompose"));
  out.model.net.config = cfg;
  out.model.grammar = std::move(grammar);
  out.model.duplicate_margin = duplicate_margin;
  out.loss_trace = netcore::train(out.model.net, items, cfg).epoch_loss;
  return out;
}

void save_system(const System& sys, const std::string& path) {
  json extra;
  switch (sys.kind()) {
    case SystemKind::kAtomicSet: {
      const auto& m = static_cast<const AtomicSetModel&>(sys);
      extra["system"] = "atomic";
      extra["class_sets"] = m.class_sets;
      netcore::save_model(m.net, extra, path);
      return;
    }
    case SystemKind::kWholeMultiLabel: {
      const auto& m = static_cast<const WholeMultiLabelModel&>(sys);
      extra["system"] = "wholeml";
      netcore::save_model(m.net, extra, path);
      return;
    }
    case SystemKind::kClauseCompose:
    case SystemKind::kClauseComposeOracle: {
      const auto& m = static_cast<const ClauseComposeModel&>(sys);
      extra["system"] = "clausecompose";
      extra["duplicate_margin"] = m.duplicate_margin;
      netcore::save_model(m.net, extra, path);
      return;
    }
  }
  throw std::logic_error("unreachable");
}

std::unique_ptr<System> load_system(const std::string& path,
                                    const segmenter::Grammar& grammar,
                                    double duplicate_margin,
                                    bool oracle_spans) {
  json extra;
  netcore::Model net = netcore::load_model(path, &extra);
  const std::string id = extra.at("system").get<std::string>();
  if (id == "atomic") {
    auto m = std::make_unique<AtomicSetModel>();
    m->net = std::move(net);
    m->class_sets = extra.at("class_sets").get<std::vector<std::vector<int>>>();
    return m;
  }
  if (id == "wholeml") {
    auto m = std::make_unique<WholeMultiLabelModel>();
    m->net = std::move(net);
    return m;
  }
  if (id == "clausecompose") {
    auto m = std::make_unique<ClauseComposeModel>();
    m->net = std::move(net);
    m->grammar = grammar;
    m->duplicate_margin = duplicate_margin;
    m->use_gold_spans = oracle_spans;
    return m;
  }
  throw std::runtime_error("unknown system kind in model file: " + id);
}

}  // namespace comix::systems
