#include "comix/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "comix/defaults.hpp"
#include "comix/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace comix::corpus {

const std::array<std::string, kNumIntents> kIntentNames = {
    "check_weather",    "weather_alert",  "book_restaurant",
    "restaurant_hours", "restaurant_address", "play_music",
    "pause_music",      "send_message",   "schedule_meeting",
    "cancel_meeting"};

const std::array<std::string, 8> kSplitTags = {
    kTrainSingle,   kTrainPairSeen,    kTestPairSeen,     kTestPairUnseen,
    kTestPairShift, kTestPairLongShift, kTestPairTemplate, kTestTripleShift};

const std::array<int, 8> kSplitSizes = {2800, 6480, 1080, 1080,
                                        1080, 1080, 1080, 600};

namespace {

constexpr int kTemplatesPerIntent = 5;
constexpr int kMinLexiconEntries = 8;
constexpr double kPolitenessProb = 0.3;
constexpr const char* kPolitenessPrefix = "please ";
constexpr const char* kPolitenessSuffix = " for me";

constexpr int kTrainSinglePerIntent = 280;
constexpr int kTrainPairPerPair = 240;
constexpr int kTestSeenPerPair = 40;
constexpr int kTestUnseenPerPair = 60;
constexpr int kTripleCount = 600;

struct Clause {
  int intent = 0;
  int template_idx = 0;
  std::string text;
  std::map<std::string, std::string> slots;
};

std::vector<std::string> placeholder_kinds(const std::string& tmpl) {
  std::vector<std::string> kinds;
  size_t pos = 0;
  while (true) {
    size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) break;
    size_t close = tmpl.find('}', open);
    if (close == std::string::npos)
      throw std::runtime_error("unterminated placeholder in template: " + tmpl);
    kinds.push_back(tmpl.substr(open + 1, close - open - 1));
    pos = close + 1;
  }
  return kinds;
}

std::string render_with_slots(const std::string& tmpl,
                              const std::map<std::string, std::string>& slots) {
  std::string out;
  size_t pos = 0;
  while (pos < tmpl.size()) {
    size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out += tmpl.substr(pos);
      break;
    }
    out += tmpl.substr(pos, open - pos);
    size_t close = tmpl.find('}', open);
    const std::string kind = tmpl.substr(open + 1, close - open - 1);
    auto it = slots.find(kind);
    if (it == slots.end())
      throw std::runtime_error("missing slot value for kind: " + kind);
    out += it->second;
    pos = close + 1;
  }
  return out;
}

int pick_template(const TemplateRegistry::IntentEntry& entry, Rng& rng,
                  TemplateChoice choice) {
  switch (choice) {
    case TemplateChoice::kReservedOnly:
      return entry.reserved;
    case TemplateChoice::kAny:
      return rng.index(kTemplatesPerIntent);
    case TemplateChoice::kTrainOnly: {
      int idx = rng.index(kTemplatesPerIntent - 1);
      return idx >= entry.reserved ? idx + 1 : idx;
    }
  }
  throw std::logic_error("unreachable");
}

Clause sample_clause(const TemplateRegistry& registry, int intent, Rng& rng,
                     TemplateChoice choice) {
  const auto& entry = registry.intents.at(intent);
  Clause c;
  c.intent = intent;
  c.template_idx = pick_template(entry, rng, choice);
  const std::string& tmpl = entry.templates.at(c.template_idx);
  for (const std::string& kind : placeholder_kinds(tmpl)) {
    const auto& lex = registry.lexicons.at(kind);
    c.slots[kind] = lex[rng.index(static_cast<int>(lex.size()))];
  }
  c.text = render_with_slots(tmpl, c.slots);
  if (rng.chance(kPolitenessProb)) c.text = kPolitenessPrefix + c.text;
  if (rng.chance(kPolitenessProb)) c.text += kPolitenessSuffix;
  return c;
}

std::string pair_id_for(std::vector<int> intents) {
  std::sort(intents.begin(), intents.end());
  std::string out;
  for (size_t i = 0; i < intents.size(); ++i) {
    if (i) out += '+';
    out += intent_name(intents[i]);
  }
  return out;
}

Example assemble(const std::vector<Clause>& clauses, const Connector* connector,
                 const Wrapper* wrapper) {
  Example e;
  std::string text = wrapper ? wrapper->prefix : "";
  for (size_t i = 0; i < clauses.size(); ++i) {
    if (connector) text += connector->parts[i];
    Span span;
    span.begin = static_cast<int>(text.size());
    text += clauses[i].text;
    span.end = static_cast<int>(text.size());
    e.clause_spans.push_back(span);
    e.meta.clause_intents.push_back(clauses[i].intent);
    e.meta.templates.push_back(intent_name(clauses[i].intent) + "/" +
                               std::to_string(clauses[i].template_idx));
    e.meta.slots.push_back(clauses[i].slots);
  }
  if (connector) text += connector->parts[clauses.size()];
  if (wrapper) text += wrapper->suffix;
  e.text = std::move(text);
  for (const auto& c : clauses) e.intents.push_back(c.intent);
  std::sort(e.intents.begin(), e.intents.end());
  e.meta.pair_id = pair_id_for(e.intents);
  if (connector) e.meta.connector = connector->id;
  if (wrapper) e.meta.wrapper = wrapper->id;
  return e;
}

Connector parse_connector(const json& j, int expected_arity) {
  Connector c;
  c.id = j.at("id").get<std::string>();
  const std::string pattern = j.at("pattern").get<std::string>();
  size_t pos = 0;
  int slot = 0;
  std::string part;
  while (pos < pattern.size()) {
    size_t open = pattern.find('{', pos);
    if (open == std::string::npos) {
      part += pattern.substr(pos);
      break;
    }
    part += pattern.substr(pos, open - pos);
    size_t close = pattern.find('}', open);
    if (close == std::string::npos)
      throw std::runtime_error("bad connector pattern: " + pattern);
    int idx = std::stoi(pattern.substr(open + 1, close - open - 1));
    if (idx != slot)
      throw std::runtime_error("connector slots must appear in order: " +
                               pattern);
    c.parts.push_back(part);
    part.clear();
    ++slot;
    pos = close + 1;
  }
  c.parts.push_back(part);
  c.arity = slot;
  if (c.arity != expected_arity)
    throw std::runtime_error("connector arity mismatch for '" + c.id +
                             "': expected " + std::to_string(expected_arity));
  return c;
}

std::string connector_pattern(const Connector& c) {
  std::string out;
  for (int i = 0; i < c.arity; ++i) {
    out += c.parts[i];
    out += "{" + std::to_string(i) + "}";
  }
  out += c.parts[c.arity];
  return out;
}

}  // namespace

int intent_id(const std::string& name) {
  for (int i = 0; i < kNumIntents; ++i)
    if (kIntentNames[i] == name) return i;
  throw std::runtime_error("unknown intent name: " + name);
}

const std::string& intent_name(int id) {
  if (id < 0 || id >= kNumIntents)
    throw std::runtime_error("intent id out of range: " + std::to_string(id));
  return kIntentNames[id];
}

TemplateRegistry build_registry(const json& config) {
  TemplateRegistry reg;
  for (auto& [kind, values] : config.at("lexicons").items()) {
    auto list = values.get<std::vector<std::string>>();
    if (static_cast<int>(list.size()) < kMinLexiconEntries)
      throw std::runtime_error("lexicon size: '" + kind + "' has " +
                               std::to_string(list.size()) + " entries, need " +
                               std::to_string(kMinLexiconEntries));
    for (const auto& v : list)
      if (v.empty()) throw std::runtime_error("empty lexicon entry in " + kind);
    reg.lexicons[kind] = std::move(list);
  }

  const auto& intents = config.at("intents");
  if (intents.size() != kNumIntents)
    throw std::runtime_error("registry must define exactly 10 intents");
  for (int i = 0; i < kNumIntents; ++i) {
    const auto& j = intents.at(i);
    TemplateRegistry::IntentEntry entry;
    entry.name = j.at("name").get<std::string>();
    if (entry.name != kIntentNames[i])
      throw std::runtime_error("intent " + std::to_string(i) + " must be '" +
                               kIntentNames[i] + "', got '" + entry.name + "'");
    entry.templates = j.at("templates").get<std::vector<std::string>>();
    if (entry.templates.size() != kTemplatesPerIntent)
      throw std::runtime_error(
          "template count: intent '" + entry.name + "' has " +
          std::to_string(entry.templates.size()) + " templates, need 5");
    entry.reserved = j.at("reserved").get<int>();
    if (entry.reserved < 0 || entry.reserved >= kTemplatesPerIntent)
      throw std::runtime_error("reserved index out of range for " + entry.name);
    for (const auto& tmpl : entry.templates) {
      std::set<std::string> seen_kinds;
      for (const auto& kind : placeholder_kinds(tmpl)) {
        if (!reg.lexicons.count(kind))
          throw std::runtime_error("unresolvable placeholder '{" + kind +
                                   "}' in template: " + tmpl);
        if (!seen_kinds.insert(kind).second)
          throw std::runtime_error("duplicate slot kind '{" + kind +
                                   "}' in template: " + tmpl);
      }
    }
    reg.intents.push_back(std::move(entry));
  }
  return reg;
}

TemplateRegistry builtin_registry() {
  return build_registry(json::parse(builtin_registry_json()));
}

ConnectorPool build_connector_pool(const json& config) {
  ConnectorPool pool;
  for (const auto& j : config.at("train"))
    pool.train.push_back(parse_connector(j, 2));
  for (const auto& j : config.at("shifted"))
    pool.shifted.push_back(parse_connector(j, 2));
  for (const auto& j : config.at("triple_shifted"))
    pool.triple_shifted.push_back(parse_connector(j, 3));
  for (const auto& j : config.at("wrappers")) {
    Wrapper w;
    w.id = j.at("id").get<std::string>();
    w.prefix = j.at("prefix").get<std::string>();
    w.suffix = j.at("suffix").get<std::string>();
    if (w.prefix.empty() && w.suffix.empty())
      throw std::runtime_error("wrapper '" + w.id + "' is empty");
    pool.wrappers.push_back(std::move(w));
  }

  if (pool.train.size() < 3) throw std::runtime_error("need >= 3 train connectors");
  if (pool.shifted.size() < 3)
    throw std::runtime_error("need >= 3 shifted connectors");
  if (pool.triple_shifted.size() < 2)
    throw std::runtime_error("need >= 2 triple connectors");
  if (pool.wrappers.size() < 4) throw std::runtime_error("need >= 4 wrappers");

  std::set<std::string> train_patterns;
  for (const auto& c : pool.train) train_patterns.insert(connector_pattern(c));
  for (const auto& c : pool.shifted)
    if (train_patterns.count(connector_pattern(c)))
      throw std::runtime_error("shifted connector '" + c.id +
                               "' duplicates a train pattern");
  return pool;
}

ConnectorPool builtin_connector_pool() {
  return build_connector_pool(json::parse(builtin_connectors_json()));
}

PairSplit assign_pair_splits(uint64_t seed) {
  std::vector<std::pair<int, int>> all;
  for (int a = 0; a < kNumIntents; ++a)
    for (int b = a + 1; b < kNumIntents; ++b) all.emplace_back(a, b);
  Rng rng(seed);
  rng.shuffle(all);
  PairSplit split;
  split.seed = seed;
  split.seen.assign(all.begin(), all.begin() + 27);
  split.unseen.assign(all.begin() + 27, all.end());
  std::sort(split.seen.begin(), split.seen.end());
  std::sort(split.unseen.begin(), split.unseen.end());
  return split;
}

Example sample_singleton(const TemplateRegistry& registry, int intent, Rng& rng,
                         bool allow_reserved) {
  Clause c = sample_clause(registry, intent, rng,
                           allow_reserved ? TemplateChoice::kAny
                                          : TemplateChoice::kTrainOnly);
  return assemble({c}, nullptr, nullptr);
}

Example compose_multi(const TemplateRegistry& registry,
                      const std::vector<int>& intents,
                      const Connector& connector, const Wrapper* wrapper,
                      Rng& rng, TemplateChoice choice) {
  if (static_cast<int>(intents.size()) != connector.arity)
    throw std::runtime_error("arity: connector '" + connector.id + "' takes " +
                             std::to_string(connector.arity) + " clauses, got " +
                             std::to_string(intents.size()));
  std::set<int> distinct(intents.begin(), intents.end());
  if (distinct.size() != intents.size())
    throw std::runtime_error("duplicate intents in composition");

  std::vector<Clause> clauses;
  for (int intent : intents)
    clauses.push_back(sample_clause(registry, intent, rng, choice));
  return assemble(clauses, &connector, wrapper);
}

namespace {

std::vector<Example> gen_pair_split(
    const TemplateRegistry& registry, const std::vector<Connector>& connectors,
    const std::vector<Wrapper>* wrappers,
    const std::vector<std::pair<int, int>>& pairs, int per_pair,
    TemplateChoice choice, const std::string& tag, uint64_t seed) {
  Rng rng(mix_seed(seed, tag));
  std::vector<Example> out;
  for (const auto& [a, b] : pairs) {
    for (int i = 0; i < per_pair; ++i) {
      std::vector<int> order = {a, b};
      rng.shuffle(order);
      const Connector& conn =
          connectors[rng.index(static_cast<int>(connectors.size()))];
      const Wrapper* wrapper = nullptr;
      if (wrappers)
        wrapper = &(*wrappers)[rng.index(static_cast<int>(wrappers->size()))];
      Example e = compose_multi(registry, order, conn, wrapper, rng, choice);
      e.split = tag;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace

BenchmarkDataset generate_benchmark(const TemplateRegistry& registry,
                                    const ConnectorPool& pool,
                                    const PairSplit& pair_split,
                                    uint64_t seed) {
  BenchmarkDataset ds;
  ds.pair_split = pair_split;
  ds.generation_seed = seed;

  {
    Rng rng(mix_seed(seed, kTrainSingle));
    std::vector<Example> singles;
    for (int intent = 0; intent < kNumIntents; ++intent) {
      for (int i = 0; i < kTrainSinglePerIntent; ++i) {
        Example e = sample_singleton(registry, intent, rng, false);
        e.split = kTrainSingle;
        singles.push_back(std::move(e));
      }
    }
    ds.splits[kTrainSingle] = std::move(singles);
  }

  ds.splits[kTrainPairSeen] = gen_pair_split(
      registry, pool.train, nullptr, pair_split.seen, kTrainPairPerPair,
      TemplateChoice::kTrainOnly, kTrainPairSeen, seed);
  ds.splits[kTestPairSeen] = gen_pair_split(
      registry, pool.train, nullptr, pair_split.seen, kTestSeenPerPair,
      TemplateChoice::kTrainOnly, kTestPairSeen, seed);
  ds.splits[kTestPairUnseen] = gen_pair_split(
      registry, pool.train, nullptr, pair_split.unseen, kTestUnseenPerPair,
      TemplateChoice::kTrainOnly, kTestPairUnseen, seed);
  ds.splits[kTestPairShift] = gen_pair_split(
      registry, pool.shifted, nullptr, pair_split.unseen, kTestUnseenPerPair,
      TemplateChoice::kTrainOnly, kTestPairShift, seed);
  ds.splits[kTestPairLongShift] = gen_pair_split(
      registry, pool.shifted, &pool.wrappers, pair_split.unseen,
      kTestUnseenPerPair, TemplateChoice::kTrainOnly, kTestPairLongShift, seed);
  ds.splits[kTestPairTemplate] = gen_pair_split(
      registry, pool.train, nullptr, pair_split.unseen, kTestUnseenPerPair,
      TemplateChoice::kReservedOnly, kTestPairTemplate, seed);

  {
    // Triples drawn uniformly from those containing at least one unseen pair.
    std::set<std::pair<int, int>> unseen(pair_split.unseen.begin(),
                                         pair_split.unseen.end());
    std::vector<std::array<int, 3>> candidates;
    for (int a = 0; a < kNumIntents; ++a)
      for (int b = a + 1; b < kNumIntents; ++b)
        for (int c = b + 1; c < kNumIntents; ++c)
          if (unseen.count({a, b}) || unseen.count({a, c}) ||
              unseen.count({b, c}))
            candidates.push_back({a, b, c});

    Rng rng(mix_seed(seed, kTestTripleShift));
    std::vector<Example> triples;
    for (int i = 0; i < kTripleCount; ++i) {
      const auto& t = candidates[rng.index(static_cast<int>(candidates.size()))];
      std::vector<int> order = {t[0], t[1], t[2]};
      rng.shuffle(order);
      const Connector& conn = pool.triple_shifted[rng.index(
          static_cast<int>(pool.triple_shifted.size()))];
      Example e = compose_multi(registry, order, conn, nullptr, rng,
                                TemplateChoice::kTrainOnly);
      e.split = kTestTripleShift;
      triples.push_back(std::move(e));
    }
    ds.splits[kTestTripleShift] = std::move(triples);
  }

  return ds;
}

std::vector<std::string> validate_dataset(const BenchmarkDataset& ds,
                                          const TemplateRegistry& registry,
                                          const ConnectorPool& pool) {
  std::vector<std::string> failures;
  auto fail = [&](const std::string& check, const std::string& detail) {
    failures.push_back(check + ": " + detail);
  };

  for (size_t i = 0; i < kSplitTags.size(); ++i) {
    auto it = ds.splits.find(kSplitTags[i]);
    if (it == ds.splits.end()) {
      fail("split_sizes", "missing split " + kSplitTags[i]);
      continue;
    }
    if (static_cast<int>(it->second.size()) != kSplitSizes[i])
      fail("split_sizes", kSplitTags[i] + " has " +
                              std::to_string(it->second.size()) + ", expected " +
                              std::to_string(kSplitSizes[i]));
  }

  if (ds.pair_split.seen.size() != 27 || ds.pair_split.unseen.size() != 18)
    fail("pair_split", "expected 27 seen / 18 unseen pairs");
  {
    std::set<std::pair<int, int>> all(ds.pair_split.seen.begin(),
                                      ds.pair_split.seen.end());
    for (const auto& p : ds.pair_split.unseen)
      if (!all.insert(p).second) fail("pair_split", "seen/unseen overlap");
    if (all.size() != 45) fail("pair_split", "union is not all 45 pairs");
  }

  std::set<std::pair<int, int>> seen_set(ds.pair_split.seen.begin(),
                                         ds.pair_split.seen.end());
  std::set<std::string> train_conn, shifted_conn, triple_conn;
  for (const auto& c : pool.train) train_conn.insert(c.id);
  for (const auto& c : pool.shifted) shifted_conn.insert(c.id);
  for (const auto& c : pool.triple_shifted) triple_conn.insert(c.id);

  auto template_index = [](const std::string& spec) {
    return std::stoi(spec.substr(spec.find('/') + 1));
  };
  auto template_intent = [](const std::string& spec) {
    return intent_id(spec.substr(0, spec.find('/')));
  };

  std::map<int, int> single_counts;
  std::map<std::string, int> pair_counts;

  for (const auto& [tag, examples] : ds.splits) {
    const bool is_train = tag == kTrainSingle || tag == kTrainPairSeen;
    const bool is_template_split = tag == kTestPairTemplate;
    const bool is_shifted = tag == kTestPairShift || tag == kTestPairLongShift;
    const bool is_triple = tag == kTestTripleShift;
    const bool is_long = tag == kTestPairLongShift;

    for (const auto& e : examples) {
      if (is_train && e.intents.size() > 2)
        fail("no_triples_in_training", tag + ": '" + e.text + "'");
      if (tag == kTrainPairSeen && e.intents.size() == 2 &&
          !seen_set.count({e.intents[0], e.intents[1]}))
        fail("no_unseen_pairs_in_training", e.meta.pair_id);

      for (const auto& tspec : e.meta.templates) {
        const int intent = template_intent(tspec);
        const int idx = template_index(tspec);
        const bool reserved = idx == registry.intents[intent].reserved;
        if (reserved && !is_template_split)
          fail(is_train ? "no_reserved_templates_in_training"
                        : "reserved_only_in_template_split",
               tag + ": " + tspec);
        if (is_template_split && !reserved)
          fail("reserved_only_in_template_split",
               tag + " uses non-reserved " + tspec);
      }

      if (!e.meta.connector.empty()) {
        if (is_shifted && !shifted_conn.count(e.meta.connector))
          fail("connector_pools", tag + " uses " + e.meta.connector);
        if (is_triple && !triple_conn.count(e.meta.connector))
          fail("connector_pools", tag + " uses " + e.meta.connector);
        if (!is_shifted && !is_triple && !train_conn.count(e.meta.connector))
          fail("connector_pools", tag + " uses " + e.meta.connector);
      }
      if (is_long && e.meta.wrapper.empty())
        fail("wrapper_usage", tag + " example without wrapper");
      if (!is_long && !e.meta.wrapper.empty())
        fail("wrapper_usage", tag + " example with wrapper " + e.meta.wrapper);

      // Span shape and faithfulness to the generating template.
      if (e.clause_spans.size() != e.meta.clause_intents.size())
        fail("span_faithfulness", "span/clause count mismatch in '" + e.text + "'");
      int prev_end = -1;
      for (size_t ci = 0; ci < e.clause_spans.size(); ++ci) {
        const Span s = e.clause_spans[ci];
        if (s.begin < 0 || s.end > static_cast<int>(e.text.size()) ||
            s.begin >= s.end || s.begin < prev_end) {
          fail("span_faithfulness", "bad span in '" + e.text + "'");
          continue;
        }
        prev_end = s.end;
        if (ci < e.meta.templates.size() && ci < e.meta.slots.size()) {
          const int intent = template_intent(e.meta.templates[ci]);
          const int idx = template_index(e.meta.templates[ci]);
          const std::string rendered = render_with_slots(
              registry.intents[intent].templates[idx], e.meta.slots[ci]);
          const std::string span_text =
              e.text.substr(s.begin, s.end - s.begin);
          if (span_text.find(rendered) == std::string::npos)
            fail("span_faithfulness",
                 "span '" + span_text + "' does not realize '" + rendered + "'");
        }
      }

      std::set<int> uniq(e.meta.clause_intents.begin(),
                         e.meta.clause_intents.end());
      if (std::vector<int>(uniq.begin(), uniq.end()) != e.intents)
        fail("span_faithfulness", "intent set mismatch in '" + e.text + "'");

      if (tag == kTrainSingle) single_counts[e.intents[0]]++;
      if (tag == kTrainPairSeen) pair_counts[e.meta.pair_id]++;
    }
  }

  for (int i = 0; i < kNumIntents; ++i)
    if (single_counts[i] != kTrainSinglePerIntent)
      fail("train_single_balance", intent_name(i) + " has " +
                                       std::to_string(single_counts[i]));
  if (!pair_counts.empty())
    for (const auto& [pid, n] : pair_counts)
      if (n != kTrainPairPerPair)
        fail("train_pair_balance", pid + " has " + std::to_string(n));

  return failures;
}

// --- serialization ---------------------------------------------------------

json example_to_json(const Example& e) {
  json j;
  j["text"] = e.text;
  json intents = json::array();
  for (int id : e.intents) intents.push_back(intent_name(id));
  j["intents"] = intents;
  json clauses = json::array();
  for (const Span& s : e.clause_spans) clauses.push_back({s.begin, s.end});
  j["clauses"] = clauses;
  j["split"] = e.split;

  json meta = json::object();
  if (!e.meta.pair_id.empty()) meta["pair"] = e.meta.pair_id;
  if (!e.meta.clause_intents.empty()) {
    json ci = json::array();
    for (int id : e.meta.clause_intents) ci.push_back(intent_name(id));
    meta["clause_intents"] = ci;
  }
  if (!e.meta.templates.empty()) meta["templates"] = e.meta.templates;
  if (!e.meta.connector.empty()) meta["connector"] = e.meta.connector;
  if (!e.meta.wrapper.empty()) meta["wrapper"] = e.meta.wrapper;
  if (!e.meta.slots.empty()) meta["slots"] = e.meta.slots;
  j["meta"] = meta;
  return j;
}

Example example_from_json(const json& j) {
  Example e;
  e.text = j.at("text").get<std::string>();
  for (const auto& name : j.at("intents"))
    e.intents.push_back(intent_id(name.get<std::string>()));
  std::sort(e.intents.begin(), e.intents.end());
  if (j.contains("clauses"))
    for (const auto& c : j.at("clauses"))
      e.clause_spans.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
  e.split = j.value("split", std::string());
  if (j.contains("meta")) {
    const auto& m = j.at("meta");
    e.meta.pair_id = m.value("pair", std::string());
    e.meta.connector = m.value("connector", std::string());
    e.meta.wrapper = m.value("wrapper", std::string());
    if (m.contains("clause_intents"))
      for (const auto& name : m.at("clause_intents"))
        e.meta.clause_intents.push_back(intent_id(name.get<std::string>()));
    if (m.contains("templates"))
      e.meta.templates = m.at("templates").get<std::vector<std::string>>();
    if (m.contains("slots"))
      e.meta.slots =
          m.at("slots")
              .get<std::vector<std::map<std::string, std::string>>>();
  }
  return e;
}

std::string serialize_examples(const std::vector<Example>& examples) {
  std::string out;
  for (const Example& e : examples) {
    out += example_to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<Example> parse_examples(const std::string& jsonl) {
  std::vector<Example> out;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(example_from_json(json::parse(line)));
  }
  return out;
}

namespace {

json pairs_to_json(const std::vector<std::pair<int, int>>& pairs) {
  json out = json::array();
  for (const auto& [a, b] : pairs)
    out.push_back({intent_name(a), intent_name(b)});
  return out;
}

std::vector<std::pair<int, int>> pairs_from_json(const json& j) {
  std::vector<std::pair<int, int>> out;
  for (const auto& p : j)
    out.emplace_back(intent_id(p.at(0).get<std::string>()),
                     intent_id(p.at(1).get<std::string>()));
  return out;
}

}  // namespace

void save_dataset(const BenchmarkDataset& ds, const std::string& dir,
                  const TemplateRegistry* registry) {
  fs::create_directories(dir);
  json files = json::object();
  std::string hash_feed;
  for (const std::string& tag : kSplitTags) {
    const auto& examples = ds.splits.at(tag);
    const std::string content = serialize_examples(examples);
    const std::string filename = tag + ".jsonl";
    write_file(dir + "/" + filename, content);
    const std::string h = hash_hex(fnv1a64(content));
    files[tag] = {{"path", filename},
                  {"hash", h},
                  {"n", examples.size()}};
    hash_feed += tag + ":" + h + ";";
  }

  json manifest;
  manifest["generation_seed"] = ds.generation_seed;
  manifest["pair_seed"] = ds.pair_split.seed;
  manifest["pair_split"] = {{"seen", pairs_to_json(ds.pair_split.seen)},
                            {"unseen", pairs_to_json(ds.pair_split.unseen)}};
  if (registry) {
    json reserved = json::object();
    for (const auto& entry : registry->intents)
      reserved[entry.name] = entry.reserved;
    manifest["reserved_templates"] = reserved;
  }
  manifest["files"] = files;
  manifest["combined_hash"] = hash_hex(fnv1a64(hash_feed));
  write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

BenchmarkDataset load_dataset(const std::string& dir) {
  const json manifest = json::parse(read_file(dir + "/manifest.json"));
  BenchmarkDataset ds;
  ds.generation_seed = manifest.at("generation_seed").get<uint64_t>();
  ds.pair_split.seed = manifest.at("pair_seed").get<uint64_t>();
  ds.pair_split.seen = pairs_from_json(manifest.at("pair_split").at("seen"));
  ds.pair_split.unseen =
      pairs_from_json(manifest.at("pair_split").at("unseen"));

  std::string hash_feed;
  for (const std::string& tag : kSplitTags) {
    const auto& entry = manifest.at("files").at(tag);
    const std::string content =
        read_file(dir + "/" + entry.at("path").get<std::string>());
    const std::string h = hash_hex(fnv1a64(content));
    if (h != entry.at("hash").get<std::string>())
      throw std::runtime_error("dataset_hash_mismatch: " + tag);
    auto examples = parse_examples(content);
    if (examples.size() != entry.at("n").get<size_t>())
      throw std::runtime_error("dataset_count_mismatch: " + tag);
    hash_feed += tag + ":" + h + ";";
    ds.splits[tag] = std::move(examples);
  }
  if (hash_hex(fnv1a64(hash_feed)) !=
      manifest.at("combined_hash").get<std::string>())
    throw std::runtime_error("dataset_hash_mismatch: combined");
  return ds;
}

std::vector<Example> load_examples_file(const std::string& path) {
  return parse_examples(read_file(path));
}

uint64_t dataset_content_hash(const std::string& dir) {
  const json manifest = json::parse(read_file(dir + "/manifest.json"));
  return std::stoull(manifest.at("combined_hash").get<std::string>(), nullptr,
                     16);
}

}  // namespace comix::corpus
