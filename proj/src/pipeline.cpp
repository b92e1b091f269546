#include "comix/pipeline.hpp"

#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "comix/defaults.hpp"
#include "comix/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace comix::cli {

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  const json j = json::parse(read_file(path));
  cfg.generation_seed = j.value("generation_seed", cfg.generation_seed);
  cfg.pair_seed = j.value("pair_seed", cfg.pair_seed);
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  if (cfg.seeds.empty()) throw std::runtime_error("config: seed list is empty");
  cfg.dataset_dir = j.value("dataset_dir", cfg.dataset_dir);
  cfg.models_dir = j.value("models_dir", cfg.models_dir);
  cfg.results_dir = j.value("results_dir", cfg.results_dir);
  cfg.registry_path = j.value("registry_path", cfg.registry_path);
  cfg.connectors_path = j.value("connectors_path", cfg.connectors_path);
  cfg.grammar_path = j.value("grammar_path", cfg.grammar_path);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.beta1 = t.value("beta1", cfg.train.beta1);
    cfg.train.beta2 = t.value("beta2", cfg.train.beta2);
    cfg.train.eps = t.value("eps", cfg.train.eps);
  }
  cfg.duplicate_margin = j.value("duplicate_margin", cfg.duplicate_margin);
  cfg.jobs = j.value("jobs", cfg.jobs);
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  return {{"generation_seed", cfg.generation_seed},
          {"pair_seed", cfg.pair_seed},
          {"seeds", cfg.seeds},
          {"dataset_dir", cfg.dataset_dir},
          {"models_dir", cfg.models_dir},
          {"results_dir", cfg.results_dir},
          {"registry_path", cfg.registry_path},
          {"connectors_path", cfg.connectors_path},
          {"grammar_path", cfg.grammar_path},
          {"train",
           {{"learning_rate", cfg.train.learning_rate},
            {"batch_size", cfg.train.batch_size},
            {"epochs", cfg.train.epochs},
            {"beta1", cfg.train.beta1},
            {"beta2", cfg.train.beta2},
            {"eps", cfg.train.eps}}},
          {"duplicate_margin", cfg.duplicate_margin},
          {"jobs", cfg.jobs}};
}

corpus::TemplateRegistry resolve_registry(const RunConfig& cfg) {
  const std::string text = cfg.registry_path.empty()
                               ? std::string(builtin_registry_json())
                               : read_file(cfg.registry_path);
  return corpus::build_registry(json::parse(text));
}

corpus::ConnectorPool resolve_connectors(const RunConfig& cfg) {
  const std::string text = cfg.connectors_path.empty()
                               ? std::string(builtin_connectors_json())
                               : read_file(cfg.connectors_path);
  return corpus::build_connector_pool(json::parse(text));
}

segmenter::Grammar resolve_grammar(const RunConfig& cfg) {
  const std::string text = cfg.grammar_path.empty()
                               ? std::string(builtin_grammar_json())
                               : read_file(cfg.grammar_path);
  return segmenter::load_grammar(json::parse(text));
}

std::string model_path(const RunConfig& cfg, const std::string& system,
                       uint64_t seed) {
  return cfg.models_dir + "/" + system + "_seed" + std::to_string(seed) +
         ".cmx";
}

std::vector<std::string> expand_systems(const std::string& system_sel) {
  if (system_sel == "all")
    return {"atomic", "wholeml", "clausecompose", "oracle"};
  systems::system_from_name(system_sel);  // validates
  if (system_sel == "AtomicSet") return {"atomic"};
  if (system_sel == "WholeMultiLabel") return {"wholeml"};
  if (system_sel == "ClauseCompose") return {"clausecompose"};
  if (system_sel == "ClauseComposeOracle") return {"oracle"};
  return {system_sel};
}

int cmd_generate(const RunConfig& cfg) {
  const auto registry = resolve_registry(cfg);
  const auto pool = resolve_connectors(cfg);
  const auto pair_split = corpus::assign_pair_splits(cfg.pair_seed);
  const auto ds = corpus::generate_benchmark(registry, pool, pair_split,
                                             cfg.generation_seed);

  const auto failures = corpus::validate_dataset(ds, registry, pool);
  if (!failures.empty()) {
    for (const auto& f : failures) std::cerr << "FAILED CHECK " << f << "\n";
    return 1;
  }

  corpus::save_dataset(ds, cfg.dataset_dir, &registry);
  std::cout << "generated " << cfg.dataset_dir << "\n";
  for (size_t i = 0; i < corpus::kSplitTags.size(); ++i)
    std::cout << "  " << corpus::kSplitTags[i] << ": "
              << ds.splits.at(corpus::kSplitTags[i]).size() << "\n";
  std::cout << "  combined_hash: "
            << hash_hex(corpus::dataset_content_hash(cfg.dataset_dir)) << "\n";
  return 0;
}

namespace {

struct TrainTask {
  std::string system;
  uint64_t seed = 0;
};

json train_one(const RunConfig& cfg, const corpus::BenchmarkDataset& ds,
               const segmenter::Grammar& grammar, const TrainTask& task) {
  netcore::TrainConfig tc = cfg.train;
  tc.seed = task.seed;

  std::vector<double> trace;
  const std::string path = model_path(cfg, task.system, task.seed);
  systems::SystemKind kind;
  if (task.system == "atomic") {
    auto trained = systems::train_atomic(ds, tc);
    systems::save_system(trained.model, path);
    trace = std::move(trained.loss_trace);
    kind = systems::SystemKind::kAtomicSet;
  } else if (task.system == "wholeml") {
    auto trained = systems::train_wholeml(ds, tc);
    systems::save_system(trained.model, path);
    trace = std::move(trained.loss_trace);
    kind = systems::SystemKind::kWholeMultiLabel;
  } else {
    auto trained =
        systems::train_clausecompose(ds, tc, grammar, cfg.duplicate_margin);
    systems::save_system(trained.model, path);
    trace = std::move(trained.loss_trace);
    kind = systems::SystemKind::kClauseCompose;
  }

  return {{"system", task.system},
          {"seed", task.seed},
          {"file", fs::path(path).filename().string()},
          {"hash", hash_hex(hash_file(path))},
          {"trained_on", systems::training_splits(kind)},
          {"loss_trace", trace}};
}

}  // namespace

int cmd_train(const RunConfig& cfg, const std::string& system_sel) {
  corpus::BenchmarkDataset ds;
  try {
    ds = corpus::load_dataset(cfg.dataset_dir);
  } catch (const std::exception& e) {
    std::cerr << "FAILED CHECK dataset_load: " << e.what() << "\n";
    return 1;
  }
  const auto grammar = resolve_grammar(cfg);

  std::vector<std::string> wanted;
  for (auto& s : expand_systems(system_sel)) {
    if (s == "oracle") s = "clausecompose";  // the oracle reuses that model
    if (std::find(wanted.begin(), wanted.end(), s) == wanted.end())
      wanted.push_back(s);
  }

  std::vector<TrainTask> tasks;
  for (const auto& s : wanted)
    for (uint64_t seed : cfg.seeds) tasks.push_back({s, seed});

  fs::create_directories(cfg.models_dir);
  std::vector<json> entries(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<size_t> cursor{0};
  const int jobs = std::max(1, std::min<int>(cfg.jobs, tasks.size()));

  auto worker = [&]() {
    while (true) {
      const size_t i = cursor.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        entries[i] = train_one(cfg, ds, grammar, tasks[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  json manifest;
  manifest["dataset_hash"] =
      hash_hex(corpus::dataset_content_hash(cfg.dataset_dir));
  manifest["train_config"] = config_to_json(cfg)["train"];
  manifest["models"] = entries;
  write_file(cfg.models_dir + "/manifest.json", manifest.dump(2) + "\n");

  for (const auto& e : entries)
    std::cout << "trained " << e.at("file").get<std::string>() << " ("
              << e.at("hash").get<std::string>() << ")\n";
  return 0;
}

namespace {

json prediction_to_json(const systems::Prediction& p,
                        const corpus::Example& e, const std::string& model,
                        uint64_t seed, int index) {
  json gold = json::array(), pred = json::array();
  for (int id : e.intents) gold.push_back(corpus::intent_name(id));
  for (int id : p.intents) pred.push_back(corpus::intent_name(id));
  json segments = json::array();
  for (const auto& s : p.segments) segments.push_back({s.begin, s.end});
  json rec = {{"model", model},     {"seed", seed},
              {"split", e.split},   {"index", index},
              {"text", e.text},     {"gold", gold},
              {"pred", pred},       {"segments", segments},
              {"segment_scores", p.segment_scores}};
  if (p.predicted_count >= 0) rec["k"] = p.predicted_count;
  return rec;
}

}  // namespace

int cmd_eval(const RunConfig& cfg, const std::string& system_sel,
             const std::vector<std::string>& splits,
             const std::string& dataset_override, bool dump_predictions) {
  // Assemble the evaluation pool: either the generated benchmark (hash
  // checked) or an external example file in the dataset line format.
  std::map<std::string, std::vector<corpus::Example>> pools;
  if (dataset_override.empty()) {
    corpus::BenchmarkDataset ds;
    try {
      ds = corpus::load_dataset(cfg.dataset_dir);
    } catch (const std::exception& e) {
      std::cerr << "FAILED CHECK dataset_load: " << e.what() << "\n";
      return 1;
    }
    const json models_manifest =
        json::parse(read_file(cfg.models_dir + "/manifest.json"));
    const std::string dataset_hash =
        hash_hex(corpus::dataset_content_hash(cfg.dataset_dir));
    if (models_manifest.at("dataset_hash").get<std::string>() != dataset_hash) {
      std::cerr << "FAILED CHECK dataset_hash_mismatch: models were trained "
                   "on a different dataset\n";
      return 1;
    }
    for (auto& [tag, examples] : ds.splits)
      if (tag.rfind("test_", 0) == 0) pools[tag] = std::move(examples);
  } else {
    for (auto& e : corpus::load_examples_file(dataset_override)) {
      std::string tag = e.split.empty() ? "external" : e.split;
      pools[tag].push_back(std::move(e));
    }
  }

  std::vector<std::string> tags;
  if (splits.empty()) {
    for (const auto& [tag, examples] : pools) tags.push_back(tag);
  } else {
    for (const auto& tag : splits) {
      if (!pools.count(tag)) {
        std::cerr << "FAILED CHECK unknown_split: " << tag << "\n";
        return 1;
      }
      tags.push_back(tag);
    }
  }

  const auto grammar = resolve_grammar(cfg);
  const auto wanted = expand_systems(system_sel);

  std::vector<evalkit::MetricsRecord> records;
  std::string dump;
  for (uint64_t seed : cfg.seeds) {
    for (const auto& sysid : wanted) {
      const bool oracle = sysid == "oracle";
      const std::string file =
          model_path(cfg, oracle ? "clausecompose" : sysid, seed);
      std::unique_ptr<systems::System> sys;
      try {
        sys = systems::load_system(file, grammar, cfg.duplicate_margin, oracle);
      } catch (const std::exception& e) {
        std::cerr << "FAILED CHECK model_load: " << e.what() << "\n";
        return 1;
      }
      for (const auto& tag : tags) {
        const auto& examples = pools.at(tag);
        std::vector<systems::Prediction> preds;
        auto record = evalkit::evaluate(*sys, examples, tag, seed,
                                        dump_predictions ? &preds : nullptr);
        records.push_back(record);
        if (dump_predictions)
          for (size_t i = 0; i < preds.size(); ++i)
            dump += prediction_to_json(preds[i], examples[i], sys->name(),
                                       seed, static_cast<int>(i))
                        .dump() +
                    "\n";
      }
    }
  }

  fs::create_directories(cfg.results_dir);
  std::string raw;
  for (const auto& r : records) raw += evalkit::record_to_json(r).dump() + "\n";
  write_file(cfg.results_dir + "/records.jsonl", raw);
  if (dump_predictions)
    write_file(cfg.results_dir + "/predictions.jsonl", dump);

  const std::string table = evalkit::render_table(evalkit::aggregate(records));
  write_file(cfg.results_dir + "/table.txt", table);
  std::cout << table;
  return 0;
}

int cmd_report(const RunConfig& cfg) {
  const auto records = load_records(cfg.results_dir + "/records.jsonl");
  if (records.empty()) {
    std::cerr << "FAILED CHECK no_records: run eval first\n";
    return 1;
  }
  const auto table = evalkit::aggregate(records);
  const std::string rendered = evalkit::render_table(table);
  write_file(cfg.results_dir + "/table.txt", rendered);

  // Machine-readable aggregate over every metric.
  auto agg = [&](auto metric_of) {
    std::map<std::string, std::map<std::string, std::pair<double, double>>> out;
    std::map<std::string, std::map<std::string, std::vector<double>>> cells;
    for (const auto& r : records) cells[r.model][r.split].push_back(metric_of(r));
    for (auto& [model, splits] : cells)
      for (auto& [split, values] : splits) {
        double mean = 0;
        for (double v : values) mean += v;
        mean /= values.size();
        double var = 0;
        for (double v : values) var += (v - mean) * (v - mean);
        out[model][split] = {mean, std::sqrt(var / values.size())};
      }
    return out;
  };
  json aggregate_json;
  const std::vector<std::pair<std::string, double evalkit::MetricsRecord::*>>
      metrics = {{"em", &evalkit::MetricsRecord::em},
                 {"micro_f1", &evalkit::MetricsRecord::micro_f1},
                 {"macro_f1", &evalkit::MetricsRecord::macro_f1},
                 {"count_acc", &evalkit::MetricsRecord::count_acc}};
  for (const auto& [name, member] : metrics) {
    auto stats = agg([member](const evalkit::MetricsRecord& r) { return r.*member; });
    for (const auto& [model, splits] : stats)
      for (const auto& [split, ms] : splits)
        aggregate_json[name][model][split] = {{"mean", ms.first},
                                              {"std", ms.second}};
  }
  write_file(cfg.results_dir + "/aggregate.json", aggregate_json.dump(2) + "\n");
  std::cout << rendered;
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, int probes) {
  (void)cfg;
  bool ok = true;
  const struct {
    const char* name;
    netcore::HeadKind kind;
  } heads[] = {{"softmax", netcore::HeadKind::kSoftmax},
               {"multilabel", netcore::HeadKind::kMultiLabel}};
  for (const auto& head : heads) {
    netcore::GradcheckOptions opt;
    opt.probes_per_example = probes;
    const double err = netcore::gradcheck(head.kind, opt);
    const bool pass = err < 1e-3;
    ok = ok && pass;
    std::cout << "gradcheck " << head.name << ": max relative error " << err
              << (pass ? " PASS" : " FAIL") << "\n";
  }
  if (!ok) std::cerr << "FAILED CHECK gradcheck\n";
  return ok ? 0 : 1;
}

std::vector<evalkit::MetricsRecord> load_records(const std::string& path) {
  std::vector<evalkit::MetricsRecord> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(evalkit::record_from_json(json::parse(line)));
  }
  return out;
}

}  // namespace comix::cli
