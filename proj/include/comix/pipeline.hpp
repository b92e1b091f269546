#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "comix/corpus.hpp"
#include "comix/evalkit.hpp"
#include "comix/netcore.hpp"
#include "comix/segmenter.hpp"
#include "comix/systems.hpp"

namespace comix::cli {

struct RunConfig {
  uint64_t generation_seed = 17;
  uint64_t pair_seed = 1;
  std::vector<uint64_t> seeds = {0, 1, 2};  // model seeds
  std::string dataset_dir = "runs/dataset";
  std::string models_dir = "runs/models";
  std::string results_dir = "runs/results";
  std::string registry_path;    // empty -> builtin defaults
  std::string connectors_path;
  std::string grammar_path;
  netcore::TrainConfig train;   // seed field is overridden per run
  double duplicate_margin = 0.5;
  int jobs = 1;
};

RunConfig load_config(const std::string& path);  // JSON file
nlohmann::json config_to_json(const RunConfig& cfg);

corpus::TemplateRegistry resolve_registry(const RunConfig& cfg);
corpus::ConnectorPool resolve_connectors(const RunConfig& cfg);
segmenter::Grammar resolve_grammar(const RunConfig& cfg);

// Subcommand bodies; return process exit codes and print named checks on
// failure. Throwing is reserved for unexpected I/O faults.
int cmd_generate(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg, const std::string& system_sel);
int cmd_eval(const RunConfig& cfg, const std::string& system_sel,
             const std::vector<std::string>& splits,
             const std::string& dataset_override, bool dump_predictions);
int cmd_report(const RunConfig& cfg);
int cmd_gradcheck(const RunConfig& cfg, int probes);

// Helpers shared with tests / the acceptance suite.
std::string model_path(const RunConfig& cfg, const std::string& system,
                       uint64_t seed);
std::vector<std::string> expand_systems(const std::string& system_sel);
std::vector<evalkit::MetricsRecord> load_records(const std::string& path);

}  // namespace comix::cli
