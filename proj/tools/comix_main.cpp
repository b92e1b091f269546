// comix: generate the benchmark, train the systems, evaluate, report.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "comix/pipeline.hpp"

using comix::cli::RunConfig;

int main(int argc, char** argv) {
  RunConfig cfg;

  // Load --config first so file values act as defaults that flags override.
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc)
        cfg = comix::cli::load_config(argv[i + 1]);
      else if (arg.rfind("--config=", 0) == 0)
        cfg = comix::cli::load_config(arg.substr(9));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"compositional multi-intent benchmark and model lab"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration");

  std::vector<uint64_t> seeds_flag;
  uint64_t seed_flag = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--dataset-dir", cfg.dataset_dir, "benchmark directory");
    sub->add_option("--models-dir", cfg.models_dir, "model directory");
    sub->add_option("--results-dir", cfg.results_dir, "results directory");
    sub->add_option("--registry", cfg.registry_path, "template registry file");
    sub->add_option("--connectors", cfg.connectors_path, "connector pool file");
    sub->add_option("--grammar", cfg.grammar_path, "segmenter grammar file");
    sub->add_option("--seeds", seeds_flag, "model seeds");
    sub->add_option_function<uint64_t>(
        "--seed",
        [&](const uint64_t& v) {
          seed_flag = v;
          seed_set = true;
        },
        "single model seed (shorthand for --seeds with one entry)");
    sub->add_option("--jobs", cfg.jobs, "parallel training jobs");
  };

  auto* generate = app.add_subcommand("generate", "generate the benchmark");
  add_common(generate);
  generate->add_option("--generation-seed", cfg.generation_seed,
                       "dataset generation seed");
  generate->add_option("--pair-seed", cfg.pair_seed, "pair holdout seed");

  std::string system_sel = "all";
  auto* train = app.add_subcommand("train", "train systems, one model per seed");
  add_common(train);
  train->add_option("--system", system_sel,
                    "atomic|wholeml|clausecompose|oracle|all");
  train->add_option("--epochs", cfg.train.epochs, "training epochs");
  train->add_option("--batch-size", cfg.train.batch_size, "minibatch size");
  train->add_option("--learning-rate", cfg.train.learning_rate,
                    "Adam learning rate");

  std::vector<std::string> splits;
  std::string dataset_override;
  bool dump_predictions = false;
  auto* eval = app.add_subcommand("eval", "evaluate trained systems");
  add_common(eval);
  eval->add_option("--system", system_sel,
                   "atomic|wholeml|clausecompose|oracle|all");
  eval->add_option("--splits", splits, "split tags to evaluate");
  eval->add_option("--dataset", dataset_override,
                   "external example file (dataset line format)");
  eval->add_flag("--dump-predictions", dump_predictions,
                 "write per-example prediction records");

  auto* report = app.add_subcommand("report", "re-render tables from records");
  add_common(report);

  int probes = 10;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check");
  gradcheck->add_option("--probes", probes, "probes per example");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!seeds_flag.empty()) cfg.seeds = seeds_flag;
    if (seed_set) cfg.seeds = {seed_flag};
    if (cfg.seeds.empty()) {
      std::cerr << "FAILED CHECK config: seed list is empty\n";
      return 1;
    }

    if (generate->parsed()) return comix::cli::cmd_generate(cfg);
    if (train->parsed()) return comix::cli::cmd_train(cfg, system_sel);
    if (eval->parsed())
      return comix::cli::cmd_eval(cfg, system_sel, splits, dataset_override,
                                  dump_predictions);
    if (report->parsed()) return comix::cli::cmd_report(cfg);
    if (gradcheck->parsed()) return comix::cli::cmd_gradcheck(cfg, probes);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
