#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "autoplace/error.hpp"
#include "autoplace/pipeline.hpp"

namespace {

using autoplace::PipelineConfig;

// Log level from AUTOPLACE_LOG (trace, debug, info, warn, error, off).
void setup_logging() {
  auto logger = spdlog::stderr_color_mt("autoplace");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("AUTOPLACE_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::string dataset;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("-c,--config", opt.config_file, "Pipeline config file (key = value sections)");
  cmd->add_option("--set", opt.overrides, "Override a config value, section.key=value (repeatable)");
  cmd->add_option("-o,--output", opt.output_dir, "Run directory (paths.output_dir)");
  cmd->add_option("-d,--dataset", opt.dataset, "Dataset JSONL file (paths.dataset)");
}

PipelineConfig resolve(const CommonOptions& opt) {
  PipelineConfig cfg;
  if (!opt.config_file.empty()) cfg = autoplace::load_config(opt.config_file);
  for (const std::string& o : opt.overrides) autoplace::apply_override(cfg, o);
  if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
  if (!opt.dataset.empty()) cfg.dataset = opt.dataset;
  cfg.validate();
  return cfg;
}

void print_report(const autoplace::EvalReport& r) {
  for (const auto& [n, v] : r.recall_at_n) std::cout << "recall@" << n << " " << v << "\n";
  std::cout << "max_f1 " << r.max_f1 << "\naverage_precision " << r.average_precision << "\nevaluated_queries "
            << r.evaluated_queries << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Radar place recognition toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", autoplace::kToolkitVersion);

  CommonOptions opt;
  std::string synth_out = "synthetic";
  std::string query_split = "test";

  auto* synth = app.add_subcommand("synth", "Generate the synthetic loop benchmark");
  add_common(synth, opt);
  synth->add_option("--out", synth_out, "Dataset directory to create");
  auto* pre = app.add_subcommand("preprocess", "DPR, aggregation, radar images, RCS histograms, splits");
  add_common(pre, opt);
  auto* trn = app.add_subcommand("train", "Train the encoder with triplet loss");
  add_common(trn, opt);
  auto* idx = app.add_subcommand("index", "Encode the database into an index file");
  add_common(idx, opt);
  auto* qry = app.add_subcommand("query", "Retrieve candidates for the query split");
  add_common(qry, opt);
  qry->add_option("--split", query_split, "Query split")->check(CLI::IsMember({"test", "validation"}));
  auto* evl = app.add_subcommand("evaluate", "Recall@N, PR curve, maxF1 and AP");
  add_common(evl, opt);
  auto* abl = app.add_subcommand("ablate", "Run the eight-row TE/DPR/RCSHR ablation grid");
  add_common(abl, opt);
  auto* cfg_cmd = app.add_subcommand("config", "Print the resolved configuration");
  add_common(cfg_cmd, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const PipelineConfig cfg = resolve(opt);
    if (synth->parsed()) {
      autoplace::run_synth(cfg, synth_out);
    } else if (pre->parsed()) {
      autoplace::run_preprocess(cfg);
    } else if (trn->parsed()) {
      autoplace::run_train(cfg);
    } else if (idx->parsed()) {
      autoplace::run_index(cfg);
    } else if (qry->parsed()) {
      autoplace::run_query(cfg, query_split);
    } else if (evl->parsed()) {
      print_report(autoplace::run_evaluate(cfg));
    } else if (abl->parsed()) {
      if (cfg.dataset.empty()) throw autoplace::UsageError("paths.dataset is not set");
      const auto scans = autoplace::load_dataset(cfg.dataset);
      const auto rows = autoplace::run_ablation(scans, cfg);
      std::cout << autoplace::ablation_table(rows);
    } else if (cfg_cmd->parsed()) {
      std::cout << autoplace::canonical_text(cfg);
    }
  } catch (const autoplace::Error& e) {
    spdlog::error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 2;
  }
  return 0;
}
