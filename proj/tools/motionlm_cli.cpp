// motionlm: data generation, training, rollouts, aggregation, evaluation,
// ablations and the conditional study.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "motionlm/aggregate/aggregate.hpp"
#include "motionlm/harness/experiment_config.hpp"
#include "motionlm/harness/experiments.hpp"
#include "motionlm/harness/plot.hpp"
#include "motionlm/rollout/rollout_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace motionlm;

namespace {

enum ExitCode {
  kOk = 0,
  kRuntime = 1,
  kUsage = 2,
  kMissingFile = 3,
  kSchema = 4,
  kFormat = 5,
  kDivergence = 6,
  kInvalidArgument = 7,
};

int report_error(const char* kind, int code, const std::string& message,
                 json extra = json::object()) {
  json record = {{"error", kind}, {"exit_code", code}, {"message", message}};
  record.update(extra);
  std::cerr << record.dump() << std::endl;
  return code;
}

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  ExperimentConfig load() const {
    auto sets = overrides;
    if (seed) sets.push_back("seed=" + std::to_string(*seed));
    return load_experiment_config(config, sets);
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "Experiment config file (JSON)");
  cmd->add_option("-s,--set", c.overrides, "Override, e.g. train.steps=200")->allow_extra_args(false);
  cmd->add_option("--seed", c.seed, "Experiment seed (shortcut for --set seed=N)");
}

std::vector<ModelVariant> train_variants(const ExperimentConfig& cfg,
                                         const std::vector<std::string>& names) {
  std::vector<ModelVariant> out;
  for (const auto& n : names) {
    if (n == "all") {
      for (int k : cfg.grid.attention_intervals) out.push_back(causal_variant(k));
      out.push_back(acausal_variant(cfg.model.attention_interval));
    } else {
      out.push_back(variant_from_name(n, cfg));
    }
  }
  if (out.empty()) out.push_back(causal_variant(cfg.model.attention_interval));
  return out;
}

std::string default_variant(const ExperimentConfig& cfg) {
  return "k" + std::to_string(cfg.model.attention_interval);
}

int cmd_gen_data(const Common& c) {
  const auto cfg = c.load();
  write_datasets(cfg);
  std::cout << "wrote " << data_path(cfg, "train").string() << " and "
            << data_path(cfg, "eval").string() << "\n";
  return kOk;
}

int cmd_train(const Common& c, const std::vector<std::string>& names, bool quiet) {
  const auto cfg = c.load();
  const ScenarioSet train = load_dataset(cfg, "train");
  for (const auto& v : train_variants(cfg, names)) {
    const auto run = run_training(cfg, train, v, [&](std::size_t r, std::int64_t s, double loss) {
      if (!quiet) std::printf("%s replica %zu step %lld loss %.4f\n", v.name.c_str(), r,
                              static_cast<long long>(s), loss);
    });
    for (std::size_t r = 0; r < run.checkpoint_paths.size(); ++r)
      std::cout << "saved " << run.checkpoint_paths[r] << " (" << run.checkpoint_digests[r] << ")\n";
  }
  return kOk;
}

int cmd_rollout(const Common& c, std::string variant, const std::string& mode_name,
                std::string output) {
  const auto cfg = c.load();
  if (variant.empty()) variant = default_variant(cfg);
  const Ensemble ens = load_ensemble(cfg, variant_from_name(variant, cfg));
  const ScenarioSet scenes = load_dataset(cfg, "eval");
  RolloutConfig rc;
  rc.num_rollouts = cfg.rollout.num_rollouts;
  rc.top_p = cfg.rollout.top_p;
  rc.seed = derive_seed(cfg.seed, cfg.rollout.seed);
  rc.mode = rollout_mode_from_string(mode_name);
  std::function<void(std::size_t, RolloutConfig&)> customize;
  if (rc.mode == RolloutMode::conditional_causal || rc.mode == RolloutMode::conditional_acausal) {
    const std::size_t q = cfg.conditional.query_agent;
    customize = [&, q](std::size_t i, RolloutConfig& r) {
      r.query_agent = q;
      r.query_tokens = query_from_waypoints(ens.models[0].config().vocab, scenes[i], q,
                                            scenes[i].future.at(q))
                           .tokens;
    };
  }
  const auto per_scene = sample_scenes(ens, scenes, rc, customize);
  RolloutFile file;
  file.config_digest = config_digest(cfg);
  for (const auto& parts : per_scene) file.sets.push_back(ensemble_merge(parts));
  if (output.empty())
    output = (fs::path(cfg.output_dir) / "rollouts" / (variant + "_" + mode_name + ".jsonl")).string();
  save_rollouts(file, output);
  std::cout << "wrote " << output << "\n";
  return kOk;
}

int cmd_aggregate(const Common& c, const std::string& input, std::string output) {
  const auto cfg = c.load();
  const RolloutFile in = load_rollouts(input);
  ModeFile out;
  out.config_digest = config_digest(cfg);
  for (const auto& set : in.sets) out.sets.push_back(aggregate(set, cfg.aggregate));
  if (output.empty())
    output = (fs::path(cfg.output_dir) / "modes" / fs::path(input).filename()).string();
  save_modes(out, output);
  std::cout << "wrote " << output << "\n";
  return kOk;
}

int cmd_eval(const Common& c, std::string variant, const std::string& modes_path) {
  const auto cfg = c.load();
  const ScenarioSet scenes = load_dataset(cfg, "eval");
  json report;
  std::string name;
  if (!modes_path.empty()) {
    const ModeFile modes = load_modes(modes_path);
    const EvalReport r = evaluate(modes.sets, ground_truths(scenes), cfg.metrics);
    report = {{"kind", "eval"},
              {"modes_file", modes_path},
              {"modes_config_digest", modes.config_digest},
              {"provenance", provenance(cfg, {})},
              {"report", to_json(r)}};
    name = "eval_" + fs::path(modes_path).stem().string();
    const auto path = write_report(cfg, name, report, format_report(r));
    std::cout << format_report(r) << "wrote " << path.string() << "\n";
    return kOk;
  }
  if (variant.empty()) variant = default_variant(cfg);
  const Ensemble ens = load_ensemble(cfg, variant_from_name(variant, cfg));
  EvalReport r;
  report = run_eval(cfg, ens, scenes, &r);
  name = "eval_" + variant;
  const auto path = write_report(cfg, name, report, format_report(r));
  std::cout << format_report(r) << "wrote " << path.string() << "\n";
  return kOk;
}

int cmd_ablate(const Common& c, const std::string& grid) {
  const auto cfg = c.load();
  const ScenarioSet scenes = load_dataset(cfg, "eval");
  AblationResult result;
  if (grid == "attention") {
    std::vector<Ensemble> ensembles;
    ensembles.reserve(cfg.grid.attention_intervals.size());
    std::map<int, const Ensemble*> models;
    for (int k : cfg.grid.attention_intervals) {
      ensembles.push_back(load_ensemble(cfg, causal_variant(k)));
      models[k] = &ensembles.back();
    }
    result = run_attention_ablation(cfg, models, scenes);
  } else if (grid == "rollouts") {
    result = run_rollout_ablation(cfg, load_ensemble(cfg, causal_variant(cfg.model.attention_interval)),
                                  scenes);
  } else {
    throw std::invalid_argument("unknown grid '" + grid + "' (expected attention or rollouts)");
  }
  const auto csv = write_ablation(cfg, result);
  std::cout << ablation_csv(result, config_digest(cfg)) << "wrote " << csv.string() << "\n";
  return kOk;
}

int cmd_conditional(const Common& c) {
  const auto cfg = c.load();
  const ScenarioSet scenes = load_dataset(cfg, "eval");
  const Ensemble causal = load_ensemble(cfg, causal_variant(cfg.model.attention_interval));
  const Ensemble acausal = load_ensemble(cfg, acausal_variant(cfg.model.attention_interval));
  const ConditionalStudy study = run_conditional_study(cfg, causal, acausal, scenes);
  const std::string text = format_conditional(study);
  const auto path = write_report(cfg, "conditional", to_json(study), text);
  std::cout << text << "wrote " << path.string() << "\n";
  return kOk;
}

// Reads an ablation CSV (comment lines start with '#') into one series.
int cmd_plot(const Common& c, const std::string& input, const std::string& metric,
             std::string output) {
  const auto cfg = c.load();
  std::ifstream in(input);
  if (!in) throw MissingFileError("ablation CSV not found: " + input);
  std::string line, digest;
  std::vector<std::string> header;
  PlotSeries series{metric, {}, {}};
  std::string parameter;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find("config_digest=");
      if (eq != std::string::npos) digest = line.substr(eq + 14);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      if (std::find(header.begin(), header.end(), metric) == header.end())
        throw FormatError(line_no, metric, "column not present in " + input);
      continue;
    }
    if (cells.size() != header.size()) throw FormatError(line_no, "row", "wrong number of cells");
    const auto col = std::find(header.begin(), header.end(), metric) - header.begin();
    parameter = cells[0];
    try {
      series.x.push_back(std::stod(cells[1]));
      series.y.push_back(std::stod(cells[col]));
    } catch (const std::exception&) {
      throw FormatError(line_no, metric, "not a number");
    }
  }
  if (header.empty()) throw FormatError(line_no, "header", "missing CSV header");
  LinePlot plot;
  plot.title = metric + " vs " + parameter;
  plot.x_label = parameter;
  plot.y_label = metric;
  plot.log2_x = true;
  plot.config_digest = digest.empty() ? config_digest(cfg) : digest;
  plot.series = {series};
  if (output.empty()) output = fs::path(input).replace_extension(".svg").string();
  save_svg(plot, output);
  std::cout << "wrote " << output << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent motion forecasting as language modeling"};
  app.require_subcommand(1);

  Common common;
  auto* gen = app.add_subcommand("gen-data", "Generate train and eval scenario sets");
  add_common(gen, common);

  std::vector<std::string> variants;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train replicas of one or more model variants");
  add_common(train, common);
  train->add_option("--variant", variants, "k<interval>, acausal or all (default: model interval)");
  train->add_flag("-q,--quiet", quiet, "Only report saved checkpoints");

  std::string variant, mode = "joint", output, input, grid, metric = "map", modes_path;
  auto* roll = app.add_subcommand("rollout", "Sample joint rollouts on the eval set");
  add_common(roll, common);
  roll->add_option("--variant", variant, "Model variant");
  roll->add_option("--mode", mode, "marginal, joint, conditional_causal or conditional_acausal")
      ->check(CLI::IsMember({"marginal", "joint", "conditional_causal", "conditional_acausal"}));
  roll->add_option("-o,--output", output, "Rollout file");

  auto* agg = app.add_subcommand("aggregate", "Reduce a rollout file to joint modes");
  add_common(agg, common);
  agg->add_option("-i,--input", input, "Rollout file")->required();
  agg->add_option("-o,--output", output, "Mode file");

  auto* ev = app.add_subcommand("eval", "Evaluate a model ensemble or a mode file");
  add_common(ev, common);
  ev->add_option("--variant", variant, "Model variant");
  ev->add_option("--modes", modes_path, "Evaluate this mode file instead of sampling");

  auto* abl = app.add_subcommand("ablate", "Metric curves over an ablation grid");
  add_common(abl, common);
  abl->add_option("--grid", grid, "attention or rollouts")
      ->required()
      ->check(CLI::IsMember({"attention", "rollouts"}));

  auto* cond = app.add_subcommand("conditional", "Marginal vs causal vs acausal conditioning");
  add_common(cond, common);

  auto* plot = app.add_subcommand("plot", "Render an ablation CSV column as SVG");
  add_common(plot, common);
  plot->add_option("-i,--input", input, "Ablation CSV")->required();
  plot->add_option("--metric", metric, "CSV column to plot");
  plot->add_option("-o,--output", output, "SVG file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage_error", kUsage, e.what());
  }

  try {
    if (*gen) return cmd_gen_data(common);
    if (*train) return cmd_train(common, variants, quiet);
    if (*roll) return cmd_rollout(common, variant, mode, output);
    if (*agg) return cmd_aggregate(common, input, output);
    if (*ev) return cmd_eval(common, variant, modes_path);
    if (*abl) return cmd_ablate(common, grid);
    if (*cond) return cmd_conditional(common);
    if (*plot) return cmd_plot(common, input, metric, output);
  } catch (const MissingFileError& e) {
    return report_error("missing_file", kMissingFile, e.what());
  } catch (const SchemaError& e) {
    return report_error("schema_mismatch", kSchema, e.what());
  } catch (const FormatError& e) {
    return report_error("format_error", kFormat, e.what(),
                        {{"line", e.line()}, {"field", e.field()}});
  } catch (const DivergenceError& e) {
    return report_error("divergence", kDivergence, e.what(), {{"step", e.step()}});
  } catch (const std::invalid_argument& e) {
    return report_error("invalid_argument", kInvalidArgument, e.what());
  } catch (const std::exception& e) {
    return report_error("runtime_error", kRuntime, e.what());
  }
  return kUsage;
}
