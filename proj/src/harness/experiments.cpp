#include "motionlm/harness/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "motionlm/core/random.hpp"
#include "motionlm/core/scenario_io.hpp"
#include "motionlm/harness/generator.hpp"
#include "motionlm/harness/plot.hpp"
#include "motionlm/numeric/digest.hpp"

namespace motionlm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs body(i) for i in [0, n) across threads; rethrows the first failure.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
  std::exception_ptr error;
  std::mutex lock;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> g(lock);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

GeneratorConfig split_generator(const ExperimentConfig& config, const std::string& split) {
  GeneratorConfig g;
  if (split == "train")
    g = config.train_data;
  else if (split == "eval")
    g = config.eval_data;
  else
    throw std::invalid_argument("unknown data split '" + split + "'");
  g.seed = derive_seed(config.seed, g.seed);
  return g;
}

std::uint64_t rollout_seed(const ExperimentConfig& config) {
  return derive_seed(config.seed, config.rollout.seed);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

double lead_travel(const JointSample& sample, const AgentState& start, std::size_t lead) {
  const Waypoint& end = sample.waypoints.at(lead).back();
  return (end.x - start.position.x) * std::cos(start.heading) +
         (end.y - start.position.y) * std::sin(start.heading);
}

}  // namespace

ModelVariant causal_variant(int attention_interval) {
  return {"k" + std::to_string(attention_interval), attention_interval, TrainMask::causal};
}

ModelVariant acausal_variant(int attention_interval) {
  return {"acausal", attention_interval, TrainMask::acausal_query};
}

ModelVariant variant_from_name(const std::string& name, const ExperimentConfig& config) {
  if (name == "acausal") return acausal_variant(config.model.attention_interval);
  if (name.size() > 1 && name[0] == 'k') {
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(name.substr(1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == name.size() - 1 && k >= 1) return causal_variant(k);
  }
  throw std::invalid_argument("unknown model variant '" + name + "' (expected k<interval> or acausal)");
}

fs::path checkpoint_path(const ExperimentConfig& config, const ModelVariant& variant,
                         std::size_t replica) {
  return fs::path(config.output_dir) / "checkpoints" /
         (variant.name + "_replica" + std::to_string(replica) + ".json");
}

fs::path data_path(const ExperimentConfig& config, const std::string& split) {
  return fs::path(config.output_dir) / "data" / (split + ".jsonl");
}

ModelConfig replica_model_config(const ExperimentConfig& config, const ModelVariant& variant,
                                 std::size_t replica) {
  ModelConfig m = config.model;
  m.attention_interval = variant.attention_interval;
  m.train_mask = variant.mask;
  m.init_seed = derive_seed(derive_seed(config.seed, config.model.init_seed), replica);
  m.validate();
  return m;
}

TrainConfig replica_train_config(const ExperimentConfig& config, std::size_t replica) {
  TrainConfig t = config.train;
  t.seed = derive_seed(derive_seed(config.seed, config.train.seed), replica);
  return t;
}

void write_datasets(const ExperimentConfig& config) {
  json manifest = {{"config_digest", config_digest(config)}};
  for (const char* split : {"train", "eval"}) {
    const GeneratorConfig g = split_generator(config, split);
    const ScenarioSet set = generate(g);
    const fs::path path = data_path(config, split);
    fs::create_directories(path.parent_path());
    save_scenarios(set, path);
    manifest[split] = {{"file", path.filename().string()},
                       {"count", set.size()},
                       {"generator", to_json(g)}};
  }
  write_text(fs::path(config.output_dir) / "data" / "manifest.json", manifest.dump(2) + "\n");
}

ScenarioSet load_dataset(const ExperimentConfig& config, const std::string& split) {
  const fs::path path = data_path(config, split);
  if (!fs::exists(path))
    throw MissingFileError("dataset not found: " + path.string() + " (run gen-data first)");
  return load_scenarios(path);
}

TrainingRun run_training(const ExperimentConfig& config, const ScenarioSet& train,
                         const ModelVariant& variant,
                         const std::function<void(std::size_t, std::int64_t, double)>& on_log) {
  if (train.empty()) throw std::invalid_argument("run_training: empty training set");
  TrainingRun run;
  run.variant = variant;
  const std::string digest = config_digest(config);
  for (std::size_t r = 0; r < config.replicas; ++r) {
    const ModelConfig mc = replica_model_config(config, variant, r);
    TrainConfig tc = replica_train_config(config, r);
    MotionLM model(mc);
    if (variant.mask == TrainMask::acausal_query) {
      if (config.acausal.steps > 0) tc.steps = config.acausal.steps;
      if (config.acausal.init_from_causal) {
        const fs::path base = checkpoint_path(config, causal_variant(variant.attention_interval), r);
        if (!fs::exists(base))
          throw MissingFileError("acausal init: " + base.string() + " not found (train k" +
                                 std::to_string(variant.attention_interval) + " first)");
        Checkpoint ck = load_checkpoint(base.string());
        ck.config = mc;
        model = restore_model(ck);
      }
    }
    Trainer trainer(model, tc, prepare_examples(mc, train));
    TrainingLog log = trainer.run([&](std::int64_t s, double loss) {
      if (on_log) on_log(r, s, loss);
    });
    Checkpoint ck = trainer.checkpoint();
    ck.metadata["variant"] = variant.name;
    ck.metadata["replica"] = r;
    ck.metadata["config_digest"] = digest;
    const fs::path path = checkpoint_path(config, variant, r);
    fs::create_directories(path.parent_path());
    run.checkpoint_digests.push_back(save_checkpoint(ck, path.string()));
    run.checkpoint_paths.push_back(path.string());

    std::ostringstream csv;
    csv << "# config_digest=" << digest << "\nstep,loss\n";
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%lld,%.6f\n", static_cast<long long>(log.steps[i]),
                    log.losses[i]);
      csv << buf;
    }
    write_text(fs::path(config.output_dir) / "logs" /
                   (variant.name + "_replica" + std::to_string(r) + ".csv"),
               csv.str());
    run.logs.push_back(std::move(log));
  }
  return run;
}

Ensemble load_ensemble(const ExperimentConfig& config, const ModelVariant& variant) {
  Ensemble e;
  e.variant = variant;
  for (std::size_t r = 0; r < config.replicas; ++r) {
    const fs::path path = checkpoint_path(config, variant, r);
    const Checkpoint ck = load_checkpoint(path.string());
    e.models.push_back(restore_model(ck));
    e.paths.push_back(path.lexically_relative(config.output_dir).generic_string());
    e.digests.push_back(ck.digest);
  }
  return e;
}

SceneRollouts sample_scenes(const Ensemble& ensemble, const ScenarioSet& scenes,
                            const RolloutConfig& base,
                            const std::function<void(std::size_t, RolloutConfig&)>& customize) {
  if (ensemble.models.empty()) throw std::invalid_argument("sample_scenes: empty ensemble");
  SceneRollouts out(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) {
    RolloutConfig rc = base;
    if (customize) customize(i, rc);
    const std::uint64_t scene_seed = derive_seed(base.seed, i);
    for (std::size_t e = 0; e < ensemble.models.size(); ++e) {
      rc.seed = derive_seed(scene_seed, e);
      out[i].push_back(rollout(ensemble.models[e], scenes[i], rc));
    }
  });
  return out;
}

RolloutSet project_agents(const RolloutSet& set, const std::vector<std::size_t>& agents) {
  RolloutSet out = set;
  for (auto& s : out.samples) {
    JointSample p;
    p.replica = s.replica;
    for (std::size_t a : agents) {
      p.tokens.push_back(s.tokens.at(a));
      p.waypoints.push_back(s.waypoints.at(a));
      p.log_probs.push_back(s.log_probs.at(a));
    }
    s = std::move(p);
  }
  return out;
}

GroundTruth project_agents(const GroundTruth& truth, const std::vector<std::size_t>& agents) {
  GroundTruth out;
  out.scenario_id = truth.scenario_id;
  for (std::size_t a : agents) {
    out.future.push_back(truth.future.at(a));
    out.current.push_back(truth.current.at(a));
    out.types.push_back(truth.types.at(a));
  }
  return out;
}

std::vector<JointModeSet> aggregate_scenes(const SceneRollouts& rollouts,
                                           const AggregateConfig& config,
                                           std::optional<std::size_t> count,
                                           const std::vector<std::size_t>& agents) {
  std::vector<JointModeSet> out(rollouts.size());
  parallel_for(rollouts.size(), [&](std::size_t i) {
    std::vector<RolloutSet> parts;
    for (const auto& set : rollouts[i]) {
      RolloutSet part = agents.empty() ? set : project_agents(set, agents);
      if (count && part.samples.size() > *count) part.samples.resize(*count);
      parts.push_back(std::move(part));
    }
    out[i] = aggregate(ensemble_merge(parts), config);
  });
  return out;
}

std::vector<GroundTruth> ground_truths(const ScenarioSet& scenes) {
  std::vector<GroundTruth> out;
  out.reserve(scenes.size());
  for (const auto& s : scenes) out.push_back(ground_truth(s));
  return out;
}

json provenance(const ExperimentConfig& config, const std::vector<const Ensemble*>& models) {
  json checkpoints = json::array();
  for (const Ensemble* e : models)
    for (std::size_t r = 0; r < e->models.size(); ++r)
      checkpoints.push_back({{"variant", e->variant.name},
                             {"replica", r},
                             {"path", r < e->paths.size() ? e->paths[r] : ""},
                             {"digest", r < e->digests.size() ? e->digests[r] : ""}});
  return {{"seed", config.seed},
          {"rollout_seed", rollout_seed(config)},
          {"config_digest", config_digest(config)},
          {"checkpoints", checkpoints}};
}

EvalReport evaluate_ensemble(const ExperimentConfig& config, const Ensemble& ensemble,
                             const ScenarioSet& scenes, int attention_interval) {
  RolloutConfig rc;
  rc.num_rollouts = config.rollout.num_rollouts;
  rc.top_p = config.rollout.top_p;
  rc.attention_interval = attention_interval;
  rc.seed = rollout_seed(config);
  rc.mode = RolloutMode::joint;
  const auto modes = aggregate_scenes(sample_scenes(ensemble, scenes, rc), config.aggregate);
  const auto truths = ground_truths(scenes);
  return evaluate(modes, truths, config.metrics);
}

json run_eval(const ExperimentConfig& config, const Ensemble& ensemble, const ScenarioSet& scenes,
              EvalReport* out) {
  const EvalReport report = evaluate_ensemble(config, ensemble, scenes);
  if (out) *out = report;
  return {{"kind", "eval"},
          {"variant", ensemble.variant.name},
          {"grid_point",
           {{"attention_interval", ensemble.variant.attention_interval},
            {"num_rollouts", config.rollout.num_rollouts},
            {"replicas", ensemble.models.size()}}},
          {"provenance", provenance(config, {&ensemble})},
          {"report", to_json(report)}};
}

AblationResult run_attention_ablation(const ExperimentConfig& config,
                                      const std::map<int, const Ensemble*>& models,
                                      const ScenarioSet& scenes) {
  AblationResult result;
  result.grid = "attention";
  result.parameter = "attention_interval";
  std::vector<const Ensemble*> used;
  for (int k : config.grid.attention_intervals) {
    auto it = models.find(k);
    if (it == models.end() || it->second == nullptr)
      throw std::invalid_argument("attention ablation: no model for interval " + std::to_string(k));
    used.push_back(it->second);
    result.values.push_back(k);
    result.reports.push_back(evaluate_ensemble(config, *it->second, scenes));
  }
  result.provenance = provenance(config, used);
  return result;
}

AblationResult run_rollout_ablation(const ExperimentConfig& config, const Ensemble& ensemble,
                                    const ScenarioSet& scenes) {
  AblationResult result;
  result.grid = "rollouts";
  result.parameter = "num_rollouts";
  std::size_t largest = 0;
  for (std::size_t r : config.grid.rollout_counts) largest = std::max(largest, r);
  RolloutConfig rc;
  rc.num_rollouts = largest;
  rc.top_p = config.rollout.top_p;
  rc.seed = rollout_seed(config);
  rc.mode = RolloutMode::joint;
  const SceneRollouts rollouts = sample_scenes(ensemble, scenes, rc);
  const auto truths = ground_truths(scenes);
  for (std::size_t r : config.grid.rollout_counts) {
    const auto modes = aggregate_scenes(rollouts, config.aggregate, r);
    result.values.push_back(static_cast<double>(r));
    result.reports.push_back(evaluate(modes, truths, config.metrics));
  }
  result.provenance = provenance(config, {&ensemble});
  return result;
}

std::string ablation_csv(const AblationResult& result, const std::string& digest) {
  std::ostringstream out;
  out << "# config_digest=" << digest << "\n" << csv_header() << "\n";
  for (std::size_t i = 0; i < result.values.size(); ++i)
    out << csv_row(result.parameter, result.values[i], result.reports[i]) << "\n";
  return out.str();
}

fs::path write_ablation(const ExperimentConfig& config, const AblationResult& result) {
  const std::string digest = config_digest(config);
  const fs::path csv = fs::path(config.output_dir) / ("ablation_" + result.grid + ".csv");
  write_text(csv, ablation_csv(result, digest));
  LinePlot plot;
  plot.title = result.grid == "attention" ? "mAP vs interactive attention interval"
                                          : "mAP vs number of rollouts";
  plot.x_label = result.parameter;
  plot.y_label = "mAP";
  plot.log2_x = true;
  plot.config_digest = digest;
  PlotSeries joint{"joint mAP", result.values, {}}, soft{"joint soft mAP", result.values, {}},
      marginal{"marginal mAP", result.values, {}};
  for (const auto& r : result.reports) {
    joint.y.push_back(r.joint_mean.map);
    soft.y.push_back(r.joint_mean.soft_map);
    marginal.y.push_back(r.marginal_mean.map);
  }
  plot.series = {joint, soft, marginal};
  save_svg(plot, (fs::path(config.output_dir) / ("ablation_" + result.grid + ".svg")).string());
  write_text(fs::path(config.output_dir) / "reports" / ("ablation_" + result.grid + ".json"),
             json{{"kind", "ablation"},
                  {"grid", result.grid},
                  {"parameter", result.parameter},
                  {"values", result.values},
                  {"provenance", result.provenance},
                  {"reports",
                   [&] {
                     json a = json::array();
                     for (const auto& r : result.reports) a.push_back(to_json(r));
                     return a;
                   }()}}
                     .dump(2) +
                 "\n");
  return csv;
}

std::vector<Waypoint> stopping_trajectory(const Scenario& scenario, std::size_t agent,
                                          double onset, double decel, double step_dt) {
  if (decel <= 0.0) throw std::invalid_argument("stopping_trajectory: decel must be > 0");
  const AgentState& s = scenario.current_state(agent);
  const double speed = std::hypot(s.vx, s.vy);
  const double dir = speed > 0.1 ? std::atan2(s.vy, s.vx) : s.heading;
  const double t_stop = onset + speed / decel;
  std::vector<Waypoint> out;
  for (int i = 1; i <= scenario.horizon; ++i) {
    const double t = i * step_dt;
    double d;
    if (t <= onset)
      d = speed * t;
    else {
      const double tau = std::min(t, t_stop) - onset;
      d = speed * onset + speed * tau - 0.5 * decel * tau * tau;
    }
    out.push_back({s.position.x + d * std::cos(dir), s.position.y + d * std::sin(dir)});
  }
  return out;
}

BehaviorTest behavior_test(const Ensemble& causal, const Ensemble& acausal,
                           const Scenario& scenario, std::size_t lead, std::size_t trailing,
                           const ConditionalSettings& settings, double top_p, std::uint64_t seed) {
  BehaviorTest out;
  out.scenario_id = scenario.id;
  out.lead = lead;
  out.trailing = trailing;
  const auto stop = stopping_trajectory(scenario, trailing, settings.stop_onset, settings.stop_decel);
  const QueryTokens query =
      query_from_waypoints(causal.models.at(0).config().vocab, scenario, trailing, stop);
  out.query_error = query.reconstruction_error;
  const AgentState start = scenario.current_state(lead);

  // Rollouts are split evenly over the replicas; earlier replicas take the remainder.
  auto travel = [&](const Ensemble& ensemble, RolloutMode mode, std::uint64_t stream) {
    const std::size_t replicas = ensemble.models.size();
    std::vector<double> v;
    for (std::size_t e = 0; e < replicas; ++e) {
      RolloutConfig rc;
      rc.num_rollouts = settings.behavior_rollouts / replicas +
                        (e < settings.behavior_rollouts % replicas ? 1 : 0);
      if (rc.num_rollouts == 0) continue;
      rc.top_p = top_p;
      rc.seed = derive_seed(derive_seed(seed, stream), e);
      rc.mode = mode;
      if (mode == RolloutMode::conditional_causal || mode == RolloutMode::conditional_acausal) {
        rc.query_agent = trailing;
        rc.query_tokens = query.tokens;
      }
      const RolloutSet set = rollout(ensemble.models[e], scenario, rc);
      for (const auto& s : set.samples) v.push_back(lead_travel(s, start, lead));
    }
    return v;
  };
  out.causal_baseline = travel(causal, RolloutMode::joint, 1);
  out.causal_conditioned = travel(causal, RolloutMode::conditional_causal, 2);
  out.acausal_baseline = travel(acausal, RolloutMode::marginal, 3);
  out.acausal_conditioned = travel(acausal, RolloutMode::conditional_acausal, 4);
  out.causal = welch_t_test(out.causal_conditioned, out.causal_baseline);
  out.acausal = welch_t_test(out.acausal_conditioned, out.acausal_baseline);
  return out;
}

ConditionalStudy run_conditional_study(const ExperimentConfig& config, const Ensemble& causal,
                                       const Ensemble& acausal, const ScenarioSet& scenes) {
  if (scenes.empty()) throw std::invalid_argument("conditional study: no scenes");
  ConditionalStudy study;
  const std::size_t q = config.conditional.query_agent;
  study.query_agent = q;
  study.num_scenes = scenes.size();
  for (std::size_t a = 0; a < scenes[0].num_modeled(); ++a)
    if (a != q) study.targets.push_back(a);

  std::vector<TokenRow> queries(scenes.size());
  std::vector<double> errors(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto qt = query_from_waypoints(causal.models.at(0).config().vocab, scenes[i], q,
                                         scenes[i].future.at(q));
    queries[i] = qt.tokens;
    errors[i] = qt.reconstruction_error;
    study.max_query_error = std::max(study.max_query_error, qt.reconstruction_error);
  }

  RolloutConfig rc;
  rc.num_rollouts = config.conditional.num_rollouts;
  rc.top_p = config.rollout.top_p;
  rc.seed = rollout_seed(config);
  auto with_query = [&](std::size_t i, RolloutConfig& c) {
    c.query_agent = q;
    c.query_tokens = queries[i];
  };
  std::vector<GroundTruth> truths;
  for (const auto& gt : ground_truths(scenes)) truths.push_back(project_agents(gt, study.targets));

  rc.mode = RolloutMode::joint;
  study.marginal = evaluate(
      aggregate_scenes(sample_scenes(causal, scenes, rc), config.aggregate, {}, study.targets),
      truths, config.metrics);
  rc.mode = RolloutMode::conditional_causal;
  study.causal = evaluate(aggregate_scenes(sample_scenes(causal, scenes, rc, with_query),
                                           config.aggregate, {}, study.targets),
                          truths, config.metrics);
  rc.mode = RolloutMode::conditional_acausal;
  study.acausal = evaluate(aggregate_scenes(sample_scenes(acausal, scenes, rc, with_query),
                                            config.aggregate, {}, study.targets),
                           truths, config.metrics);

  for (const auto& s : scenes) {
    if (s.family == "lead_follow" && s.latent_mode == "cruise" && s.num_modeled() >= 2) {
      study.behavior = behavior_test(causal, acausal, s, 0, 1,
                                     config.conditional, config.rollout.top_p,
                                     derive_seed(rollout_seed(config), 0x6265686176));
      break;
    }
  }
  study.provenance = provenance(config, {&causal, &acausal});
  return study;
}

json to_json(const ConditionalStudy& s) {
  json j = {{"kind", "conditional"},
            {"query_agent", s.query_agent},
            {"targets", s.targets},
            {"num_scenes", s.num_scenes},
            {"max_query_reconstruction_error", s.max_query_error},
            {"marginal", to_json(s.marginal)},
            {"causal", to_json(s.causal)},
            {"acausal", to_json(s.acausal)},
            {"provenance", s.provenance}};
  if (s.behavior) {
    const auto& b = *s.behavior;
    auto test = [](const TestResult& t) {
      return json{{"t", t.statistic}, {"dof", t.dof}, {"p_value", t.p_value}};
    };
    j["behavior"] = {{"scenario_id", b.scenario_id},
                     {"lead", b.lead},
                     {"trailing", b.trailing},
                     {"query_reconstruction_error", b.query_error},
                     {"causal_baseline_mean", mean(b.causal_baseline)},
                     {"causal_conditioned_mean", mean(b.causal_conditioned)},
                     {"acausal_baseline_mean", mean(b.acausal_baseline)},
                     {"acausal_conditioned_mean", mean(b.acausal_conditioned)},
                     {"causal_test", test(b.causal)},
                     {"acausal_test", test(b.acausal)}};
  } else {
    j["behavior"] = nullptr;
  }
  return j;
}

std::string format_conditional(const ConditionalStudy& s) {
  std::ostringstream out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "conditional study: %zu scenes, query agent %zu\n", s.num_scenes,
                s.query_agent);
  out << buf;
  out << "setting      minADE   minFDE     miss      mAP\n";
  auto line = [&](const char* name, const EvalReport& r) {
    std::snprintf(buf, sizeof buf, "%-10s %8.4f %8.4f %8.4f %8.4f\n", name, r.joint_mean.min_ade,
                  r.joint_mean.min_fde, r.joint_mean.miss_rate, r.joint_mean.map);
    out << buf;
  };
  line("marginal", s.marginal);
  line("causal", s.causal);
  line("acausal", s.acausal);
  if (s.behavior) {
    const auto& b = *s.behavior;
    std::snprintf(buf, sizeof buf,
                  "behavior (%s, trailing agent stops): lead travel\n"
                  "  causal   %.3f -> %.3f m  t=%.3f p=%.4g\n"
                  "  acausal  %.3f -> %.3f m  t=%.3f p=%.4g\n",
                  b.scenario_id.c_str(), mean(b.causal_baseline), mean(b.causal_conditioned),
                  b.causal.statistic, b.causal.p_value, mean(b.acausal_baseline),
                  mean(b.acausal_conditioned), b.acausal.statistic, b.acausal.p_value);
    out << buf;
  }
  return out.str();
}

fs::path write_report(const ExperimentConfig& config, const std::string& name, const json& report,
                      const std::string& text) {
  const fs::path dir = fs::path(config.output_dir) / "reports";
  const fs::path path = dir / (name + ".json");
  write_text(path, report.dump(2) + "\n");
  write_text(dir / (name + ".txt"), "config_digest: " + config_digest(config) + "\n" + text);
  return path;
}

}  // namespace motionlm
