// Command-line driver around the library: training runs with periodic
// checkpoints, checkpoint evaluation, protocol analysis, evolution
// backtracking, and the cross-run summary table.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "refgame/refgame.hpp"

namespace {

using nlohmann::json;

/// `train`: fresh run from a preset (plus optional config-file and flag
/// overrides), or continuation of a saved checkpoint.
int cmd_train(const std::string& preset_name, const std::string& config_path,
              const std::string& resume_path, std::string out_dir, std::uint64_t seed,
              long max_epochs, long checkpoint_every, bool binary, bool quiet) {
  refgame::RunOptions opt;
  opt.binary_checkpoints = binary;
  opt.quiet = quiet;

  std::optional<refgame::TrainingState> state;
  std::string run_label;

  if (!resume_path.empty()) {
    refgame::LoadedCheckpoint loaded = refgame::load_checkpoint(resume_path);
    run_label = loaded.preset.empty() ? "resumed" : loaded.preset;
    state.emplace(std::move(loaded.state));
    if (max_epochs >= 0) state->cfg.max_epochs = max_epochs;
    if (checkpoint_every > 0) state->cfg.checkpoint_every = checkpoint_every;
    if (!quiet)
      std::printf("resuming %s at iteration %ld\n", resume_path.c_str(), state->iteration);
  } else {
    const refgame::ExperimentPreset* preset = refgame::find_preset(preset_name);
    if (preset == nullptr) {
      std::fprintf(stderr, "unknown preset '%s'; available:", preset_name.c_str());
      for (const auto& p : refgame::presets()) std::fprintf(stderr, " %s", p.name.c_str());
      std::fprintf(stderr, "\n");
      return 1;
    }
    refgame::AgentConfig acfg = refgame::agent_config_for(*preset);
    refgame::TrainerConfig tcfg;
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) {
        std::fprintf(stderr, "cannot read config file %s\n", config_path.c_str());
        return 1;
      }
      json overrides;
      f >> overrides;
      refgame::apply_config_json(overrides, acfg, tcfg);
    }
    tcfg.seed = seed;
    if (max_epochs >= 0) tcfg.max_epochs = max_epochs;
    if (checkpoint_every > 0) tcfg.checkpoint_every = checkpoint_every;
    run_label = preset->name;
    state.emplace(refgame::WorldSpec::standard(), acfg, tcfg);
    state->initialize();
  }

  if (out_dir.empty())
    out_dir = "runs/" + run_label + "-seed" + std::to_string(state->cfg.seed);
  opt.out_dir = out_dir;

  const refgame::RunResult result = refgame::run_experiment(*state, run_label, opt);
  std::printf("%s seed %llu: seen both %.1f one %.1f | unseen both %.1f one %.1f | %ld iterations%s\n",
              result.preset.c_str(), static_cast<unsigned long long>(result.seed), result.seen_both,
              result.seen_one, result.unseen_both, result.unseen_one, result.iterations,
              result.converged ? " (converged)" : "");
  std::printf("artifacts in %s\n", out_dir.c_str());
  return 0;
}

/// `eval`: greedy accuracy of a saved checkpoint on its own split.
int cmd_eval(const std::string& checkpoint_path, const std::string& out_path) {
  refgame::LoadedCheckpoint loaded = refgame::load_checkpoint(checkpoint_path);
  refgame::TrainingState& s = loaded.state;
  const refgame::AccuracyReport seen =
      refgame::evaluate(s.world, s.qbot, s.abot, s.split.train, s.agent_cfg.rounds);
  const refgame::AccuracyReport unseen =
      refgame::evaluate(s.world, s.qbot, s.abot, s.split.test, s.agent_cfg.rounds);
  std::printf("checkpoint %s (iteration %ld)\n", checkpoint_path.c_str(), s.iteration);
  std::printf("  seen   : both %.1f%%  one %.1f%%  (%zu episodes)\n", seen.both_pct, seen.one_pct,
              seen.outcomes.size());
  std::printf("  unseen : both %.1f%%  one %.1f%%  (%zu episodes)\n", unseen.both_pct,
              unseen.one_pct, unseen.outcomes.size());
  if (!out_path.empty()) {
    json j{{"iteration", s.iteration},
           {"seen_both", seen.both_pct},
           {"seen_one", seen.one_pct},
           {"unseen_both", unseen.both_pct},
           {"unseen_one", unseen.one_pct}};
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot open " + out_path + " for writing");
    f << j.dump(2) << "\n";
  }
  return 0;
}

/// `analyze-tree`: dialog trees per task plus recovered protocol tables.
int cmd_analyze_tree(const std::string& checkpoint_path, const std::string& out_dir) {
  namespace fs = std::filesystem;
  refgame::LoadedCheckpoint loaded = refgame::load_checkpoint(checkpoint_path);
  refgame::TrainingState& s = loaded.state;
  fs::create_directories(out_dir);

  std::vector<long> all;
  for (long i = 0; i < s.world.instance_count(); ++i) all.push_back(i);
  const std::vector<refgame::TaskSpec> tasks = refgame::enumerate_tasks(s.world);

  json tasks_json = json::array();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const refgame::DialogTree tree = refgame::build_dialog_tree(
        s.world, s.qbot, s.abot, all, {static_cast<int>(t)}, s.agent_cfg);
    json leaves = json::array();
    for (const auto& [path, tuples] : tree.leaves()) {
      const refgame::Concept concept_here = refgame::leaf_concept(s.world, tuples);
      leaves.push_back(json{{"path", refgame::detail::path_label(path)},
                            {"count", tuples.size()},
                            {"concept", concept_here.to_string(s.world, tasks)}});
    }
    tasks_json.push_back(json{{"task", refgame::detail::task_label(s.world, static_cast<int>(t))},
                              {"leaves", std::move(leaves)},
                              {"leaf_capacity", tree.leaf_capacity()}});
  }
  std::ofstream tf(out_dir + "/tree.json");
  if (!tf) throw std::runtime_error("cannot open " + out_dir + "/tree.json for writing");
  tf << json{{"tasks", std::move(tasks_json)}}.dump(2) << "\n";

  const refgame::GroundingTable table =
      refgame::extract_grounding_tables(s.world, s.qbot, s.abot, s.agent_cfg);
  std::ofstream gf(out_dir + "/grounding.json");
  if (!gf) throw std::runtime_error("cannot open " + out_dir + "/grounding.json for writing");
  gf << refgame::grounding_to_json(table, s.world).dump(2) << "\n";

  std::printf("wrote %s/tree.json and %s/grounding.json\n", out_dir.c_str(), out_dir.c_str());
  return 0;
}

/// `evolution`: when each dialog node of the final protocol became
/// stable, across a run's checkpoint sequence.
int cmd_evolution(const std::string& run_dir, std::string out_path) {
  const std::vector<std::string> ckpts = refgame::list_checkpoints(run_dir);
  if (ckpts.empty()) {
    std::fprintf(stderr, "no checkpoints under %s\n", run_dir.c_str());
    return 1;
  }
  if (out_path.empty()) out_path = run_dir + "/evolution.csv";
  const std::vector<refgame::EvolutionRow> rows = refgame::evolution_rows(ckpts);
  refgame::write_evolution_csv(rows, out_path);
  std::printf("%zu stable nodes across %zu checkpoints -> %s\n", rows.size(), ckpts.size(),
              out_path.c_str());
  return 0;
}

/// `report`: gather result.json files into the cross-setting table.
int cmd_report(const std::string& root, std::string out_path) {
  const std::vector<refgame::RunResult> results = refgame::collect_results(root);
  if (results.empty()) {
    std::fprintf(stderr, "no result.json files under %s\n", root.c_str());
    return 1;
  }
  if (out_path.empty()) out_path = root + "/table1.csv";
  refgame::write_summary_csv(results, out_path);
  std::printf("%zu runs -> %s\n", results.size(), out_path.c_str());
  for (const refgame::RunResult& r : results)
    std::printf("  %-14s seed %llu: unseen both %.1f one %.1f\n", r.preset.c_str(),
                static_cast<unsigned long long>(r.seed), r.unseen_both, r.unseen_one);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-agent reference game: training, evaluation, and protocol analysis"};
  app.require_subcommand(1);

  std::string preset_name, config_path, resume_path, out_dir;
  std::uint64_t seed = 1;
  long max_epochs = -1, checkpoint_every = -1;
  bool binary = false, quiet = false;
  CLI::App* train = app.add_subcommand("train", "train a questioner/answerer pair");
  train->add_option("--preset", preset_name, "experiment preset (overcomplete, attr-value, nomem-min)");
  train->add_option("--seed", seed, "run seed (default 1)");
  train->add_option("--config", config_path, "json file overriding agent/trainer settings");
  train->add_option("--resume", resume_path, "checkpoint to continue from");
  train->add_option("--out-dir", out_dir, "artifact directory (default runs/<preset>-seed<seed>)");
  train->add_option("--max-epochs", max_epochs, "training iteration cap");
  train->add_option("--checkpoint-every", checkpoint_every, "checkpoint cadence in iterations");
  train->add_flag("--binary-checkpoints", binary, "write cbor checkpoints instead of json");
  train->add_flag("--quiet", quiet, "suppress progress lines");

  std::string eval_ckpt, eval_out;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on its split");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--out", eval_out, "also write the accuracies as json");

  std::string tree_ckpt, tree_out = "analysis";
  CLI::App* tree = app.add_subcommand("analyze-tree", "dump dialog trees and protocol tables");
  tree->add_option("--checkpoint", tree_ckpt, "checkpoint file")->required();
  tree->add_option("--out-dir", tree_out, "output directory (default analysis/)");

  std::string evo_dir, evo_out;
  CLI::App* evo = app.add_subcommand("evolution", "backtrack protocol stability over a run");
  evo->add_option("--run-dir", evo_dir, "run directory containing ckpt_* files")->required();
  evo->add_option("--out", evo_out, "output csv (default <run-dir>/evolution.csv)");

  std::string report_root, report_out;
  CLI::App* report = app.add_subcommand("report", "summarize result.json files into a table");
  report->add_option("--root", report_root, "directory tree holding run outputs")->required();
  report->add_option("--out", report_out, "output csv (default <root>/table1.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train)
      return cmd_train(preset_name, config_path, resume_path, out_dir, seed, max_epochs,
                       checkpoint_every, binary, quiet);
    if (*eval) return cmd_eval(eval_ckpt, eval_out);
    if (*tree) return cmd_analyze_tree(tree_ckpt, tree_out);
    if (*evo) return cmd_evolution(evo_dir, evo_out);
    if (*report) return cmd_report(report_root, report_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
