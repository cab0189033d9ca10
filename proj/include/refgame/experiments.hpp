#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgame/analysis.hpp"
#include "refgame/checkpoint.hpp"
#include "refgame/evaluation.hpp"
#include "refgame/training.hpp"

namespace refgame {

/// The three studied regimes: a vocabulary big enough to name every
/// object outright, a tight vocabulary sized to attributes/values, and
/// the tight vocabulary with the answerer additionally made memoryless.
struct ExperimentPreset {
  std::string name;
  long q_vocab = 3;
  long a_vocab = 4;
  bool memoryless_abot = false;
};

inline const std::vector<ExperimentPreset>& presets() {
  static const std::vector<ExperimentPreset> all = {
      {"overcomplete", 64, 64, false},
      {"attr-value", 3, 12, false},
      {"nomem-min", 3, 4, true},
  };
  return all;
}

inline const ExperimentPreset* find_preset(const std::string& name) {
  for (const ExperimentPreset& p : presets())
    if (p.name == name) return &p;
  return nullptr;
}

inline AgentConfig agent_config_for(const ExperimentPreset& p) {
  AgentConfig c;
  c.q_vocab = p.q_vocab;
  c.a_vocab = p.a_vocab;
  c.memoryless_abot = p.memoryless_abot;
  return c;
}

/// Applies the flat key set of a config file on top of existing
/// configs; unknown keys are rejected so typos fail loudly.
inline void apply_config_json(const nlohmann::json& j, AgentConfig& acfg, TrainerConfig& tcfg) {
  for (const auto& [key, value] : j.items()) {
    if (key == "q_vocab") acfg.q_vocab = value.get<long>();
    else if (key == "a_vocab") acfg.a_vocab = value.get<long>();
    else if (key == "token_embed_dim") acfg.token_embed_dim = value.get<long>();
    else if (key == "hidden_dim") acfg.hidden_dim = value.get<long>();
    else if (key == "attr_embed_dim") acfg.attr_embed_dim = value.get<long>();
    else if (key == "rounds") acfg.rounds = value.get<long>();
    else if (key == "memoryless_abot") acfg.memoryless_abot = value.get<bool>();
    else if (key == "batch_size") tcfg.batch_size = value.get<long>();
    else if (key == "learning_rate") tcfg.learning_rate = value.get<double>();
    else if (key == "clip_bound") tcfg.clip_bound = value.get<double>();
    else if (key == "reward_correct") tcfg.reward_correct = value.get<double>();
    else if (key == "reward_wrong") tcfg.reward_wrong = value.get<double>();
    else if (key == "max_epochs") tcfg.max_epochs = value.get<long>();
    else if (key == "eval_every") tcfg.eval_every = value.get<long>();
    else if (key == "seed") tcfg.seed = value.get<std::uint64_t>();
    else if (key == "clip_mode") {
      const std::string mode = value.get<std::string>();
      if (mode == "value") tcfg.clip_mode = ClipMode::value;
      else if (mode == "norm") tcfg.clip_mode = ClipMode::norm;
      else throw std::invalid_argument("config: unknown clip_mode " + mode);
    } else if (key == "use_baseline") tcfg.use_baseline = value.get<bool>();
    else if (key == "converge_patience") tcfg.converge_patience = value.get<long>();
    else if (key == "checkpoint_every") tcfg.checkpoint_every = value.get<long>();
    else throw std::invalid_argument("config: unknown key " + key);
  }
}

/// Fresh, initialized run state for a preset and seed.
inline TrainingState make_state(const ExperimentPreset& p, std::uint64_t seed,
                                TrainerConfig tcfg = {}) {
  tcfg.seed = seed;
  TrainingState s(WorldSpec::standard(), agent_config_for(p), tcfg);
  s.initialize();
  return s;
}

// ---- artifact emission ----

inline void write_metrics_csv(const std::vector<MetricRecord>& history, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "iteration,train_both,train_one,test_both,test_one,mean_reward\n";
  char line[160];
  for (const MetricRecord& m : history) {
    std::snprintf(line, sizeof(line), "%ld,%.1f,%.1f,%.1f,%.1f,%.4f\n", m.iteration, m.train_both,
                  m.train_one, m.test_both, m.test_one, m.mean_reward);
    f << line;
  }
}

struct RunResult {
  std::string preset;
  std::uint64_t seed = 0;
  long q_vocab = 0;
  long a_vocab = 0;
  bool q_memory = true;  // the questioner always keeps state
  bool a_memory = true;
  double seen_both = 0.0, seen_one = 0.0;
  double unseen_both = 0.0, unseen_one = 0.0;
  long iterations = 0;
  bool converged = false;
};

inline RunResult summarize_run(TrainingState& s, const std::string& preset) {
  RunResult r;
  r.preset = preset;
  r.seed = s.cfg.seed;
  r.q_vocab = s.agent_cfg.q_vocab;
  r.a_vocab = s.agent_cfg.a_vocab;
  r.a_memory = !s.agent_cfg.memoryless_abot;
  const AccuracyReport seen = evaluate(s.world, s.qbot, s.abot, s.split.train, s.agent_cfg.rounds);
  const AccuracyReport unseen = evaluate(s.world, s.qbot, s.abot, s.split.test, s.agent_cfg.rounds);
  r.seen_both = seen.both_pct;
  r.seen_one = seen.one_pct;
  r.unseen_both = unseen.both_pct;
  r.unseen_one = unseen.one_pct;
  r.iterations = s.iteration;
  r.converged = converged(s);
  return r;
}

inline nlohmann::json run_result_to_json(const RunResult& r) {
  return nlohmann::json{{"preset", r.preset},       {"seed", r.seed},
                        {"q_vocab", r.q_vocab},     {"a_vocab", r.a_vocab},
                        {"q_memory", r.q_memory},   {"a_memory", r.a_memory},
                        {"seen_both", r.seen_both}, {"seen_one", r.seen_one},
                        {"unseen_both", r.unseen_both}, {"unseen_one", r.unseen_one},
                        {"iterations", r.iterations},   {"converged", r.converged}};
}

inline RunResult run_result_from_json(const nlohmann::json& j) {
  RunResult r;
  r.preset = j.at("preset").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.q_vocab = j.at("q_vocab").get<long>();
  r.a_vocab = j.at("a_vocab").get<long>();
  r.q_memory = j.at("q_memory").get<bool>();
  r.a_memory = j.at("a_memory").get<bool>();
  r.seen_both = j.at("seen_both").get<double>();
  r.seen_one = j.at("seen_one").get<double>();
  r.unseen_both = j.at("unseen_both").get<double>();
  r.unseen_one = j.at("unseen_one").get<double>();
  r.iterations = j.at("iterations").get<long>();
  r.converged = j.at("converged").get<bool>();
  return r;
}

/// One row per (setting, seed), accuracies to one decimal.
inline void write_summary_csv(std::vector<RunResult> results, const std::string& path) {
  auto preset_rank = [](const std::string& name) {
    for (std::size_t i = 0; i < presets().size(); ++i)
      if (presets()[i].name == name) return static_cast<long>(i);
    return static_cast<long>(presets().size());
  };
  std::sort(results.begin(), results.end(), [&](const RunResult& x, const RunResult& y) {
    const long rx = preset_rank(x.preset), ry = preset_rank(y.preset);
    if (rx != ry) return rx < ry;
    if (x.preset != y.preset) return x.preset < y.preset;
    return x.seed < y.seed;
  });
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "setting,seed,v_q,v_a,q_memory,a_memory,seen_both,seen_one,unseen_both,unseen_one\n";
  char line[224];
  for (const RunResult& r : results) {
    std::snprintf(line, sizeof(line), "%s,%llu,%ld,%ld,%s,%s,%.1f,%.1f,%.1f,%.1f\n", r.preset.c_str(),
                  static_cast<unsigned long long>(r.seed), r.q_vocab, r.a_vocab,
                  r.q_memory ? "yes" : "no", r.a_memory ? "yes" : "no", r.seen_both, r.seen_one,
                  r.unseen_both, r.unseen_one);
    f << line;
  }
}

inline nlohmann::json grounding_to_json(const GroundingTable& table, const WorldSpec& w) {
  using nlohmann::json;
  const std::vector<TaskSpec> tasks = enumerate_tasks(w);
  json qrows = json::array();
  for (const QbotGroundingRow& r : table.qbot) {
    const TaskSpec& t = tasks[static_cast<std::size_t>(r.task)];
    qrows.push_back(json{{"task", json::array({w.attribute_names[static_cast<std::size_t>(t.first)],
                                               w.attribute_names[static_cast<std::size_t>(t.second)]})},
                         {"q1", r.q1},
                         {"q2", r.q2},
                         {"consistent", r.consistent}});
  }
  json arows = json::array();
  for (const AbotGroundingRow& r : table.abot) {
    json row{{"question", r.question}, {"consistent", r.consistent}};
    if (r.consistent) {
      row["attribute"] = w.attribute_names[static_cast<std::size_t>(r.attribute)];
      row["injective"] = r.injective;
      json mapping = json::object();
      for (std::size_t v = 0; v < r.value_to_token.size(); ++v)
        mapping[w.value_name(r.attribute, static_cast<long>(v))] = r.value_to_token[v];
      row["value_to_token"] = std::move(mapping);
    }
    arows.push_back(std::move(row));
  }
  return json{{"qbot", std::move(qrows)}, {"abot", std::move(arows)}};
}

// ---- evolution pipeline ----

struct EvolutionRow {
  std::string node;      // task plus token path
  std::string pattern;   // the node's final concept, human-readable
  long iteration = 0;    // earliest checkpoint iteration with stable purity
  double train_acc = 0.0;
  double test_acc = 0.0;
};

namespace detail {

inline std::string path_label(const std::vector<int>& path) {
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const long round = static_cast<long>(i) / 2 + 1;
    s += (i % 2 == 0 ? "q" : "a") + std::to_string(round) + "=" + std::to_string(path[i]);
    if (i + 1 < path.size()) s += ">";
  }
  return s;
}

inline std::string task_label(const WorldSpec& w, int task_index) {
  const TaskSpec t = enumerate_tasks(w)[static_cast<std::size_t>(task_index)];
  return "(" + w.attribute_names[static_cast<std::size_t>(t.first)] + "," +
         w.attribute_names[static_cast<std::size_t>(t.second)] + ")";
}

}  // namespace detail

/// Backtracks node purity across a run's checkpoint sequence. Trees are
/// built per task over the full instance grid; the last checkpoint
/// anchors the final concepts. Rows report the checkpoint iteration at
/// which each node became (and stayed) pure, plus the accuracies
/// recorded at that iteration.
inline std::vector<EvolutionRow> evolution_rows(const std::vector<std::string>& checkpoint_paths) {
  if (checkpoint_paths.empty()) throw std::invalid_argument("evolution: no checkpoints given");
  std::vector<long> iterations;
  std::vector<std::vector<DialogTree>> trees_by_task;  // [task][checkpoint]
  std::optional<LoadedCheckpoint> last;
  std::vector<long> all_instances;

  for (const std::string& path : checkpoint_paths) {
    LoadedCheckpoint lc = load_checkpoint(path);
    TrainingState& s = lc.state;
    if (all_instances.empty()) {
      for (long i = 0; i < s.world.instance_count(); ++i) all_instances.push_back(i);
      trees_by_task.resize(enumerate_tasks(s.world).size());
    }
    iterations.push_back(s.iteration);
    for (std::size_t t = 0; t < trees_by_task.size(); ++t)
      trees_by_task[t].push_back(build_dialog_tree(s.world, s.qbot, s.abot, all_instances,
                                                   {static_cast<int>(t)}, s.agent_cfg));
    last = std::move(lc);
  }

  TrainingState& fin = last->state;
  std::vector<EvolutionRow> rows;
  const std::vector<TaskSpec> tasks = enumerate_tasks(fin.world);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const std::vector<EvolutionRecord> records =
        backtrack_evolution(fin.world, trees_by_task[t], trees_by_task[t].back());
    for (const EvolutionRecord& rec : records) {
      EvolutionRow row;
      row.node = detail::task_label(fin.world, static_cast<int>(t)) + " " + detail::path_label(rec.path);
      row.pattern = rec.pattern.to_string(fin.world, tasks);
      row.iteration = iterations[static_cast<std::size_t>(rec.purity_index)];
      for (const MetricRecord& m : fin.history) {
        if (m.iteration == row.iteration) {
          row.train_acc = m.train_both;
          row.test_acc = m.test_both;
          break;
        }
      }
      rows.push_back(std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const EvolutionRow& x, const EvolutionRow& y) {
    return x.iteration != y.iteration ? x.iteration < y.iteration : x.node < y.node;
  });
  return rows;
}

inline void write_evolution_csv(const std::vector<EvolutionRow>& rows, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "node,concept,purity_iteration,train_both,test_both\n";
  for (const EvolutionRow& r : rows) {
    char tail[96];
    std::snprintf(tail, sizeof(tail), ",%ld,%.1f,%.1f\n", r.iteration, r.train_acc, r.test_acc);
    f << '"' << r.node << "\",\"" << r.pattern << '"' << tail;
  }
}

/// Checkpoint files of a run directory in ascending iteration order.
inline std::vector<std::string> list_checkpoints(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("ckpt_", 0) == 0) files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());  // zero-padded iteration number sorts correctly
  return files;
}

// ---- the full train command ----

struct RunOptions {
  std::string out_dir;
  std::string resume_path;
  bool binary_checkpoints = false;
  bool quiet = false;
};

/// Trains to convergence (or the epoch cap), leaving on disk: periodic
/// checkpoints, metrics.csv, evolution.csv, grounding.json, and
/// result.json with the final seen/unseen accuracies.
inline RunResult run_experiment(TrainingState& s, const std::string& preset_name,
                                const RunOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);
  const std::string ext = opt.binary_checkpoints ? ".cbor" : ".json";

  const auto on_checkpoint = [&](const TrainingState& st) {
    char name[48];
    std::snprintf(name, sizeof(name), "ckpt_%06ld%s", st.iteration, ext.c_str());
    save_checkpoint(st, opt.out_dir + "/" + name, preset_name, opt.binary_checkpoints);
    if (!opt.quiet && !st.history.empty()) {
      const MetricRecord& m = st.history.back();
      std::printf("iter %ld  train both %.1f one %.1f  test both %.1f one %.1f  reward %.3f\n",
                  m.iteration, m.train_both, m.train_one, m.test_both, m.test_one, m.mean_reward);
      std::fflush(stdout);
    }
  };

  train(s, on_checkpoint);

  write_metrics_csv(s.history, opt.out_dir + "/metrics.csv");
  const RunResult result = summarize_run(s, preset_name);
  std::ofstream(opt.out_dir + "/result.json") << run_result_to_json(result).dump(2) << "\n";

  const GroundingTable grounding = extract_grounding_tables(s.world, s.qbot, s.abot, s.agent_cfg);
  std::ofstream(opt.out_dir + "/grounding.json") << grounding_to_json(grounding, s.world).dump(2) << "\n";

  const std::vector<std::string> ckpts = list_checkpoints(opt.out_dir);
  write_evolution_csv(evolution_rows(ckpts), opt.out_dir + "/evolution.csv");
  return result;
}

/// All result.json files under root (one directory level deep or at the
/// root itself), for the summary table.
inline std::vector<RunResult> collect_results(const std::string& root) {
  namespace fs = std::filesystem;
  std::vector<RunResult> out;
  std::vector<std::string> paths;
  const auto consider = [&](const fs::path& p) {
    if (p.filename() == "result.json" && fs::is_regular_file(p)) paths.push_back(p.string());
  };
  consider(fs::path(root) / "result.json");
  if (fs::is_directory(root))
    for (const auto& entry : fs::recursive_directory_iterator(root)) consider(entry.path());
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
  for (const std::string& p : paths) {
    std::ifstream f(p);
    if (!f) continue;
    nlohmann::json j;
    f >> j;
    out.push_back(run_result_from_json(j));
  }
  return out;
}

}  // namespace refgame
