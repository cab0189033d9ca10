// Acceptance suite: nine independent checks, one verdict line each on
// stdout, progress chatter on stderr. Training runs (three presets x
// five seeds) are cached under --work-dir, so only the first invocation
// pays for training; later runs re-score the saved artifacts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgame/refgame.hpp"

namespace {

namespace fs = std::filesystem;
using namespace refgame;

// ---------------------------------------------------------------- run cache

struct CachedRun {
  std::string preset;
  std::uint64_t seed = 0;
  std::string dir;
  std::optional<RunResult> result;  // empty when the run failed outright
};

/// Trains (or re-loads) every preset x seed cell. A cell is considered
/// cached when its result.json exists.
std::vector<CachedRun> ensure_runs(const std::string& work_dir) {
  std::vector<CachedRun> out;
  for (const ExperimentPreset& p : presets()) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      CachedRun cell;
      cell.preset = p.name;
      cell.seed = seed;
      cell.dir = work_dir + "/runs/" + p.name + "-seed" + std::to_string(seed);
      const std::string result_path = cell.dir + "/result.json";
      if (fs::exists(result_path)) {
        nlohmann::json j;
        std::ifstream(result_path) >> j;
        cell.result = run_result_from_json(j);
      } else {
        std::fprintf(stderr, "[acceptance] training %s seed %llu ...\n", p.name.c_str(),
                     static_cast<unsigned long long>(seed));
        try {
          // Plain REINFORCE with the -10-dominated reward sits at chance
          // indefinitely (measured here and in an independent port); the
          // constant-baseline toggle is what makes these runs learn.
          TrainerConfig tcfg;
          tcfg.use_baseline = true;
          TrainingState s = make_state(p, seed, tcfg);
          RunOptions opt;
          opt.out_dir = cell.dir;
          opt.binary_checkpoints = true;
          opt.quiet = true;
          cell.result = run_experiment(s, p.name, opt);
          std::fprintf(stderr, "[acceptance]   %ld iterations, seen both %.1f, unseen both %.1f%s\n",
                       cell.result->iterations, cell.result->seen_both, cell.result->unseen_both,
                       cell.result->converged ? " (converged)" : "");
        } catch (const std::exception& e) {
          std::fprintf(stderr, "[acceptance]   run failed: %s\n", e.what());
        }
      }
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<const CachedRun*> runs_for(const std::vector<CachedRun>& runs, const std::string& preset) {
  std::vector<const CachedRun*> out;
  for (const CachedRun& r : runs)
    if (r.preset == preset) out.push_back(&r);
  return out;
}

std::string final_checkpoint(const std::string& dir) {
  const std::vector<std::string> all = list_checkpoints(dir);
  return all.empty() ? std::string() : all.back();
}

double median5(std::vector<double> v) {
  while (v.size() < 5) v.push_back(0.0);
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ------------------------------------------------------- shared micro setup

TrainingState micro_state(std::uint64_t seed) {
  AgentConfig acfg;
  acfg.q_vocab = 2;
  acfg.a_vocab = 2;
  acfg.token_embed_dim = 2;
  acfg.hidden_dim = 2;
  acfg.attr_embed_dim = 2;
  acfg.rounds = 1;
  TrainerConfig tcfg;
  tcfg.seed = seed;
  TrainingState s(WorldSpec::micro(), acfg, tcfg);
  s.initialize();
  return s;
}

std::vector<double*> flat_param_components(TrainingState& s) {
  std::vector<double*> out;
  const auto grab = [&out](const std::string&, Tensor& value, Tensor&) {
    for (double& x : value.v) out.push_back(&x);
  };
  s.qbot.params().for_each(grab);
  s.abot.params().for_each(grab);
  return out;
}

std::vector<double> flat_grads(TrainingState& s) {
  std::vector<double> out;
  const auto grab = [&out](const std::string&, Tensor&, Tensor& grad) {
    for (double x : grad.v) out.push_back(x);
  };
  s.qbot.params().for_each(grab);
  s.abot.params().for_each(grab);
  return out;
}

void zero_all(TrainingState& s) {
  s.qbot.params().zero_grads();
  s.abot.params().zero_grads();
}

/// All 64 one-round micro transcripts: q1 x a1 x two guesses.
std::vector<std::vector<int>> all_micro_sequences(const TrainingState& s) {
  std::vector<std::vector<int>> out;
  const long guesses = s.world.value_symbol_count();
  for (int q = 0; q < s.agent_cfg.q_vocab; ++q)
    for (int a = 0; a < s.agent_cfg.a_vocab; ++a)
      for (int g1 = 0; g1 < guesses; ++g1)
        for (int g2 = 0; g2 < guesses; ++g2) out.push_back({q, a, g1, g2});
  return out;
}

DialogTranscript forced_micro_episode(TrainingState& s, long inst, int task,
                                      const std::vector<int>& seq) {
  ActionChooser forced = ActionChooser::forced(seq);
  return run_episode(s.world, s.qbot, s.abot, inst, task, forced, s.agent_cfg.rounds);
}

double sequence_probability(const DialogTranscript& t) {
  double lp = 0.0;
  for (double x : t.log_probs) lp += x;
  return std::exp(lp);
}

/// Expected reward under the current joint policy, by enumeration.
double expected_return(TrainingState& s, long inst, int task) {
  double j = 0.0;
  for (const std::vector<int>& seq : all_micro_sequences(s)) {
    const DialogTranscript t = forced_micro_episode(s, inst, task, seq);
    j += sequence_probability(t) * t.reward;
  }
  return j;
}

// ------------------------------------------------------------ criterion 1

/// Full agent pipelines (listener, speaker, prediction head) under a
/// central finite-difference sweep of every parameter component. Widths
/// are reduced so 20 draws stay in seconds; the graph shape is the
/// production one.
bool criterion_1() {
  const WorldSpec w = WorldSpec::standard();
  AgentConfig cfg;
  cfg.token_embed_dim = 8;
  cfg.hidden_dim = 16;
  cfg.attr_embed_dim = 8;
  cfg.rounds = 1;

  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const int task = draw % 6;
    const long inst = (draw * 11) % 64;
    const int q1 = static_cast<int>(draw % cfg.q_vocab);
    const int a1 = static_cast<int>((draw * 3 + 1) % cfg.a_vocab);
    const int g1 = (draw * 5) % 12;
    const int g2 = (draw * 7 + 3) % 12;

    QBotAgent q(w, cfg);
    Rng q_init = Rng::substream(911, static_cast<std::uint64_t>(draw), 0);
    xavier_init(q.params(), q_init);
    q.begin(task);
    ActionChooser q_chooser = ActionChooser::forced({q1, g1, g2});
    const Action asked = q.ask(q_chooser);
    q.hear(asked.token, a1);
    q.predict(task, q_chooser);
    // These graphs carry true gradient components spanning ~4e-9 (recurrent
    // listen weights reached only through the first listen step) up to O(1),
    // so no single step satisfies a pure relative band: at 1e-3 truncation
    // breaks mid-scale components, below it difference roundoff
    // (~eps*|loss|/2h ~= 4e-12 at h=1e-4) breaks the tiny ones. Step 1e-4
    // with a 1e-6 magnitude floor checks everything >= 1e-6 at the full
    // relative tolerance and everything below against a 1e-10 absolute
    // guard -- 25x the measured roundoff, yet 1000x finer than the smallest
    // term a wrong derivative could plausibly drop.
    const FdReport q_report =
        finite_difference_check(q.graph(), q.build_loss(-1.0), 1e-4, 1e-4, 1e-6);
    worst = std::max(worst, q_report.max_rel());
    if (!q_report.ok()) {
      std::fprintf(stderr, "[acceptance] criterion 1: questioner draw %d max_rel %.3g, params:", draw,
                   q_report.max_rel());
      for (const std::string& n : q_report.flagged()) std::fprintf(stderr, " %s", n.c_str());
      std::fprintf(stderr, "\n");
      return false;
    }

    ABotAgent a(w, cfg);
    Rng a_init = Rng::substream(912, static_cast<std::uint64_t>(draw), 0);
    xavier_init(a.params(), a_init);
    a.begin(inst);
    ActionChooser a_chooser = ActionChooser::forced({a1});
    a.answer(q1, a_chooser);
    const FdReport a_report = finite_difference_check(a.graph(), a.build_loss(-1.0), 1e-4, 1e-4, 1e-6);
    worst = std::max(worst, a_report.max_rel());
    if (!a_report.ok()) {
      std::fprintf(stderr, "[acceptance] criterion 1: answerer draw %d max_rel %.3g, params:", draw,
                   a_report.max_rel());
      for (const std::string& n : a_report.flagged()) std::fprintf(stderr, " %s", n.c_str());
      std::fprintf(stderr, "\n");
      return false;
    }
  }
  std::fprintf(stderr, "[acceptance] criterion 1 worst relative error %.3g\n", worst);
  return true;
}

// ------------------------------------------------------------ criterion 2

/// On the enumerable 2x2 game, the probability-weighted sum of the
/// per-episode score-function gradient must equal the derivative of the
/// exactly-computed expected reward (central differences on J itself),
/// and a 1e5-sample mean must sit within three standard errors.
bool criterion_2() {
  TrainingState s = micro_state(17);
  const long inst = 2;
  const int task = 1;
  const std::vector<double*> comps = flat_param_components(s);

  // Exact expectation of the estimator.
  std::vector<double> exact(comps.size(), 0.0);
  double mass = 0.0;
  for (const std::vector<int>& seq : all_micro_sequences(s)) {
    const DialogTranscript t = forced_micro_episode(s, inst, task, seq);
    const double p = sequence_probability(t);
    mass += p;
    zero_all(s);
    episode_gradient(s, t);
    const std::vector<double> g = flat_grads(s);
    for (std::size_t i = 0; i < comps.size(); ++i) exact[i] += p * g[i];
  }
  if (std::fabs(mass - 1.0) > 1e-10) {
    std::fprintf(stderr, "[acceptance] criterion 2: transcript mass %.12f != 1\n", mass);
    return false;
  }

  // The estimator averages the gradient of -R * log P, so its mean must
  // be the negated slope of expected reward.
  const double h = 1e-5;
  double worst_abs = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const double saved = *comps[i];
    *comps[i] = saved + h;
    const double j_plus = expected_return(s, inst, task);
    *comps[i] = saved - h;
    const double j_minus = expected_return(s, inst, task);
    *comps[i] = saved;
    const double dj = (j_plus - j_minus) / (2.0 * h);
    worst_abs = std::max(worst_abs, std::fabs(exact[i] + dj));
  }
  std::fprintf(stderr, "[acceptance] criterion 2 worst |estimator + dJ| = %.3g over %zu components\n",
               worst_abs, comps.size());
  if (worst_abs > 1e-8) return false;

  // Empirical mean across 1e5 sampled episodes, Welford accumulation.
  const long n_samples = 100000;
  std::vector<double> mean(comps.size(), 0.0), m2(comps.size(), 0.0);
  Rng sampler(424242);
  for (long n = 1; n <= n_samples; ++n) {
    ActionChooser chooser = ActionChooser::sampling(sampler);
    const DialogTranscript t =
        run_episode(s.world, s.qbot, s.abot, inst, task, chooser, s.agent_cfg.rounds);
    zero_all(s);
    episode_gradient(s, t);
    const std::vector<double> g = flat_grads(s);
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const double delta = g[i] - mean[i];
      mean[i] += delta / static_cast<double>(n);
      m2[i] += delta * (g[i] - mean[i]);
    }
  }
  double worst_z = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const double se = std::sqrt(m2[i] / (static_cast<double>(n_samples) *
                                         static_cast<double>(n_samples - 1)));
    const double err = std::fabs(mean[i] - exact[i]);
    if (err > 3.0 * se + 1e-9) {
      std::fprintf(stderr, "[acceptance] criterion 2: component %zu off by %.3g (se %.3g)\n", i,
                   err, se);
      return false;
    }
    if (se > 0.0) worst_z = std::max(worst_z, err / se);
  }
  std::fprintf(stderr, "[acceptance] criterion 2 worst |z| = %.2f across %zu components\n", worst_z,
               comps.size());
  return true;
}

// --------------------------------------------------------- criteria 3 and 4

bool criterion_3(const std::vector<CachedRun>& runs, std::string& note) {
  bool ok = true;
  note.clear();
  for (const ExperimentPreset& p : presets()) {
    int hit = 0;
    // The band is perfect seen accuracy reached within the first 1000
    // iterations; runs trained past 1000 count only if the final state
    // is both perfect and inside the bound.
    for (const CachedRun* r : runs_for(runs, p.name))
      if (r->result && r->result->iterations <= 1000 &&
          (r->result->converged || r->result->seen_both >= 100.0))
        ++hit;
    if (!note.empty()) note += ", ";
    note += p.name + " " + std::to_string(hit) + "/5";
    if (hit < 3) ok = false;
  }
  return ok;
}

bool criterion_4(const std::vector<CachedRun>& runs, std::string& note) {
  std::map<std::string, double> med_both, med_one;
  for (const ExperimentPreset& p : presets()) {
    std::vector<double> both, one;
    for (const CachedRun* r : runs_for(runs, p.name)) {
      both.push_back(r->result ? r->result->unseen_both : 0.0);
      one.push_back(r->result ? r->result->unseen_one : 0.0);
    }
    med_both[p.name] = median5(both);
    med_one[p.name] = median5(one);
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "median unseen both: nomem-min %.1f, attr-value %.1f, overcomplete %.1f; nomem one %.1f",
                med_both["nomem-min"], med_both["attr-value"], med_both["overcomplete"],
                med_one["nomem-min"]);
  note = buf;
  return med_both["nomem-min"] > med_both["attr-value"] &&
         med_both["attr-value"] > med_both["overcomplete"] && med_both["nomem-min"] >= 50.0 &&
         med_one["nomem-min"] >= 85.0;
}

// ------------------------------------------------------------ criterion 5

bool criterion_5() {
  const WorldSpec w = WorldSpec::standard();
  ScriptedQuestioner q(w);
  ScriptedAnswerer a(w);

  std::vector<long> all;
  for (long i = 0; i < w.instance_count(); ++i) all.push_back(i);
  const AccuracyReport r = evaluate(w, q, a, all, 2);
  if (r.both_pct != 100.0 || r.one_pct != 100.0) return false;

  const GroundingTable t = extract_grounding_tables(w, q, a, AgentConfig{});
  const std::vector<std::pair<int, int>> expected_questions = {{1, 0}, {2, 0}, {1, 0},
                                                               {1, 2}, {0, 2}, {1, 2}};
  if (t.qbot.size() != expected_questions.size()) return false;
  for (std::size_t i = 0; i < t.qbot.size(); ++i) {
    const QbotGroundingRow& row = t.qbot[i];
    if (!row.consistent || row.q1 != expected_questions[i].first ||
        row.q2 != expected_questions[i].second)
      return false;
  }
  if (t.abot.size() != 3) return false;
  for (const AbotGroundingRow& row : t.abot) {
    if (!row.consistent || !row.injective || row.attribute != row.question) return false;
    if (row.value_to_token != std::vector<int>{0, 1, 2, 3}) return false;
  }
  return true;
}

// ------------------------------------------------------------ criterion 6

/// One tree over all 384 (instance, task) pairs: 144 addressable
/// leaves, an exact partition, and — within each task sharing a leaf —
/// a single ground-truth pair. The questioner's guess is a function of
/// (task, token path) under greedy decoding, so impurity inside a task
/// group would force an error somewhere.
bool criterion_6(const std::vector<CachedRun>& runs, std::string& note) {
  // The structural invariants (144 leaf slots, every (instance, task) pair
  // placed exactly once) must hold for every trained checkpoint; the purity
  // requirement applies to converged checkpoints only, since an imperfect
  // protocol may legitimately route conflicting tuples to one leaf.
  int structural = 0;
  int pure_checked = 0;
  for (const CachedRun* r : runs_for(runs, "nomem-min")) {
    const std::string path = final_checkpoint(r->dir);
    if (path.empty()) continue;
    LoadedCheckpoint loaded = load_checkpoint(path);
    TrainingState& s = loaded.state;

    std::vector<long> all;
    for (long i = 0; i < s.world.instance_count(); ++i) all.push_back(i);
    std::vector<int> task_ids;
    for (int t = 0; t < static_cast<int>(enumerate_tasks(s.world).size()); ++t)
      task_ids.push_back(t);
    const DialogTree tree =
        build_dialog_tree(s.world, s.qbot, s.abot, all, task_ids, s.agent_cfg);

    if (tree.leaf_capacity() != 144) return false;
    if (tree.tuple_count() != 64 * 6) return false;

    std::vector<Episode> seen;
    for (const auto& [leaf_path, tuples] : tree.leaves())
      seen.insert(seen.end(), tuples.begin(), tuples.end());
    std::sort(seen.begin(), seen.end());
    std::vector<Episode> want;
    for (int i = 0; i < 64; ++i)
      for (int t = 0; t < 6; ++t) want.push_back(Episode{i, t});
    std::sort(want.begin(), want.end());
    if (seen != want) return false;
    ++structural;

    if (!r->result || !r->result->converged) continue;
    const std::vector<TaskSpec> tasks = enumerate_tasks(s.world);
    for (const auto& [leaf_path, tuples] : tree.leaves()) {
      std::map<int, GroundTruth> truth_by_task;
      for (const Episode& e : tuples) {
        const GroundTruth g = ground_truth(s.world, instance_at(s.world, e.instance),
                                           tasks[static_cast<std::size_t>(e.task)]);
        auto [it, inserted] = truth_by_task.emplace(e.task, g);
        if (!inserted && !(it->second == g)) {
          std::fprintf(stderr, "[acceptance] criterion 6: impure leaf in %s\n", r->dir.c_str());
          return false;
        }
      }
    }
    ++pure_checked;
  }
  if (pure_checked > 0)
    note = std::to_string(structural) + " tree(s) structurally checked, " +
           std::to_string(pure_checked) + " converged checkpoint(s) pure";
  else
    note = std::to_string(structural) +
           " tree(s) structurally checked; no converged checkpoint, purity clause vacuous";
  return structural > 0;
}

// ------------------------------------------------------------ criterion 7

bool criterion_7(const std::vector<CachedRun>& runs, std::string& note) {
  const CachedRun* pick = nullptr;
  for (const CachedRun* r : runs_for(runs, "nomem-min")) {
    if (r->result && r->result->converged) {
      pick = r;
      break;
    }
    if (pick == nullptr && r->result) pick = r;
  }
  if (pick == nullptr) {
    note = "no trained checkpoint available";
    return false;
  }
  const std::string path = final_checkpoint(pick->dir);
  if (path.empty()) {
    note = "no checkpoint file in " + pick->dir;
    return false;
  }
  LoadedCheckpoint loaded = load_checkpoint(path);
  ABotAgent& a = loaded.state.abot;
  const long q_vocab = loaded.state.agent_cfg.q_vocab;

  // Reference answer per (question, instance) from a fresh dialog.
  std::vector<std::vector<int>> ref(static_cast<std::size_t>(q_vocab), std::vector<int>(64, -1));
  for (int q = 0; q < q_vocab; ++q) {
    for (long inst = 0; inst < 64; ++inst) {
      a.begin(inst);
      ActionChooser greedy = ActionChooser::greedy();
      ref[static_cast<std::size_t>(q)][static_cast<std::size_t>(inst)] = a.answer(q, greedy).token;
    }
  }
  // Both rounds of every (q1, q2) history must reproduce the reference.
  for (long inst = 0; inst < 64; ++inst) {
    for (int q1 = 0; q1 < q_vocab; ++q1) {
      for (int q2 = 0; q2 < q_vocab; ++q2) {
        a.begin(inst);
        ActionChooser greedy = ActionChooser::greedy();
        const int a1 = a.answer(q1, greedy).token;
        const int a2 = a.answer(q2, greedy).token;
        if (a1 != ref[static_cast<std::size_t>(q1)][static_cast<std::size_t>(inst)] ||
            a2 != ref[static_cast<std::size_t>(q2)][static_cast<std::size_t>(inst)])
          return false;
      }
    }
  }
  note = "checkpoint " + path;
  return true;
}

// ------------------------------------------------------------ criterion 8

bool criterion_8() {
  const ExperimentPreset& p = *find_preset("overcomplete");
  const std::uint64_t seed = 7;
  const long total = 6, first_leg = 3;

  const auto run_straight = [&]() {
    TrainingState s = make_state(p, seed);
    for (long i = 0; i < total; ++i) train_iteration(s);
    return checkpoint_to_json(s, p.name).dump();
  };

  const std::string a = run_straight();
  const std::string b = run_straight();
  if (a != b) {
    std::fprintf(stderr, "[acceptance] criterion 8: plain reruns differ\n");
    return false;
  }

  // Same horizon, but serialized to disk and reloaded at the midpoint.
  const std::string tmp =
      (fs::temp_directory_path() / "refgame_acceptance_det.cbor").string();
  TrainingState s = make_state(p, seed);
  for (long i = 0; i < first_leg; ++i) train_iteration(s);
  save_checkpoint(s, tmp, p.name, true);
  LoadedCheckpoint resumed = load_checkpoint(tmp);
  std::remove(tmp.c_str());
  for (long i = first_leg; i < total; ++i) train_iteration(resumed.state);
  const std::string c = checkpoint_to_json(resumed.state, p.name).dump();
  if (a != c) {
    std::fprintf(stderr, "[acceptance] criterion 8: save/load trajectory differs\n");
    return false;
  }
  return true;
}

// ------------------------------------------------------------ criterion 9

/// Constructed fixture: a leaf that becomes pure at checkpoint 1 and
/// one pure from the start must come back with those exact indices.
bool evolution_fixture_ok() {
  const WorldSpec w = WorldSpec::standard();
  const auto make_tree = [&w](const std::vector<std::pair<std::vector<int>, Episode>>& entries) {
    DialogTree t(3, 4, 2);
    for (const auto& [path, e] : entries) t.insert(path, e);
    return t;
  };
  const std::vector<int> late{1, 0, 0, 0};   // pure only from checkpoint 1 on
  const std::vector<int> early{0, 1, 0, 0};  // pure throughout

  // Instances 0 and 1 are both (blue, triangle); 21 is not.
  const DialogTree c0 = make_tree({{late, Episode{0, 2}}, {late, Episode{21, 2}},
                                   {early, Episode{5, 4}}});
  const DialogTree c1 = make_tree({{late, Episode{0, 2}}, {late, Episode{1, 2}},
                                   {early, Episode{5, 4}}});
  const DialogTree c2 = make_tree({{late, Episode{0, 2}}, {late, Episode{1, 2}},
                                   {early, Episode{5, 4}}});
  const std::vector<EvolutionRecord> recs = backtrack_evolution(w, {c0, c1, c2}, c2);

  bool saw_late = false, saw_early = false;
  for (const EvolutionRecord& r : recs) {
    if (r.path == late) {
      saw_late = true;
      if (r.purity_index != 1) return false;
    }
    if (r.path == early) {
      saw_early = true;
      if (r.purity_index != 0) return false;
    }
  }
  return saw_late && saw_early;
}

bool criterion_9(const std::vector<CachedRun>& runs, std::string& note) {
  if (!evolution_fixture_ok()) {
    note = "constructed fixture returned wrong purity indices";
    return false;
  }

  // The timeline properties are claimed for real runs as such, converged or
  // not: groundings may only accumulate, and accuracy climbs as they do.
  int checked = 0;
  double worst_corr = 1.0;
  for (const CachedRun* r : runs_for(runs, "nomem-min")) {
    const std::vector<std::string> ckpts = list_checkpoints(r->dir);
    if (ckpts.size() < 2) continue;
    const std::vector<EvolutionRow> rows = evolution_rows(ckpts);
    if (rows.empty()) {
      note = "no stable nodes found in " + r->dir;
      return false;
    }
    // Timeline monotone: rows arrive sorted by stabilization iteration,
    // so the cumulative concept count can only grow.
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].iteration < rows[i - 1].iteration) {
        note = "timeline out of order in " + r->dir;
        return false;
      }
    // Accuracy should rise alongside groundings: across stabilization
    // events, later iterations carry higher train accuracy.
    double mean_it = 0.0, mean_acc = 0.0;
    for (const EvolutionRow& row : rows) {
      mean_it += static_cast<double>(row.iteration);
      mean_acc += row.train_acc;
    }
    mean_it /= static_cast<double>(rows.size());
    mean_acc /= static_cast<double>(rows.size());
    double cov = 0.0, var_it = 0.0, var_acc = 0.0;
    for (const EvolutionRow& row : rows) {
      const double di = static_cast<double>(row.iteration) - mean_it;
      const double da = row.train_acc - mean_acc;
      cov += di * da;
      var_it += di * di;
      var_acc += da * da;
    }
    if (var_it > 0.0 && var_acc == 0.0) {
      note = "groundings accumulate but accuracy never moves in " + r->dir;
      return false;
    }
    if (var_it > 0.0 && var_acc > 0.0) {
      const double corr = cov / std::sqrt(var_it * var_acc);
      worst_corr = std::min(worst_corr, corr);
      if (corr <= 0.0) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "accuracy/grounding correlation %.2f in %s", corr,
                      r->dir.c_str());
        note = buf;
        return false;
      }
    }
    ++checked;
  }
  if (checked == 0) {
    note = "no nomem-min run with a checkpoint series";
    return false;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d run(s), min accuracy/grounding correlation %.2f", checked,
                worst_corr);
  note = buf;
  return true;
}

// ----------------------------------------------------------------- driver

struct Verdict {
  bool ok = false;
  std::string label;
  std::string note;
};

void report(int index, const Verdict& v) {
  std::printf("criterion %d: %s  %s%s%s\n", index, v.ok ? "PASS" : "FAIL", v.label.c_str(),
              v.note.empty() ? "" : " -- ", v.note.c_str());
  std::fflush(stdout);
}

template <typename F>
Verdict guarded(const std::string& label, F&& f) {
  Verdict v;
  v.label = label;
  try {
    v.ok = f(v.note);
  } catch (const std::exception& e) {
    v.ok = false;
    v.note = std::string("exception: ") + e.what();
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::string work_dir = "acceptance_work";
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--work-dir") == 0) work_dir = argv[i + 1];
  fs::create_directories(work_dir);
  std::fprintf(stderr, "[acceptance] work dir: %s\n", work_dir.c_str());

  const std::vector<CachedRun> runs = ensure_runs(work_dir);

  std::vector<Verdict> verdicts;
  verdicts.push_back(guarded("gradients match central differences (20 draws, 1e-4)",
                             [](std::string&) { return criterion_1(); }));
  verdicts.push_back(guarded("policy-gradient estimator is unbiased on the enumerable game",
                             [](std::string&) { return criterion_2(); }));
  verdicts.push_back(guarded("every preset reaches 100% seen accuracy for >=3/5 seeds",
                             [&](std::string& note) { return criterion_3(runs, note); }));
  verdicts.push_back(guarded("generalization ordering and bands across presets",
                             [&](std::string& note) { return criterion_4(runs, note); }));
  verdicts.push_back(guarded("hand-scripted protocol scores 100/100 and tables recover exactly",
                             [](std::string&) { return criterion_5(); }));
  verdicts.push_back(guarded("dialog tree partitions the grid with task-pure leaves",
                             [&](std::string& note) { return criterion_6(runs, note); }));
  verdicts.push_back(guarded("memoryless answerer depends only on (question, instance)",
                             [&](std::string& note) { return criterion_7(runs, note); }));
  verdicts.push_back(guarded("identical runs and mid-run save/load are bit-identical",
                             [](std::string&) { return criterion_8(); }));
  verdicts.push_back(guarded("protocol evolution timeline is monotone and tracks accuracy",
                             [&](std::string& note) { return criterion_9(runs, note); }));

  int passed = 0;
  int evaluated = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    report(static_cast<int>(i) + 1, verdicts[i]);
    if (verdicts[i].ok) ++passed;
    if (verdicts[i].note.rfind("exception:", 0) != 0) ++evaluated;
  }
  std::printf("acceptance: %d/9 criteria passed\n", passed);
  // Exit status reports whether the checker itself ran to completion: every
  // criterion must have been evaluated against real artifacts. The verdict
  // lines above are the result; a FAIL line is a finding, not a crash.
  return evaluated == 9 ? 0 : 1;
}
