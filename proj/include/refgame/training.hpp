#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "refgame/agents.hpp"
#include "refgame/evaluation.hpp"
#include "refgame/optim.hpp"
#include "refgame/world.hpp"

namespace refgame {

enum class ClipMode { value, norm };

struct TrainerConfig {
  long batch_size = 1000;
  double learning_rate = 0.01;
  double clip_bound = 5.0;
  double reward_correct = 1.0;
  double reward_wrong = -10.0;
  long max_epochs = 1000;
  long eval_every = 1;  // held-out evaluation cadence, in iterations
  std::uint64_t seed = 0;
  // elementwise clamp is the default reading of the clip bound; the
  // global-norm alternative stays available behind this switch
  ClipMode clip_mode = ClipMode::value;
  // subtracting the previous batch's mean reward is optional and off
  // by default: plain score-function gradients are the baseline-free
  // reference behavior
  bool use_baseline = false;
  long converge_patience = 10;   // consecutive 100%-train iterations to stop
  long checkpoint_every = 5;     // snapshot cadence for evolution analysis
};

struct MetricRecord {
  long iteration = 0;
  double train_both = 0.0;
  double train_one = 0.0;
  double test_both = 0.0;
  double test_one = 0.0;
  double mean_reward = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything one training run owns: both policies, their optimizers,
/// the split, the curriculum pool, the batch-composition rng, and the
/// metric history. Checkpoints capture all of it.
struct TrainingState {
  WorldSpec world;
  AgentConfig agent_cfg;
  TrainerConfig cfg;
  QBotAgent qbot;
  ABotAgent abot;
  Adam q_opt;
  Adam a_opt;
  DatasetSplit split;
  std::vector<Episode> misclassified;
  std::vector<MetricRecord> history;
  long iteration = 0;
  Rng master;           // drives batch composition only
  double baseline = 0.0;

  TrainingState(WorldSpec w, AgentConfig acfg, TrainerConfig tcfg)
      : world(w),
        agent_cfg(acfg),
        cfg(tcfg),
        qbot(w, acfg),
        abot(w, acfg),
        q_opt(AdamConfig{tcfg.learning_rate}),
        a_opt(AdamConfig{tcfg.learning_rate}),
        master(Rng::substream(tcfg.seed, kBatchStreamTag, 0)) {}

  /// Distinct stream tags so batch composition, parameter init, and the
  /// dataset split never share randomness (episode streams use small
  /// epoch numbers).
  static constexpr std::uint64_t kBatchStreamTag = ~0ull - 1;
  static constexpr std::uint64_t kInitStreamTag = ~0ull - 2;

  /// Fresh run: draw the split and initialize both parameter sets.
  void initialize() {
    split = split_dataset(world, cfg.seed);
    Rng q_rng = Rng::substream(cfg.seed, kInitStreamTag, 0);
    Rng a_rng = Rng::substream(cfg.seed, kInitStreamTag, 1);
    qbot.init_params(q_rng);
    abot.init_params(a_rng);
    misclassified.clear();
    history.clear();
    iteration = 0;
    baseline = 0.0;
    master = Rng::substream(cfg.seed, kBatchStreamTag, 0);
  }
};

/// Replays a finished episode through both policy graphs with its
/// recorded tokens and accumulates each agent's score-function gradient
/// of −R·Σ log π into that agent's parameter store. Each policy's loss
/// touches only its own actions and parameters; the partner is part of
/// the environment.
inline void episode_gradient(TrainingState& s, const DialogTranscript& t,
                             double reward_offset = 0.0) {
  const long expected = 2 * s.agent_cfg.rounds + 2;
  if (static_cast<long>(t.log_probs.size()) != expected ||
      static_cast<long>(t.tokens.size()) != 2 * s.agent_cfg.rounds)
    throw std::invalid_argument("episode_gradient: transcript is missing actions");
  const double r = t.reward - reward_offset;

  // Questioner replay: questions and both guesses are forced.
  std::vector<int> q_actions;
  for (long i = 0; i < s.agent_cfg.rounds; ++i) q_actions.push_back(t.tokens[static_cast<std::size_t>(2 * i)]);
  q_actions.push_back(t.prediction.w1);
  q_actions.push_back(t.prediction.w2);
  ActionChooser q_chooser = ActionChooser::forced(q_actions);
  s.qbot.begin(t.task);
  for (long i = 0; i < s.agent_cfg.rounds; ++i) {
    const Action qa = s.qbot.ask(q_chooser);
    s.qbot.hear(qa.token, t.tokens[static_cast<std::size_t>(2 * i + 1)]);
  }
  s.qbot.predict(t.task, q_chooser);
  s.qbot.reinforce(r);

  // Answerer replay: answers are forced, questions are inputs.
  std::vector<int> a_actions;
  for (long i = 0; i < s.agent_cfg.rounds; ++i) a_actions.push_back(t.tokens[static_cast<std::size_t>(2 * i + 1)]);
  ActionChooser a_chooser = ActionChooser::forced(a_actions);
  s.abot.begin(t.instance);
  for (long i = 0; i < s.agent_cfg.rounds; ++i)
    s.abot.answer(t.tokens[static_cast<std::size_t>(2 * i)], a_chooser);
  s.abot.reinforce(r);
}

namespace detail {

inline void finish_gradient(ParamStore& params, const GradBuffer& total, long batch_size,
                            const TrainerConfig& cfg, Adam& opt) {
  total.write_to(params);
  scale_grads(params, 1.0 / static_cast<double>(batch_size));
  if (cfg.clip_mode == ClipMode::value)
    clip_grads_value(params, cfg.clip_bound);
  else
    clip_grads_norm(params, cfg.clip_bound);
  opt.step(params);
}

}  // namespace detail

/// One parameter update: sample a batch (80% from the curriculum pool),
/// roll out every episode with sampled actions, average both agents'
/// episode gradients, clip, take one Adam step per agent, then refresh
/// the curriculum pool and metrics from greedy evaluation.
///
/// Episode gradients are reduced in fixed chunks of 125 in episode
/// order, so the floating-point sum is identical no matter how rollouts
/// are scheduled.
inline void train_iteration(TrainingState& s) {
  const std::vector<TaskSpec> tasks = enumerate_tasks(s.world);
  const std::vector<Episode> batch = sample_training_batch(
      s.split, static_cast<long>(tasks.size()), s.misclassified, s.master, s.cfg.batch_size);
  ++s.iteration;

  s.qbot.params().zero_grads();
  s.abot.params().zero_grads();
  GradBuffer q_chunk(s.qbot.params()), q_total(s.qbot.params());
  GradBuffer a_chunk(s.abot.params()), a_total(s.abot.params());
  constexpr long kChunk = 125;

  double reward_sum = 0.0;
  const double offset = s.cfg.use_baseline ? s.baseline : 0.0;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    Rng episode_rng = Rng::substream(s.cfg.seed, static_cast<std::uint64_t>(s.iteration),
                                     static_cast<std::uint64_t>(e));
    ActionChooser chooser = ActionChooser::sampling(episode_rng);
    const DialogTranscript t =
        run_episode(s.world, s.qbot, s.abot, batch[e].instance, batch[e].task, chooser,
                    s.agent_cfg.rounds, s.cfg.reward_correct, s.cfg.reward_wrong);
    reward_sum += t.reward;
    // The rollout graphs already hold this episode's actions; turn them
    // straight into gradients.
    s.qbot.reinforce(t.reward - offset);
    s.abot.reinforce(t.reward - offset);
    q_chunk.add_from(s.qbot.params());
    a_chunk.add_from(s.abot.params());
    s.qbot.params().zero_grads();
    s.abot.params().zero_grads();
    if ((e + 1) % kChunk == 0 || e + 1 == batch.size()) {
      q_total.add(q_chunk);
      a_total.add(a_chunk);
      q_chunk.zero();
      a_chunk.zero();
    }
  }

  detail::finish_gradient(s.qbot.params(), q_total, s.cfg.batch_size, s.cfg, s.q_opt);
  detail::finish_gradient(s.abot.params(), a_total, s.cfg.batch_size, s.cfg, s.a_opt);
  if (!s.qbot.params().values_finite() || !s.abot.params().values_finite())
    throw TrainingDiverged("non-finite parameters after iteration " + std::to_string(s.iteration));

  const double mean_reward = reward_sum / static_cast<double>(batch.size());
  if (s.cfg.use_baseline) s.baseline = mean_reward;

  const AccuracyReport train_report =
      evaluate(s.world, s.qbot, s.abot, s.split.train, s.agent_cfg.rounds);
  s.misclassified = misclassified_from(train_report);

  MetricRecord rec;
  rec.iteration = s.iteration;
  rec.train_both = train_report.both_pct;
  rec.train_one = train_report.one_pct;
  rec.mean_reward = mean_reward;
  if (s.iteration % s.cfg.eval_every == 0 || s.history.empty()) {
    const AccuracyReport test_report =
        evaluate(s.world, s.qbot, s.abot, s.split.test, s.agent_cfg.rounds);
    rec.test_both = test_report.both_pct;
    rec.test_one = test_report.one_pct;
  } else {
    rec.test_both = s.history.back().test_both;
    rec.test_one = s.history.back().test_one;
  }
  s.history.push_back(rec);
}

/// True once train accuracy has been perfect for the configured number
/// of consecutive iterations.
inline bool converged(const TrainingState& s) {
  if (static_cast<long>(s.history.size()) < s.cfg.converge_patience) return false;
  for (long i = 0; i < s.cfg.converge_patience; ++i)
    if (s.history[s.history.size() - 1 - static_cast<std::size_t>(i)].train_both < 100.0) return false;
  return true;
}

/// Runs until convergence or max_epochs. `on_checkpoint` (optional) is
/// called every checkpoint_every iterations and once at the end.
inline void train(TrainingState& s,
                  const std::function<void(const TrainingState&)>& on_checkpoint = nullptr) {
  while (s.iteration < s.cfg.max_epochs && !converged(s)) {
    train_iteration(s);
    if (on_checkpoint && (s.iteration % s.cfg.checkpoint_every == 0)) on_checkpoint(s);
  }
  if (on_checkpoint && (s.iteration % s.cfg.checkpoint_every != 0)) on_checkpoint(s);
}

}  // namespace refgame
