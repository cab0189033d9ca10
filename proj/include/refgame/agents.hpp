#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "refgame/graph.hpp"
#include "refgame/lstm.hpp"
#include "refgame/params.hpp"
#include "refgame/sampling.hpp"
#include "refgame/world.hpp"

namespace refgame {

struct AgentConfig {
  long q_vocab = 3;
  long a_vocab = 4;
  long token_embed_dim = 20;
  long hidden_dim = 50;
  long attr_embed_dim = 20;
  long rounds = 2;
  bool memoryless_abot = false;
};

/// One chosen action: the emitted token and the log-probability the
/// acting policy assigned to it.
struct Action {
  int token = 0;
  double log_prob = 0.0;
};

/// Decoding strategy threaded through a rollout. `forced` replays a
/// fixed token sequence (consumed in action order) while still reading
/// off each action's log-probability — that is what turns a recorded
/// episode back into a differentiable loss.
class ActionChooser {
 public:
  static ActionChooser greedy() { return ActionChooser(Mode::greedy); }
  static ActionChooser sampling(Rng& rng) {
    ActionChooser c(Mode::sample);
    c.rng_ = &rng;
    return c;
  }
  static ActionChooser forced(std::vector<int> actions) {
    ActionChooser c(Mode::forced);
    c.forced_ = std::move(actions);
    return c;
  }

  Action choose(const Tensor& probs) {
    switch (mode_) {
      case Mode::greedy: {
        const CategoricalDraw d = greedy_draw(probs);
        return {d.index, d.log_prob};
      }
      case Mode::sample: {
        const CategoricalDraw d = sample_categorical(probs, *rng_);
        return {d.index, d.log_prob};
      }
      case Mode::forced: {
        if (cursor_ >= forced_.size()) throw std::out_of_range("forced action list exhausted");
        const int t = forced_[cursor_++];
        if (t < 0 || t >= probs.size()) throw std::out_of_range("forced action out of vocabulary");
        return {t, std::log(probs[t])};
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  enum class Mode { greedy, sample, forced };
  explicit ActionChooser(Mode m) : mode_(m) {}

  Mode mode_;
  Rng* rng_ = nullptr;
  std::vector<int> forced_;
  std::size_t cursor_ = 0;
};

/// The questioner knows the task but never sees the object.
class Questioner {
 public:
  virtual ~Questioner() = default;
  virtual void begin(int task_index) = 0;
  virtual Action ask(ActionChooser& chooser) = 0;
  virtual void hear(int q_token, int a_token) = 0;
  virtual std::pair<Action, Action> predict(int task_index, ActionChooser& chooser) = 0;
};

/// The answerer sees the object but never learns the task.
class Answerer {
 public:
  virtual ~Answerer() = default;
  virtual void begin(long instance_index) = 0;
  virtual Action answer(int q_token, ActionChooser& chooser) = 0;
};

/// Recurrent questioner policy. A listener cell ingests the task and
/// each (question, answer) exchange; a separate prediction cell, seeded
/// with the listener's final state and driven by the task one-hot,
/// emits the two value guesses. All six of its actions (two questions
/// in the default game, two guesses) record log-prob graph nodes so an
/// episode can be turned into a scalar loss afterwards.
class QBotAgent : public Questioner {
 public:
  QBotAgent(WorldSpec world, AgentConfig cfg)
      : world_(std::move(world)), cfg_(cfg), task_count_(static_cast<long>(enumerate_tasks(world_).size())) {
    params_.add("task_embed", {task_count_, 2 * cfg_.token_embed_dim});
    params_.add("token_embed", {cfg_.q_vocab + cfg_.a_vocab, cfg_.token_embed_dim});
    register_lstm(params_, "listen", 2 * cfg_.token_embed_dim, cfg_.hidden_dim);
    register_lstm(params_, "predict", task_count_, cfg_.hidden_dim);
    params_.add("speak.w", {cfg_.q_vocab, cfg_.hidden_dim});
    params_.add("speak.b", {cfg_.q_vocab});
    params_.add("guess.w", {world_.value_symbol_count(), cfg_.hidden_dim});
    params_.add("guess.b", {world_.value_symbol_count()});
  }

  void init_params(Rng& rng) { xavier_init(params_, rng); }

  const WorldSpec& world() const { return world_; }
  const AgentConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  Graph& graph() { return g_; }
  const std::vector<NodeId>& action_log_nodes() const { return log_nodes_; }

  void begin(int task_index) override {
    if (task_index < 0 || task_index >= task_count_) throw std::out_of_range("task index out of range");
    g_.reset();
    bind();
    log_nodes_.clear();
    state_ = lstm_zero_state(g_, cfg_.hidden_dim);
    state_ = lstm_step(g_, listen_, g_.embed(task_embed_, task_index), state_);
  }

  Action ask(ActionChooser& chooser) override {
    const NodeId probs = g_.softmax(g_.affine(speak_w_, state_.h, speak_b_));
    const Action act = chooser.choose(g_.value(probs));
    log_nodes_.push_back(g_.select(g_.log(probs), act.token));
    return act;
  }

  void hear(int q_token, int a_token) override {
    check_tokens(q_token, a_token);
    const NodeId x = g_.concat({g_.embed(token_embed_, q_token),
                                g_.embed(token_embed_, static_cast<int>(cfg_.q_vocab) + a_token)});
    state_ = lstm_step(g_, listen_, x, state_);
  }

  std::pair<Action, Action> predict(int task_index, ActionChooser& chooser) override {
    Tensor onehot(std::vector<long>{task_count_});
    onehot[task_index] = 1.0;
    const NodeId x = g_.constant(std::move(onehot));
    LstmState s = state_;
    Action first, second;
    for (int step = 0; step < 2; ++step) {
      s = lstm_step(g_, predict_, x, s);
      const NodeId probs = g_.softmax(g_.affine(guess_w_, s.h, guess_b_));
      const Action act = chooser.choose(g_.value(probs));
      log_nodes_.push_back(g_.select(g_.log(probs), act.token));
      (step == 0 ? first : second) = act;
    }
    return {first, second};
  }

  /// Scalar loss −R·Σ log π over this episode's recorded actions.
  NodeId build_loss(double reward_value) {
    if (log_nodes_.empty()) throw std::logic_error("no recorded actions in this episode");
    NodeId s = log_nodes_[0];
    for (std::size_t i = 1; i < log_nodes_.size(); ++i) s = g_.add(s, log_nodes_[i]);
    return g_.mul(g_.scalar(-reward_value), s);
  }

  /// Accumulates this episode's policy gradient into the param store.
  void reinforce(double reward_value) { g_.backward(build_loss(reward_value)); }

 private:
  void bind() {
    task_embed_ = p("task_embed");
    token_embed_ = p("token_embed");
    speak_w_ = p("speak.w");
    speak_b_ = p("speak.b");
    guess_w_ = p("guess.w");
    guess_b_ = p("guess.b");
    listen_ = bind_lstm(g_, params_, "listen");
    predict_ = bind_lstm(g_, params_, "predict");
  }

  NodeId p(const std::string& name) {
    return g_.param(&params_.value(name), &params_.grad(name), name);
  }

  void check_tokens(int q_token, int a_token) const {
    if (q_token < 0 || q_token >= cfg_.q_vocab) throw std::out_of_range("question token out of vocabulary");
    if (a_token < 0 || a_token >= cfg_.a_vocab) throw std::out_of_range("answer token out of vocabulary");
  }

  WorldSpec world_;
  AgentConfig cfg_;
  long task_count_;
  ParamStore params_;
  Graph g_;
  NodeId task_embed_ = -1, token_embed_ = -1;
  NodeId speak_w_ = -1, speak_b_ = -1, guess_w_ = -1, guess_b_ = -1;
  LstmParams listen_{}, predict_{};
  LstmState state_{};
  std::vector<NodeId> log_nodes_;
};

/// Recurrent answerer policy. The object is encoded once per episode by
/// concatenating one embedding per attribute value; every listener step
/// sees that encoding next to the current token, keeping answers
/// conditioned on the object. After speaking, the listener also encodes
/// the emitted answer so the next round's state reflects it. In
/// memoryless mode the state is wiped before each question, making the
/// answer a pure function of (question, object).
class ABotAgent : public Answerer {
 public:
  ABotAgent(WorldSpec world, AgentConfig cfg) : world_(std::move(world)), cfg_(cfg) {
    for (long a = 0; a < world_.attrs(); ++a)
      params_.add("attr_embed." + std::to_string(a), {world_.values(a), cfg_.attr_embed_dim});
    params_.add("token_embed", {cfg_.q_vocab + cfg_.a_vocab, cfg_.token_embed_dim});
    register_lstm(params_, "listen", cfg_.token_embed_dim + world_.attrs() * cfg_.attr_embed_dim,
                  cfg_.hidden_dim);
    params_.add("speak.w", {cfg_.a_vocab, cfg_.hidden_dim});
    params_.add("speak.b", {cfg_.a_vocab});
  }

  void init_params(Rng& rng) { xavier_init(params_, rng); }

  const WorldSpec& world() const { return world_; }
  const AgentConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  Graph& graph() { return g_; }
  const std::vector<NodeId>& action_log_nodes() const { return log_nodes_; }

  void begin(long instance_index) override {
    if (instance_index < 0 || instance_index >= world_.instance_count())
      throw std::out_of_range("instance index out of range");
    g_.reset();
    bind();
    log_nodes_.clear();
    const ObjectInstance inst = instance_at(world_, instance_index);
    std::vector<NodeId> parts;
    for (long a = 0; a < world_.attrs(); ++a)
      parts.push_back(g_.embed(attr_embed_[static_cast<std::size_t>(a)],
                               inst.values[static_cast<std::size_t>(a)]));
    instance_enc_ = g_.concat(parts);
    zero_ = lstm_zero_state(g_, cfg_.hidden_dim);
    state_ = zero_;
  }

  Action answer(int q_token, ActionChooser& chooser) override {
    if (q_token < 0 || q_token >= cfg_.q_vocab) throw std::out_of_range("question token out of vocabulary");
    if (cfg_.memoryless_abot) state_ = zero_;
    state_ = lstm_step(g_, listen_, g_.concat({g_.embed(token_embed_, q_token), instance_enc_}), state_);
    const NodeId probs = g_.softmax(g_.affine(speak_w_, state_.h, speak_b_));
    const Action act = chooser.choose(g_.value(probs));
    log_nodes_.push_back(g_.select(g_.log(probs), act.token));
    state_ = lstm_step(
        g_, listen_,
        g_.concat({g_.embed(token_embed_, static_cast<int>(cfg_.q_vocab) + act.token), instance_enc_}),
        state_);
    return act;
  }

  NodeId build_loss(double reward_value) {
    if (log_nodes_.empty()) throw std::logic_error("no recorded actions in this episode");
    NodeId s = log_nodes_[0];
    for (std::size_t i = 1; i < log_nodes_.size(); ++i) s = g_.add(s, log_nodes_[i]);
    return g_.mul(g_.scalar(-reward_value), s);
  }

  void reinforce(double reward_value) { g_.backward(build_loss(reward_value)); }

 private:
  void bind() {
    attr_embed_.clear();
    for (long a = 0; a < world_.attrs(); ++a) attr_embed_.push_back(p("attr_embed." + std::to_string(a)));
    token_embed_ = p("token_embed");
    speak_w_ = p("speak.w");
    speak_b_ = p("speak.b");
    listen_ = bind_lstm(g_, params_, "listen");
  }

  NodeId p(const std::string& name) {
    return g_.param(&params_.value(name), &params_.grad(name), name);
  }

  WorldSpec world_;
  AgentConfig cfg_;
  ParamStore params_;
  Graph g_;
  std::vector<NodeId> attr_embed_;
  NodeId token_embed_ = -1, speak_w_ = -1, speak_b_ = -1;
  NodeId instance_enc_ = -1;
  LstmParams listen_{};
  LstmState zero_{}, state_{};
  std::vector<NodeId> log_nodes_;
};

/// Full episode record: what was said, how likely each action was, and
/// how the final guess scored.
struct DialogTranscript {
  int task = 0;
  long instance = 0;
  std::vector<int> tokens;        // q1, a1, q2, a2, ...
  std::vector<double> log_probs;  // one per action: questions/answers in order, then both guesses
  GroundTruth prediction;
  double reward = 0.0;
};

/// Plays one game: alternating question/answer rounds (questioner also
/// re-hears each exchange), then the two-value prediction, then reward
/// against ground truth. The chooser is consulted in action order
/// q1, a1, q2, a2, guess1, guess2.
inline DialogTranscript run_episode(const WorldSpec& w, Questioner& q, Answerer& a,
                                    long instance_index, int task_index, ActionChooser& chooser,
                                    long rounds = 2, double reward_correct = 1.0,
                                    double reward_wrong = -10.0) {
  DialogTranscript t;
  t.task = task_index;
  t.instance = instance_index;
  q.begin(task_index);
  a.begin(instance_index);
  for (long r = 0; r < rounds; ++r) {
    const Action qa = q.ask(chooser);
    const Action aa = a.answer(qa.token, chooser);
    q.hear(qa.token, aa.token);
    t.tokens.push_back(qa.token);
    t.tokens.push_back(aa.token);
    t.log_probs.push_back(qa.log_prob);
    t.log_probs.push_back(aa.log_prob);
  }
  const auto [g1, g2] = q.predict(task_index, chooser);
  t.log_probs.push_back(g1.log_prob);
  t.log_probs.push_back(g2.log_prob);
  t.prediction = GroundTruth{g1.token, g2.token};
  const TaskSpec task = enumerate_tasks(w)[static_cast<std::size_t>(task_index)];
  const GroundTruth truth = ground_truth(w, instance_at(w, instance_index), task);
  t.reward = reward(t.prediction, truth, reward_correct, reward_wrong);
  return t;
}

}  // namespace refgame
