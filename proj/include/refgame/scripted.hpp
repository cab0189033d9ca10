#pragma once

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "refgame/agents.hpp"
#include "refgame/world.hpp"

namespace refgame {

/// Fixed compositional protocol for the standard 3×4 world with
/// question vocabulary size 3 and answer vocabulary size 4:
///   - question token t asks for attribute t (0=color, 1=shape, 2=style);
///   - answer token v names value index v of the queried attribute;
///   - each task elicits a fixed question pair, chosen so symmetric
///     tasks share questions and the asking order need not follow the
///     task order (the questioner re-orders at prediction time).
/// Used as a ground-truth language: scripted agents speaking it solve
/// every episode, and analysis code must recover these exact tables.
struct ScriptedLanguage {
  static int attribute_of_question(int q_token) { return q_token; }
  static int value_of_answer(int a_token) { return a_token; }

  /// Question pair (q1, q2) per task, keyed by attribute indices.
  static std::pair<int, int> questions_for(const TaskSpec& task) {
    static const std::map<std::pair<int, int>, std::pair<int, int>> table = {
        {{0, 1}, {1, 0}},  // (color, shape) -> shape, color
        {{1, 0}, {1, 0}},  // (shape, color) -> shape, color
        {{1, 2}, {1, 2}},  // (shape, style) -> shape, style
        {{2, 1}, {1, 2}},  // (style, shape) -> shape, style
        {{0, 2}, {2, 0}},  // (color, style) -> style, color
        {{2, 0}, {0, 2}},  // (style, color) -> color, style
    };
    const auto it = table.find({task.first, task.second});
    if (it == table.end()) throw std::out_of_range("no scripted questions for this task");
    return it->second;
  }
};

/// Deterministic questioner speaking ScriptedLanguage. Ignores the
/// chooser (its "distribution" is a point mass, log-prob 0) and keeps
/// the heard answers so the prediction can re-order them per the task.
class ScriptedQuestioner : public Questioner {
 public:
  explicit ScriptedQuestioner(WorldSpec world) : world_(std::move(world)), tasks_(enumerate_tasks(world_)) {}

  void begin(int task_index) override {
    task_ = tasks_.at(static_cast<std::size_t>(task_index));
    questions_ = ScriptedLanguage::questions_for(task_);
    asked_ = 0;
    value_by_attr_.assign(static_cast<std::size_t>(world_.attrs()), -1);
  }

  Action ask(ActionChooser&) override {
    if (asked_ >= 2) throw std::logic_error("scripted questioner only asks twice");
    const int q = asked_ == 0 ? questions_.first : questions_.second;
    ++asked_;
    return {q, 0.0};
  }

  void hear(int q_token, int a_token) override {
    value_by_attr_.at(static_cast<std::size_t>(ScriptedLanguage::attribute_of_question(q_token))) =
        ScriptedLanguage::value_of_answer(a_token);
  }

  std::pair<Action, Action> predict(int task_index, ActionChooser&) override {
    const TaskSpec& task = tasks_.at(static_cast<std::size_t>(task_index));
    const auto guess = [&](int attr) {
      const int value = value_by_attr_.at(static_cast<std::size_t>(attr));
      if (value < 0) throw std::logic_error("scripted questioner never heard about this attribute");
      return Action{static_cast<int>(world_.global_value_id(attr, value)), 0.0};
    };
    return {guess(task.first), guess(task.second)};
  }

 private:
  WorldSpec world_;
  std::vector<TaskSpec> tasks_;
  TaskSpec task_{};
  std::pair<int, int> questions_{};
  int asked_ = 0;
  std::vector<int> value_by_attr_;
};

/// Deterministic answerer speaking ScriptedLanguage: the answer token
/// is the object's value index for the queried attribute.
class ScriptedAnswerer : public Answerer {
 public:
  explicit ScriptedAnswerer(WorldSpec world) : world_(std::move(world)) {}

  void begin(long instance_index) override { instance_ = instance_at(world_, instance_index); }

  Action answer(int q_token, ActionChooser&) override {
    const int attr = ScriptedLanguage::attribute_of_question(q_token);
    if (attr < 0 || attr >= world_.attrs()) throw std::out_of_range("question token out of vocabulary");
    return {instance_.values.at(static_cast<std::size_t>(attr)), 0.0};
  }

 private:
  WorldSpec world_;
  ObjectInstance instance_{};
};

}  // namespace refgame
