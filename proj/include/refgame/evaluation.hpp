#pragma once

#include <stdexcept>
#include <vector>

#include "refgame/agents.hpp"
#include "refgame/world.hpp"

namespace refgame {

/// Result of one greedy episode during evaluation.
struct EpisodeOutcome {
  Episode episode;
  GroundTruth prediction;
  GroundTruth truth;
  bool both = false;  // exact ordered match
  bool one = false;   // at least one position correct
};

struct AccuracyReport {
  double both_pct = 0.0;
  double one_pct = 0.0;
  std::vector<EpisodeOutcome> outcomes;
};

/// Greedy rollouts over instance_set × all tasks. "Both" counts exact
/// ordered-pair predictions; "One" counts episodes with at least one
/// positionally correct value (a swapped pair scores zero on both).
inline AccuracyReport evaluate(const WorldSpec& w, Questioner& q, Answerer& a,
                               const std::vector<long>& instance_set, long rounds = 2) {
  if (instance_set.empty()) throw std::invalid_argument("evaluate: empty instance set");
  const std::vector<TaskSpec> tasks = enumerate_tasks(w);
  AccuracyReport report;
  report.outcomes.reserve(instance_set.size() * tasks.size());
  long n_both = 0, n_one = 0;
  for (long inst : instance_set) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      ActionChooser greedy = ActionChooser::greedy();
      const DialogTranscript d =
          run_episode(w, q, a, inst, static_cast<int>(t), greedy, rounds);
      EpisodeOutcome out;
      out.episode = Episode{static_cast<int>(inst), static_cast<int>(t)};
      out.prediction = d.prediction;
      out.truth = ground_truth(w, instance_at(w, inst), tasks[t]);
      out.both = out.prediction == out.truth;
      out.one = out.prediction.w1 == out.truth.w1 || out.prediction.w2 == out.truth.w2;
      n_both += out.both;
      n_one += out.one;
      report.outcomes.push_back(out);
    }
  }
  const double n = static_cast<double>(report.outcomes.size());
  report.both_pct = 100.0 * static_cast<double>(n_both) / n;
  report.one_pct = 100.0 * static_cast<double>(n_one) / n;
  return report;
}

/// (instance, task) pairs the greedy policies currently get wrong,
/// sorted — this is the curriculum pool for the next training batch.
inline std::vector<Episode> misclassified_from(const AccuracyReport& report) {
  std::vector<Episode> out;
  for (const EpisodeOutcome& o : report.outcomes)
    if (!o.both) out.push_back(o.episode);
  return out;  // outcomes are generated in sorted (instance, task) order
}

inline std::vector<Episode> find_misclassified(const WorldSpec& w, Questioner& q, Answerer& a,
                                               const std::vector<long>& train_set, long rounds = 2) {
  return misclassified_from(evaluate(w, q, a, train_set, rounds));
}

}  // namespace refgame
