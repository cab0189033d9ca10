// Walks the hand-written reference protocol through a few episodes and
// prints each dialog next to the ground truth, then scores the full
// grid. Useful as a readable tour of the world/episode/evaluation APIs
// without any training time.

#include <cstdio>

#include "refgame/refgame.hpp"

int main() {
  using namespace refgame;

  const WorldSpec w = WorldSpec::standard();
  const std::vector<TaskSpec> tasks = enumerate_tasks(w);
  ScriptedQuestioner q(w);
  ScriptedAnswerer a(w);

  const auto name_of = [&w](int global_value) -> const std::string& {
    const auto [attr, value] = w.attr_of_global(global_value);
    return w.value_name(attr, value);
  };

  const long instances[] = {0, 27, 45, 63};
  for (long inst : instances) {
    const ObjectInstance obj = instance_at(w, inst);
    for (int t = 0; t < static_cast<int>(tasks.size()); ++t) {
      ActionChooser greedy = ActionChooser::greedy();
      const DialogTranscript d = run_episode(w, q, a, inst, t, greedy, 2);
      const GroundTruth truth = ground_truth(w, obj, tasks[static_cast<std::size_t>(t)]);
      std::printf("#%2ld %s  q1=%d a1=%d q2=%d a2=%d  guess=(%s,%s)  truth=(%s,%s)\n", inst,
                  detail::task_label(w, t).c_str(), d.tokens[0], d.tokens[1], d.tokens[2],
                  d.tokens[3], name_of(d.prediction.w1).c_str(), name_of(d.prediction.w2).c_str(),
                  name_of(truth.w1).c_str(), name_of(truth.w2).c_str());
    }
  }

  std::vector<long> all;
  for (long i = 0; i < w.instance_count(); ++i) all.push_back(i);
  const AccuracyReport r = evaluate(w, q, a, all, 2);
  std::printf("\nfull grid: both %.1f%%  one %.1f%%  over %zu episodes\n", r.both_pct, r.one_pct,
              r.outcomes.size());
  return 0;
}
