#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "refgame/agents.hpp"
#include "refgame/evaluation.hpp"
#include "refgame/world.hpp"

namespace refgame {

/// Enumeration of greedy dialogs as a branching structure over token
/// choices: level 1 branches on q1, level 2 on a1, and so on for four
/// levels in the two-round game. Leaves collect the (instance, task)
/// tuples whose dialog took that path. Only visited paths are stored;
/// leaf_capacity() counts all addressable leaves.
class DialogTree {
 public:
  DialogTree(long q_vocab, long a_vocab, long rounds = 2)
      : q_vocab_(q_vocab), a_vocab_(a_vocab), rounds_(rounds) {}

  long depth() const { return 2 * rounds_; }

  long leaf_capacity() const {
    long n = 1;
    for (long r = 0; r < rounds_; ++r) n *= q_vocab_ * a_vocab_;
    return n;
  }

  void insert(const std::vector<int>& tokens, Episode e) {
    if (static_cast<long>(tokens.size()) != depth())
      throw std::invalid_argument("dialog length does not match tree depth");
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const long vocab = i % 2 == 0 ? q_vocab_ : a_vocab_;
      if (tokens[i] < 0 || tokens[i] >= vocab) throw std::out_of_range("dialog token out of vocabulary");
    }
    leaves_[tokens].push_back(e);
  }

  const std::map<std::vector<int>, std::vector<Episode>>& leaves() const { return leaves_; }

  long tuple_count() const {
    long n = 0;
    for (const auto& [path, tuples] : leaves_) n += static_cast<long>(tuples.size());
    return n;
  }

  /// All tuples whose dialog starts with `prefix` (the tuples of an
  /// internal node; empty prefix = root).
  std::vector<Episode> tuples_at(const std::vector<int>& prefix) const {
    std::vector<Episode> out;
    for (const auto& [path, tuples] : leaves_)
      if (prefix.size() <= path.size() && std::equal(prefix.begin(), prefix.end(), path.begin()))
        out.insert(out.end(), tuples.begin(), tuples.end());
    return out;
  }

  /// Every non-empty node at depths 1..depth, shallowest first, paths
  /// in lexicographic order within a depth.
  std::vector<std::vector<int>> nonempty_nodes() const {
    std::set<std::vector<int>> seen;
    for (const auto& [path, tuples] : leaves_)
      for (std::size_t d = 1; d <= path.size(); ++d)
        seen.insert(std::vector<int>(path.begin(), path.begin() + static_cast<long>(d)));
    std::vector<std::vector<int>> out(seen.begin(), seen.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
      return x.size() != y.size() ? x.size() < y.size() : x < y;
    });
    return out;
  }

 private:
  long q_vocab_;
  long a_vocab_;
  long rounds_;
  std::map<std::vector<int>, std::vector<Episode>> leaves_;
};

/// Greedy dialogs for every (instance, task) pair, each stored at the
/// leaf addressed by its token sequence.
inline DialogTree build_dialog_tree(const WorldSpec& w, Questioner& q, Answerer& a,
                                    const std::vector<long>& instance_set,
                                    const std::vector<int>& task_indices, const AgentConfig& cfg) {
  DialogTree tree(cfg.q_vocab, cfg.a_vocab, cfg.rounds);
  for (long inst : instance_set) {
    for (int t : task_indices) {
      ActionChooser greedy = ActionChooser::greedy();
      const DialogTranscript d = run_episode(w, q, a, inst, t, greedy, cfg.rounds);
      tree.insert(d.tokens, Episode{static_cast<int>(inst), t});
    }
  }
  return tree;
}

/// Most specific pattern covering a set of tuples: one slot per
/// attribute (fixed value or wildcard) plus the shared task. Tuples
/// spanning several tasks have no concept (invalid marker).
struct Concept {
  std::vector<int> slots;  // per attribute: value index, or -1 for wildcard
  int task = -1;

  bool valid() const { return task >= 0; }

  bool matches(const WorldSpec& w, const Episode& e) const {
    if (e.task != task) return false;
    const ObjectInstance inst = instance_at(w, e.instance);
    for (std::size_t a = 0; a < slots.size(); ++a)
      if (slots[a] >= 0 && inst.values[a] != slots[a]) return false;
    return true;
  }

  std::string to_string(const WorldSpec& w, const std::vector<TaskSpec>& tasks) const {
    if (!valid()) return "(none)";
    std::string s = "(";
    for (std::size_t a = 0; a < slots.size(); ++a) {
      s += slots[a] < 0 ? "*" : w.value_name(static_cast<long>(a), slots[a]);
      s += ", ";
    }
    const TaskSpec& t = tasks[static_cast<std::size_t>(task)];
    s += w.attribute_names[static_cast<std::size_t>(t.first)] + ", " +
         w.attribute_names[static_cast<std::size_t>(t.second)] + ")";
    return s;
  }
};

inline Concept leaf_concept(const WorldSpec& w, const std::vector<Episode>& tuples) {
  Concept c;
  if (tuples.empty()) return c;
  c.task = tuples.front().task;
  c.slots = instance_at(w, tuples.front().instance).values;
  for (const Episode& e : tuples) {
    if (e.task != c.task) return Concept{};  // mixed tasks: no single concept
    const ObjectInstance inst = instance_at(w, e.instance);
    for (std::size_t a = 0; a < c.slots.size(); ++a)
      if (c.slots[a] >= 0 && inst.values[a] != c.slots[a]) c.slots[a] = -1;
  }
  return c;
}

/// A node is pure when every tuple currently assigned to it matches the
/// concept it ends up with after training. Empty nodes are vacuously
/// pure; a node whose final tuples had no concept is pure only when
/// empty.
inline bool is_pure(const WorldSpec& w, const std::vector<Episode>& tuples, const Concept& final_concept) {
  if (!final_concept.valid()) return tuples.empty();
  for (const Episode& e : tuples)
    if (!final_concept.matches(w, e)) return false;
  return true;
}

struct EvolutionRecord {
  std::vector<int> path;   // token prefix addressing the node
  Concept pattern;         // the node's final concept
  long purity_index = 0;   // earliest checkpoint index pure from then on
};

/// For every non-empty node of the final tree, finds the earliest
/// checkpoint from which the node holds only tuples matching its final
/// concept at every later checkpoint too. The final tree should be the
/// last element of `checkpoints` so the search is anchored.
inline std::vector<EvolutionRecord> backtrack_evolution(const WorldSpec& w,
                                                        const std::vector<DialogTree>& checkpoints,
                                                        const DialogTree& final_tree) {
  if (checkpoints.empty()) throw std::invalid_argument("backtrack_evolution: no checkpoints");
  std::vector<EvolutionRecord> records;
  for (const std::vector<int>& path : final_tree.nonempty_nodes()) {
    const Concept pattern = leaf_concept(w, final_tree.tuples_at(path));
    if (!pattern.valid()) continue;  // node mixes tasks; no single grounding to track
    long pure_from = static_cast<long>(checkpoints.size());
    for (long k = static_cast<long>(checkpoints.size()) - 1; k >= 0; --k) {
      if (!is_pure(w, checkpoints[static_cast<std::size_t>(k)].tuples_at(path), pattern)) break;
      pure_from = k;
    }
    if (pure_from == static_cast<long>(checkpoints.size()))
      continue;  // impure even at the last checkpoint: nothing stable to report
    EvolutionRecord rec;
    rec.path = path;
    rec.pattern = pattern;
    rec.purity_index = pure_from;
    records.push_back(std::move(rec));
  }
  return records;
}

// ---- grounding extraction ----

struct QbotGroundingRow {
  int task = 0;
  int q1 = 0;
  int q2 = 0;
  bool consistent = false;  // q2 identical across all observed first answers
};

struct AbotGroundingRow {
  int question = 0;
  int attribute = -1;                // -1 when inconsistent
  std::vector<int> value_to_token;   // per value of `attribute`
  bool consistent = false;           // answer is a function of exactly one attribute
  bool injective = false;            // distinct values get distinct tokens
};

struct GroundingTable {
  std::vector<QbotGroundingRow> qbot;
  std::vector<AbotGroundingRow> abot;
};

/// Reads the emergent protocol off greedy play. Questioner side: q1 per
/// task, and q2 probed across every first answer observed over all
/// instances (consistent when unique). Answerer side: probe every
/// (question token, instance) pair from a fresh state and test whether
/// the answer is determined by a single attribute's value.
inline GroundingTable extract_grounding_tables(const WorldSpec& w, Questioner& q, Answerer& a,
                                               const AgentConfig& cfg) {
  GroundingTable table;
  const std::vector<TaskSpec> tasks = enumerate_tasks(w);
  const long n_inst = w.instance_count();

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    QbotGroundingRow row;
    row.task = static_cast<int>(t);
    std::map<int, long> q2_by_token;
    int first_q1 = -1;
    for (long inst = 0; inst < n_inst; ++inst) {
      ActionChooser greedy = ActionChooser::greedy();
      q.begin(static_cast<int>(t));
      a.begin(inst);
      const Action q1 = q.ask(greedy);
      const Action a1 = a.answer(q1.token, greedy);
      q.hear(q1.token, a1.token);
      const Action q2 = q.ask(greedy);
      first_q1 = q1.token;  // constant across instances: asked before any input
      ++q2_by_token[q2.token];
    }
    row.q1 = first_q1;
    // modal q2; lowest token wins ties (map order)
    long best = -1;
    for (const auto& [token, count] : q2_by_token)
      if (count > best) {
        best = count;
        row.q2 = token;
      }
    row.consistent = q2_by_token.size() == 1;
    table.qbot.push_back(row);
  }

  for (int qt = 0; qt < cfg.q_vocab; ++qt) {
    AbotGroundingRow row;
    row.question = qt;
    std::vector<int> answers(static_cast<std::size_t>(n_inst));
    for (long inst = 0; inst < n_inst; ++inst) {
      ActionChooser greedy = ActionChooser::greedy();
      a.begin(inst);
      answers[static_cast<std::size_t>(inst)] = a.answer(qt, greedy).token;
    }
    std::vector<long> determining;
    std::vector<std::vector<int>> maps;
    for (long attr = 0; attr < w.attrs(); ++attr) {
      std::vector<int> value_token(static_cast<std::size_t>(w.values(attr)), -1);
      bool functional = true;
      for (long inst = 0; inst < n_inst && functional; ++inst) {
        const int v = instance_at(w, inst).values[static_cast<std::size_t>(attr)];
        int& slot = value_token[static_cast<std::size_t>(v)];
        if (slot < 0)
          slot = answers[static_cast<std::size_t>(inst)];
        else if (slot != answers[static_cast<std::size_t>(inst)])
          functional = false;
      }
      if (functional) {
        determining.push_back(attr);
        maps.push_back(std::move(value_token));
      }
    }
    if (determining.size() == 1) {
      row.consistent = true;
      row.attribute = static_cast<int>(determining.front());
      row.value_to_token = maps.front();
      std::vector<int> sorted = row.value_to_token;
      std::sort(sorted.begin(), sorted.end());
      row.injective = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    }
    table.abot.push_back(row);
  }
  return table;
}

}  // namespace refgame
