#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "refgame/rng.hpp"

namespace refgame {

/// Attribute/value layout of the object world. The default game has
/// three attributes with four values each; a reduced build is used by
/// tests that need exhaustive enumeration to stay tiny.
struct WorldSpec {
  std::vector<std::string> attribute_names;
  std::vector<std::vector<std::string>> value_names;  // per attribute

  long attrs() const { return static_cast<long>(attribute_names.size()); }
  long values(long attr) const { return static_cast<long>(value_names[static_cast<std::size_t>(attr)].size()); }

  long instance_count() const {
    long n = 1;
    for (long a = 0; a < attrs(); ++a) n *= values(a);
    return n;
  }

  /// Total distinct value symbols across attributes (prediction classes).
  long value_symbol_count() const {
    long n = 0;
    for (long a = 0; a < attrs(); ++a) n += values(a);
    return n;
  }

  /// First global value id of an attribute's block.
  long value_offset(long attr) const {
    long off = 0;
    for (long a = 0; a < attr; ++a) off += values(a);
    return off;
  }

  long global_value_id(long attr, long value) const { return value_offset(attr) + value; }

  std::pair<long, long> attr_of_global(long id) const {
    for (long a = 0; a < attrs(); ++a) {
      if (id < values(a)) return {a, id};
      id -= values(a);
    }
    throw std::out_of_range("global value id out of range");
  }

  const std::string& value_name(long attr, long value) const {
    return value_names[static_cast<std::size_t>(attr)][static_cast<std::size_t>(value)];
  }

  /// 3 attributes × 4 values = 64 objects.
  static WorldSpec standard() {
    WorldSpec w;
    w.attribute_names = {"color", "shape", "style"};
    w.value_names = {
        {"blue", "purple", "green", "red"},
        {"triangle", "square", "circle", "star"},
        {"dotted", "filled", "dashed", "solid"},
    };
    return w;
  }

  /// 2 attributes × 2 values = 4 objects; every dialog enumerable.
  static WorldSpec micro() {
    WorldSpec w;
    w.attribute_names = {"color", "shape"};
    w.value_names = {
        {"blue", "red"},
        {"triangle", "square"},
    };
    return w;
  }
};

/// One object: a value index per attribute, in canonical attribute order.
struct ObjectInstance {
  std::vector<int> values;

  bool operator==(const ObjectInstance& o) const { return values == o.values; }
};

/// Ordered attribute pair the questioner must resolve; (a,b) and (b,a)
/// are different tasks.
struct TaskSpec {
  int first = 0;
  int second = 0;

  bool operator==(const TaskSpec& o) const { return first == o.first && second == o.second; }
};

/// Target prediction: two global value ids, ordered per the task.
struct GroundTruth {
  int w1 = 0;
  int w2 = 0;

  bool operator==(const GroundTruth& o) const { return w1 == o.w1 && w2 == o.w2; }
};

/// Mixed-radix encoding; the first attribute varies slowest, so index 0
/// is the first value of every attribute.
inline long instance_index(const WorldSpec& w, const ObjectInstance& inst) {
  long idx = 0;
  for (long a = 0; a < w.attrs(); ++a) idx = idx * w.values(a) + inst.values[static_cast<std::size_t>(a)];
  return idx;
}

inline ObjectInstance instance_at(const WorldSpec& w, long index) {
  ObjectInstance inst;
  inst.values.resize(static_cast<std::size_t>(w.attrs()));
  for (long a = w.attrs() - 1; a >= 0; --a) {
    inst.values[static_cast<std::size_t>(a)] = static_cast<int>(index % w.values(a));
    index /= w.values(a);
  }
  return inst;
}

inline std::vector<ObjectInstance> enumerate_instances(const WorldSpec& w) {
  std::vector<ObjectInstance> out;
  out.reserve(static_cast<std::size_t>(w.instance_count()));
  for (long i = 0; i < w.instance_count(); ++i) out.push_back(instance_at(w, i));
  return out;
}

/// All ordered attribute pairs with distinct members, lexicographic by
/// (first, second). Task index everywhere means position in this list.
inline std::vector<TaskSpec> enumerate_tasks(const WorldSpec& w) {
  std::vector<TaskSpec> out;
  for (int a = 0; a < w.attrs(); ++a)
    for (int b = 0; b < w.attrs(); ++b)
      if (a != b) out.push_back(TaskSpec{a, b});
  return out;
}

inline GroundTruth ground_truth(const WorldSpec& w, const ObjectInstance& inst, const TaskSpec& task) {
  GroundTruth gt;
  gt.w1 = static_cast<int>(w.global_value_id(task.first, inst.values[static_cast<std::size_t>(task.first)]));
  gt.w2 = static_cast<int>(w.global_value_id(task.second, inst.values[static_cast<std::size_t>(task.second)]));
  return gt;
}

/// Full ordered match earns the positive reward; anything else —
/// including a swapped or half-right pair — earns the penalty.
inline double reward(const GroundTruth& prediction, const GroundTruth& truth,
                     double correct = 1.0, double wrong = -10.0) {
  return prediction == truth ? correct : wrong;
}

struct DatasetSplit {
  std::vector<long> train;  // instance indices, ascending
  std::vector<long> test;
  std::uint64_t seed = 0;
};

namespace detail {
inline bool covers_all_values(const WorldSpec& w, const std::vector<long>& train) {
  for (long a = 0; a < w.attrs(); ++a) {
    std::vector<char> seen(static_cast<std::size_t>(w.values(a)), 0);
    for (long idx : train) seen[static_cast<std::size_t>(instance_at(w, idx).values[static_cast<std::size_t>(a)])] = 1;
    for (char s : seen)
      if (!s) return false;
  }
  return true;
}
}  // namespace detail

/// Stream tag keeping the split's randomness disjoint from training
/// streams, which use small epoch indices.
inline constexpr std::uint64_t kSplitStreamTag = ~0ull;

/// Deterministic 80/20 instance split (floor on the train side), re-drawn
/// until every attribute value occurs in some training instance so the
/// held-out set only withholds value combinations, never values.
inline DatasetSplit split_dataset(const WorldSpec& w, std::uint64_t seed, double train_fraction = 0.8) {
  const long n = w.instance_count();
  const long n_train = static_cast<long>(train_fraction * static_cast<double>(n));
  if (n_train <= 0 || n_train >= n) throw std::invalid_argument("split_dataset: degenerate train fraction");
  Rng rng = Rng::substream(seed, kSplitStreamTag, 0);
  std::vector<long> order(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  DatasetSplit split;
  split.seed = seed;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    // Fisher-Yates with our own generator; std::shuffle's draw pattern
    // is implementation-defined and would break cross-platform runs.
    for (long i = n - 1; i > 0; --i) {
      const long j = rng.below_int(i + 1);
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    split.train.assign(order.begin(), order.begin() + n_train);
    if (detail::covers_all_values(w, split.train)) {
      split.test.assign(order.begin() + n_train, order.end());
      std::sort(split.train.begin(), split.train.end());
      std::sort(split.test.begin(), split.test.end());
      return split;
    }
  }
  throw std::runtime_error("split_dataset: could not cover all attribute values");
}

/// One training episode assignment.
struct Episode {
  int instance = 0;  // instance index in the world
  int task = 0;      // task index in enumerate_tasks order

  bool operator==(const Episode& o) const { return instance == o.instance && task == o.task; }
  bool operator<(const Episode& o) const {
    return instance != o.instance ? instance < o.instance : task < o.task;
  }
};

/// Batch composition: 80% of slots drawn with replacement from the
/// misclassified pool (when non-empty), the rest uniform over
/// train × tasks; misclassified-sourced episodes come first so the
/// reduction order is fixed. An empty pool means all-uniform.
inline std::vector<Episode> sample_training_batch(const DatasetSplit& split, long task_count,
                                                  const std::vector<Episode>& misclassified,
                                                  Rng& rng, long batch_size = 1000) {
  std::vector<Episode> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  const long from_pool = misclassified.empty() ? 0 : (batch_size * 4) / 5;
  for (long i = 0; i < from_pool; ++i)
    batch.push_back(misclassified[static_cast<std::size_t>(rng.below(misclassified.size()))]);
  const long grid = static_cast<long>(split.train.size()) * task_count;
  for (long i = from_pool; i < batch_size; ++i) {
    const long j = rng.below_int(grid);
    batch.push_back(Episode{static_cast<int>(split.train[static_cast<std::size_t>(j / task_count)]),
                            static_cast<int>(j % task_count)});
  }
  return batch;
}

}  // namespace refgame
