#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "refgame/rng.hpp"
#include "refgame/tensor.hpp"

namespace refgame {

/// Named parameter tensors plus matching gradient accumulators.
/// Iteration is always in lexicographic name order, which pins the
/// draw order of random init and the byte layout of checkpoints.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
  };

  Tensor& add(const std::string& name, std::vector<long> shape) {
    auto [it, inserted] = entries_.try_emplace(name);
    if (!inserted) throw std::invalid_argument("parameter already registered: " + name);
    it->second.value = Tensor(shape);
    it->second.grad = Tensor(std::move(shape));
    return it->second.value;
  }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  Tensor& value(const std::string& name) { return entry(name).value; }
  const Tensor& value(const std::string& name) const { return entry(name).value; }
  Tensor& grad(const std::string& name) { return entry(name).grad; }
  const Tensor& grad(const std::string& name) const { return entry(name).grad; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
  }

  std::size_t count() const { return entries_.size(); }

  long scalar_count() const {
    long n = 0;
    for (const auto& [name, e] : entries_) n += e.value.size();
    return n;
  }

  void zero_grads() {
    for (auto& [name, e] : entries_) e.grad.fill(0.0);
  }

  bool values_finite() const {
    for (const auto& [name, e] : entries_)
      if (!e.value.all_finite()) return false;
    return true;
  }

  template <typename F>
  void for_each(F&& f) {
    for (auto& [name, e] : entries_) f(name, e.value, e.grad);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [name, e] : entries_) f(name, e.value, e.grad);
  }

 private:
  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }
  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }

  std::map<std::string, Entry> entries_;
};

/// Matrices get U(-b, b) with b = sqrt(6 / (rows + cols)); vectors
/// (biases) stay zero. Parameters are visited in name order.
inline void xavier_init(ParamStore& store, Rng& rng) {
  store.for_each([&](const std::string&, Tensor& value, Tensor&) {
    if (value.shape.size() != 2) {
      value.fill(0.0);
      return;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(value.rows() + value.cols()));
    for (long i = 0; i < value.size(); ++i) value[i] = (2.0 * rng.next_double() - 1.0) * bound;
  });
}

}  // namespace refgame
