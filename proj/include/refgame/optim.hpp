#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "refgame/params.hpp"

namespace refgame {

/// Gradient totals mirroring a ParamStore's layout. Used to keep batch
/// reduction order fixed: per-episode gradients land in the store, get
/// folded into a chunk buffer, and chunk totals fold into a batch
/// buffer, always in the same order regardless of scheduling.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParamStore& store) {
    store.for_each([&](const std::string& name, const Tensor& value, const Tensor&) {
      slots_.emplace(name, Tensor(value.shape));
    });
  }

  void zero() {
    for (auto& [name, t] : slots_) t.fill(0.0);
  }

  /// buffer += store gradients
  void add_from(const ParamStore& store) {
    store.for_each([&](const std::string& name, const Tensor&, const Tensor& grad) {
      Tensor& slot = slots_.at(name);
      for (long i = 0; i < slot.size(); ++i) slot[i] += grad[i];
    });
  }

  /// buffer += other
  void add(const GradBuffer& other) {
    for (auto& [name, t] : slots_) {
      const Tensor& src = other.slots_.at(name);
      for (long i = 0; i < t.size(); ++i) t[i] += src[i];
    }
  }

  /// store gradients = buffer
  void write_to(ParamStore& store) const {
    store.for_each([&](const std::string& name, const Tensor&, Tensor& grad) {
      const Tensor& slot = slots_.at(name);
      std::copy(slot.v.begin(), slot.v.end(), grad.v.begin());
    });
  }

 private:
  std::map<std::string, Tensor> slots_;
};

inline void scale_grads(ParamStore& store, double k) {
  store.for_each([&](const std::string&, Tensor&, Tensor& grad) {
    for (long i = 0; i < grad.size(); ++i) grad[i] *= k;
  });
}

/// Elementwise clamp of every gradient component to [-limit, limit].
inline void clip_grads_value(ParamStore& store, double limit) {
  store.for_each([&](const std::string&, Tensor&, Tensor& grad) {
    for (long i = 0; i < grad.size(); ++i) grad[i] = std::clamp(grad[i], -limit, limit);
  });
}

inline double grad_norm(const ParamStore& store) {
  double sq = 0.0;
  store.for_each([&](const std::string&, const Tensor&, const Tensor& grad) {
    for (long i = 0; i < grad.size(); ++i) sq += grad[i] * grad[i];
  });
  return std::sqrt(sq);
}

/// Rescales all gradients so their joint L2 norm is at most max_norm.
inline void clip_grads_norm(ParamStore& store, double max_norm) {
  const double norm = grad_norm(store);
  if (norm > max_norm && norm > 0.0) scale_grads(store, max_norm / norm);
}

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction; moment buffers are created on first step
/// and keyed by parameter name so they serialize alongside the params.
class Adam {
 public:
  struct Moments {
    Tensor m;
    Tensor v;
  };

  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  long steps() const { return t_; }

  void step(ParamStore& store) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    store.for_each([&](const std::string& name, Tensor& value, Tensor& grad) {
      auto [it, inserted] = moments_.try_emplace(name);
      if (inserted) {
        it->second.m = Tensor(value.shape);
        it->second.v = Tensor(value.shape);
      }
      Tensor& m = it->second.m;
      Tensor& v = it->second.v;
      for (long i = 0; i < value.size(); ++i) {
        const double g = grad[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    });
  }

  // Checkpoint access.
  const std::map<std::string, Moments>& moments() const { return moments_; }
  void restore(long t, std::map<std::string, Moments> moments) {
    t_ = t;
    moments_ = std::move(moments);
  }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace refgame
