#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "refgame/tensor.hpp"

namespace refgame {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using NodeId = int;

enum class Op : std::uint8_t {
  input,
  constant,
  param,
  affine,       // W·x + b (bias optional)
  concat,
  embed,        // row lookup in a 2-D table
  select,       // single component of a vector
  sigmoid,
  tanh_fn,
  add,
  mul,
  softmax,
  log_fn,
  sum,
};

/// Reverse-mode tape over a small fixed set of primitives. Nodes are
/// evaluated eagerly as they are recorded when their inputs already
/// have values; placeholders defer evaluation until forward(). The
/// same tape can be re-evaluated after mutating bound tensors, which
/// is what the finite-difference checker relies on.
///
/// Parameter nodes may reference external storage for both value and
/// gradient; gradients accumulate across backward() calls until the
/// owner zeroes them.
class Graph {
 public:
  struct Node {
    Op op = Op::input;
    std::array<NodeId, 4> in{};
    int n_in = 0;
    int index = 0;  // embed / select
    Tensor val;
    bool has_val = false;
    Tensor* ext_val = nullptr;   // param storage, if external
    Tensor* ext_grad = nullptr;  // param gradient sink, if external
    Tensor adj;
    std::uint32_t adj_epoch = 0;
    std::string name;
  };

  void reset() { used_ = 0; }

  int size() const { return used_; }

  // ---- leaves ----

  NodeId input(Tensor t, std::string name = {}) {
    if (!t.all_finite()) throw GraphError("input '" + name + "' contains non-finite values");
    NodeId id = fresh(Op::input, std::move(name));
    node(id).val = std::move(t);
    node(id).has_val = true;
    return id;
  }

  /// Unbound placeholder; forward() fails until bind() supplies a value.
  NodeId placeholder(std::vector<long> shape, std::string name = {}) {
    NodeId id = fresh(Op::input, std::move(name));
    node(id).val = Tensor(std::move(shape));
    node(id).has_val = false;
    return id;
  }

  void bind(NodeId id, Tensor t) {
    Node& n = node(id);
    if (n.op != Op::input) throw GraphError("bind target is not an input");
    if (t.shape != n.val.shape)
      throw GraphError("bind shape " + shape_string(t.shape) + " != declared " + shape_string(n.val.shape));
    if (!t.all_finite()) throw GraphError("input '" + n.name + "' contains non-finite values");
    n.val = std::move(t);
    n.has_val = true;
  }

  NodeId constant(Tensor t, std::string name = {}) {
    NodeId id = fresh(Op::constant, std::move(name));
    node(id).val = std::move(t);
    node(id).has_val = true;
    return id;
  }

  NodeId scalar(double x) { return constant(Tensor{x}); }

  /// Parameter with graph-owned storage; gradient readable via grad().
  NodeId param(Tensor t, std::string name = {}) {
    NodeId id = fresh(Op::param, std::move(name));
    node(id).val = std::move(t);
    node(id).has_val = true;
    return id;
  }

  /// Parameter bound to external storage. `grad_sink`, when given, takes
  /// the accumulated gradient and must match the value shape.
  NodeId param(Tensor* value, Tensor* grad_sink, std::string name = {}) {
    if (value == nullptr) throw GraphError("param value pointer is null");
    if (grad_sink != nullptr && grad_sink->shape != value->shape)
      throw GraphError("param '" + name + "': gradient sink shape mismatch");
    NodeId id = fresh(Op::param, std::move(name));
    node(id).ext_val = value;
    node(id).ext_grad = grad_sink;
    node(id).has_val = true;
    return id;
  }

  // ---- primitives ----

  NodeId affine(NodeId w, NodeId x, NodeId b = -1) {
    long out_rows = 0;
    {
      const Tensor& wv = spec(w);
      const Tensor& xv = spec(x);
      if (wv.shape.size() != 2 || xv.shape.size() != 1 || wv.cols() != xv.size())
        throw GraphError("affine: W" + shape_string(wv.shape) + " x" + shape_string(xv.shape));
      if (b >= 0 && (spec(b).shape.size() != 1 || spec(b).size() != wv.rows()))
        throw GraphError("affine: bias shape " + shape_string(spec(b).shape));
      out_rows = wv.rows();
    }
    NodeId id = b >= 0 ? fresh3(Op::affine, w, x, b) : fresh2(Op::affine, w, x);
    size_like(node(id).val, {out_rows});
    eval(id);
    return id;
  }

  NodeId concat(const std::vector<NodeId>& parts) {
    if (parts.empty() || parts.size() > 4) throw GraphError("concat: 1..4 inputs");
    long total = 0;
    for (NodeId p : parts) {
      if (spec(p).shape.size() != 1) throw GraphError("concat: rank-1 inputs only");
      total += spec(p).size();
    }
    NodeId id = fresh(Op::concat);
    Node& n = node(id);
    n.n_in = static_cast<int>(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) n.in[i] = parts[i];
    size_like(n.val, {total});
    eval(id);
    return id;
  }

  NodeId embed(NodeId table, int row) {
    long width = 0;
    {
      const Tensor& tv = spec(table);
      if (tv.shape.size() != 2) throw GraphError("embed: table must be 2-D");
      if (row < 0 || row >= tv.rows())
        throw GraphError("embed: row " + std::to_string(row) + " out of range " + shape_string(tv.shape));
      width = tv.cols();
    }
    NodeId id = fresh1(Op::embed, table);
    node(id).index = row;
    size_like(node(id).val, {width});
    eval(id);
    return id;
  }

  NodeId select(NodeId vec, int i) {
    {
      const Tensor& xv = spec(vec);
      if (xv.shape.size() != 1) throw GraphError("select: rank-1 input only");
      if (i < 0 || i >= xv.size()) throw GraphError("select: index " + std::to_string(i) + " out of range");
    }
    NodeId id = fresh1(Op::select, vec);
    node(id).index = i;
    size_like(node(id).val, {1});
    eval(id);
    return id;
  }

  NodeId sigmoid(NodeId x) { return unary(Op::sigmoid, x); }
  NodeId tanh(NodeId x) { return unary(Op::tanh_fn, x); }
  NodeId log(NodeId x) { return unary(Op::log_fn, x); }

  NodeId add(NodeId a, NodeId b) { return binary(Op::add, a, b); }
  NodeId mul(NodeId a, NodeId b) { return binary(Op::mul, a, b); }

  NodeId softmax(NodeId x) {
    if (spec(x).shape.size() != 1) throw GraphError("softmax: rank-1 input only");
    const std::vector<long> shape = spec(x).shape;
    NodeId id = fresh1(Op::softmax, x);
    size_like(node(id).val, shape);
    eval(id);
    return id;
  }

  NodeId sum(NodeId x) {
    NodeId id = fresh1(Op::sum, x);
    size_like(node(id).val, {1});
    eval(id);
    return id;
  }

  // ---- execution ----

  /// Re-evaluates every node in recording order. Needed after bind() or
  /// after mutating external parameter storage.
  void forward() {
    for (NodeId id = 0; id < used_; ++id) {
      Node& n = node(id);
      switch (n.op) {
        case Op::input:
          if (!n.has_val) throw GraphError("forward: input '" + n.name + "' is unbound");
          if (!n.val.all_finite()) throw GraphError("forward: input '" + n.name + "' is non-finite");
          break;
        case Op::constant:
        case Op::param:
          break;
        default:
          eval(id);
      }
    }
  }

  const Tensor& value(NodeId id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_val) throw GraphError("node '" + n.name + "' has no value; run forward() first");
    return n.ext_val != nullptr ? *n.ext_val : n.val;
  }

  /// Accumulates d(output)/d(param) into every parameter's gradient
  /// (external sink or graph-owned buffer). Parameter gradients persist
  /// across calls; everything else is per-call scratch.
  void backward(NodeId output) {
    Node& out = node(output);
    if (!out.has_val) throw GraphError("backward before forward: output has no value");
    if (value(output).size() != 1) throw GraphError("backward: output must be scalar");
    ++epoch_;
    touch_adj(output)[0] = 1.0;
    for (NodeId id = output; id >= 0; --id) {
      Node& n = node(id);
      if (n.op == Op::param) {
        if (n.ext_grad != nullptr && n.adj_epoch == epoch_) {
          for (long k = 0; k < n.adj.size(); ++k) (*n.ext_grad)[k] += n.adj[k];
        }
        continue;
      }
      if (n.adj_epoch != epoch_ || n.op == Op::input || n.op == Op::constant) continue;
      propagate(id);
    }
  }

  /// Gradient most recently accumulated for a node (typically a param
  /// with graph-owned storage).
  const Tensor& grad(NodeId id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.ext_grad != nullptr) return *n.ext_grad;
    return n.adj;
  }

  void zero_param_grads() {
    for (NodeId id = 0; id < used_; ++id) {
      Node& n = node(id);
      if (n.op != Op::param) continue;
      if (n.ext_grad != nullptr)
        n.ext_grad->fill(0.0);
      else {
        n.adj.fill(0.0);
        n.adj_epoch = 0;
      }
    }
  }

  std::vector<NodeId> params() const {
    std::vector<NodeId> out;
    for (NodeId id = 0; id < used_; ++id)
      if (nodes_[static_cast<std::size_t>(id)].op == Op::param) out.push_back(id);
    return out;
  }

  const std::string& name(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].name; }

  /// Mutable access to a parameter's storage (external or graph-owned).
  Tensor& param_value(NodeId id) {
    Node& n = node(id);
    if (n.op != Op::param) throw GraphError("param_value: not a param node");
    return n.ext_val != nullptr ? *n.ext_val : n.val;
  }

 private:
  Node& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }

  /// Shape metadata for op validation: readable even for placeholders
  /// that have no value yet, and for deferred nodes downstream of them
  /// (their declared output shape is set at construction).
  const Tensor& spec(NodeId id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.ext_val != nullptr ? *n.ext_val : n.val;
  }

  NodeId fresh(Op op, std::string name = {}) {
    if (static_cast<std::size_t>(used_) == nodes_.size()) nodes_.emplace_back();
    Node& n = nodes_[static_cast<std::size_t>(used_)];
    n.op = op;
    n.n_in = 0;
    n.index = 0;
    n.has_val = false;
    n.ext_val = nullptr;
    n.ext_grad = nullptr;
    n.adj_epoch = 0;
    n.adj.shape.clear();  // recycled slot: forget any persistent adjoint
    n.adj.v.clear();
    n.name = std::move(name);
    return used_++;
  }

  NodeId fresh1(Op op, NodeId a) {
    NodeId id = fresh(op);
    Node& n = node(id);
    n.n_in = 1;
    n.in[0] = a;
    return id;
  }

  NodeId fresh2(Op op, NodeId a, NodeId b) {
    NodeId id = fresh(op);
    Node& n = node(id);
    n.n_in = 2;
    n.in[0] = a;
    n.in[1] = b;
    return id;
  }

  NodeId fresh3(Op op, NodeId a, NodeId b, NodeId c) {
    NodeId id = fresh(op);
    Node& n = node(id);
    n.n_in = 3;
    n.in[0] = a;
    n.in[1] = b;
    n.in[2] = c;
    return id;
  }

  NodeId unary(Op op, NodeId x) {
    const std::vector<long> shape = spec(x).shape;
    NodeId id = fresh1(op, x);
    size_like(node(id).val, shape);
    eval(id);
    return id;
  }

  NodeId binary(Op op, NodeId a, NodeId b) {
    if (spec(a).shape != spec(b).shape)
      throw GraphError("elementwise op: shape " + shape_string(spec(a).shape) + " != " +
                       shape_string(spec(b).shape));
    const std::vector<long> shape = spec(a).shape;
    NodeId id = fresh2(op, a, b);
    size_like(node(id).val, shape);
    eval(id);
    return id;
  }

  bool inputs_ready(const Node& n) const {
    for (int i = 0; i < n.n_in; ++i)
      if (!nodes_[static_cast<std::size_t>(n.in[i])].has_val) return false;
    return true;
  }

  static void size_like(Tensor& t, const std::vector<long>& shape) {
    if (t.shape != shape) {
      t.shape = shape;
      t.v.resize(static_cast<std::size_t>(Tensor::count(shape)));
    }
  }

  void eval(NodeId id) {
    Node& n = node(id);
    if (!inputs_ready(n)) {
      n.has_val = false;
      return;
    }
    switch (n.op) {
      case Op::affine: {
        const Tensor& w = value(n.in[0]);
        const Tensor& x = value(n.in[1]);
        const long m = w.rows(), k = w.cols();
        size_like(n.val, {m});
        const double* wp = w.v.data();
        const double* xp = x.v.data();
        for (long r = 0; r < m; ++r) {
          double acc = 0.0;
          const double* row = wp + r * k;
          for (long c = 0; c < k; ++c) acc += row[c] * xp[c];
          n.val[r] = acc;
        }
        if (n.n_in == 3) {
          const Tensor& b = value(n.in[2]);
          for (long r = 0; r < m; ++r) n.val[r] += b[r];
        }
        break;
      }
      case Op::concat: {
        long total = 0;
        for (int i = 0; i < n.n_in; ++i) total += value(n.in[i]).size();
        size_like(n.val, {total});
        long off = 0;
        for (int i = 0; i < n.n_in; ++i) {
          const Tensor& p = value(n.in[i]);
          std::copy(p.v.begin(), p.v.end(), n.val.v.begin() + off);
          off += p.size();
        }
        break;
      }
      case Op::embed: {
        const Tensor& t = value(n.in[0]);
        size_like(n.val, {t.cols()});
        const double* row = t.v.data() + static_cast<long>(n.index) * t.cols();
        std::copy(row, row + t.cols(), n.val.v.begin());
        break;
      }
      case Op::select: {
        size_like(n.val, {1});
        n.val[0] = value(n.in[0])[n.index];
        break;
      }
      case Op::sigmoid: {
        const Tensor& x = value(n.in[0]);
        size_like(n.val, x.shape);
        for (long i = 0; i < x.size(); ++i) n.val[i] = 1.0 / (1.0 + std::exp(-x[i]));
        break;
      }
      case Op::tanh_fn: {
        const Tensor& x = value(n.in[0]);
        size_like(n.val, x.shape);
        for (long i = 0; i < x.size(); ++i) n.val[i] = std::tanh(x[i]);
        break;
      }
      case Op::log_fn: {
        const Tensor& x = value(n.in[0]);
        size_like(n.val, x.shape);
        for (long i = 0; i < x.size(); ++i) n.val[i] = std::log(x[i]);
        break;
      }
      case Op::add: {
        const Tensor& a = value(n.in[0]);
        const Tensor& b = value(n.in[1]);
        size_like(n.val, a.shape);
        for (long i = 0; i < a.size(); ++i) n.val[i] = a[i] + b[i];
        break;
      }
      case Op::mul: {
        const Tensor& a = value(n.in[0]);
        const Tensor& b = value(n.in[1]);
        size_like(n.val, a.shape);
        for (long i = 0; i < a.size(); ++i) n.val[i] = a[i] * b[i];
        break;
      }
      case Op::softmax: {
        const Tensor& x = value(n.in[0]);
        size_like(n.val, x.shape);
        double mx = x[0];
        for (long i = 1; i < x.size(); ++i) mx = std::max(mx, x[i]);
        double z = 0.0;
        for (long i = 0; i < x.size(); ++i) {
          n.val[i] = std::exp(x[i] - mx);
          z += n.val[i];
        }
        for (long i = 0; i < x.size(); ++i) n.val[i] /= z;
        break;
      }
      case Op::sum: {
        const Tensor& x = value(n.in[0]);
        size_like(n.val, {1});
        double acc = 0.0;
        for (long i = 0; i < x.size(); ++i) acc += x[i];
        n.val[0] = acc;
        break;
      }
      default:
        throw GraphError("eval on leaf node");
    }
    n.has_val = true;
  }

  /// Adjoint buffer for a node within the current backward pass.
  /// Param adjoints persist (accumulation contract); everything else is
  /// zeroed on first touch per pass.
  Tensor& touch_adj(NodeId id) {
    Node& n = node(id);
    const std::vector<long>& shape = n.ext_val != nullptr ? n.ext_val->shape : n.val.shape;
    if (n.op == Op::param && n.ext_grad == nullptr) {
      if (n.adj.shape != shape) {
        size_like(n.adj, shape);
        n.adj.fill(0.0);
      }
      n.adj_epoch = epoch_;
      return n.adj;
    }
    if (n.adj_epoch != epoch_) {
      size_like(n.adj, shape);
      n.adj.fill(0.0);
      n.adj_epoch = epoch_;
    }
    return n.adj;
  }

  void propagate(NodeId id) {
    Node& n = node(id);
    const Tensor& dy = n.adj;
    switch (n.op) {
      case Op::affine: {
        const Tensor& w = value(n.in[0]);
        const Tensor& x = value(n.in[1]);
        const long m = w.rows(), k = w.cols();
        Tensor& dw = touch_adj(n.in[0]);
        Tensor& dx = touch_adj(n.in[1]);
        const double* wp = w.v.data();
        const double* xp = x.v.data();
        for (long r = 0; r < m; ++r) {
          const double g = dy[r];
          if (g == 0.0) continue;
          double* dwrow = dw.v.data() + r * k;
          const double* wrow = wp + r * k;
          for (long c = 0; c < k; ++c) {
            dwrow[c] += g * xp[c];
            dx[c] += g * wrow[c];
          }
        }
        if (n.n_in == 3) {
          Tensor& db = touch_adj(n.in[2]);
          for (long r = 0; r < m; ++r) db[r] += dy[r];
        }
        break;
      }
      case Op::concat: {
        long off = 0;
        for (int i = 0; i < n.n_in; ++i) {
          Tensor& dp = touch_adj(n.in[i]);
          for (long j = 0; j < dp.size(); ++j) dp[j] += dy[off + j];
          off += dp.size();
        }
        break;
      }
      case Op::embed: {
        Tensor& dt = touch_adj(n.in[0]);
        const long c = dt.cols();
        double* row = dt.v.data() + static_cast<long>(n.index) * c;
        for (long j = 0; j < c; ++j) row[j] += dy[j];
        break;
      }
      case Op::select: {
        Tensor& dx = touch_adj(n.in[0]);
        dx[n.index] += dy[0];
        break;
      }
      case Op::sigmoid: {
        Tensor& dx = touch_adj(n.in[0]);
        for (long i = 0; i < dy.size(); ++i) {
          const double y = n.val[i];
          dx[i] += dy[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::tanh_fn: {
        Tensor& dx = touch_adj(n.in[0]);
        for (long i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (1.0 - n.val[i] * n.val[i]);
        break;
      }
      case Op::log_fn: {
        const Tensor& x = value(n.in[0]);
        Tensor& dx = touch_adj(n.in[0]);
        for (long i = 0; i < dy.size(); ++i) dx[i] += dy[i] / x[i];
        break;
      }
      case Op::add: {
        Tensor& da = touch_adj(n.in[0]);
        Tensor& db = touch_adj(n.in[1]);
        for (long i = 0; i < dy.size(); ++i) {
          da[i] += dy[i];
          db[i] += dy[i];
        }
        break;
      }
      case Op::mul: {
        const Tensor& a = value(n.in[0]);
        const Tensor& b = value(n.in[1]);
        Tensor& da = touch_adj(n.in[0]);
        Tensor& db = touch_adj(n.in[1]);
        for (long i = 0; i < dy.size(); ++i) {
          da[i] += dy[i] * b[i];
          db[i] += dy[i] * a[i];
        }
        break;
      }
      case Op::softmax: {
        Tensor& dx = touch_adj(n.in[0]);
        double dot = 0.0;
        for (long i = 0; i < dy.size(); ++i) dot += dy[i] * n.val[i];
        for (long i = 0; i < dy.size(); ++i) dx[i] += n.val[i] * (dy[i] - dot);
        break;
      }
      case Op::sum: {
        Tensor& dx = touch_adj(n.in[0]);
        for (long i = 0; i < dx.size(); ++i) dx[i] += dy[0];
        break;
      }
      default:
        break;
    }
  }

  std::vector<Node> nodes_;
  int used_ = 0;
  std::uint32_t epoch_ = 0;
};

// ---- finite differences ----

struct FdEntry {
  std::string name;
  double max_rel = 0.0;
  long worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct FdReport {
  std::vector<FdEntry> entries;
  double tolerance = 0.0;

  double max_rel() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel);
    return m;
  }
  bool ok() const { return max_rel() <= tolerance; }
  std::vector<std::string> flagged() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
      if (e.max_rel > tolerance) out.push_back(e.name);
    return out;
  }
};

/// Central-difference check of backward() against re-evaluated forward
/// passes, per parameter component. Relative error uses a magnitude floor
/// so near-zero gradients compare sanely: flooring at F makes the check
/// equivalent to |analytic - numeric| <= tolerance * max(magnitude, F),
/// i.e. a relative band for components above F and an absolute guard of
/// tolerance*F below it. Pick F so that tolerance*F comfortably exceeds
/// the difference roundoff (~eps*|loss|/2h) at the chosen step. Restores
/// parameter values and node values before returning.
inline FdReport finite_difference_check(Graph& g, NodeId output, double tolerance,
                                        double h = 1e-5, double magnitude_floor = 1e-8) {
  FdReport report;
  report.tolerance = tolerance;
  g.zero_param_grads();
  g.forward();
  g.backward(output);

  std::vector<NodeId> params = g.params();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (NodeId p : params) {
    Tensor grad = g.grad(p);
    if (grad.shape != g.param_value(p).shape) grad = Tensor(g.param_value(p).shape);
    analytic.push_back(std::move(grad));
  }

  const double kFloor = magnitude_floor;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    NodeId p = params[pi];
    Tensor& pv = g.param_value(p);
    FdEntry entry;
    entry.name = g.name(p).empty() ? ("param#" + std::to_string(p)) : g.name(p);
    for (long i = 0; i < pv.size(); ++i) {
      const double saved = pv[i];
      pv[i] = saved + h;
      g.forward();
      const double fp = g.value(output)[0];
      pv[i] = saved - h;
      g.forward();
      const double fm = g.value(output)[0];
      pv[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kFloor});
      if (rel > entry.max_rel) {
        entry.max_rel = rel;
        entry.worst_index = i;
        entry.analytic = a;
        entry.numeric = numeric;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  g.forward();
  return report;
}

}  // namespace refgame
