#pragma once

#include <string>

#include "refgame/graph.hpp"
#include "refgame/params.hpp"

namespace refgame {

/// Node ids of one LSTM cell's parameters inside a particular graph.
/// Each gate keeps its own input weights, recurrent weights, and bias.
struct LstmParams {
  NodeId wx_i, wh_i, b_i;
  NodeId wx_f, wh_f, b_f;
  NodeId wx_g, wh_g, b_g;
  NodeId wx_o, wh_o, b_o;
};

struct LstmState {
  NodeId h = -1;
  NodeId c = -1;
};

/// Creates the twelve parameter tensors for a cell under `prefix.*`.
inline void register_lstm(ParamStore& store, const std::string& prefix, long in_dim,
                          long hidden) {
  for (const char* gate : {"i", "f", "g", "o"}) {
    store.add(prefix + ".wx_" + gate, {hidden, in_dim});
    store.add(prefix + ".wh_" + gate, {hidden, hidden});
    store.add(prefix + ".b_" + gate, {hidden});
  }
}

/// Binds a registered cell's tensors into `g` as parameter nodes.
inline LstmParams bind_lstm(Graph& g, ParamStore& store, const std::string& prefix) {
  auto p = [&](const std::string& suffix) {
    const std::string name = prefix + "." + suffix;
    return g.param(&store.value(name), &store.grad(name), name);
  };
  LstmParams out;
  out.wx_i = p("wx_i");
  out.wh_i = p("wh_i");
  out.b_i = p("b_i");
  out.wx_f = p("wx_f");
  out.wh_f = p("wh_f");
  out.b_f = p("b_f");
  out.wx_g = p("wx_g");
  out.wh_g = p("wh_g");
  out.b_g = p("b_g");
  out.wx_o = p("wx_o");
  out.wh_o = p("wh_o");
  out.b_o = p("b_o");
  return out;
}

inline LstmState lstm_zero_state(Graph& g, long hidden) {
  LstmState s;
  s.h = g.constant(Tensor({hidden}, 0.0));
  s.c = g.constant(Tensor({hidden}, 0.0));
  return s;
}

/// One gated update: i,f,o = sigmoid, candidate = tanh,
/// c' = f*c + i*cand, h' = o * tanh(c').
inline LstmState lstm_step(Graph& g, const LstmParams& p, NodeId x, const LstmState& prev) {
  NodeId gi = g.sigmoid(g.add(g.affine(p.wx_i, x, p.b_i), g.affine(p.wh_i, prev.h)));
  NodeId gf = g.sigmoid(g.add(g.affine(p.wx_f, x, p.b_f), g.affine(p.wh_f, prev.h)));
  NodeId gc = g.tanh(g.add(g.affine(p.wx_g, x, p.b_g), g.affine(p.wh_g, prev.h)));
  NodeId go = g.sigmoid(g.add(g.affine(p.wx_o, x, p.b_o), g.affine(p.wh_o, prev.h)));
  LstmState next;
  next.c = g.add(g.mul(gf, prev.c), g.mul(gi, gc));
  next.h = g.mul(go, g.tanh(next.c));
  return next;
}

}  // namespace refgame
