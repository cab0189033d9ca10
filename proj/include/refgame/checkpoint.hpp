#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgame/training.hpp"

namespace refgame {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "refgame-checkpoint";

namespace ckpt_detail {

using nlohmann::json;

inline json tensor_to_json(const Tensor& t) {
  return json{{"shape", t.shape}, {"values", t.v}};
}

inline Tensor tensor_from_json(const json& j) {
  Tensor t(j.at("shape").get<std::vector<long>>());
  const auto values = j.at("values").get<std::vector<double>>();
  if (static_cast<long>(values.size()) != t.size())
    throw CheckpointError("tensor value count does not match its shape");
  t.v = values;
  return t;
}

inline json params_to_json(const ParamStore& store) {
  json j = json::object();
  store.for_each([&](const std::string& name, const Tensor& value, const Tensor&) {
    j[name] = tensor_to_json(value);
  });
  return j;
}

/// Fills an already-registered store; the file must carry exactly the
/// registered names with matching shapes.
inline void params_from_json(const json& j, ParamStore& store) {
  if (j.size() != store.count()) throw CheckpointError("parameter set does not match this configuration");
  store.for_each([&](const std::string& name, Tensor& value, Tensor&) {
    const auto it = j.find(name);
    if (it == j.end()) throw CheckpointError("checkpoint is missing parameter " + name);
    Tensor loaded = tensor_from_json(*it);
    if (loaded.shape != value.shape) throw CheckpointError("shape mismatch for parameter " + name);
    value = std::move(loaded);
  });
}

inline json adam_to_json(const Adam& opt) {
  json moments = json::object();
  for (const auto& [name, m] : opt.moments())
    moments[name] = json{{"m", m.m.v}, {"v", m.v.v}};
  return json{{"t", opt.steps()}, {"moments", moments}};
}

inline void adam_from_json(const json& j, const ParamStore& store, Adam& opt) {
  std::map<std::string, Adam::Moments> moments;
  for (const auto& [name, entry] : j.at("moments").items()) {
    if (!store.has(name)) throw CheckpointError("optimizer state for unknown parameter " + name);
    Adam::Moments m;
    m.m = Tensor(store.value(name).shape);
    m.v = Tensor(store.value(name).shape);
    const auto mv = entry.at("m").get<std::vector<double>>();
    const auto vv = entry.at("v").get<std::vector<double>>();
    if (static_cast<long>(mv.size()) != m.m.size() || static_cast<long>(vv.size()) != m.v.size())
      throw CheckpointError("optimizer state size mismatch for " + name);
    m.m.v = mv;
    m.v.v = vv;
    moments.emplace(name, std::move(m));
  }
  opt.restore(j.at("t").get<long>(), std::move(moments));
}

inline json world_to_json(const WorldSpec& w) {
  return json{{"attributes", w.attribute_names}, {"values", w.value_names}};
}

inline WorldSpec world_from_json(const json& j) {
  WorldSpec w;
  w.attribute_names = j.at("attributes").get<std::vector<std::string>>();
  w.value_names = j.at("values").get<std::vector<std::vector<std::string>>>();
  if (w.attribute_names.size() != w.value_names.size())
    throw CheckpointError("world description is inconsistent");
  return w;
}

inline json agent_cfg_to_json(const AgentConfig& c) {
  return json{{"q_vocab", c.q_vocab},           {"a_vocab", c.a_vocab},
              {"token_embed_dim", c.token_embed_dim}, {"hidden_dim", c.hidden_dim},
              {"attr_embed_dim", c.attr_embed_dim},   {"rounds", c.rounds},
              {"memoryless_abot", c.memoryless_abot}};
}

inline AgentConfig agent_cfg_from_json(const json& j) {
  AgentConfig c;
  c.q_vocab = j.at("q_vocab").get<long>();
  c.a_vocab = j.at("a_vocab").get<long>();
  c.token_embed_dim = j.at("token_embed_dim").get<long>();
  c.hidden_dim = j.at("hidden_dim").get<long>();
  c.attr_embed_dim = j.at("attr_embed_dim").get<long>();
  c.rounds = j.at("rounds").get<long>();
  c.memoryless_abot = j.at("memoryless_abot").get<bool>();
  return c;
}

inline json trainer_cfg_to_json(const TrainerConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"clip_bound", c.clip_bound},
              {"reward_correct", c.reward_correct},
              {"reward_wrong", c.reward_wrong},
              {"max_epochs", c.max_epochs},
              {"eval_every", c.eval_every},
              {"seed", c.seed},
              {"clip_mode", c.clip_mode == ClipMode::value ? "value" : "norm"},
              {"use_baseline", c.use_baseline},
              {"converge_patience", c.converge_patience},
              {"checkpoint_every", c.checkpoint_every}};
}

inline TrainerConfig trainer_cfg_from_json(const json& j) {
  TrainerConfig c;
  c.batch_size = j.at("batch_size").get<long>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.clip_bound = j.at("clip_bound").get<double>();
  c.reward_correct = j.at("reward_correct").get<double>();
  c.reward_wrong = j.at("reward_wrong").get<double>();
  c.max_epochs = j.at("max_epochs").get<long>();
  c.eval_every = j.at("eval_every").get<long>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const std::string mode = j.at("clip_mode").get<std::string>();
  if (mode == "value")
    c.clip_mode = ClipMode::value;
  else if (mode == "norm")
    c.clip_mode = ClipMode::norm;
  else
    throw CheckpointError("unknown clip_mode: " + mode);
  c.use_baseline = j.at("use_baseline").get<bool>();
  c.converge_patience = j.at("converge_patience").get<long>();
  c.checkpoint_every = j.at("checkpoint_every").get<long>();
  return c;
}

}  // namespace ckpt_detail

/// Serializes a whole training run. `preset` is provenance only; the
/// configs stored alongside are what reconstruction actually uses.
inline nlohmann::json checkpoint_to_json(const TrainingState& s, const std::string& preset) {
  using nlohmann::json;
  using namespace ckpt_detail;
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["preset"] = preset;
  j["iteration"] = s.iteration;
  j["baseline"] = s.baseline;
  j["world"] = world_to_json(s.world);
  j["agent"] = agent_cfg_to_json(s.agent_cfg);
  j["trainer"] = trainer_cfg_to_json(s.cfg);
  j["split"] = json{{"seed", s.split.seed}, {"train", s.split.train}, {"test", s.split.test}};
  json mis = json::array();
  for (const Episode& e : s.misclassified) mis.push_back(json::array({e.instance, e.task}));
  j["misclassified"] = std::move(mis);
  j["master_rng"] = s.master.state();
  j["qbot"] = json{{"params", params_to_json(s.qbot.params())}, {"adam", adam_to_json(s.q_opt)}};
  j["abot"] = json{{"params", params_to_json(s.abot.params())}, {"adam", adam_to_json(s.a_opt)}};
  json hist = json::array();
  for (const MetricRecord& m : s.history)
    hist.push_back(json::array(
        {m.iteration, m.train_both, m.train_one, m.test_both, m.test_one, m.mean_reward}));
  j["history"] = std::move(hist);
  return j;
}

struct LoadedCheckpoint {
  TrainingState state;
  std::string preset;
};

inline LoadedCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  using namespace ckpt_detail;
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
    throw CheckpointError("not a training checkpoint file");
  const int version = j.value("version", -1);
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const WorldSpec world = world_from_json(j.at("world"));
  const AgentConfig acfg = agent_cfg_from_json(j.at("agent"));
  const TrainerConfig tcfg = trainer_cfg_from_json(j.at("trainer"));
  LoadedCheckpoint out{TrainingState(world, acfg, tcfg), j.value("preset", "")};
  TrainingState& s = out.state;
  s.iteration = j.at("iteration").get<long>();
  s.baseline = j.at("baseline").get<double>();
  s.split.seed = j.at("split").at("seed").get<std::uint64_t>();
  s.split.train = j.at("split").at("train").get<std::vector<long>>();
  s.split.test = j.at("split").at("test").get<std::vector<long>>();
  s.misclassified.clear();
  for (const auto& e : j.at("misclassified"))
    s.misclassified.push_back(Episode{e.at(0).get<int>(), e.at(1).get<int>()});
  s.master.set_state(j.at("master_rng").get<Rng::State>());
  params_from_json(j.at("qbot").at("params"), s.qbot.params());
  params_from_json(j.at("abot").at("params"), s.abot.params());
  adam_from_json(j.at("qbot").at("adam"), s.qbot.params(), s.q_opt);
  adam_from_json(j.at("abot").at("adam"), s.abot.params(), s.a_opt);
  s.history.clear();
  for (const auto& m : j.at("history")) {
    MetricRecord rec;
    rec.iteration = m.at(0).get<long>();
    rec.train_both = m.at(1).get<double>();
    rec.train_one = m.at(2).get<double>();
    rec.test_both = m.at(3).get<double>();
    rec.test_one = m.at(4).get<double>();
    rec.mean_reward = m.at(5).get<double>();
    s.history.push_back(rec);
  }
  return out;
}

/// Text by default (diffable JSON); `binary` switches to the compact
/// CBOR encoding of the same document. Both round-trip doubles exactly.
inline void save_checkpoint(const TrainingState& s, const std::string& path,
                            const std::string& preset = "", bool binary = false) {
  const nlohmann::json j = checkpoint_to_json(s, preset);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open " + path + " for writing");
  if (binary) {
    const std::vector<std::uint8_t> bytes = nlohmann::json::to_cbor(j);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  } else {
    f << j.dump();
  }
  if (!f) throw CheckpointError("failed writing " + path);
}

/// Loads either encoding (sniffed from the first byte). Any parse or
/// validation failure throws; nothing is partially applied.
inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open " + path);
  const std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw CheckpointError(path + " is empty");
  nlohmann::json j;
  try {
    if (bytes.front() == '{')
      j = nlohmann::json::parse(bytes.begin(), bytes.end());
    else
      j = nlohmann::json::from_cbor(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + " is corrupt: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace refgame
