#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgame/checkpoint.hpp"
#include "refgame/training.hpp"
#include "refgame/world.hpp"

using refgame::AgentConfig;
using refgame::checkpoint_from_json;
using refgame::checkpoint_to_json;
using refgame::CheckpointError;
using refgame::load_checkpoint;
using refgame::LoadedCheckpoint;
using refgame::save_checkpoint;
using refgame::Tensor;
using refgame::train_iteration;
using refgame::TrainerConfig;
using refgame::TrainingState;
using refgame::WorldSpec;

namespace {

/// Self-deleting scratch file in the working directory.
struct TempFile {
  std::string path;
  explicit TempFile(std::string name) : path(std::move(name)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

TrainingState micro_state(std::uint64_t seed) {
  AgentConfig acfg;
  acfg.q_vocab = 2;
  acfg.a_vocab = 2;
  acfg.token_embed_dim = 2;
  acfg.hidden_dim = 2;
  acfg.attr_embed_dim = 2;
  acfg.rounds = 1;
  TrainerConfig tcfg;
  tcfg.batch_size = 16;
  tcfg.seed = seed;
  TrainingState s(WorldSpec::micro(), acfg, tcfg);
  s.initialize();
  return s;
}

}  // namespace

TEST_CASE("a text checkpoint round-trips the entire run verbatim") {
  TrainingState s = micro_state(71);
  train_iteration(s);
  train_iteration(s);

  TempFile f("ckpt_roundtrip_test.json");
  save_checkpoint(s, f.path, "micro");
  LoadedCheckpoint loaded = load_checkpoint(f.path);

  REQUIRE(loaded.preset == "micro");
  // Re-serializing the loaded state must reproduce the document
  // exactly, which covers params, optimizer moments, rng state, split,
  // curriculum pool, and history in one comparison.
  REQUIRE(checkpoint_to_json(loaded.state, "micro") == checkpoint_to_json(s, "micro"));
  REQUIRE(loaded.state.iteration == 2);
  REQUIRE(loaded.state.q_opt.steps() == 2);
  REQUIRE(loaded.state.split.train == s.split.train);
}

TEST_CASE("a resumed run continues the exact training trajectory") {
  TrainingState original = micro_state(73);
  train_iteration(original);
  train_iteration(original);

  TempFile f("ckpt_resume_test.json");
  save_checkpoint(original, f.path);
  LoadedCheckpoint resumed = load_checkpoint(f.path);

  train_iteration(original);
  train_iteration(resumed.state);

  REQUIRE(checkpoint_to_json(resumed.state, "") == checkpoint_to_json(original, ""));
}

TEST_CASE("the binary encoding round-trips identically to text") {
  TrainingState s = micro_state(79);
  train_iteration(s);

  TempFile text("ckpt_text_test.json");
  TempFile cbor("ckpt_cbor_test.cbor");
  save_checkpoint(s, text.path, "p", false);
  save_checkpoint(s, cbor.path, "p", true);

  LoadedCheckpoint from_text = load_checkpoint(text.path);
  LoadedCheckpoint from_cbor = load_checkpoint(cbor.path);
  REQUIRE(checkpoint_to_json(from_cbor.state, "p") == checkpoint_to_json(from_text.state, "p"));

  // The binary file really is a different (smaller) encoding.
  std::ifstream tf(text.path, std::ios::binary | std::ios::ate);
  std::ifstream cf(cbor.path, std::ios::binary | std::ios::ate);
  REQUIRE(cf.tellg() > 0);
  REQUIRE(cf.tellg() < tf.tellg());
}

TEST_CASE("truncated files are reported as corrupt, not half-loaded") {
  TrainingState s = micro_state(83);
  TempFile f("ckpt_truncated_test.json");
  save_checkpoint(s, f.path);

  std::ifstream in(f.path, std::ios::binary);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::ofstream out(f.path, std::ios::binary | std::ios::trunc);
  out.write(body.data(), static_cast<std::streamsize>(body.size() / 2));
  out.close();

  REQUIRE_THROWS_WITH(load_checkpoint(f.path), Catch::Matchers::ContainsSubstring("corrupt"));
}

TEST_CASE("unknown versions and foreign files are refused") {
  TrainingState s = micro_state(89);
  nlohmann::json j = checkpoint_to_json(s, "");
  j["version"] = 999;
  REQUIRE_THROWS_WITH(checkpoint_from_json(j), Catch::Matchers::ContainsSubstring("version"));

  REQUIRE_THROWS_WITH(checkpoint_from_json(nlohmann::json{{"hello", 1}}),
                      Catch::Matchers::ContainsSubstring("not a training checkpoint"));

  TempFile f("ckpt_empty_test.json");
  std::ofstream(f.path, std::ios::binary).close();
  REQUIRE_THROWS_AS(load_checkpoint(f.path), CheckpointError);
  REQUIRE_THROWS_AS(load_checkpoint("ckpt_does_not_exist_anywhere.json"), CheckpointError);
}

TEST_CASE("parameter sets that do not match the stored config are refused") {
  TrainingState s = micro_state(97);
  nlohmann::json good = checkpoint_to_json(s, "");

  SECTION("missing parameter") {
    nlohmann::json j = good;
    j["qbot"]["params"].erase("speak.w");
    REQUIRE_THROWS_AS(checkpoint_from_json(j), CheckpointError);
  }
  SECTION("extra parameter") {
    nlohmann::json j = good;
    j["qbot"]["params"]["mystery"] = j["qbot"]["params"]["speak.w"];
    REQUIRE_THROWS_AS(checkpoint_from_json(j), CheckpointError);
  }
  SECTION("shape drift via edited config") {
    nlohmann::json j = good;
    j["agent"]["hidden_dim"] = 7;  // stored tensors no longer fit
    REQUIRE_THROWS_AS(checkpoint_from_json(j), CheckpointError);
  }
  SECTION("tensor length mismatch") {
    nlohmann::json j = good;
    j["abot"]["params"]["speak.b"]["values"] = std::vector<double>{1.0};
    REQUIRE_THROWS_AS(checkpoint_from_json(j), CheckpointError);
  }
}

TEST_CASE("unwritable destinations fail loudly") {
  TrainingState s = micro_state(101);
  REQUIRE_THROWS_AS(save_checkpoint(s, "no_such_dir_xyz/ckpt.json"), CheckpointError);
}

TEST_CASE("rng state survives the trip through json") {
  TrainingState s = micro_state(103);
  // Advance the batch stream so the state is mid-sequence, then make
  // sure the restored generator produces the same continuation.
  for (int i = 0; i < 5; ++i) s.master.next_u64();
  TempFile f("ckpt_rng_test.json");
  save_checkpoint(s, f.path);
  LoadedCheckpoint loaded = load_checkpoint(f.path);
  for (int i = 0; i < 8; ++i) REQUIRE(loaded.state.master.next_u64() == s.master.next_u64());
}
