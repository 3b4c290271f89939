#include "doctest.h"
#include "vgnmn/checkpoint.hpp"
#include "vgnmn/diagnostics.hpp"
#include "vgnmn/training.hpp"

#include <filesystem>
#include <fstream>

using namespace vgnmn;

namespace {

struct Trained {
  TinySetup setup = tiny_setup();
  Corpus corpus = generate_corpus(setup.world, 12, 2);
  Trainer trainer{setup.config, corpus};

  Trained() { trainer.run_epoch(); }
};

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("vgnmn_" + name)).string();
}

}  // namespace

TEST_CASE("save, load, save is byte-identical") {
  Trained t;
  const auto ckpt = t.trainer.checkpoint();
  const auto bytes = serialize_checkpoint(ckpt);
  const auto back = parse_checkpoint(bytes);
  CHECK(serialize_checkpoint(back) == bytes);

  const auto path = temp_path("ckpt_rt.bin");
  save_checkpoint(path, ckpt);
  const auto loaded = load_checkpoint(path);
  CHECK(serialize_checkpoint(loaded) == bytes);
  CHECK(loaded.vocab == ckpt.vocab);
  CHECK(loaded.progress == ckpt.progress);
  CHECK(loaded.adam == ckpt.adam);
  CHECK(loaded.config.to_text() == ckpt.config.to_text());
  for (const auto& [name, p] : ckpt.params) CHECK(std::ranges::equal(p.data(), loaded.params.get(name).data()));
  std::filesystem::remove(path);
}

TEST_CASE("reloaded model gives the same losses") {
  Trained t;
  const auto ckpt = parse_checkpoint(serialize_checkpoint(t.trainer.checkpoint()));
  const auto config = TrainConfig::from_config(ckpt.config);
  Model reloaded(config.model, ckpt.vocab, ckpt.params.clone());
  const auto& val = t.corpus.split("val");
  const auto a = evaluate_loss(t.trainer.model(), val, t.corpus, config.loss, 1);
  const auto b = evaluate_loss(reloaded, val, t.corpus, config.loss, 1);
  CHECK(a.total == b.total);
  CHECK(a.dialogue == b.dialogue);
}

TEST_CASE("best validation loss survives as an exact value") {
  Checkpoint c;
  c.config.set("d", "8");
  c.vocab = world_vocab(tiny_setup().world);
  c.progress.best_val = 0.1 + 0.2;
  c.progress.epoch = 3;
  const auto back = parse_checkpoint(serialize_checkpoint(c));
  CHECK(back.progress.best_val == 0.1 + 0.2);
  CHECK(back.progress.epoch == 3);
  c.progress = {};
  CHECK(std::isinf(parse_checkpoint(serialize_checkpoint(c)).progress.best_val));
}

TEST_CASE("bad magic, version and truncation are structured errors") {
  Trained t;
  const auto bytes = serialize_checkpoint(t.trainer.checkpoint());

  auto code_of = [](const std::string& data) {
    try {
      parse_checkpoint(data);
    } catch (const CheckpointError& e) {
      return static_cast<int>(e.code());
    }
    return -1;
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(code_of(bad_magic) == static_cast<int>(CheckpointError::Code::kBadMagic));
  CHECK(code_of("") == static_cast<int>(CheckpointError::Code::kBadMagic));

  auto bad_version = bytes;
  bad_version[8] = 9;
  CHECK(code_of(bad_version) == static_cast<int>(CheckpointError::Code::kVersion));

  for (std::size_t cut : {std::size_t{10}, bytes.size() / 3, bytes.size() / 2, bytes.size() - 1})
    CHECK(code_of(bytes.substr(0, cut)) == static_cast<int>(CheckpointError::Code::kTruncated));
  CHECK(code_of(bytes + "x") == static_cast<int>(CheckpointError::Code::kCorrupt));

  try {
    parse_checkpoint(bytes.substr(0, bytes.size() / 2), "model.ckpt");
    FAIL("expected a truncation error");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("model.ckpt") != std::string::npos);
  }
}

TEST_CASE("missing file is a data error") {
  CHECK_THROWS_AS(load_checkpoint(temp_path("does_not_exist.ckpt")), DataError);
}

TEST_CASE("a checkpoint whose tensors do not fit the config is rejected") {
  Trained t;
  auto ckpt = t.trainer.checkpoint();
  auto config = TrainConfig::from_config(ckpt.config);
  config.model.d = 16;
  config.model.heads = 2;
  CHECK_THROWS_AS(Model(config.model, ckpt.vocab, ckpt.params.clone()), DataError);
}
