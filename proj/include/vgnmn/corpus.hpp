#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vgnmn/encoders.hpp"
#include "vgnmn/kv_config.hpp"
#include "vgnmn/program.hpp"
#include "vgnmn/vocab.hpp"

namespace vgnmn {

struct WorldEntity {
  std::string name;
  std::string pronoun;  // he | she | it
};

/// Synthetic micro-world settings.
struct WorldSpec {
  std::vector<WorldEntity> entities = {{"boy", "he"}, {"girl", "she"}, {"man", "he"},  {"woman", "she"},
                                       {"dog", "it"}, {"cat", "it"},   {"bird", "it"}, {"horse", "it"}};
  std::vector<std::string> actions = {"running", "jumping", "sitting", "walking",
                                      "eating",  "sleeping", "dancing", "waving"};
  std::size_t frames = 8;
  std::size_t objects = 4;
  std::size_t d_vis = 16;
  std::size_t d_aud = 8;
  std::size_t min_turns = 2;
  std::size_t max_turns = 4;
  /// Probability that a later turn refers back to an earlier entity by pronoun.
  double coref_rate = 0.5;
  double noise = 0.1;

  void validate() const;
  static WorldSpec from_config(const KvConfig& cfg);
  KvConfig to_config() const;
};

struct DialogueSample {
  std::string dialogue_id;
  std::string video_id;
  std::size_t turn = 0;
  std::vector<std::string> history;  // earlier turns, question then answer
  std::vector<std::string> question;
  Program dialogue_program;
  Program video_program;
  std::vector<std::string> response;
};

struct Corpus {
  Vocab vocab;
  std::map<std::string, std::vector<DialogueSample>> splits;  // train, val, test
  std::map<std::string, VideoFeatures> videos;

  const std::vector<DialogueSample>& split(const std::string& name) const;
  const VideoFeatures& video(const std::string& id) const;
};

/// Every word the generator can emit, in a fixed order.
Vocab world_vocab(const WorldSpec& spec);

/// Pure function of (spec, n_dialogues, seed). Dialogues are split 80/10/10
/// into train/val/test. Video features are rounded to float32.
Corpus generate_corpus(const WorldSpec& spec, std::size_t n_dialogues, std::uint64_t seed);

/// Layout: vocab.txt, {train,val,test}.jsonl, videos/<id>.bin.
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus read_corpus(const std::string& dir);

std::string sample_to_json(const DialogueSample& sample);
DialogueSample sample_from_json(const std::string& line);
/// Samples of one JSONL file; throws DataError naming the line on bad input.
std::vector<DialogueSample> read_samples(const std::string& path);

/// Per stream (obj, coords, cnn, aud): u32 rank, u32 dims..., float32 values,
/// little-endian, after a 4-byte magic.
void save_video(const VideoFeatures& video, const std::string& path);
VideoFeatures load_video(const std::string& path);

}  // namespace vgnmn
