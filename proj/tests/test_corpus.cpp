#include "doctest.h"
#include "vgnmn/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

using namespace vgnmn;

namespace {

std::size_t count_all(const Corpus& c) {
  std::size_t n = 0;
  for (const auto& [name, samples] : c.splits) n += samples.size();
  return n;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vgnmn_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("generation is a pure function of spec, size and seed") {
  WorldSpec spec;
  auto a = generate_corpus(spec, 40, 11);
  auto b = generate_corpus(spec, 40, 11);
  auto c = generate_corpus(spec, 40, 12);
  REQUIRE(count_all(a) == count_all(b));
  for (const auto& [name, samples] : a.splits)
    for (std::size_t i = 0; i < samples.size(); ++i)
      CHECK(sample_to_json(samples[i]) == sample_to_json(b.splits.at(name)[i]));
  for (const auto& [id, v] : a.videos) {
    const auto& w = b.video(id);
    CHECK(std::ranges::equal(v.obj.data(), w.obj.data()));
    CHECK(std::ranges::equal(v.aud.data(), w.aud.data()));
  }
  bool differs = count_all(a) != count_all(c);
  for (std::size_t i = 0; !differs && i < a.split("train").size(); ++i)
    differs = sample_to_json(a.split("train")[i]) != sample_to_json(c.split("train")[i]);
  CHECK(differs);
}

TEST_CASE("splits are 80/10/10 by dialogue and disjoint") {
  auto c = generate_corpus(WorldSpec{}, 100, 3);
  std::map<std::string, std::set<std::string>> ids;
  for (const auto& [name, samples] : c.splits)
    for (const auto& s : samples) ids[name].insert(s.dialogue_id);
  CHECK(ids["train"].size() == 80);
  CHECK(ids["val"].size() == 10);
  CHECK(ids["test"].size() == 10);
  for (const auto& id : ids["val"]) CHECK_FALSE(ids["train"].contains(id));
  for (const auto& id : ids["test"]) CHECK_FALSE(ids["train"].contains(id));
}

TEST_CASE("gold programs are valid and follow the question templates") {
  WorldSpec spec;
  auto c = generate_corpus(spec, 200, 5);
  for (const auto& [name, samples] : c.splits) {
    for (const auto& s : samples) {
      CHECK(validate_program(s.dialogue_program).empty());
      CHECK(validate_program(s.video_program).empty());
      CHECK(s.video_program.steps.front().module == ModuleKind::kWhere);
      for (const auto& w : s.history) CHECK(c.vocab.contains(w));
      for (const auto& w : s.question) CHECK(c.vocab.contains(w));
      for (const auto& w : s.response) CHECK(c.vocab.contains(w));
      if (s.turn == 0) {
        CHECK(s.history.empty());
        CHECK(program_to_string(s.dialogue_program) == "SUMMARIZE");
      }
      const bool yes_no = s.question.front() == "is";
      CHECK(yes_no == (s.video_program.terminal() == ModuleKind::kExist));
      if (yes_no) CHECK((s.response == std::vector<std::string>{"yes"} || s.response == std::vector<std::string>{"no"}));
      CHECK(c.videos.contains(s.video_id));
    }
  }
}

TEST_CASE("pronoun subjects have a unique antecedent in the history") {
  WorldSpec spec;
  std::map<std::string, std::string> pronoun_of;
  for (const auto& e : spec.entities) pronoun_of[e.name] = e.pronoun;
  auto c = generate_corpus(spec, 300, 9);
  std::size_t pronoun_turns = 0;
  for (const auto& s : c.split("train")) {
    if (s.dialogue_program.count(ModuleKind::kFind) == 0) {
      CHECK(std::ranges::find(s.question, "the") != s.question.end());
      continue;
    }
    ++pronoun_turns;
    const auto& pron = s.dialogue_program.steps[0].param[0];
    CHECK(std::ranges::find(s.question, pron) != s.question.end());
    std::set<std::string> candidates;
    for (const auto& w : s.history)
      if (pronoun_of.contains(w) && pronoun_of[w] == pron) candidates.insert(w);
    REQUIRE(candidates.size() == 1);
    // the video program grounds the resolved entity
    CHECK(s.video_program.steps[0].param == std::vector<std::string>{"the", *candidates.begin()});
  }
  CHECK(pronoun_turns > 50);
}

TEST_CASE("corpus and video files round trip") {
  auto c = generate_corpus(WorldSpec{}, 12, 1);
  auto dir = temp_dir("corpus_rt");
  write_corpus(c, dir.string());
  auto r = read_corpus(dir.string());
  CHECK(r.vocab == c.vocab);
  for (const auto& [name, samples] : c.splits) {
    REQUIRE(r.split(name).size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
      CHECK(sample_to_json(samples[i]) == sample_to_json(r.split(name)[i]));
  }
  for (const auto& [id, v] : c.videos) {
    const auto& w = r.video(id);
    CHECK(v.obj.shape() == w.obj.shape());
    CHECK(std::ranges::equal(v.obj.data(), w.obj.data()));
    CHECK(std::ranges::equal(v.coords.data(), w.coords.data()));
    CHECK(std::ranges::equal(v.cnn.data(), w.cnn.data()));
    CHECK(std::ranges::equal(v.aud.data(), w.aud.data()));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed inputs raise data errors") {
  CHECK_THROWS_AS(sample_from_json("{not json"), DataError);
  CHECK_THROWS_AS(sample_from_json(R"({"dialogue_id":"d"})"), DataError);
  auto dir = temp_dir("corpus_bad");
  std::filesystem::create_directories(dir);
  CHECK_THROWS_AS(load_video((dir / "missing.bin").string()), DataError);
  CHECK_THROWS_AS(read_corpus((dir / "nope").string()), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("world spec validation") {
  WorldSpec spec;
  spec.objects = 9;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = WorldSpec{};
  spec.entities[0].pronoun = "they";
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  auto round = WorldSpec::from_config(WorldSpec{}.to_config());
  CHECK(round.to_config().to_text() == WorldSpec{}.to_config().to_text());
}
