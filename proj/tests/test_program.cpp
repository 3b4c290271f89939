#include "doctest.h"
#include "vgnmn/ops.hpp"
#include "vgnmn/program.hpp"

#include <random>

using namespace vgnmn;

namespace {

const std::vector<std::string> kWords = {"a", "the", "boy", "backpack", "carrying", "how", "old", "red", "dog"};

std::vector<std::string> random_param(Rng& rng) {
  std::uniform_int_distribution<std::size_t> len(1, 3), word(0, kWords.size() - 1);
  std::vector<std::string> out(len(rng));
  for (auto& w : out) w = kWords[word(rng)];
  return out;
}

Program random_program(Rng& rng) {
  std::uniform_int_distribution<int> count(0, 3), coin(0, 1);
  Program p;
  if (coin(rng) == 0) {
    p.kind = ProgramKind::kDialogue;
    for (int i = count(rng); i > 0; --i) p.steps.push_back({random_param(rng), ModuleKind::kFind});
    p.steps.push_back({{}, ModuleKind::kSummarize});
  } else {
    p.kind = ProgramKind::kVideo;
    for (int i = count(rng) + 1; i > 0; --i) p.steps.push_back({random_param(rng), ModuleKind::kWhere});
    for (int i = count(rng); i > 0; --i) p.steps.push_back({random_param(rng), ModuleKind::kWhen});
    if (coin(rng) == 0)
      p.steps.push_back({random_param(rng), ModuleKind::kDescribe});
    else
      p.steps.push_back({{}, ModuleKind::kExist});
  }
  return p;
}

std::vector<ViolationCode> codes_of(std::string_view text, ProgramKind kind) {
  try {
    parse_program(text, kind);
  } catch (const ProgramError& e) {
    std::vector<ViolationCode> out;
    for (const auto& v : e.violations()) out.push_back(v.code);
    return out;
  }
  return {};
}

bool has(const std::vector<ViolationCode>& codes, ViolationCode c) {
  return std::find(codes.begin(), codes.end(), c) != codes.end();
}

}  // namespace

TEST_CASE("parse dialogue program with two entities") {
  auto p = parse_program("a boy FIND a backpack FIND SUMMARIZE", ProgramKind::kDialogue);
  REQUIRE(p.steps.size() == 3);
  CHECK(p.steps[0] == ProgramStep{{"a", "boy"}, ModuleKind::kFind});
  CHECK(p.steps[1] == ProgramStep{{"a", "backpack"}, ModuleKind::kFind});
  CHECK(p.steps[2] == ProgramStep{{}, ModuleKind::kSummarize});
  CHECK(p.entity_count() == 2);
}

TEST_CASE("summarize alone is a valid dialogue program") {
  auto p = parse_program("SUMMARIZE", ProgramKind::kDialogue);
  CHECK(p.steps.size() == 1);
  CHECK(p.entity_count() == 0);
}

TEST_CASE("video program with entity, action and description") {
  auto p = parse_program("a boy WHERE carrying a backpack WHEN how old DESCRIBE", ProgramKind::kVideo);
  CHECK(validate_program(p).empty());
  CHECK(p.entity_count() == 1);
  CHECK(p.action_count() == 1);
  CHECK(p.terminal() == ModuleKind::kDescribe);
  Program w{ProgramKind::kVideo, {{{"x"}, ModuleKind::kWhere}, {{"carrying"}, ModuleKind::kWhen}, {{}, ModuleKind::kExist}}};
  CHECK(program_to_string(w) == "x WHERE carrying WHEN EXIST");
}

TEST_CASE("grammar violations carry codes and step indices") {
  try {
    parse_program("a backpack WHERE WHERE EXIST", ProgramKind::kVideo);
    FAIL("expected a ProgramError");
  } catch (const ProgramError& e) {
    REQUIRE(!e.violations().empty());
    CHECK(e.violations().front().code == ViolationCode::kMissingParam);
    CHECK(e.violations().front().step == 1);
    CHECK(std::string(e.what()).find("WHERE") != std::string::npos);
  }
  CHECK(has(codes_of("a WHERE SUMMARIZE", ProgramKind::kDialogue), ViolationCode::kWrongKind));
  CHECK(has(codes_of("go WHEN EXIST", ProgramKind::kVideo), ViolationCode::kMissingEntity));
  CHECK(has(codes_of("a WHERE b WHEN c WHERE EXIST", ProgramKind::kVideo), ViolationCode::kOutOfOrder));
  CHECK(has(codes_of("SUMMARIZE a FIND", ProgramKind::kDialogue), ViolationCode::kAfterTerminal));
  CHECK(has(codes_of("a FIND", ProgramKind::kDialogue), ViolationCode::kMissingTerminal));
  CHECK(has(codes_of("a WHERE b EXIST", ProgramKind::kVideo), ViolationCode::kUnexpectedParam));
  CHECK(has(codes_of("SUMMARIZE extra words", ProgramKind::kDialogue), ViolationCode::kDanglingParam));
  CHECK(has(codes_of("", ProgramKind::kDialogue), ViolationCode::kMissingTerminal));
}

TEST_CASE("validate_program reports video modules in a dialogue program") {
  Program p{ProgramKind::kDialogue, {{{"a"}, ModuleKind::kWhere}, {{}, ModuleKind::kSummarize}}};
  auto v = validate_program(p);
  REQUIRE(!v.empty());
  CHECK(v.front().code == ViolationCode::kWrongKind);
  CHECK(v.front().message.find("video-kind module in dialogue program") != std::string::npos);
  CHECK_THROWS_AS(serialize_program(p), ProgramError);
}

TEST_CASE("parse and serialize are inverse on random valid programs") {
  Rng rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    auto p = random_program(rng);
    REQUIRE(validate_program(p).empty());
    auto tokens = serialize_program(p);
    auto back = parse_program(std::span<const std::string>(tokens), p.kind);
    CHECK(back == p);
    CHECK(serialize_program(back) == tokens);
  }
}

TEST_CASE("validate_program is total on random token soup") {
  Rng rng(99);
  std::vector<std::string> pool = kWords;
  for (auto kw : {"FIND", "SUMMARIZE", "WHERE", "WHEN", "DESCRIBE", "EXIST"}) pool.emplace_back(kw);
  std::uniform_int_distribution<std::size_t> len(0, 10), pick(0, pool.size() - 1);
  std::size_t accepted = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<std::string> toks(len(rng));
    for (auto& t : toks) t = pool[pick(rng)];
    for (auto kind : {ProgramKind::kDialogue, ProgramKind::kVideo}) {
      try {
        auto p = parse_program(std::span<const std::string>(toks), kind);
        CHECK(validate_program(p).empty());
        ++accepted;
      } catch (const ProgramError& e) {
        CHECK(!e.violations().empty());
      }
    }
  }
  CHECK(accepted > 0);
}

TEST_CASE("parse from decoder ids stops at eos") {
  Vocab v;
  auto boy = v.add("boy");
  const std::size_t ids[] = {boy, Vocab::kFirstModule, Vocab::kFirstModule + 1, Vocab::kEos, boy};
  auto p = parse_program(ids, v, ProgramKind::kDialogue);
  CHECK(program_to_string(p) == "boy FIND SUMMARIZE");
}

TEST_CASE("exact match semantics") {
  auto a = parse_program("a boy WHERE run WHEN EXIST", ProgramKind::kVideo);
  CHECK(program_exact_match(a, a));
  CHECK_FALSE(program_exact_match(a, parse_program("a girl WHERE run WHEN EXIST", ProgramKind::kVideo)));
  auto x = parse_program("a FIND b FIND SUMMARIZE", ProgramKind::kDialogue);
  auto y = parse_program("b FIND a FIND SUMMARIZE", ProgramKind::kDialogue);
  CHECK_FALSE(program_exact_match(x, y));
}
