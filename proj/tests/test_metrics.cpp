#include "doctest.h"
#include "json.hpp"
#include "vgnmn/metrics.hpp"
#include "vgnmn/tensor.hpp"

#include <cmath>
#include <sstream>

using namespace vgnmn;

namespace {

Sentence words(const std::string& text) {
  std::istringstream is(text);
  Sentence out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

}  // namespace

TEST_CASE("identical corpus scores one") {
  std::vector<Sentence> c = {words("the dog is on the left"), words("yes")};
  // the single-token sentence contributes no 2,3,4-grams but the corpus still has some
  CHECK(corpus_bleu4(c, c) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("corpus BLEU pools n-gram counts before the geometric mean") {
  // reference value from an independent implementation
  std::vector<Sentence> cand = {words("the cat is on the mat"), words("the dog is running now")};
  std::vector<Sentence> ref = {words("the cat is on the mat"), words("the dog is running fast")};
  CHECK(corpus_bleu4(cand, ref) == doctest::Approx(0.8627788640890415).epsilon(1e-12));
}

TEST_CASE("counts are clipped by the reference") {
  // p1 = 4/6, p2 = 3/5, p3 = 2/4, p4 = 1/3, no brevity penalty
  const double expected = std::pow(4.0 / 6 * 3.0 / 5 * 2.0 / 4 * 1.0 / 3, 0.25);
  CHECK(corpus_bleu4({words("the the the dog is running")}, {words("the dog is running")}) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("brevity penalty for short candidates") {
  CHECK(corpus_bleu4({words("the dog is running")}, {words("the dog is running fast today")}) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
}

TEST_CASE("no smoothing: a missing 4-gram order gives zero") {
  CHECK(corpus_bleu4({words("the the the the"), words("a dog is here")},
                     {words("the cat"), words("the dog is running fast today")}) == 0.0);
  CHECK(corpus_bleu4({words("yes")}, {words("yes")}) == 0.0);
  CHECK_THROWS_AS(corpus_bleu4({words("a")}, {}), DimensionError);
}

TEST_CASE("token accuracy in overlap and strict forms") {
  TokenAccuracy acc;
  acc.add(words("the dog is left"), words("the dog is running"));  // 3 of 4
  acc.add(words("yes"), words("no"));                               // 0 of 1
  acc.add(words("he is"), words("he is on the right"));             // 2 of min 2, max 5
  CHECK(acc.matches == 5);
  CHECK(acc.compared == 7);
  CHECK(acc.spanned == 10);
  CHECK(acc.overlap() == doctest::Approx(5.0 / 7));
  CHECK(acc.strict() == doctest::Approx(0.5));
  TokenAccuracy empty;
  CHECK(empty.overlap() == 0.0);
  CHECK(empty.strict() == 0.0);
}

TEST_CASE("metrics serialize to json") {
  Metrics m;
  m.samples = 3;
  m.dialogue_program_em = 1.0;
  m.bleu4 = 0.25;
  auto j = nlohmann::json::parse(m.to_json());
  CHECK(j["samples"] == 3);
  CHECK(j["dialogue_program_em"] == 1.0);
  CHECK(j["bleu4"] == 0.25);
  CHECK(j.contains("video_program_em"));
  CHECK(j.contains("response_token_accuracy"));
  CHECK(j.contains("response_token_accuracy_strict"));
}
