#include <cmath>
#include <functional>

#include "doctest.h"
#include "test_util.hpp"

using namespace vgnmn;
using vgnmn::testing::random_tensor;
using vgnmn::testing::weighted_sum;

TEST_CASE("matmul examples") {
  auto a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  auto eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  auto r = matmul(a, eye);
  CHECK(std::vector<double>(r.data().begin(), r.data().end()) == std::vector<double>{1, 2, 3, 4});

  auto col = Tensor::matrix(2, 1, {5, 6});
  auto p = matmul(a, col);
  CHECK(p.shape() == Shape{2, 1});
  CHECK(p[0] == 17.0);
  CHECK(p[1] == 39.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("and [2x3]") != std::string::npos);
  }
}

TEST_CASE("matmul is associative on random 4x4 triples") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_tensor({4, 4}, rng), b = random_tensor({4, 4}, rng), c = random_tensor({4, 4}, rng);
    auto left = matmul(matmul(a, b), c);
    auto right = matmul(a, matmul(b, c));
    CHECK(testing::max_abs_diff(left.data(), right.data()) < 1e-9);
  }
}

TEST_CASE("softmax examples") {
  auto s = softmax_lastdim(Tensor({2}, {0.0, 0.0}));
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[1] == doctest::Approx(0.5));

  auto t = softmax_lastdim(Tensor({3}, {1.0, 2.0, 3.0}));
  CHECK(t[0] == doctest::Approx(0.09003057).epsilon(1e-7));
  CHECK(t[1] == doctest::Approx(0.24472847).epsilon(1e-7));
  CHECK(t[2] == doctest::Approx(0.66524096).epsilon(1e-7));

  auto big = softmax_lastdim(Tensor({2}, {1000.0, 1000.0}));
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);
}

TEST_CASE("softmax rows are distributions") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto x = random_tensor({7, 11}, rng, 10.0);
    auto y = softmax_lastdim(x);
    for (std::size_t r = 0; r < 7; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 11; ++c) {
        CHECK(y.at(r, c) >= 0.0);
        s += y.at(r, c);
      }
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("layer_norm examples") {
  auto ones = Tensor::full({2}, 1.0), zeros = Tensor::zeros({2});
  auto c = layer_norm(Tensor({1, 2}, {5, 5}), ones, zeros);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 0.0);

  auto y = layer_norm(Tensor({1, 2}, {1, 3}), ones, zeros, 1e-12);
  CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-9));

  auto z = layer_norm(Tensor({1, 2}, {1, 3}), Tensor::zeros({2}), Tensor::full({2}, 7.0));
  CHECK(z[0] == 7.0);
  CHECK(z[1] == 7.0);
}

TEST_CASE("layer_norm rows have zero mean and unit variance") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 8 + static_cast<std::size_t>(trial % 5) * 8;
    auto x = random_tensor({5, d}, rng, 3.0);
    auto y = layer_norm(x, Tensor::full({d}, 1.0), Tensor::zeros({d}));
    for (std::size_t r = 0; r < 5; ++r) {
      double mean = 0.0, var = 0.0;
      for (std::size_t c = 0; c < d; ++c) mean += y.at(r, c);
      mean /= static_cast<double>(d);
      for (std::size_t c = 0; c < d; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
      var /= static_cast<double>(d);
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(var - 1.0) < 1e-3);
    }
  }
}

TEST_CASE("text_cnn examples") {
  SUBCASE("single channel sliding window") {
    TextCnnWeights w;
    w.kernel_sizes = {3};
    w.filters = {Tensor::full({3, 1}, 1.0)};
    w.biases = {Tensor::zeros({1})};
    auto y = text_cnn(Tensor::full({5, 1}, 1.0), w);
    CHECK(y.numel() == 1);
    CHECK(y[0] == 3.0);
  }
  SUBCASE("zero input with zero biases") {
    Rng rng(1);
    const std::size_t d = 6;
    TextCnnWeights w;
    w.kernel_sizes = {3, 4, 5};
    for (auto k : w.kernel_sizes) {
      w.filters.push_back(random_tensor({k * d, d}, rng));
      w.biases.push_back(Tensor::zeros({d}));
    }
    w.out_w = random_tensor({3 * d, d}, rng);
    w.out_b = Tensor::zeros({d});
    auto y = text_cnn(Tensor::zeros({7, d}), w);
    for (double v : y.data()) CHECK(v == 0.0);
  }
  SUBCASE("short inputs are padded") {
    Rng rng(2);
    const std::size_t d = 128;
    TextCnnWeights w;
    w.kernel_sizes = {3, 4, 5};
    for (auto k : w.kernel_sizes) {
      w.filters.push_back(random_tensor({k * d, d}, rng, 0.05));
      w.biases.push_back(Tensor::zeros({d}));
    }
    w.out_w = random_tensor({3 * d, d}, rng, 0.05);
    w.out_b = Tensor::zeros({d});
    auto y = text_cnn(random_tensor({2, d}, rng), w);
    CHECK(y.numel() == d);
  }
}

TEST_CASE("label-smoothed cross entropy examples") {
  const std::size_t gold0[] = {0};
  SUBCASE("uniform prediction") {
    for (double eps : {0.0, 0.1, 0.5}) {
      auto loss = cross_entropy_ls(Tensor::zeros({1, 4}), gold0, eps);
      CHECK(loss.item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
  }
  SUBCASE("hand-computed smoothed target") {
    auto logits = Tensor({1, 4}, {std::log(0.7), std::log(0.1), std::log(0.1), std::log(0.1)});
    auto loss = cross_entropy_ls(logits, gold0, 0.1);
    CHECK(loss.item() == doctest::Approx(0.5026182051).epsilon(1e-9));
  }
  SUBCASE("eps=0 reduces to plain cross entropy") {
    auto logits = Tensor({1, 3}, {20.0, 0.0, 0.0});
    auto loss = cross_entropy_ls(logits, gold0, 0.0);
    const double p_gold = std::exp(20.0) / (std::exp(20.0) + 2.0);
    CHECK(loss.item() == doctest::Approx(-std::log(p_gold)).epsilon(1e-12));
  }
  SUBCASE("gold out of range") {
    const std::size_t bad[] = {4};
    CHECK_THROWS_AS(cross_entropy_ls(Tensor::zeros({1, 4}), bad, 0.1), IndexError);
  }
}

TEST_CASE("elementwise examples") {
  auto r = relu(Tensor({3}, {-1.0, 0.0, 2.0}));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 2.0);

  Rng rng(1);
  auto x = random_tensor({3, 4}, rng);
  auto eval = dropout(x, 0.2, false, rng);
  CHECK(std::equal(eval.data().begin(), eval.data().end(), x.data().begin()));

  auto m = mean_rows(Tensor::matrix(2, 2, {1, 3, 5, 7}));
  CHECK(m[0] == 3.0);
  CHECK(m[1] == 5.0);

  CHECK_THROWS_AS(add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), DimensionError);
  auto b = add(Tensor::zeros({2, 3}), Tensor({3}, {1, 2, 3}));
  CHECK(b.at(1, 2) == 3.0);
  auto c = add(Tensor::zeros({2, 3}), Tensor({2, 1}, {1, 2}));
  CHECK(c.at(1, 0) == 2.0);
}

TEST_CASE("dropout preserves the expectation at training time") {
  Rng rng(42);
  const std::size_t n = 20000;
  const double rate = 0.2;
  auto y = dropout(Tensor::full({n}, 1.0), rate, true, rng);
  double mean = 0.0;
  for (double v : y.data()) mean += v;
  mean /= static_cast<double>(n);
  const double sigma = std::sqrt(rate / (1.0 - rate) / static_cast<double>(n));
  CHECK(std::abs(mean - 1.0) < 3.0 * sigma);
}

namespace {

using OpUnderTest = std::function<Tensor(ParamStore&)>;

// 100 random trials per op: fresh inputs each trial, a random projection to a
// scalar, and 10 sampled coordinates checked against central differences.
void check_op_gradients(const char* name, const std::function<ParamStore(Rng&)>& make_inputs,
                        const OpUnderTest& op) {
  Rng rng(std::hash<std::string>{}(name));
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ParamStore inputs = make_inputs(rng);
    const auto seed = rng();
    auto result = grad_check([&] { return weighted_sum(op(inputs), seed); }, inputs,
                             {.step = 1e-5, .samples = 10, .seed = seed});
    worst = std::max(worst, result.max_rel_error);
  }
  INFO(name << " worst relative error " << worst);
  CHECK(worst <= 1e-4);
}

ParamStore inputs_of(std::initializer_list<std::pair<const char*, Shape>> specs, Rng& rng) {
  ParamStore s;
  for (const auto& [n, shape] : specs) s.add(n, random_tensor(shape, rng));
  return s;
}

}  // namespace

TEST_CASE("autodiff matches finite differences for every op") {
  check_op_gradients("matmul", [](Rng& r) { return inputs_of({{"a", {3, 4}}, {"b", {4, 2}}}, r); },
                     [](ParamStore& p) { return matmul(p.get("a"), p.get("b")); });
  check_op_gradients("matmul_nt", [](Rng& r) { return inputs_of({{"a", {3, 4}}, {"b", {5, 4}}}, r); },
                     [](ParamStore& p) { return matmul_nt(p.get("a"), p.get("b")); });
  check_op_gradients("add_row", [](Rng& r) { return inputs_of({{"a", {3, 4}}, {"b", {4}}}, r); },
                     [](ParamStore& p) { return add(p.get("a"), p.get("b")); });
  check_op_gradients("mul_col", [](Rng& r) { return inputs_of({{"a", {3, 4}}, {"b", {3, 1}}}, r); },
                     [](ParamStore& p) { return mul(p.get("a"), p.get("b")); });
  check_op_gradients("mul_same", [](Rng& r) { return inputs_of({{"a", {3, 4}}, {"b", {3, 4}}}, r); },
                     [](ParamStore& p) { return mul(p.get("a"), p.get("b")); });
  check_op_gradients("scale_relu", [](Rng& r) { return inputs_of({{"a", {4, 5}}}, r); },
                     [](ParamStore& p) { return relu(scale(p.get("a"), 1.7)); });
  check_op_gradients("softmax", [](Rng& r) { return inputs_of({{"a", {3, 6}}}, r); },
                     [](ParamStore& p) { return softmax_lastdim(p.get("a")); });
  check_op_gradients("layer_norm", [](Rng& r) { return inputs_of({{"x", {3, 6}}, {"g", {6}}, {"b", {6}}}, r); },
                     [](ParamStore& p) { return layer_norm(p.get("x"), p.get("g"), p.get("b")); });
  check_op_gradients("mean_max_rows", [](Rng& r) { return inputs_of({{"a", {5, 4}}}, r); },
                     [](ParamStore& p) { return concat_cols({mean_rows(p.get("a")), max_rows(p.get("a"))}); });
  check_op_gradients("concat_slice", [](Rng& r) { return inputs_of({{"a", {3, 4}}, {"b", {2, 4}}}, r); },
                     [](ParamStore& p) {
                       auto rows = concat_rows({p.get("a"), p.get("b")});
                       return slice_cols(slice_rows(rows, 1, 5), 1, 3);
                     });
  check_op_gradients("gather_reshape", [](Rng& r) { return inputs_of({{"a", {4, 3}}}, r); },
                     [](ParamStore& p) {
                       const std::size_t idx[] = {2, 0, 2, 3};
                       return reshape(gather_rows(p.get("a"), idx), {2, 6});
                     });
  check_op_gradients("unfold_pad", [](Rng& r) { return inputs_of({{"a", {3, 2}}}, r); },
                     [](ParamStore& p) { return unfold_rows(pad_rows(p.get("a"), 5), 3); });
  check_op_gradients("group_weighted_sum", [](Rng& r) { return inputs_of({{"w", {2, 3}}, {"v", {6, 4}}}, r); },
                     [](ParamStore& p) { return group_weighted_sum(p.get("w"), p.get("v")); });
  check_op_gradients("cross_entropy_ls", [](Rng& r) { return inputs_of({{"x", {3, 5}}}, r); },
                     [](ParamStore& p) {
                       const std::size_t gold[] = {1, 4, 0};
                       return cross_entropy_ls(p.get("x"), gold, 0.1);
                     });
  check_op_gradients("dropout_frozen", [](Rng& r) { return inputs_of({{"a", {4, 4}}}, r); },
                     [](ParamStore& p) {
                       Rng fixed(99);
                       return dropout(p.get("a"), 0.3, true, fixed);
                     });
  check_op_gradients("text_cnn", [](Rng& r) {
                       return inputs_of({{"x", {4, 3}}, {"f3", {9, 3}}, {"b3", {3}}, {"f4", {12, 3}}, {"b4", {3}},
                                         {"f5", {15, 3}}, {"b5", {3}}, {"ow", {9, 3}}, {"ob", {3}}}, r);
                     },
                     [](ParamStore& p) {
                       TextCnnWeights w{{3, 4, 5},
                                        {p.get("f3"), p.get("f4"), p.get("f5")},
                                        {p.get("b3"), p.get("b4"), p.get("b5")},
                                        p.get("ow"),
                                        p.get("ob")};
                       return text_cnn(p.get("x"), w);
                     });
}
