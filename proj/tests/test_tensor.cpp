#include <doctest.h>

#include <cmath>
#include <random>

#include "dtf/errors.hpp"
#include "dtf/tensor.hpp"
#include "gradcheck.hpp"

using namespace dtf;
using dtf::testing::gradient_check;
using dtf::testing::project;
using dtf::testing::random_values;

namespace {

Tensor mat(std::size_t r, std::size_t c, std::vector<double> v) { return Tensor::from({r, c}, std::move(v)); }

void check_close(std::span<const double> got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

}  // namespace

TEST_CASE("matmul identity and scalar cases") {
  std::mt19937_64 rng(1);
  const auto m = mat(3, 3, random_values(9, rng));
  const auto eye = mat(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto out = ops::matmul(eye, m);
  CHECK(std::equal(out.data().begin(), out.data().end(), m.data().begin()));
  CHECK(ops::matmul(mat(1, 1, {2}), mat(1, 1, {3})).item() == 6.0);
}

TEST_CASE("matmul matches a triple-loop oracle") {
  std::mt19937_64 rng(2);
  const auto a = random_values(12, rng), b = random_values(15, rng);
  const auto out = ops::matmul(mat(4, 3, a), mat(3, 5, b));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < 3; ++p) acc += a[i * 3 + p] * b[p * 5 + j];
      CHECK(std::abs(out.at(i, j) - acc) <= 1e-12);
    }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  CHECK_THROWS_AS(ops::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
  CHECK_THROWS_AS(ops::add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), DimensionError);
}

TEST_CASE("softmax rows") {
  check_close(ops::softmax_rows(mat(1, 3, {0, 0, 0})).data(), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
  check_close(ops::softmax_rows(mat(1, 2, {0, std::log(2.0)})).data(), {1.0 / 3, 2.0 / 3}, 1e-15);
  const auto big = ops::softmax_rows(mat(1, 2, {1000, 1000.5}));
  const auto small = ops::softmax_rows(mat(1, 2, {0, 0.5}));
  for (double v : big.data()) CHECK(std::isfinite(v));
  check_close(big.data(), {small.data()[0], small.data()[1]}, 1e-12);
}

TEST_CASE("layer norm") {
  const auto g3 = Tensor::full({3}, 1.0), b3 = Tensor::zeros({3});
  check_close(ops::layer_norm(mat(1, 3, {5, 5, 5}), g3, b3).data(), {0, 0, 0}, 0.0);
  const auto g2 = Tensor::full({2}, 1.0), b2 = Tensor::zeros({2});
  // Population variance 1 plus eps.
  const double s = 1.0 / std::sqrt(1.0 + 1e-5);
  check_close(ops::layer_norm(mat(1, 2, {1, 3}), g2, b2).data(), {-s, s}, 1e-15);

  std::mt19937_64 rng(3);
  const auto x = random_values(24, rng, -3, 3), gain = random_values(8, rng), bias = random_values(8, rng);
  const auto out = ops::layer_norm(mat(3, 8, x), Tensor::from({8}, gain), Tensor::from({8}, bias));
  for (std::size_t r = 0; r < 3; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < 8; ++c) mean += x[r * 8 + c];
    mean /= 8.0;
    double var = 0.0;
    for (std::size_t c = 0; c < 8; ++c) var += (x[r * 8 + c] - mean) * (x[r * 8 + c] - mean);
    var /= 8.0;
    for (std::size_t c = 0; c < 8; ++c) {
      const double want = (x[r * 8 + c] - mean) / std::sqrt(var + 1e-5) * gain[c] + bias[c];
      CHECK(std::abs(out.at(r, c) - want) <= 1e-10);
    }
  }
}

TEST_CASE("elementwise helpers") {
  check_close(ops::relu(Tensor::from({3}, {-1, 0, 2})).data(), {0, 0, 2}, 0.0);
  const auto left = mat(2, 3, {1, 2, 3, 4, 5, 6});
  const auto cat = ops::concat_cols(left, mat(2, 2, {7, 8, 9, 10}));
  CHECK(cat.shape() == Shape{2, 5});
  check_close(cat.data(), {1, 2, 3, 7, 8, 4, 5, 6, 9, 10}, 0.0);
  check_close(ops::slice_cols(cat, 0, 3).data(), {1, 2, 3, 4, 5, 6}, 0.0);
  check_close(ops::transpose(left).data(), {1, 4, 2, 5, 3, 6}, 0.0);
  check_close(ops::mean_rows(left).data(), {2.5, 3.5, 4.5}, 0.0);
  check_close(ops::repeat_rows(mat(1, 2, {1, 2}), 3).data(), {1, 2, 1, 2, 1, 2}, 0.0);
}

TEST_CASE("mse_reduce matches a scalar loop") {
  std::mt19937_64 rng(4);
  const auto x = random_values(30, rng), y = random_values(30, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < 30; ++i) want += (x[i] - y[i]) * (x[i] - y[i]);
  want /= 30.0;
  CHECK(std::abs(ops::mse_reduce(mat(5, 6, x), mat(5, 6, y)).item() - want) <= 1e-12);
}

TEST_CASE("non-finite results abort") {
  CHECK_THROWS_AS(ops::scale(Tensor::from({1}, {1e308}), 1e10), NumericError);
}

TEST_CASE("backward of sum is all ones") {
  auto w = Tensor::parameter({2, 3}, {1, 2, 3, 4, 5, 6});
  GradientTape tape;
  TapeScope scope(tape);
  tape.backward(ops::sum(w));
  check_close(w.grad(), {1, 1, 1, 1, 1, 1}, 0.0);
}

TEST_CASE("linear regression gradient closed form") {
  std::mt19937_64 rng(5);
  const auto wv = random_values(3, rng), xv = random_values(12, rng), yv = random_values(4, rng);
  auto w = Tensor::parameter({1, 3}, wv);
  const auto x = mat(3, 4, xv), y = mat(1, 4, yv);
  {
    GradientTape tape;
    TapeScope scope(tape);
    tape.backward(ops::mse_reduce(ops::matmul(w, x), y));
  }
  // d/dw = 2/n (w·x − y) xᵀ
  for (std::size_t p = 0; p < 3; ++p) {
    double want = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      double pred = 0.0;
      for (std::size_t q = 0; q < 3; ++q) pred += wv[q] * xv[q * 4 + j];
      want += 2.0 / 4.0 * (pred - yv[j]) * xv[p * 4 + j];
    }
    CHECK(std::abs(w.grad()[p] - want) <= 1e-10);
  }
}

TEST_CASE("repeated backward accumulates leaf gradients") {
  auto w = Tensor::parameter({2}, {1, 2});
  GradientTape tape;
  TapeScope scope(tape);
  const auto loss = ops::sum(ops::mul(w, w));
  tape.backward(loss);
  tape.backward(loss);
  check_close(w.grad(), {4, 8}, 0.0);
}

TEST_CASE("no gradients flow without a tape or to constants") {
  auto w = Tensor::parameter({2}, {1, 2});
  const auto c = Tensor::from({2}, {3, 4});
  GradientTape tape;
  {
    NoTapeScope off;
    const auto detached = ops::mul(w, c);
    CHECK_FALSE(detached.requires_grad());
  }
  TapeScope scope(tape);
  tape.backward(ops::sum(ops::mul(w, c)));
  check_close(w.grad(), {3, 4}, 0.0);
  CHECK(c.grad().empty());
}

TEST_CASE("every primitive passes a finite-difference check") {
  std::mt19937_64 rng(6);
  auto a = Tensor::from({3, 4}, random_values(12, rng));
  auto b = Tensor::from({3, 4}, random_values(12, rng));
  auto m = Tensor::from({4, 2}, random_values(8, rng));
  auto g = Tensor::from({4}, random_values(4, rng, 0.5, 1.5));
  auto bias = Tensor::from({4}, random_values(4, rng));
  const auto w34 = random_values(12, rng), w32 = random_values(6, rng), w43 = random_values(12, rng);
  const auto w14 = random_values(4, rng), w34b = random_values(12, rng);

  struct Case {
    const char* name;
    std::function<Tensor()> f;
    std::vector<Tensor> inputs;
  };
  const std::vector<Case> cases = {
      {"matmul", [&] { return project(ops::matmul(a, m), w32); }, {a, m}},
      {"add", [&] { return project(ops::add(a, b), w34); }, {a, b}},
      {"sub", [&] { return project(ops::sub(a, b), w34); }, {a, b}},
      {"mul", [&] { return project(ops::mul(a, b), w34); }, {a, b}},
      {"scale", [&] { return project(ops::scale(a, -1.7), w34); }, {a}},
      {"add_row_bias", [&] { return project(ops::add_row_bias(a, bias), w34); }, {a, bias}},
      {"relu", [&] { return project(ops::relu(a), w34); }, {a}},
      {"sigmoid", [&] { return project(ops::sigmoid(a), w34); }, {a}},
      {"tanh", [&] { return project(ops::tanh(a), w34); }, {a}},
      {"softmax_rows", [&] { return project(ops::softmax_rows(a), w34); }, {a}},
      {"layer_norm", [&] { return project(ops::layer_norm(a, g, bias), w34); }, {a, g, bias}},
      {"concat_cols", [&] { return project(ops::slice_cols(ops::concat_cols(a, b), 2, 6), w34b); }, {a, b}},
      {"transpose", [&] { return project(ops::transpose(a), w43); }, {a}},
      {"mean_rows", [&] { return project(ops::mean_rows(a), w14); }, {a}},
      {"repeat_rows", [&] { return project(ops::repeat_rows(ops::mean_rows(a), 3), w34); }, {a}},
      {"mse_reduce", [&] { return ops::mse_reduce(a, b); }, {a, b}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const auto r = gradient_check(c.f, c.inputs);
    CHECK(r.max_relative_error <= 1e-4);
    CHECK(r.checked > 0);
  }
}
