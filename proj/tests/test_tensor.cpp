#include "doctest.h"
#include "spectral_forge/nn.hpp"
#include "spectral_forge/tensor.hpp"

using namespace spectral_forge;

TEST_CASE("tensor construction and shape checks") {
  Tensor t = Tensor::zeros({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.shape() == std::vector<int>{2, 3});
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1.0, 2.0, 3.0}), ShapeMismatchError);
  CHECK(Tensor::scalar(3.5).item() == 3.5);
  CHECK_THROWS_AS(t.item(), ShapeMismatchError);
}

TEST_CASE("backward: sum gives all-ones gradient") {
  Tensor x = Tensor::from({4}, {1, 2, 3, 4}, true);
  backward(nn::sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward: sum of squares gives 2x") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tensor zero = Tensor::zeros({2});
  // sum(x^2) == mse(0, x)
  backward(nn::mse_loss(zero, x));
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward on a detached tensor throws") {
  Tensor x = Tensor::scalar(1.0);
  CHECK_THROWS_AS(backward(x), DetachedTensorError);
}

TEST_CASE("gradients accumulate across backward calls until zeroed") {
  Tensor x = Tensor::from({3}, {1, 1, 1}, true);
  Tensor s = nn::sum(x);
  backward(s);
  backward(s);
  CHECK(x.grad()[0] == 2.0);
  Tensor xt = x;
  xt.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("diamond-shaped graphs accumulate both paths") {
  Tensor x = Tensor::from({2}, {3, 5}, true);
  Tensor a = nn::scale(x, 2.0);
  Tensor b = nn::scale(x, 3.0);
  backward(nn::sum(nn::add(a, b)));
  CHECK(x.grad()[0] == doctest::Approx(5.0));
  CHECK(x.grad()[1] == doctest::Approx(5.0));
}
