#include <random>

#include "doctest.h"
#include "grad_check.hpp"
#include "spectral_forge/nn.hpp"

using namespace spectral_forge;
using sf_test::finite_difference_max_err;

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t = Tensor::zeros(shape);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

// Distinct values so maxpool argmaxes sit away from FD-sized perturbations.
Tensor spread_tensor(std::vector<int> shape, std::mt19937_64& rng) {
  Tensor t = random_tensor(shape, rng);
  std::vector<size_t> order(t.values().size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (size_t i = 0; i < order.size(); ++i) t.values()[order[i]] += 0.01 * static_cast<double>(i);
  return t;
}

constexpr double kTol = 1e-3;

}  // namespace

TEST_CASE("grad: conv1d vs finite differences, 3 seeds x 3 shapes") {
  struct Shape {
    int b, cin, len, cout, k;
  };
  const Shape shapes[] = {{1, 1, 8, 1, 3}, {2, 3, 10, 4, 5}, {3, 2, 16, 3, 7}};
  for (std::uint64_t seed : {11u, 22u, 33u}) {
    for (const auto& s : shapes) {
      std::mt19937_64 rng(seed);
      Tensor x = random_tensor({s.b, s.cin, s.len}, rng);
      Tensor w = random_tensor({s.cout, s.cin, s.k}, rng);
      Tensor bias = random_tensor({s.cout}, rng);
      Tensor target = random_tensor({s.b, s.cout, s.len}, rng);
      auto loss = [&] { return nn::mse_loss(target, nn::conv1d(x, w, bias)); };
      CHECK(finite_difference_max_err({x, w, bias}, loss) < kTol);
    }
  }
}

TEST_CASE("grad: transposed conv1d vs finite differences") {
  struct Shape {
    int b, cin, len, cout, k, stride, pad;
  };
  const Shape shapes[] = {{1, 2, 5, 3, 6, 2, 2}, {2, 3, 7, 2, 4, 2, 1}, {1, 1, 6, 2, 3, 1, 1}};
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    for (const auto& s : shapes) {
      std::mt19937_64 rng(seed);
      Tensor x = random_tensor({s.b, s.cin, s.len}, rng);
      Tensor w = random_tensor({s.cin, s.cout, s.k}, rng);
      Tensor bias = random_tensor({s.cout}, rng);
      const int lout = (s.len - 1) * s.stride - 2 * s.pad + s.k;
      Tensor target = random_tensor({s.b, s.cout, lout}, rng);
      auto loss = [&] {
        return nn::mse_loss(target, nn::conv1d_transposed(x, w, bias, s.stride, s.pad));
      };
      CHECK(finite_difference_max_err({x, w, bias}, loss) < kTol);
    }
  }
}

TEST_CASE("grad: maxpool1d vs finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (int m : {2, 3, 4}) {
      std::mt19937_64 rng(seed);
      Tensor x = spread_tensor({2, 2, 11}, rng);
      Tensor target = random_tensor({2, 2, (11 + m - 1) / m}, rng);
      auto loss = [&] { return nn::mse_loss(target, nn::maxpool1d(x, m)); };
      CHECK(finite_difference_max_err({x}, loss) < kTol);
    }
  }
}

TEST_CASE("grad: dense vs finite differences") {
  for (std::uint64_t seed : {3u, 14u, 15u}) {
    for (int units : {1, 4, 9}) {
      std::mt19937_64 rng(seed);
      Tensor x = random_tensor({3, 5}, rng);
      Tensor w = random_tensor({5, units}, rng);
      Tensor bias = random_tensor({units}, rng);
      Tensor target = random_tensor({3, units}, rng);
      auto loss = [&] { return nn::mse_loss(target, nn::dense(x, w, bias)); };
      CHECK(finite_difference_max_err({x, w, bias}, loss) < kTol);
    }
  }
}

TEST_CASE("grad: activations, softmax, reshape, crop, rescale, pick, l1") {
  for (std::uint64_t seed : {21u, 42u, 63u}) {
    std::mt19937_64 rng(seed);
    Tensor x = random_tensor({2, 6}, rng);
    Tensor t2 = random_tensor({2, 6}, rng);

    auto relu_loss = [&] { return nn::mse_loss(t2, nn::relu(x)); };
    CHECK(finite_difference_max_err({x}, relu_loss) < kTol);

    auto leaky_loss = [&] { return nn::mse_loss(t2, nn::leaky_relu(x, 0.01)); };
    CHECK(finite_difference_max_err({x}, leaky_loss) < kTol);

    auto tanh_loss = [&] { return nn::mse_loss(t2, nn::tanh_act(x)); };
    CHECK(finite_difference_max_err({x}, tanh_loss) < kTol);

    auto softmax_loss = [&] { return nn::mse_loss(t2, nn::softmax(x)); };
    CHECK(finite_difference_max_err({x}, softmax_loss) < kTol);

    auto reshape_loss = [&] {
      return nn::mse_loss(nn::reshape(t2, {3, 4}), nn::reshape(x, {3, 4}));
    };
    CHECK(finite_difference_max_err({x}, reshape_loss) < kTol);

    Tensor x3 = random_tensor({2, 2, 7}, rng);
    Tensor t3 = random_tensor({2, 2, 4}, rng);
    auto crop_loss = [&] { return nn::mse_loss(t3, nn::crop1d(x3, 4)); };
    CHECK(finite_difference_max_err({x3}, crop_loss) < kTol);

    auto rescale_loss = [&] { return nn::mse_loss(t2, nn::affine_const(x, 0.5, 0.5)); };
    CHECK(finite_difference_max_err({x}, rescale_loss) < kTol);

    auto pick_loss = [&] { return nn::pick(x, 7); };
    CHECK(finite_difference_max_err({x}, pick_loss) < kTol);

    auto l1_loss = [&] { return nn::l1_norm(x); };
    CHECK(finite_difference_max_err({x}, l1_loss) < kTol);

    auto add_scale_loss = [&] { return nn::sum(nn::add(nn::scale(x, 2.5), t2)); };
    CHECK(finite_difference_max_err({x}, add_scale_loss) < kTol);
  }
}

TEST_CASE("grad: dropout with a replayed mask") {
  for (std::uint64_t seed : {9u, 10u, 11u}) {
    std::mt19937_64 data_rng(seed);
    Tensor x = random_tensor({3, 8}, data_rng);
    Tensor target = random_tensor({3, 8}, data_rng);
    auto loss = [&] {
      std::mt19937_64 mask_rng(1234);  // identical mask on every re-evaluation
      nn::RunContext ctx{true, &mask_rng};
      return nn::mse_loss(target, nn::dropout(x, 0.5, ctx));
    };
    CHECK(finite_difference_max_err({x}, loss) < kTol);
  }
}

TEST_CASE("grad: weighted cross entropy") {
  for (std::uint64_t seed : {2u, 4u, 8u}) {
    std::mt19937_64 rng(seed);
    Tensor logits = random_tensor({4, 5}, rng, -2, 2);
    const std::vector<int> targets = {0, 3, 2, 4};
    const std::vector<double> weights = {1.0, 2.0, 0.5, 1.5, 3.0};
    auto loss = [&] { return nn::weighted_cross_entropy(logits, targets, weights); };
    CHECK(finite_difference_max_err({logits}, loss) < kTol);
  }
}

TEST_CASE("grad: mse both reductions") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 rng(seed);
    Tensor y = random_tensor({3, 4}, rng);
    Tensor p = random_tensor({3, 4}, rng);
    auto sum_loss = [&] { return nn::mse_loss(y, p, nn::Reduction::Sum); };
    CHECK(finite_difference_max_err({y, p}, sum_loss) < kTol);
    auto mean_loss = [&] { return nn::mse_loss(y, p, nn::Reduction::Mean); };
    CHECK(finite_difference_max_err({y, p}, mean_loss) < kTol);
  }
}

TEST_CASE("grad: nt_xent") {
  for (std::uint64_t seed : {13u, 17u, 19u}) {
    std::mt19937_64 rng(seed);
    Tensor z = random_tensor({6, 4}, rng);
    for (double tau : {0.5, 1.0}) {
      auto loss = [&] { return nn::nt_xent(z, tau); };
      CHECK(finite_difference_max_err({z}, loss) < kTol);
    }
  }
}

TEST_CASE("grad: sgan unsupervised terms") {
  for (std::uint64_t seed : {23u, 29u, 31u}) {
    std::mt19937_64 rng(seed);
    Tensor logits = random_tensor({3, 6}, rng, -2, 2);
    auto real_loss = [&] { return nn::sgan_unsupervised_loss(logits, true); };
    CHECK(finite_difference_max_err({logits}, real_loss) < kTol);
    auto fake_loss = [&] { return nn::sgan_unsupervised_loss(logits, false); };
    CHECK(finite_difference_max_err({logits}, fake_loss) < kTol);
  }
}
