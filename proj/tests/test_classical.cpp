#include <cmath>
#include <random>

#include "doctest.h"
#include "spectral_forge/classical.hpp"
#include "spectral_forge/folds.hpp"

using namespace spectral_forge;

TEST_CASE("knn: zero-distance match, tie-breaks, majority") {
  const std::vector<std::vector<double>> train = {{0, 0}, {10, 0}, {0, 10}};
  const std::vector<int> labels = {0, 1, 2};
  KnnConfig k1;

  CHECK(knn_classify(train, labels, {10, 0}, k1) == 1);

  // two equidistant neighbors -> lower training index wins at k=1
  const std::vector<std::vector<double>> pair = {{-1, 0}, {1, 0}};
  CHECK(knn_classify(pair, {4, 2}, {0, 0}, k1) == 4);

  // 3-point line, k=3 -> global majority
  const std::vector<std::vector<double>> line = {{0}, {1}, {2}};
  CHECK(knn_classify(line, {1, 1, 0}, {0.9}, KnnConfig{3}) == 1);

  // vote tie at k=2 -> smaller class index
  const std::vector<std::vector<double>> sq = {{0}, {1}};
  CHECK(knn_classify(sq, {3, 1}, {0.5}, KnnConfig{2}) == 1);

  CHECK_THROWS_AS(knn_classify({}, {}, {0}, k1), EmptyTrainingSetError);
}

TEST_CASE("knn: k=1 is exactly nearest neighbor (insertion property)") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-5, 5);
  std::vector<std::vector<double>> train;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    train.push_back({dist(rng), dist(rng), dist(rng)});
    labels.push_back(i % 5);
  }
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> q = {dist(rng), dist(rng), dist(rng)};
    auto train2 = train;
    auto labels2 = labels;
    train2.push_back(q);
    labels2.push_back(99);
    CHECK(knn_classify(train2, labels2, q, KnnConfig{1}) == 99);
  }
}

namespace {

// Independent dual-QP oracle: projected gradient ascent on
//   max  sum(a) - 0.5 aᵀ Q a,  Q_ij = y_i y_j K_ij
//   s.t. 0 <= a <= C, sum(a_i y_i) = 0
// with alternating projections onto the box and the hyperplane.
std::vector<double> dual_qp_oracle(const std::vector<std::vector<double>>& x,
                                   const std::vector<int>& y, double C, double gamma,
                                   int iters = 200000, double lr = 1e-3) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> Q(static_cast<size_t>(n),
                                     std::vector<double>(static_cast<size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = euclidean(x[static_cast<size_t>(i)], x[static_cast<size_t>(j)]);
      Q[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          y[static_cast<size_t>(i)] * y[static_cast<size_t>(j)] * std::exp(-gamma * d * d);
    }
  std::vector<double> a(static_cast<size_t>(n), 0.0);
  for (int it = 0; it < iters; ++it) {
    std::vector<double> grad(static_cast<size_t>(n), 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        grad[static_cast<size_t>(i)] -= Q[static_cast<size_t>(i)][static_cast<size_t>(j)] *
                                        a[static_cast<size_t>(j)];
    for (int i = 0; i < n; ++i) a[static_cast<size_t>(i)] += lr * grad[static_cast<size_t>(i)];
    for (int proj = 0; proj < 50; ++proj) {
      double viol = 0;
      for (int i = 0; i < n; ++i) viol += a[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
      for (int i = 0; i < n; ++i)
        a[static_cast<size_t>(i)] -= viol * y[static_cast<size_t>(i)] / n;
      for (auto& v : a) v = std::clamp(v, 0.0, C);
    }
  }
  return a;
}

double oracle_decision(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                       const std::vector<double>& a, double gamma, double b,
                       const std::vector<double>& q) {
  double s = b;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = euclidean(x[i], q);
    s += a[i] * y[i] * std::exp(-gamma * d * d);
  }
  return s;
}

}  // namespace

TEST_CASE("svm: trivially separable two points") {
  const std::vector<std::vector<double>> x = {{0.0}, {10.0}};
  const SvmModel m = svm_train(x, {0, 1}, SvmConfig{1.0, 0.05, 1e-3, 100, 0});
  CHECK(m.predict({0.0}) == 0);
  CHECK(m.predict({10.0}) == 1);
  CHECK(m.training_accuracy() == 1.0);
}

TEST_CASE("svm: XOR layout vs independent dual-QP oracle") {
  const std::vector<std::vector<double>> x = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<int> labels = {0, 0, 1, 1};
  SvmConfig cfg;
  cfg.C = 10;
  cfg.gamma = 1.0;
  const SvmModel m = svm_train(x, labels, cfg);
  for (size_t i = 0; i < x.size(); ++i) CHECK(m.predict(x[i]) == labels[i]);

  // Oracle on the same binary problem (+1 = class 0).
  const std::vector<int> y = {1, 1, -1, -1};
  const auto alpha = dual_qp_oracle(x, y, cfg.C, cfg.gamma);
  // bias from a free support vector (all are free here by symmetry)
  double b_sum = 0;
  int b_count = 0;
  for (size_t i = 0; i < x.size(); ++i)
    if (alpha[i] > 1e-6 && alpha[i] < cfg.C - 1e-6) {
      double s = 0;
      for (size_t j = 0; j < x.size(); ++j) {
        const double d = euclidean(x[j], x[i]);
        s += alpha[j] * y[j] * std::exp(-cfg.gamma * d * d);
      }
      b_sum += y[i] - s;
      ++b_count;
    }
  REQUIRE(b_count > 0);
  const double b = b_sum / b_count;
  for (size_t i = 0; i < x.size(); ++i) {
    const double oracle = oracle_decision(x, y, alpha, cfg.gamma, b, x[i]);
    CHECK(oracle * (y[i] > 0 ? 1 : -1) > 0);  // oracle separates
    const double mine = m.decision(m.problems()[0], x[i]);
    CHECK(std::abs(mine - oracle) < 5e-2);  // same optimum up to solver tolerance
  }
}

TEST_CASE("svm: conflicting duplicate labels terminate and report training error") {
  const std::vector<std::vector<double>> x = {{1.0}, {1.0}, {3.0}, {3.0}};
  const std::vector<int> labels = {0, 1, 0, 1};
  SvmConfig cfg;
  cfg.max_passes = 5;
  const SvmModel m = svm_train(x, labels, cfg);
  CHECK(m.training_accuracy() < 1.0);
}

TEST_CASE("svm: single class rejected, invariance to training permutation") {
  CHECK_THROWS_AS(svm_train({{0.0}, {1.0}}, {3, 3}, {}), SingleClassInputError);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-1, 1);
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
  for (int i = 0; i < 24; ++i) {
    const int c = i % 3;
    x.push_back({dist(rng) + 4.0 * c, dist(rng)});
    labels.push_back(c);
  }
  const SvmModel m1 = svm_train(x, labels, {});
  std::vector<int> perm(x.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<double>> x2;
  std::vector<int> l2;
  for (int p : perm) {
    x2.push_back(x[static_cast<size_t>(p)]);
    l2.push_back(labels[static_cast<size_t>(p)]);
  }
  const SvmModel m2 = svm_train(x2, l2, {});
  for (int rep = 0; rep < 30; ++rep) {
    const std::vector<double> q = {dist(rng) * 6, dist(rng)};
    CHECK(m1.predict(q) == m2.predict(q));
  }
}

TEST_CASE("grid_search: single cell, ties keep first listed") {
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (int i = 0; i < 30; ++i) {
    const int c = i % 3;
    x.push_back({dist(rng) + 3.0 * c});
    labels.push_back(c);
  }
  const FoldPlan plan = stratified_kfold(labels, 5, 7);

  const auto single = grid_search_knn(x, labels, plan.assignments, 5, {3});
  CHECK(single.best_index == 0);
  CHECK(single.cells.size() == 1);

  // perfectly separable -> every k scores 1.0; tie keeps the first cell
  const auto tied = grid_search_knn(x, labels, plan.assignments, 5, {1, 3, 5});
  CHECK(tied.cells[0].score == 1.0);
  CHECK(tied.best_index == 0);
}

TEST_CASE("class_distance_stats: hand enumeration and the singleton error") {
  const std::vector<std::vector<double>> f = {{0}, {2}, {10}, {12}};
  const std::vector<int> labels = {0, 0, 1, 1};
  const auto stats = class_distance_stats(f, labels);
  CHECK(stats.intra_mean == doctest::Approx(2.0));
  CHECK(stats.inter_mean == doctest::Approx(10.0));  // (10 + 12 + 8 + 10) / 4

  CHECK_THROWS_AS(class_distance_stats({{0}, {10}}, {0, 1}), NoIntraPairsError);
}
