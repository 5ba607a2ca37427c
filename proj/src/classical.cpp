#include "spectral_forge/classical.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace spectral_forge {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("euclidean: dimension mismatch");
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

int knn_classify(const std::vector<std::vector<double>>& train_features,
                 const std::vector<int>& train_labels, const std::vector<double>& query,
                 const KnnConfig& cfg) {
  if (train_features.empty()) throw EmptyTrainingSetError();
  if (cfg.k < 1 || cfg.k > static_cast<int>(train_features.size()))
    throw std::invalid_argument("knn: k must be in [1, training size]");

  std::vector<std::pair<double, int>> dist;  // (distance, train index)
  dist.reserve(train_features.size());
  for (size_t i = 0; i < train_features.size(); ++i)
    dist.emplace_back(euclidean(train_features[i], query), static_cast<int>(i));
  // Equal distances keep the lower training index first.
  std::stable_sort(dist.begin(), dist.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::map<int, int> votes;
  for (int i = 0; i < cfg.k; ++i) votes[train_labels[static_cast<size_t>(dist[static_cast<size_t>(i)].second)]]++;
  int best_label = -1, best_count = -1;
  for (const auto& [label, count] : votes)  // map order = ascending label: vote ties -> smaller
    if (count > best_count) {
      best_count = count;
      best_label = label;
    }
  return best_label;
}

// ---------------------------------------------------------------------------
// SVM via SMO
// ---------------------------------------------------------------------------

namespace {

// Platt's SMO on one binary subproblem with a precomputed RBF kernel.
struct SmoResult {
  std::vector<double> alpha;
  double bias = 0;
  bool capped = false;
};

SmoResult smo_solve(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                    const SvmConfig& cfg, std::mt19937_64& rng) {
  const int n = static_cast<int>(x.size());
  std::vector<double> K(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double d = euclidean(x[static_cast<size_t>(i)], x[static_cast<size_t>(j)]);
      K[static_cast<size_t>(i) * n + j] = K[static_cast<size_t>(j) * n + i] =
          std::exp(-cfg.gamma * d * d);
    }

  SmoResult r;
  r.alpha.assign(static_cast<size_t>(n), 0.0);
  double b = 0;
  auto f = [&](int i) {
    double s = 0;
    for (int j = 0; j < n; ++j)
      if (r.alpha[static_cast<size_t>(j)] != 0)
        s += r.alpha[static_cast<size_t>(j)] * y[static_cast<size_t>(j)] *
             K[static_cast<size_t>(j) * n + i];
    return s + b;
  };

  int passes = 0;
  int total_iters = 0;
  const int hard_cap = std::max(10000, 2000 * n);
  std::uniform_int_distribution<int> pick(0, n - 1);
  while (passes < cfg.max_passes) {
    int changed = 0;
    for (int i = 0; i < n; ++i) {
      if (++total_iters > hard_cap) {
        r.capped = true;
        r.bias = b;
        return r;
      }
      const double Ei = f(i) - y[static_cast<size_t>(i)];
      const double ai = r.alpha[static_cast<size_t>(i)];
      const bool violates = (y[static_cast<size_t>(i)] * Ei < -cfg.tol && ai < cfg.C) ||
                            (y[static_cast<size_t>(i)] * Ei > cfg.tol && ai > 0);
      if (!violates) continue;
      int j = pick(rng);
      if (j == i) j = (j + 1) % n;
      const double Ej = f(j) - y[static_cast<size_t>(j)];
      double aj = r.alpha[static_cast<size_t>(j)];
      const double ai_old = ai, aj_old = aj;
      double L, H;
      if (y[static_cast<size_t>(i)] != y[static_cast<size_t>(j)]) {
        L = std::max(0.0, aj - ai);
        H = std::min(cfg.C, cfg.C + aj - ai);
      } else {
        L = std::max(0.0, ai + aj - cfg.C);
        H = std::min(cfg.C, ai + aj);
      }
      if (L >= H) continue;
      const double eta = 2 * K[static_cast<size_t>(i) * n + j] - K[static_cast<size_t>(i) * n + i] -
                         K[static_cast<size_t>(j) * n + j];
      if (eta >= 0) continue;
      aj = aj_old - y[static_cast<size_t>(j)] * (Ei - Ej) / eta;
      aj = std::clamp(aj, L, H);
      if (std::abs(aj - aj_old) < 1e-7) continue;
      const double ai_new = ai_old + y[static_cast<size_t>(i)] * y[static_cast<size_t>(j)] * (aj_old - aj);
      r.alpha[static_cast<size_t>(i)] = ai_new;
      r.alpha[static_cast<size_t>(j)] = aj;
      const double b1 = b - Ei - y[static_cast<size_t>(i)] * (ai_new - ai_old) * K[static_cast<size_t>(i) * n + i] -
                        y[static_cast<size_t>(j)] * (aj - aj_old) * K[static_cast<size_t>(i) * n + j];
      const double b2 = b - Ej - y[static_cast<size_t>(i)] * (ai_new - ai_old) * K[static_cast<size_t>(i) * n + j] -
                        y[static_cast<size_t>(j)] * (aj - aj_old) * K[static_cast<size_t>(j) * n + j];
      if (ai_new > 0 && ai_new < cfg.C)
        b = b1;
      else if (aj > 0 && aj < cfg.C)
        b = b2;
      else
        b = (b1 + b2) / 2;
      ++changed;
    }
    passes = changed == 0 ? passes + 1 : 0;
  }
  r.bias = b;
  return r;
}

}  // namespace

double SvmModel::decision(const BinaryProblem& p, const std::vector<double>& x) const {
  double s = p.bias;
  for (size_t i = 0; i < p.support_rows.size(); ++i) {
    const auto& sv = train_x_[static_cast<size_t>(p.support_rows[i])];
    const double d = euclidean(sv, x);
    s += p.alpha_y[i] * std::exp(-cfg_.gamma * d * d);
  }
  return s;
}

int SvmModel::predict(const std::vector<double>& x) const {
  std::vector<int> votes(static_cast<size_t>(num_classes_), 0);
  for (const auto& p : problems_) {
    const double d = decision(p, x);
    votes[static_cast<size_t>(d > 0 ? p.class_a : p.class_b)]++;
  }
  int best = 0;
  for (int c = 1; c < num_classes_; ++c)
    if (votes[static_cast<size_t>(c)] > votes[static_cast<size_t>(best)]) best = c;
  return best;
}

double SvmModel::training_accuracy() const {
  int correct = 0;
  for (size_t i = 0; i < train_x_.size(); ++i)
    if (predict(train_x_[i]) == train_y_[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(train_x_.size());
}

bool SvmModel::any_iteration_capped() const {
  return std::any_of(problems_.begin(), problems_.end(),
                     [](const BinaryProblem& p) { return p.hit_iteration_cap; });
}

SvmModel svm_train(const std::vector<std::vector<double>>& features,
                   const std::vector<int>& labels, const SvmConfig& cfg) {
  if (features.empty()) throw EmptyTrainingSetError();
  if (cfg.C <= 0 || cfg.gamma <= 0) throw std::invalid_argument("svm: C and gamma must be > 0");
  const std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw SingleClassInputError();

  SvmModel model;
  model.train_x_ = features;
  model.train_y_ = labels;
  model.num_classes_ = *classes.rbegin() + 1;
  model.cfg_ = cfg;

  std::mt19937_64 rng(cfg.seed);
  const std::vector<int> class_list(classes.begin(), classes.end());
  for (size_t a = 0; a < class_list.size(); ++a) {
    for (size_t bb = a + 1; bb < class_list.size(); ++bb) {
      const int ca = class_list[a], cb = class_list[bb];
      std::vector<std::vector<double>> x;
      std::vector<int> y, rows;
      for (size_t i = 0; i < features.size(); ++i) {
        if (labels[i] == ca || labels[i] == cb) {
          x.push_back(features[i]);
          y.push_back(labels[i] == ca ? 1 : -1);
          rows.push_back(static_cast<int>(i));
        }
      }
      const SmoResult r = smo_solve(x, y, cfg, rng);
      SvmModel::BinaryProblem p;
      p.class_a = ca;
      p.class_b = cb;
      p.bias = r.bias;
      p.hit_iteration_cap = r.capped;
      for (size_t i = 0; i < r.alpha.size(); ++i)
        if (r.alpha[i] > 1e-12) {
          p.support_rows.push_back(rows[i]);
          p.alpha_y.push_back(r.alpha[i] * y[i]);
        }
      model.problems_.push_back(std::move(p));
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

namespace {

template <class TrainPredict>
GridCell evaluate_cell(const std::string& name, const std::vector<std::vector<double>>& features,
                       const std::vector<int>& labels, const std::vector<int>& fold_of_row,
                       int fold_count, TrainPredict&& run_fold) {
  GridCell cell;
  cell.name = name;
  for (int f = 0; f < fold_count; ++f) {
    std::vector<std::vector<double>> train_x;
    std::vector<int> train_y;
    std::vector<int> test_rows;
    for (size_t i = 0; i < features.size(); ++i) {
      if (fold_of_row[i] == f)
        test_rows.push_back(static_cast<int>(i));
      else {
        train_x.push_back(features[i]);
        train_y.push_back(labels[i]);
      }
    }
    int correct = 0;
    run_fold(train_x, train_y, test_rows, correct);
    cell.fold_scores.push_back(test_rows.empty()
                                   ? 0.0
                                   : static_cast<double>(correct) / static_cast<double>(test_rows.size()));
  }
  cell.score = std::accumulate(cell.fold_scores.begin(), cell.fold_scores.end(), 0.0) /
               static_cast<double>(fold_count);
  return cell;
}

}  // namespace

GridSearchResult grid_search_knn(const std::vector<std::vector<double>>& features,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& fold_of_row, int fold_count,
                                 const std::vector<int>& k_values) {
  if (k_values.empty()) throw std::invalid_argument("grid_search: empty grid");
  GridSearchResult out;
  for (int k : k_values) {
    KnnConfig kc{k};
    out.cells.push_back(evaluate_cell(
        "k=" + std::to_string(k), features, labels, fold_of_row, fold_count,
        [&](const auto& tx, const auto& ty, const auto& test_rows, int& correct) {
          for (int r : test_rows)
            if (knn_classify(tx, ty, features[static_cast<size_t>(r)], kc) ==
                labels[static_cast<size_t>(r)])
              ++correct;
        }));
  }
  for (size_t i = 1; i < out.cells.size(); ++i)
    if (out.cells[i].score > out.cells[static_cast<size_t>(out.best_index)].score)
      out.best_index = static_cast<int>(i);
  return out;
}

GridSearchResult grid_search_svm(const std::vector<std::vector<double>>& features,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& fold_of_row, int fold_count,
                                 const std::vector<double>& c_values,
                                 const std::vector<double>& gamma_values, const SvmConfig& base) {
  if (c_values.empty() || gamma_values.empty()) throw std::invalid_argument("grid_search: empty grid");
  GridSearchResult out;
  for (double c : c_values)
    for (double g : gamma_values) {
      SvmConfig cfg = base;
      cfg.C = c;
      cfg.gamma = g;
      std::ostringstream name;
      name << "C=" << c << ",gamma=" << g;
      out.cells.push_back(evaluate_cell(
          name.str(), features, labels, fold_of_row, fold_count,
          [&](const auto& tx, const auto& ty, const auto& test_rows, int& correct) {
            const SvmModel m = svm_train(tx, ty, cfg);
            for (int r : test_rows)
              if (m.predict(features[static_cast<size_t>(r)]) == labels[static_cast<size_t>(r)])
                ++correct;
          }));
    }
  for (size_t i = 1; i < out.cells.size(); ++i)
    if (out.cells[i].score > out.cells[static_cast<size_t>(out.best_index)].score)
      out.best_index = static_cast<int>(i);
  return out;
}

ClassDistanceStats class_distance_stats(const std::vector<std::vector<double>>& features,
                                        const std::vector<int>& labels) {
  if (features.size() != labels.size() || features.empty())
    throw std::invalid_argument("class_distance_stats: bad inputs");
  double intra = 0, inter = 0;
  std::int64_t n_intra = 0, n_inter = 0;
  for (size_t i = 0; i < features.size(); ++i)
    for (size_t j = i + 1; j < features.size(); ++j) {
      const double d = euclidean(features[i], features[j]);
      if (labels[i] == labels[j]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  if (n_intra == 0) throw NoIntraPairsError();
  ClassDistanceStats s;
  s.intra_mean = intra / static_cast<double>(n_intra);
  s.inter_mean = n_inter > 0 ? inter / static_cast<double>(n_inter) : 0.0;
  return s;
}

}  // namespace spectral_forge
