#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spectral_forge {

struct EmptyTrainingSetError : std::runtime_error {
  EmptyTrainingSetError() : std::runtime_error("training set is empty") {}
};
struct SingleClassInputError : std::runtime_error {
  SingleClassInputError() : std::runtime_error("svm needs at least 2 classes") {}
};
struct SolverIterationCapError : std::runtime_error {
  SolverIterationCapError() : std::runtime_error("smo solver hit the iteration cap") {}
};

struct KnnConfig {
  int k = 1;  // Euclidean metric
};

/// Majority label among the k Euclidean-nearest training rows. Distance ties
/// break toward the lower training index, vote ties toward the smaller class
/// index.
int knn_classify(const std::vector<std::vector<double>>& train_features,
                 const std::vector<int>& train_labels, const std::vector<double>& query,
                 const KnnConfig& cfg);

struct SvmConfig {
  double C = 10.0;
  double gamma = 0.01;  // rbf kernel exp(-gamma * ||x - x'||^2)
  double tol = 1e-3;    // KKT tolerance
  int max_passes = 200; // consecutive full passes without progress before stopping
  std::uint64_t seed = 0;
};

/// One-vs-one soft-margin RBF SVMs trained by sequential minimal
/// optimization; prediction by pairwise voting with ties broken toward the
/// smaller class index.
class SvmModel {
 public:
  struct BinaryProblem {
    int class_a, class_b;            // decision > 0 votes class_a
    std::vector<int> support_rows;   // indices into the stored training set
    std::vector<double> alpha_y;     // alpha_i * y_i for support rows
    double bias = 0;
    bool hit_iteration_cap = false;
  };

  int predict(const std::vector<double>& x) const;
  double decision(const BinaryProblem& p, const std::vector<double>& x) const;
  double training_accuracy() const;
  bool any_iteration_capped() const;
  const std::vector<BinaryProblem>& problems() const { return problems_; }

 private:
  friend SvmModel svm_train(const std::vector<std::vector<double>>&, const std::vector<int>&,
                            const SvmConfig&);
  std::vector<std::vector<double>> train_x_;
  std::vector<int> train_y_;
  int num_classes_ = 0;
  SvmConfig cfg_;
  std::vector<BinaryProblem> problems_;
};

SvmModel svm_train(const std::vector<std::vector<double>>& features,
                   const std::vector<int>& labels, const SvmConfig& cfg);

// --- grid search -------------------------------------------------------------

struct GridCell {
  std::string name;                 // e.g. "k=1" or "C=10,gamma=0.01"
  double score = 0;                 // stratified k-fold mean top-1
  std::vector<double> fold_scores;
};

struct GridSearchResult {
  int best_index = 0;
  std::vector<GridCell> cells;
};

/// Evaluates every cell with the supplied fold assignments (stratified
/// k-fold mean top-1); ties keep the first-listed cell.
GridSearchResult grid_search_knn(const std::vector<std::vector<double>>& features,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& fold_of_row, int fold_count,
                                 const std::vector<int>& k_values);

GridSearchResult grid_search_svm(const std::vector<std::vector<double>>& features,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& fold_of_row, int fold_count,
                                 const std::vector<double>& c_values,
                                 const std::vector<double>& gamma_values,
                                 const SvmConfig& base = {});

// --- feature-space statistics -------------------------------------------------

struct ClassDistanceStats {
  double intra_mean = 0;  // mean Euclidean distance over same-class pairs
  double inter_mean = 0;  // mean over cross-class pairs
};

struct NoIntraPairsError : std::runtime_error {
  NoIntraPairsError() : std::runtime_error("intra-class distance needs a class with >= 2 members") {}
};

ClassDistanceStats class_distance_stats(const std::vector<std::vector<double>>& features,
                                        const std::vector<int>& labels);

double euclidean(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace spectral_forge
