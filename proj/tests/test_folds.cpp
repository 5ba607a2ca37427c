#include <map>

#include "doctest.h"
#include "spectral_forge/folds.hpp"

using namespace spectral_forge;

TEST_CASE("stratified_kfold: balanced and pigeonholed classes") {
  SUBCASE("10 samples of one class, k=5 -> 2 per fold") {
    const FoldPlan plan = stratified_kfold(std::vector<int>(10, 0), 5, 3);
    std::map<int, int> sizes;
    for (int f : plan.assignments) sizes[f]++;
    for (int f = 0; f < 5; ++f) CHECK(sizes[f] == 2);
  }
  SUBCASE("8 samples, k=5 -> fold sizes {2,2,2,1,1}") {
    const FoldPlan plan = stratified_kfold(std::vector<int>(8, 0), 5, 3);
    std::vector<int> sizes(5, 0);
    for (int f : plan.assignments) sizes[static_cast<size_t>(f)]++;
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<int>{1, 1, 2, 2, 2});
  }
  SUBCASE("same seed -> identical plan; different seed differs somewhere") {
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) labels.push_back(i % 6);
    const FoldPlan a = stratified_kfold(labels, 5, 11);
    const FoldPlan b = stratified_kfold(labels, 5, 11);
    CHECK(a.assignments == b.assignments);
  }
  SUBCASE("per-class fold counts differ by at most one") {
    std::vector<int> labels;
    for (int c = 0; c < 7; ++c)
      for (int i = 0; i < 8 + 3 * c; ++i) labels.push_back(c);
    const FoldPlan plan = stratified_kfold(labels, 5, 99);
    for (int c = 0; c < 7; ++c) {
      std::vector<int> per_fold(5, 0);
      for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == c) per_fold[static_cast<size_t>(plan.assignments[i])]++;
      const auto [mn, mx] = std::minmax_element(per_fold.begin(), per_fold.end());
      CHECK(*mx - *mn <= 1);
    }
  }
}

TEST_CASE("make_semisup_split: stratified, disjoint, deterministic") {
  std::vector<int> labels;
  std::vector<int> rows;
  for (int c = 0; c < 10; ++c)
    for (int i = 0; i < 12; ++i) {
      rows.push_back(static_cast<int>(labels.size()));
      labels.push_back(c);
    }
  const SemiSupSplit split = make_semisup_split(labels, rows, 0.25, 5);
  CHECK(split.labeled_rows.size() + split.unlabeled_rows.size() == rows.size());
  for (int r : split.labeled_rows)
    CHECK(std::find(split.unlabeled_rows.begin(), split.unlabeled_rows.end(), r) ==
          split.unlabeled_rows.end());
  // every class keeps at least one labeled row
  std::vector<int> labeled_per_class(10, 0);
  for (int r : split.labeled_rows) labeled_per_class[static_cast<size_t>(labels[static_cast<size_t>(r)])]++;
  for (int c = 0; c < 10; ++c) CHECK(labeled_per_class[static_cast<size_t>(c)] >= 1);

  const SemiSupSplit again = make_semisup_split(labels, rows, 0.25, 5);
  CHECK(again.labeled_rows == split.labeled_rows);
}

TEST_CASE("GuardedLabels: counts reads and refuses unlabeled rows") {
  GuardedLabels guard({7, 8, 9, 10}, {1, 3});
  CHECK(guard.get(0) == 7);
  CHECK(guard.get(0) == 7);
  CHECK(guard.reads_of(0) == 2);
  CHECK(guard.unlabeled_reads() == 0);
  CHECK_THROWS_AS(guard.get(1), LabelLeakError);
  CHECK(guard.unlabeled_reads() == 1);  // the refused read is recorded
  CHECK(guard.is_unlabeled(3));
}
