#include "spectral_forge/folds.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace spectral_forge {

std::vector<int> FoldPlan::rows_in_fold(int fold) const {
  std::vector<int> out;
  for (size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> FoldPlan::rows_not_in_fold(int fold) const {
  std::vector<int> out;
  for (size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(static_cast<int>(i));
  return out;
}

FoldPlan stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), -1);

  std::map<int, std::vector<int>> by_class;
  for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));

  std::mt19937_64 rng(seed);
  // Rotating fold offset so small classes do not all land in fold 0.
  int offset = 0;
  for (auto& [label, rows] : by_class) {
    (void)label;
    std::shuffle(rows.begin(), rows.end(), rng);
    for (size_t i = 0; i < rows.size(); ++i)
      plan.assignments[static_cast<size_t>(rows[i])] = static_cast<int>((i + offset) % k);
    offset = (offset + static_cast<int>(rows.size())) % k;
  }
  return plan;
}

SemiSupSplit make_semisup_split(const std::vector<int>& labels,
                                const std::vector<int>& candidate_rows, double labeled_fraction,
                                std::uint64_t seed) {
  if (labeled_fraction <= 0 || labeled_fraction > 1)
    throw std::invalid_argument("labeled_fraction must be in (0, 1]");
  SemiSupSplit split;
  split.labeled_fraction = labeled_fraction;
  split.seed = seed;

  std::map<int, std::vector<int>> by_class;
  for (int r : candidate_rows) by_class[labels[static_cast<size_t>(r)]].push_back(r);

  std::mt19937_64 rng(seed);
  // Per-class quota, rounded to the nearest row with at least one labeled.
  double carry = 0;
  for (auto& [label, rows] : by_class) {
    (void)label;
    std::shuffle(rows.begin(), rows.end(), rng);
    const double want = labeled_fraction * static_cast<double>(rows.size()) + carry;
    int take = std::max(1, static_cast<int>(std::lround(want)));
    take = std::min(take, static_cast<int>(rows.size()));
    carry = want - take;
    for (size_t i = 0; i < rows.size(); ++i)
      (i < static_cast<size_t>(take) ? split.labeled_rows : split.unlabeled_rows).push_back(rows[i]);
  }
  std::sort(split.labeled_rows.begin(), split.labeled_rows.end());
  std::sort(split.unlabeled_rows.begin(), split.unlabeled_rows.end());
  return split;
}

GuardedLabels::GuardedLabels(std::vector<int> labels, const std::vector<int>& unlabeled_rows)
    : labels_(std::move(labels)),
      unlabeled_(labels_.size(), false),
      read_counts_(std::make_shared<std::vector<std::int64_t>>(labels_.size(), 0)) {
  for (int r : unlabeled_rows) unlabeled_[static_cast<size_t>(r)] = true;
}

int GuardedLabels::get(int row) const {
  (*read_counts_)[static_cast<size_t>(row)]++;
  if (unlabeled_[static_cast<size_t>(row)]) throw LabelLeakError(row);
  return labels_[static_cast<size_t>(row)];
}

std::int64_t GuardedLabels::unlabeled_reads() const {
  std::int64_t n = 0;
  for (size_t i = 0; i < labels_.size(); ++i)
    if (unlabeled_[i]) n += (*read_counts_)[i];
  return n;
}

}  // namespace spectral_forge
