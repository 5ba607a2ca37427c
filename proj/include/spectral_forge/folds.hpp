#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

namespace spectral_forge {

struct FoldPlan {
  int k = 5;
  std::vector<int> assignments;  // fold index per row
  std::uint64_t seed = 0;

  std::vector<int> rows_in_fold(int fold) const;
  std::vector<int> rows_not_in_fold(int fold) const;
};

/// Stratified k-fold: per-class round-robin after a seeded shuffle, so
/// per-class fold counts differ by at most one.
FoldPlan stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed);

/// Labeled/unlabeled partition for the semi-supervised protocols. The
/// labeled set is stratified by class (at least one labeled row per class).
struct SemiSupSplit {
  double labeled_fraction = 0.1;
  std::vector<int> labeled_rows;
  std::vector<int> unlabeled_rows;
  std::uint64_t seed = 0;
};

SemiSupSplit make_semisup_split(const std::vector<int>& labels,
                                const std::vector<int>& candidate_rows, double labeled_fraction,
                                std::uint64_t seed);

struct LabelLeakError : std::runtime_error {
  explicit LabelLeakError(int row)
      : std::runtime_error("label of unlabeled row " + std::to_string(row) + " was read") {}
};

/// Access-guarded label view: reads are counted per row, and rows marked
/// unlabeled refuse to answer. Semi-supervised runners source every label
/// through one of these so the "no peeking" contract is mechanically checked.
class GuardedLabels {
 public:
  GuardedLabels(std::vector<int> labels, const std::vector<int>& unlabeled_rows);

  int get(int row) const;  // throws LabelLeakError for unlabeled rows
  int size() const { return static_cast<int>(labels_.size()); }
  std::int64_t reads_of(int row) const { return (*read_counts_)[static_cast<size_t>(row)]; }
  std::int64_t unlabeled_reads() const;
  bool is_unlabeled(int row) const { return unlabeled_[static_cast<size_t>(row)]; }

 private:
  std::vector<int> labels_;
  std::vector<bool> unlabeled_;
  std::shared_ptr<std::vector<std::int64_t>> read_counts_;
};

}  // namespace spectral_forge
