#pragma once

#include <vector>

namespace spectral_forge {

/// Fraction of rows whose true label is among the k highest-probability
/// classes. Probability ties resolve toward the smaller class index.
double topk_accuracy(const std::vector<std::vector<double>>& probabilities,
                     const std::vector<int>& labels, int k);

/// Mean over rows of (p_top1 - p_top2).
double confidence_gap(const std::vector<std::vector<double>>& probabilities);

}  // namespace spectral_forge
