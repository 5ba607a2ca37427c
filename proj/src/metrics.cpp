#include "spectral_forge/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace spectral_forge {

double topk_accuracy(const std::vector<std::vector<double>>& probabilities,
                     const std::vector<int>& labels, int k) {
  if (probabilities.size() != labels.size() || probabilities.empty())
    throw std::invalid_argument("topk_accuracy: bad inputs");
  if (k < 1) throw std::invalid_argument("topk_accuracy: k must be >= 1");
  int hits = 0;
  for (size_t i = 0; i < probabilities.size(); ++i) {
    const auto& p = probabilities[i];
    std::vector<int> idx(p.size());
    for (size_t c = 0; c < p.size(); ++c) idx[c] = static_cast<int>(c);
    std::stable_sort(idx.begin(), idx.end(),
                     [&p](int a, int b) { return p[static_cast<size_t>(a)] > p[static_cast<size_t>(b)]; });
    const int kk = std::min<int>(k, static_cast<int>(p.size()));
    for (int j = 0; j < kk; ++j)
      if (idx[static_cast<size_t>(j)] == labels[i]) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(probabilities.size());
}

double confidence_gap(const std::vector<std::vector<double>>& probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("confidence_gap: empty input");
  double total = 0;
  for (const auto& p : probabilities) {
    if (p.size() < 2) throw std::invalid_argument("confidence_gap: needs >= 2 classes");
    double top1 = -1, top2 = -1;
    for (double v : p) {
      if (v > top1) {
        top2 = top1;
        top1 = v;
      } else if (v > top2) {
        top2 = v;
      }
    }
    total += top1 - top2;
  }
  return total / static_cast<double>(probabilities.size());
}

}  // namespace spectral_forge
