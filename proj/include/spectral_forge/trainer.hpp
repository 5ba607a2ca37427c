#pragma once

#include <functional>
#include <vector>

#include "spectral_forge/model.hpp"
#include "spectral_forge/nn.hpp"
#include "spectral_forge/preprocess.hpp"

namespace spectral_forge {

struct TrainOptions {
  nn::TrainSchedule schedule;
  bool augment = false;
  AugmentationSpec augmentation;
  double augment_prob = 0.5;  // per-sample chance of drawing an augmentation
};

struct TrainResult {
  std::vector<double> train_loss;  // one entry per epoch
  std::vector<double> val_loss;
  int epochs_run = 0;
  double final_lr = 0;
};

/// w_c = N / (C * count_c) over the given training labels.
std::vector<double> inverse_frequency_weights(const std::vector<int>& labels, int num_classes);

/// Class-weighted cross-entropy training with the plateau/early-stop
/// schedule. label_of defaults to the dataset's labels; semi-supervised
/// callers pass a guarded view. Only trainable layers are updated.
TrainResult train_supervised(Model& model, const SpectralDataset& ds,
                             const std::vector<int>& train_rows,
                             const std::vector<int>& val_rows, const TrainOptions& opts,
                             std::function<int(int)> label_of = nullptr);

/// Eval-mode class probabilities, batched. Rows follow the order given.
std::vector<std::vector<double>> predict_probs(const Model& model, const SpectralDataset& ds,
                                               const std::vector<int>& rows);

/// Eval-mode probabilities on explicit row vectors.
std::vector<std::vector<double>> predict_probs_rows(const Model& model,
                                                    const std::vector<std::vector<double>>& rows);

/// Builds a [n, 1, L] batch tensor from dataset rows.
Tensor batch_tensor(const SpectralDataset& ds, const std::vector<int>& rows);

}  // namespace spectral_forge
