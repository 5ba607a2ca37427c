#include "spectral_forge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "spectral_forge/metrics.hpp"

namespace spectral_forge {

std::vector<double> inverse_frequency_weights(const std::vector<int>& labels, int num_classes) {
  std::vector<double> counts(static_cast<size_t>(num_classes), 0.0);
  for (int l : labels) counts[static_cast<size_t>(l)] += 1.0;
  const double n = static_cast<double>(labels.size());
  std::vector<double> w(static_cast<size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c)
    w[static_cast<size_t>(c)] =
        counts[static_cast<size_t>(c)] > 0 ? n / (num_classes * counts[static_cast<size_t>(c)])
                                           : 1.0;
  return w;
}

Tensor batch_tensor(const SpectralDataset& ds, const std::vector<int>& rows) {
  const int L = ds.target_len;
  std::vector<double> data;
  data.reserve(rows.size() * static_cast<size_t>(L));
  for (int r : rows) {
    const float* src = ds.row(r);
    for (int i = 0; i < L; ++i) data.push_back(static_cast<double>(src[i]));
  }
  return Tensor::from({static_cast<int>(rows.size()), 1, L}, std::move(data));
}

namespace {

Tensor batch_tensor_augmented(const SpectralDataset& ds, const std::vector<int>& rows,
                              const TrainOptions& opts, std::mt19937_64& rng) {
  if (!opts.augment) return batch_tensor(ds, rows);
  const int L = ds.target_len;
  std::vector<double> data;
  data.reserve(rows.size() * static_cast<size_t>(L));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int r : rows) {
    std::vector<double> row = ds.row_vec(r);
    if (coin(rng) < opts.augment_prob) row = augment_with_rng(row, opts.augmentation, rng);
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor::from({static_cast<int>(rows.size()), 1, L}, std::move(data));
}

double dataset_loss(const Model& model, const SpectralDataset& ds, const std::vector<int>& rows,
                    const std::vector<double>& class_weights,
                    const std::function<int(int)>& label_of) {
  nn::RunContext ctx;  // eval
  double total = 0, wsum = 0;
  const int chunk = 64;
  for (size_t start = 0; start < rows.size(); start += chunk) {
    const std::vector<int> part(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                rows.begin() + static_cast<std::ptrdiff_t>(
                                                   std::min(rows.size(), start + chunk)));
    Tensor x = batch_tensor(ds, part);
    std::vector<int> targets;
    targets.reserve(part.size());
    for (int r : part) targets.push_back(label_of(r));
    const Tensor logits = model.forward_logits(x, ctx);
    const Tensor loss = nn::weighted_cross_entropy(logits, targets, class_weights);
    // Re-aggregate so chunking does not change the value: loss is
    // sum(w*nll)/sum(w) per chunk.
    double w = 0;
    for (int t : targets) w += class_weights[static_cast<size_t>(t)];
    total += loss.item() * w;
    wsum += w;
  }
  return total / wsum;
}

}  // namespace

TrainResult train_supervised(Model& model, const SpectralDataset& ds,
                             const std::vector<int>& train_rows,
                             const std::vector<int>& val_rows, const TrainOptions& opts,
                             std::function<int(int)> label_of) {
  if (!label_of) label_of = [&ds](int r) { return ds.labels[static_cast<size_t>(r)]; };

  std::vector<int> train_labels;
  train_labels.reserve(train_rows.size());
  for (int r : train_rows) train_labels.push_back(label_of(r));
  const auto class_weights = inverse_frequency_weights(train_labels, ds.num_classes());

  std::mt19937_64 rng(opts.schedule.seed);
  auto params = model.parameters(/*trainable_only=*/true);
  nn::AdamState adam;
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = opts.schedule.lr0;

  TrainResult result;
  std::vector<int> order = train_rows;
  for (int epoch = 0; epoch < opts.schedule.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    nn::RunContext train_ctx{true, &rng};
    double epoch_loss = 0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += opts.schedule.batch_size) {
      const std::vector<int> part(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(
                              std::min(order.size(), start + opts.schedule.batch_size)));
      Tensor x = batch_tensor_augmented(ds, part, opts, rng);
      std::vector<int> targets;
      targets.reserve(part.size());
      for (int r : part) targets.push_back(label_of(r));

      model.zero_grad();
      const Tensor logits = model.forward_logits(x, train_ctx);
      const Tensor loss = nn::weighted_cross_entropy(logits, targets, class_weights);
      backward(loss);
      nn::adam_step(params, adam, adam_cfg);
      epoch_loss += loss.item();
      ++batches;
    }
    result.train_loss.push_back(epoch_loss / std::max(1, batches));
    result.val_loss.push_back(val_rows.empty()
                                  ? result.train_loss.back()
                                  : dataset_loss(model, ds, val_rows, class_weights, label_of));
    result.epochs_run = epoch + 1;

    const auto decision = nn::schedule_step(result.val_loss, opts.schedule);
    adam_cfg.lr = decision.lr;
    result.final_lr = decision.lr;
    if (decision.stop) break;
  }
  return result;
}

std::vector<std::vector<double>> predict_probs(const Model& model, const SpectralDataset& ds,
                                               const std::vector<int>& rows) {
  nn::RunContext ctx;  // eval
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  const int chunk = 64;
  for (size_t start = 0; start < rows.size(); start += chunk) {
    const std::vector<int> part(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                rows.begin() + static_cast<std::ptrdiff_t>(
                                                   std::min(rows.size(), start + chunk)));
    Tensor x = batch_tensor(ds, part);
    const Tensor probs = model.forward(x, ctx);
    const int C = probs.dim(1);
    for (size_t i = 0; i < part.size(); ++i)
      out.emplace_back(probs.values().begin() + static_cast<std::ptrdiff_t>(i * C),
                       probs.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * C));
  }
  return out;
}

std::vector<std::vector<double>> predict_probs_rows(const Model& model,
                                                    const std::vector<std::vector<double>>& rows) {
  nn::RunContext ctx;
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  if (rows.empty()) return out;
  const int L = static_cast<int>(rows[0].size());
  const int chunk = 64;
  for (size_t start = 0; start < rows.size(); start += chunk) {
    const size_t end = std::min(rows.size(), start + chunk);
    std::vector<double> data;
    data.reserve((end - start) * static_cast<size_t>(L));
    for (size_t i = start; i < end; ++i) data.insert(data.end(), rows[i].begin(), rows[i].end());
    Tensor x = Tensor::from({static_cast<int>(end - start), 1, L}, std::move(data));
    const Tensor probs = model.forward(x, ctx);
    const int C = probs.dim(1);
    for (size_t i = 0; i < end - start; ++i)
      out.emplace_back(probs.values().begin() + static_cast<std::ptrdiff_t>(i * C),
                       probs.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * C));
  }
  return out;
}

}  // namespace spectral_forge
