#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "spectral_forge/tensor.hpp"

namespace spectral_forge::nn {

/// Per-forward-pass context: training toggles dropout, rng drives any
/// stochastic op. The rng is owned by the training loop so runs with a fixed
/// seed stay bit-deterministic.
struct RunContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

// ---------------------------------------------------------------------------
// Layer primitives. All take/return tensors recorded on the gradient tape.
// ---------------------------------------------------------------------------

/// 1-D cross-correlation, stride 1, zero "same" padding (kernel must be odd).
/// x: [B, Cin, L], w: [Cout, Cin, k], bias: [Cout] -> [B, Cout, L].
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias);

/// Transposed 1-D convolution. x: [B, Cin, L], w: [Cin, Cout, k], bias: [Cout]
/// -> [B, Cout, (L-1)*stride - 2*pad + k].
Tensor conv1d_transposed(const Tensor& x, const Tensor& w, const Tensor& bias,
                         int stride, int pad);

/// Windowed maxima with stride == window; a partial window at the right edge
/// is kept. x: [B, C, L] -> [B, C, ceil(L/m)].
Tensor maxpool1d(const Tensor& x, int m);

/// Affine map. x: [B, F], w: [F, U], bias: [U] -> [B, U].
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double negative_slope);
Tensor tanh_act(const Tensor& x);

/// Inverted dropout: identity when p == 0 or ctx.training is false.
Tensor dropout(const Tensor& x, double p, const RunContext& ctx);

/// Row-wise softmax over the last dimension of a 2-D tensor.
Tensor softmax(const Tensor& x);

Tensor reshape(const Tensor& x, std::vector<int> shape);

/// Keeps the first new_len positions of the last axis. x: [B, C, L].
Tensor crop1d(const Tensor& x, int new_len);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// Elementwise mul * x + add_const.
Tensor affine_const(const Tensor& x, double mul, double add_const);
Tensor sum(const Tensor& x);
Tensor l1_norm(const Tensor& x);
/// Scalar view of one element (by flat index) for backprop from a single score.
Tensor pick(const Tensor& x, std::int64_t flat_index);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Class-weighted softmax cross-entropy on logits [B, C]:
///   sum_i w[t_i] * nll_i / sum_i w[t_i]
/// i.e. the batch mean of weighted terms normalized by the mean batch weight.
Tensor weighted_cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                              const std::vector<double>& class_weights);

enum class Reduction { Sum, Mean };

/// Squared-error loss. Sum reduces over every residual; Mean divides the sum
/// by the number of rows (samples).
Tensor mse_loss(const Tensor& target, const Tensor& prediction,
                Reduction reduction = Reduction::Sum);

struct InsufficientBatchError : std::runtime_error {
  InsufficientBatchError() : std::runtime_error("nt_xent needs at least 2 pairs (4 rows)") {}
};

/// Normalized-temperature cross entropy over cosine similarities.
/// z: [2B, d] where rows (i, i+B) are the positive pairs. Rows are
/// l2-normalized internally.
Tensor nt_xent(const Tensor& z, double temperature);

/// Unsupervised SGAN terms on an (N+1)-way logit head whose last column is
/// the synthetic class: real batches pay -log(1 - p_fake), fake batches pay
/// -log(p_fake). Mean over the batch.
Tensor sgan_unsupervised_loss(const Tensor& logits, bool real_batch);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::int64_t t = 0;
};

/// One Adam update with bias correction, reading each parameter's grad buffer.
/// The state is sized on first use and must keep matching the parameter list.
void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamConfig& cfg);

// ---------------------------------------------------------------------------
// Learning-rate schedule / early stopping
// ---------------------------------------------------------------------------

struct TrainSchedule {
  double lr0 = 1e-3;
  int plateau_patience = 3;      // epochs without improvement before lr cut
  double lr_factor = 0.7;
  int early_stop_patience = 5;   // epochs without improvement before stop
  int max_epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

struct ScheduleDecision {
  double lr;
  bool stop;
};

/// Pure function of the validation-loss history: the learning rate is cut by
/// lr_factor after plateau_patience epochs without strict improvement of the
/// best loss (the plateau counter restarts after each cut), and stop is set
/// after early_stop_patience consecutive non-improving epochs.
ScheduleDecision schedule_step(const std::vector<double>& val_loss_history,
                               const TrainSchedule& sched);

}  // namespace spectral_forge::nn
