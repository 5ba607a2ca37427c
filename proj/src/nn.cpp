#include "spectral_forge/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace spectral_forge::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;
using DynStride = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
using StridedMap = Eigen::Map<MatRM, 0, DynStride>;
using CStridedMap = Eigen::Map<const MatRM, 0, DynStride>;

using NodePtr = std::shared_ptr<detail::TensorNode>;

NodePtr make_node(std::vector<int> shape, std::vector<NodePtr> parents) {
  auto n = std::make_shared<detail::TensorNode>();
  n->value.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
  n->shape = std::move(shape);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return n;
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ShapeMismatchError(msg);
}

// Tap view of a [Cout, Cin, K] weight block at kernel index j.
CStridedMap weight_tap(const double* w, int cout, int cin, int k, int j) {
  return CStridedMap(w + j, cout, cin, DynStride(cin * k, k));
}
StridedMap weight_tap(double* w, int cout, int cin, int k, int j) {
  return StridedMap(w + j, cout, cin, DynStride(cin * k, k));
}

// Shared core of conv1d / conv1d_transposed: stride-1 cross-correlation with
// an arbitrary symmetric zero pad. out[b,co,t] = sum_{ci,j} w[co,ci,j] *
// x[b,ci,t+j-pad].
void corr1d_value(const double* x, const double* w, const double* bias, double* out,
                  int B, int Cin, int L, int Cout, int K, int pad, int Lout) {
#pragma omp parallel for schedule(static)
  for (int b = 0; b < B; ++b) {
    CMapM X(x + static_cast<size_t>(b) * Cin * L, Cin, L);
    MapM O(out + static_cast<size_t>(b) * Cout * Lout, Cout, Lout);
    for (int co = 0; co < Cout; ++co) O.row(co).setConstant(bias ? bias[co] : 0.0);
    for (int j = 0; j < K; ++j) {
      const int d = j - pad;
      const int t0 = std::max(0, -d);
      const int t1 = std::min(Lout - 1, L - 1 - d);
      const int len = t1 - t0 + 1;
      if (len <= 0) continue;
      O.middleCols(t0, len).noalias() +=
          weight_tap(w, Cout, Cin, K, j) * X.middleCols(t0 + d, len);
    }
  }
}

void corr1d_grad_x(const double* gout, const double* w, double* gx, int B, int Cin, int L,
                   int Cout, int K, int pad, int Lout) {
#pragma omp parallel for schedule(static)
  for (int b = 0; b < B; ++b) {
    CMapM GO(gout + static_cast<size_t>(b) * Cout * Lout, Cout, Lout);
    MapM GX(gx + static_cast<size_t>(b) * Cin * L, Cin, L);
    for (int j = 0; j < K; ++j) {
      const int d = j - pad;
      const int t0 = std::max(0, -d);
      const int t1 = std::min(Lout - 1, L - 1 - d);
      const int len = t1 - t0 + 1;
      if (len <= 0) continue;
      GX.middleCols(t0 + d, len).noalias() +=
          weight_tap(w, Cout, Cin, K, j).transpose() * GO.middleCols(t0, len);
    }
  }
}

void corr1d_grad_w(const double* gout, const double* x, double* gw, int B, int Cin, int L,
                   int Cout, int K, int pad, int Lout) {
  // Taps own disjoint slices of gw, so the parallel loop runs over j.
#pragma omp parallel for schedule(static)
  for (int j = 0; j < K; ++j) {
    const int d = j - pad;
    const int t0 = std::max(0, -d);
    const int t1 = std::min(Lout - 1, L - 1 - d);
    const int len = t1 - t0 + 1;
    if (len <= 0) continue;
    auto GWj = weight_tap(gw, Cout, Cin, K, j);
    for (int b = 0; b < B; ++b) {
      CMapM GO(gout + static_cast<size_t>(b) * Cout * Lout, Cout, Lout);
      CMapM X(x + static_cast<size_t>(b) * Cin * L, Cin, L);
      GWj.noalias() += GO.middleCols(t0, len) * X.middleCols(t0 + d, len).transpose();
    }
  }
}

void corr1d_grad_bias(const double* gout, double* gb, int B, int Cout, int Lout) {
  for (int b = 0; b < B; ++b) {
    CMapM GO(gout + static_cast<size_t>(b) * Cout * Lout, Cout, Lout);
    Eigen::Map<Eigen::VectorXd> GB(gb, Cout);
    GB += GO.rowwise().sum();
  }
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias) {
  check(x.ndim() == 3, "conv1d: input must be [B, Cin, L], got " + shape_str(x.shape()));
  check(w.ndim() == 3, "conv1d: weight must be [Cout, Cin, k]");
  check(w.dim(1) == x.dim(1), "conv1d: channel mismatch between input " + shape_str(x.shape()) +
                                  " and weight " + shape_str(w.shape()));
  check(w.dim(2) % 2 == 1, "conv1d: kernel size must be odd for same padding");
  check(bias.ndim() == 1 && bias.dim(0) == w.dim(0), "conv1d: bias must be [Cout]");

  const int B = x.dim(0), Cin = x.dim(1), L = x.dim(2), Cout = w.dim(0), K = w.dim(2);
  const int pad = (K - 1) / 2;

  auto out = make_node({B, Cout, L}, {x.node(), w.node(), bias.node()});
  corr1d_value(x.data(), w.data(), bias.data(), out->value.data(), B, Cin, L, Cout, K, pad, L);

  out->backprop = [B, Cin, L, Cout, K, pad](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    auto& wn = *self.parents[1];
    auto& bn = *self.parents[2];
    if (xn.requires_grad) {
      xn.ensure_grad();
      corr1d_grad_x(self.grad.data(), wn.value.data(), xn.grad.data(), B, Cin, L, Cout, K, pad, L);
    }
    if (wn.requires_grad) {
      wn.ensure_grad();
      corr1d_grad_w(self.grad.data(), xn.value.data(), wn.grad.data(), B, Cin, L, Cout, K, pad, L);
    }
    if (bn.requires_grad) {
      bn.ensure_grad();
      corr1d_grad_bias(self.grad.data(), bn.grad.data(), B, Cout, L);
    }
  };
  return Tensor::wrap(out);
}

Tensor conv1d_transposed(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
                         int pad) {
  check(x.ndim() == 3, "conv1d_transposed: input must be [B, Cin, L]");
  check(w.ndim() == 3 && w.dim(0) == x.dim(1), "conv1d_transposed: weight must be [Cin, Cout, k]");
  check(stride >= 1 && pad >= 0, "conv1d_transposed: bad stride/pad");
  const int B = x.dim(0), Cin = x.dim(1), L = x.dim(2);
  const int Cout = w.dim(1), K = w.dim(2);
  const int Lout = (L - 1) * stride - 2 * pad + K;
  check(Lout >= 1, "conv1d_transposed: output length collapsed");
  check(bias.ndim() == 1 && bias.dim(0) == Cout, "conv1d_transposed: bias must be [Cout]");

  // Equivalent stride-1 form: zero-stuff the input and cross-correlate with
  // the flipped, transposed kernel at pad K-1-pad.
  const int Ls = (L - 1) * stride + 1;
  const int qpad = K - 1 - pad;
  check(qpad >= 0, "conv1d_transposed: pad must be < kernel size");

  auto out = make_node({B, Cout, Lout}, {x.node(), w.node(), bias.node()});

  auto stuff = [=](const double* src, std::vector<double>& dst) {
    dst.assign(static_cast<size_t>(B) * Cin * Ls, 0.0);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < Cin; ++c) {
        const double* s = src + (static_cast<size_t>(b) * Cin + c) * L;
        double* d = dst.data() + (static_cast<size_t>(b) * Cin + c) * Ls;
        for (int l = 0; l < L; ++l) d[l * stride] = s[l];
      }
  };
  auto flip = [=](const double* src, std::vector<double>& dst) {
    // [Cin, Cout, K] -> [Cout, Cin, K] with kernel axis reversed
    dst.resize(static_cast<size_t>(Cout) * Cin * K);
    for (int ci = 0; ci < Cin; ++ci)
      for (int co = 0; co < Cout; ++co)
        for (int j = 0; j < K; ++j)
          dst[(static_cast<size_t>(co) * Cin + ci) * K + (K - 1 - j)] =
              src[(static_cast<size_t>(ci) * Cout + co) * K + j];
  };

  std::vector<double> xs, wf;
  stuff(x.data(), xs);
  flip(w.data(), wf);
  corr1d_value(xs.data(), wf.data(), bias.data(), out->value.data(), B, Cin, Ls, Cout, K, qpad,
               Lout);

  out->backprop = [=](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    auto& wn = *self.parents[1];
    auto& bn = *self.parents[2];
    if (xn.requires_grad) {
      xn.ensure_grad();
      std::vector<double> wfl, gxs(static_cast<size_t>(B) * Cin * Ls, 0.0);
      flip(wn.value.data(), wfl);
      corr1d_grad_x(self.grad.data(), wfl.data(), gxs.data(), B, Cin, Ls, Cout, K, qpad, Lout);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < Cin; ++c) {
          const double* s = gxs.data() + (static_cast<size_t>(b) * Cin + c) * Ls;
          double* d = xn.grad.data() + (static_cast<size_t>(b) * Cin + c) * L;
          for (int l = 0; l < L; ++l) d[l] += s[l * stride];
        }
    }
    if (wn.requires_grad) {
      wn.ensure_grad();
      std::vector<double> xst, gwf(static_cast<size_t>(Cout) * Cin * K, 0.0);
      stuff(xn.value.data(), xst);
      corr1d_grad_w(self.grad.data(), xst.data(), gwf.data(), B, Cin, Ls, Cout, K, qpad, Lout);
      for (int ci = 0; ci < Cin; ++ci)
        for (int co = 0; co < Cout; ++co)
          for (int j = 0; j < K; ++j)
            wn.grad[(static_cast<size_t>(ci) * Cout + co) * K + j] +=
                gwf[(static_cast<size_t>(co) * Cin + ci) * K + (K - 1 - j)];
    }
    if (bn.requires_grad) {
      bn.ensure_grad();
      corr1d_grad_bias(self.grad.data(), bn.grad.data(), B, Cout, Lout);
    }
  };
  return Tensor::wrap(out);
}

Tensor maxpool1d(const Tensor& x, int m) {
  check(x.ndim() == 3, "maxpool1d: input must be [B, C, L]");
  check(m >= 1, "maxpool1d: pool size must be >= 1");
  const int B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const int Lo = (L + m - 1) / m;

  auto out = make_node({B, C, Lo}, {x.node()});
  auto argmax = std::make_shared<std::vector<int>>(static_cast<size_t>(B) * C * Lo);
  const double* xd = x.data();
  double* od = out->value.data();
#pragma omp parallel for schedule(static)
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* row = xd + (static_cast<size_t>(b) * C + c) * L;
      double* orow = od + (static_cast<size_t>(b) * C + c) * Lo;
      int* arow = argmax->data() + (static_cast<size_t>(b) * C + c) * Lo;
      for (int wdx = 0; wdx < Lo; ++wdx) {
        const int lo = wdx * m;
        const int hi = std::min(L, lo + m);
        int best = lo;
        for (int t = lo + 1; t < hi; ++t)
          if (row[t] > row[best]) best = t;
        orow[wdx] = row[best];
        arow[wdx] = best;
      }
    }

  out->backprop = [B, C, L, Lo, argmax](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    xn.ensure_grad();
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(self.grad.size()); ++i) {
      const std::int64_t row = i / Lo;
      xn.grad[row * L + (*argmax)[static_cast<size_t>(i)]] += self.grad[static_cast<size_t>(i)];
    }
  };
  return Tensor::wrap(out);
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& bias) {
  check(x.ndim() == 2, "dense: input must be [B, F], got " + shape_str(x.shape()));
  check(w.ndim() == 2 && w.dim(0) == x.dim(1),
        "dense: weight " + shape_str(w.shape()) + " incompatible with input " +
            shape_str(x.shape()));
  check(bias.ndim() == 1 && bias.dim(0) == w.dim(1), "dense: bias must be [U]");
  const int B = x.dim(0), F = x.dim(1), U = w.dim(1);

  auto out = make_node({B, U}, {x.node(), w.node(), bias.node()});
  CMapM X(x.data(), B, F), W(w.data(), F, U);
  MapM O(out->value.data(), B, U);
  O.noalias() = X * W;
  O.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data(), U);

  out->backprop = [B, F, U](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    auto& wn = *self.parents[1];
    auto& bn = *self.parents[2];
    CMapM GO(self.grad.data(), B, U);
    if (xn.requires_grad) {
      xn.ensure_grad();
      MapM GX(xn.grad.data(), B, F);
      CMapM W2(wn.value.data(), F, U);
      GX.noalias() += GO * W2.transpose();
    }
    if (wn.requires_grad) {
      wn.ensure_grad();
      MapM GW(wn.grad.data(), F, U);
      CMapM X2(xn.value.data(), B, F);
      GW.noalias() += X2.transpose() * GO;
    }
    if (bn.requires_grad) {
      bn.ensure_grad();
      Eigen::Map<Eigen::RowVectorXd>(bn.grad.data(), U) += GO.colwise().sum();
    }
  };
  return Tensor::wrap(out);
}

namespace {

template <class Fwd, class Slope>
Tensor elementwise(const Tensor& x, Fwd fwd, Slope slope_from_xy) {
  auto out = make_node(x.shape(), {x.node()});
  const size_t n = x.values().size();
  for (size_t i = 0; i < n; ++i) out->value[i] = fwd(x.values()[i]);
  out->backprop = [slope_from_xy](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    xn.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      xn.grad[i] += self.grad[i] * slope_from_xy(xn.value[i], self.value[i]);
  };
  return Tensor::wrap(out);
}

}  // namespace

Tensor relu(const Tensor& x) {
  return elementwise(
      x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double negative_slope) {
  return elementwise(
      x, [negative_slope](double v) { return v > 0 ? v : negative_slope * v; },
      [negative_slope](double v, double) { return v > 0 ? 1.0 : negative_slope; });
}

Tensor tanh_act(const Tensor& x) {
  return elementwise(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor dropout(const Tensor& x, double p, const RunContext& ctx) {
  if (!ctx.training || p == 0.0) return x;
  check(p > 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
  check(ctx.rng != nullptr, "dropout: training mode needs an rng");
  auto out = make_node(x.shape(), {x.node()});
  auto mask = std::make_shared<std::vector<double>>(x.values().size());
  std::bernoulli_distribution keep(1.0 - p);
  const double inv = 1.0 / (1.0 - p);
  for (size_t i = 0; i < mask->size(); ++i) {
    (*mask)[i] = keep(*ctx.rng) ? inv : 0.0;
    out->value[i] = x.values()[i] * (*mask)[i];
  }
  out->backprop = [mask](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    xn.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) xn.grad[i] += self.grad[i] * (*mask)[i];
  };
  return Tensor::wrap(out);
}

Tensor softmax(const Tensor& x) {
  check(x.ndim() == 2, "softmax: input must be [B, C]");
  const int B = x.dim(0), C = x.dim(1);
  auto out = make_node(x.shape(), {x.node()});
  for (int b = 0; b < B; ++b) {
    const double* row = x.data() + static_cast<size_t>(b) * C;
    double* orow = out->value.data() + static_cast<size_t>(b) * C;
    const double mx = *std::max_element(row, row + C);
    double z = 0;
    for (int c = 0; c < C; ++c) z += (orow[c] = std::exp(row[c] - mx));
    for (int c = 0; c < C; ++c) orow[c] /= z;
  }
  out->backprop = [B, C](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    xn.ensure_grad();
    for (int b = 0; b < B; ++b) {
      const double* y = self.value.data() + static_cast<size_t>(b) * C;
      const double* gy = self.grad.data() + static_cast<size_t>(b) * C;
      double* gx = xn.grad.data() + static_cast<size_t>(b) * C;
      double dot = 0;
      for (int c = 0; c < C; ++c) dot += gy[c] * y[c];
      for (int c = 0; c < C; ++c) gx[c] += y[c] * (gy[c] - dot);
    }
  };
  return Tensor::wrap(out);
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  check(shape_numel(shape) == x.size(), "reshape: element count mismatch from " +
                                            shape_str(x.shape()) + " to " + shape_str(shape));
  auto out = make_node(std::move(shape), {x.node()});
  out->value = x.values();
  out->backprop = [](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    xn.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) xn.grad[i] += self.grad[i];
  };
  return Tensor::wrap(out);
}

Tensor crop1d(const Tensor& x, int new_len) {
  check(x.ndim() == 3, "crop1d: input must be [B, C, L]");
  const int B = x.dim(0), C = x.dim(1), L = x.dim(2);
  check(new_len >= 1 && new_len <= L, "crop1d: bad target length");
  if (new_len == L) return x;
  auto out = make_node({B, C, new_len}, {x.node()});
  for (int r = 0; r < B * C; ++r)
    std::copy_n(x.data() + static_cast<size_t>(r) * L, new_len,
                out->value.data() + static_cast<size_t>(r) * new_len);
  out->backprop = [B, C, L, new_len](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    xn.ensure_grad();
    for (int r = 0; r < B * C; ++r)
      for (int t = 0; t < new_len; ++t)
        xn.grad[static_cast<size_t>(r) * L + t] += self.grad[static_cast<size_t>(r) * new_len + t];
  };
  return Tensor::wrap(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
  auto out = make_node(a.shape(), {a.node(), b.node()});
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.values()[i] + b.values()[i];
  out->backprop = [](detail::TensorNode& self) {
    for (auto& pn : self.parents) {
      if (!pn->requires_grad) continue;
      pn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pn->grad[i] += self.grad[i];
    }
  };
  return Tensor::wrap(out);
}

Tensor scale(const Tensor& x, double factor) {
  return elementwise(
      x, [factor](double v) { return factor * v; }, [factor](double, double) { return factor; });
}

Tensor affine_const(const Tensor& x, double mul, double add_const) {
  return elementwise(
      x, [mul, add_const](double v) { return mul * v + add_const; },
      [mul](double, double) { return mul; });
}

Tensor pick(const Tensor& x, std::int64_t flat_index) {
  check(flat_index >= 0 && flat_index < x.size(), "pick: index out of range");
  auto out = make_node({1}, {x.node()});
  out->value[0] = x.values()[static_cast<size_t>(flat_index)];
  out->backprop = [flat_index](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    xn.ensure_grad();
    xn.grad[static_cast<size_t>(flat_index)] += self.grad[0];
  };
  return Tensor::wrap(out);
}

Tensor sum(const Tensor& x) {
  auto out = make_node({1}, {x.node()});
  double s = 0;
  for (double v : x.values()) s += v;
  out->value[0] = s;
  out->backprop = [](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    xn.ensure_grad();
    for (auto& g : xn.grad) g += self.grad[0];
  };
  return Tensor::wrap(out);
}

Tensor l1_norm(const Tensor& x) {
  auto out = make_node({1}, {x.node()});
  double s = 0;
  for (double v : x.values()) s += std::abs(v);
  out->value[0] = s;
  out->backprop = [](detail::TensorNode& self) {
    auto& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    xn.ensure_grad();
    for (size_t i = 0; i < xn.grad.size(); ++i) {
      const double v = xn.value[i];
      xn.grad[i] += self.grad[0] * (v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0));
    }
  };
  return Tensor::wrap(out);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

Tensor weighted_cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                              const std::vector<double>& class_weights) {
  check(logits.ndim() == 2, "weighted_cross_entropy: logits must be [B, C]");
  const int B = logits.dim(0), C = logits.dim(1);
  check(static_cast<int>(targets.size()) == B, "weighted_cross_entropy: target count mismatch");
  check(static_cast<int>(class_weights.size()) == C,
        "weighted_cross_entropy: weight count mismatch");
  for (double w : class_weights) check(w > 0, "weighted_cross_entropy: weights must be > 0");
  for (int t : targets) check(t >= 0 && t < C, "weighted_cross_entropy: target out of range");

  auto probs = std::make_shared<std::vector<double>>(static_cast<size_t>(B) * C);
  double weight_sum = 0, loss = 0;
  for (int b = 0; b < B; ++b) {
    const double* row = logits.data() + static_cast<size_t>(b) * C;
    double* prow = probs->data() + static_cast<size_t>(b) * C;
    const double mx = *std::max_element(row, row + C);
    double z = 0;
    for (int c = 0; c < C; ++c) z += (prow[c] = std::exp(row[c] - mx));
    for (int c = 0; c < C; ++c) prow[c] /= z;
    const double w = class_weights[static_cast<size_t>(targets[static_cast<size_t>(b)])];
    loss += w * (std::log(z) + mx - row[targets[static_cast<size_t>(b)]]);
    weight_sum += w;
  }

  auto out = make_node({1}, {logits.node()});
  out->value[0] = loss / weight_sum;
  auto tgt = std::make_shared<std::vector<int>>(targets);
  auto wts = std::make_shared<std::vector<double>>(class_weights);
  out->backprop = [B, C, probs, tgt, wts, weight_sum](detail::TensorNode& self) {
    auto& ln = *self.parents[0];
    if (!ln.requires_grad) return;
    ln.ensure_grad();
    const double g = self.grad[0] / weight_sum;
    for (int b = 0; b < B; ++b) {
      const double w = (*wts)[static_cast<size_t>((*tgt)[static_cast<size_t>(b)])];
      const double* prow = probs->data() + static_cast<size_t>(b) * C;
      double* grow = ln.grad.data() + static_cast<size_t>(b) * C;
      for (int c = 0; c < C; ++c)
        grow[c] += g * w * (prow[c] - (c == (*tgt)[static_cast<size_t>(b)] ? 1.0 : 0.0));
    }
  };
  return Tensor::wrap(out);
}

Tensor mse_loss(const Tensor& target, const Tensor& prediction, Reduction reduction) {
  check(target.shape() == prediction.shape(), "mse_loss: shape mismatch " +
                                                  shape_str(target.shape()) + " vs " +
                                                  shape_str(prediction.shape()));
  const double denom = reduction == Reduction::Mean ? static_cast<double>(target.dim(0)) : 1.0;
  auto out = make_node({1}, {target.node(), prediction.node()});
  double s = 0;
  for (size_t i = 0; i < target.values().size(); ++i) {
    const double r = target.values()[i] - prediction.values()[i];
    s += r * r;
  }
  out->value[0] = s / denom;
  out->backprop = [denom](detail::TensorNode& self) {
    auto& yn = *self.parents[0];
    auto& pn = *self.parents[1];
    const double g = 2.0 * self.grad[0] / denom;
    if (yn.requires_grad) {
      yn.ensure_grad();
      for (size_t i = 0; i < yn.grad.size(); ++i)
        yn.grad[i] += g * (yn.value[i] - pn.value[i]);
    }
    if (pn.requires_grad) {
      pn.ensure_grad();
      for (size_t i = 0; i < pn.grad.size(); ++i)
        pn.grad[i] += g * (pn.value[i] - yn.value[i]);
    }
  };
  return Tensor::wrap(out);
}

Tensor nt_xent(const Tensor& z, double temperature) {
  check(z.ndim() == 2, "nt_xent: input must be [2B, d]");
  const int N = z.dim(0), D = z.dim(1);
  if (N < 4 || N % 2 != 0) throw InsufficientBatchError();
  check(temperature > 0, "nt_xent: temperature must be > 0");
  const int B = N / 2;

  // Normalize rows, then the cosine-similarity table.
  auto U = std::make_shared<MatRM>(N, D);
  auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(N));
  CMapM Z(z.data(), N, D);
  for (int i = 0; i < N; ++i) {
    const double r = std::max(Z.row(i).norm(), 1e-12);
    (*norms)[static_cast<size_t>(i)] = r;
    U->row(i) = Z.row(i) / r;
  }
  MatRM S = (*U) * U->transpose();

  auto pair_of = [B, N](int i) { return (i + B) % N; };
  double loss = 0;
  auto P = std::make_shared<MatRM>(MatRM::Zero(N, N));  // row-wise softmax over j != i
  for (int i = 0; i < N; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < N; ++j)
      if (j != i) mx = std::max(mx, S(i, j) / temperature);
    double zsum = 0;
    for (int j = 0; j < N; ++j)
      if (j != i) zsum += ((*P)(i, j) = std::exp(S(i, j) / temperature - mx));
    for (int j = 0; j < N; ++j) (*P)(i, j) /= zsum;
    loss += -S(i, pair_of(i)) / temperature + std::log(zsum) + mx;
  }
  loss /= N;

  auto out = make_node({1}, {z.node()});
  out->value[0] = loss;
  out->backprop = [N, D, B, temperature, U, norms, P, pair_of](detail::TensorNode& self) {
    auto& zn = *self.parents[0];
    if (!zn.requires_grad) return;
    zn.ensure_grad();
    MatRM A(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        A(i, j) = (i == j) ? 0.0
                           : ((*P)(i, j) - (j == pair_of(i) ? 1.0 : 0.0)) / (temperature * N);
    MatRM G = (A + A.transpose()) * (*U);  // dL/dU
    MapM GZ(zn.grad.data(), N, D);
    const double g0 = self.grad[0];
    for (int i = 0; i < N; ++i) {
      const double dot = G.row(i).dot(U->row(i));
      GZ.row(i) += g0 * (G.row(i) - dot * U->row(i)) / (*norms)[static_cast<size_t>(i)];
    }
  };
  return Tensor::wrap(out);
}

Tensor sgan_unsupervised_loss(const Tensor& logits, bool real_batch) {
  check(logits.ndim() == 2 && logits.dim(1) >= 2, "sgan_unsupervised_loss: logits must be [B, N+1]");
  const int B = logits.dim(0), C = logits.dim(1);
  auto probs = std::make_shared<std::vector<double>>(static_cast<size_t>(B) * C);
  double loss = 0;
  for (int b = 0; b < B; ++b) {
    const double* row = logits.data() + static_cast<size_t>(b) * C;
    double* prow = probs->data() + static_cast<size_t>(b) * C;
    const double mx = *std::max_element(row, row + C);
    double z = 0;
    for (int c = 0; c < C; ++c) z += (prow[c] = std::exp(row[c] - mx));
    for (int c = 0; c < C; ++c) prow[c] /= z;
    const double p_fake = std::min(std::max(prow[C - 1], 1e-12), 1.0 - 1e-12);
    loss += real_batch ? -std::log1p(-p_fake) : -std::log(p_fake);
  }
  auto out = make_node({1}, {logits.node()});
  out->value[0] = loss / B;
  out->backprop = [B, C, probs, real_batch](detail::TensorNode& self) {
    auto& ln = *self.parents[0];
    if (!ln.requires_grad) return;
    ln.ensure_grad();
    const double g = self.grad[0] / B;
    for (int b = 0; b < B; ++b) {
      const double* prow = probs->data() + static_cast<size_t>(b) * C;
      double* grow = ln.grad.data() + static_cast<size_t>(b) * C;
      const double p_fake = std::min(std::max(prow[C - 1], 1e-12), 1.0 - 1e-12);
      if (real_batch) {
        const double s = 1.0 - p_fake;
        for (int c = 0; c < C; ++c)
          grow[c] += g * (c == C - 1 ? p_fake : -p_fake * prow[c] / s);
      } else {
        for (int c = 0; c < C; ++c) grow[c] += g * (prow[c] - (c == C - 1 ? 1.0 : 0.0));
      }
    }
  };
  return Tensor::wrap(out);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].values().size(), 0.0);
      state.v[i].assign(params[i].values().size(), 0.0);
    }
  }
  check(state.m.size() == params.size(), "adam_step: state does not match parameter list");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    check(state.m[i].size() == p.values().size(), "adam_step: parameter shape changed");
    const double* g = p.grad().data();
    double* val = p.data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (size_t k = 0; k < p.values().size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * g[k] * g[k];
      val[k] -= cfg.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

ScheduleDecision schedule_step(const std::vector<double>& val_loss_history,
                               const TrainSchedule& sched) {
  check(!val_loss_history.empty(), "schedule_step: history must be nonempty");
  double lr = sched.lr0;
  double best = std::numeric_limits<double>::infinity();
  int plateau = 0, no_improvement = 0;
  bool stop = false;
  for (double loss : val_loss_history) {
    if (loss < best) {
      best = loss;
      plateau = 0;
      no_improvement = 0;
    } else {
      ++plateau;
      ++no_improvement;
      if (plateau >= sched.plateau_patience) {
        lr *= sched.lr_factor;
        plateau = 0;
      }
      if (no_improvement >= sched.early_stop_patience) stop = true;
    }
  }
  return {lr, stop};
}

}  // namespace spectral_forge::nn
