#include "spectral_forge/models.hpp"

#include <algorithm>
#include <cmath>

namespace spectral_forge {

std::vector<int> CnnConfig::channels_for_blocks() const {
  std::vector<int> out;
  int ch = conv_channels.empty() ? 16 : conv_channels.front();
  for (int i = 0; i < num_conv_blocks; ++i) {
    if (i < static_cast<int>(conv_channels.size()))
      ch = conv_channels[static_cast<size_t>(i)];
    else
      ch = std::min(64, ch * 2);
    out.push_back(ch);
  }
  return out;
}

std::vector<int> CnnConfig::kernels_for_blocks() const {
  std::vector<int> out;
  for (int i = 0; i < num_conv_blocks; ++i) {
    if (i < static_cast<int>(kernel_sizes.size()))
      out.push_back(kernel_sizes[static_cast<size_t>(i)]);
    else
      out.push_back(kernel_sizes.empty() ? 5 : kernel_sizes.back());
  }
  return out;
}

int pooled_length(int input_len, int pool_size, int blocks) {
  int len = input_len;
  for (int i = 0; i < blocks; ++i) len = (len + pool_size - 1) / pool_size;
  return len;
}

Model build_cnn(const CnnConfig& cfg, std::uint64_t seed) {
  if (cfg.num_conv_blocks < 1 || cfg.pool_size < 1 || cfg.num_classes < 1)
    throw std::invalid_argument("build_cnn: n >= 1, m >= 1 and num_classes >= 1 required");
  if (cfg.use_batchnorm)
    throw std::invalid_argument("build_cnn: normalization layers are not part of the layer set");

  const auto channels = cfg.channels_for_blocks();
  const auto kernels = cfg.kernels_for_blocks();

  std::mt19937_64 rng(seed);
  Model model;
  int cin = 1, len = cfg.input_len;
  for (int i = 0; i < cfg.num_conv_blocks; ++i) {
    auto conv = LayerSpec::conv1d(cin, channels[static_cast<size_t>(i)],
                                  kernels[static_cast<size_t>(i)]);
    conv.negative_slope = cfg.negative_slope;  // kaiming gain follows the activation
    model.add(conv, rng);
    model.add(LayerSpec::leaky_relu(cfg.negative_slope), rng);
    model.add(LayerSpec::maxpool(cfg.pool_size), rng);
    cin = channels[static_cast<size_t>(i)];
    len = (len + cfg.pool_size - 1) / cfg.pool_size;
    if (len < 1) throw CollapsedFeatureMapError();
  }
  model.add(LayerSpec::flatten(), rng);
  model.add(LayerSpec::dense(cin * len, cfg.dense_width, InitKind::Xavier), rng);
  model.feature_layer = model.add(LayerSpec::tanh(), rng);
  model.add(LayerSpec::dropout(cfg.dropout_p), rng);
  model.add(LayerSpec::dense(cfg.dense_width, cfg.num_classes, InitKind::Xavier), rng);
  model.add(LayerSpec::softmax(), rng);
  return model;
}

MlpConfig MlpConfig::preset(MlpPreset p, int num_classes, int input_len) {
  MlpConfig cfg;
  switch (p) {
    case MlpPreset::Small: cfg.hidden = {16, 32, 64}; break;
    case MlpPreset::Mid: cfg.hidden = {32, 64, 128}; break;
    case MlpPreset::Large: cfg.hidden = {64, 128, 256}; break;
  }
  cfg.num_classes = num_classes;
  cfg.input_len = input_len;
  return cfg;
}

Model build_mlp(const MlpConfig& cfg, std::uint64_t seed) {
  if (cfg.hidden.empty() || cfg.num_classes < 1)
    throw std::invalid_argument("build_mlp: hidden widths and num_classes required");
  std::mt19937_64 rng(seed);
  Model model;
  model.add(LayerSpec::flatten(), rng);
  int in = cfg.input_len;
  for (int h : cfg.hidden) {
    auto d = LayerSpec::dense(in, h);
    d.negative_slope = cfg.negative_slope;
    model.add(d, rng);
    model.add(LayerSpec::leaky_relu(cfg.negative_slope), rng);
    in = h;
  }
  model.add(LayerSpec::dense(in, cfg.dense_width, InitKind::Xavier), rng);
  model.feature_layer = model.add(LayerSpec::tanh(), rng);
  model.add(LayerSpec::dropout(cfg.dropout_p), rng);
  model.add(LayerSpec::dense(cfg.dense_width, cfg.num_classes, InitKind::Xavier), rng);
  model.add(LayerSpec::softmax(), rng);
  return model;
}

std::vector<std::vector<double>> extract_features(const Model& model,
                                                  const std::vector<std::vector<double>>& rows) {
  if (model.feature_layer < 0)
    throw std::invalid_argument("extract_features: model has no tagged feature layer");
  nn::RunContext ctx;  // eval mode: dropout off
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  const int L = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  for (const auto& row : rows) {
    Tensor x = Tensor::from({1, 1, L}, row);
    const Tensor f = model.forward_upto(x, model.feature_layer, ctx);
    out.push_back(f.values());
  }
  return out;
}

std::vector<double> gradcam(const Model& model, const std::vector<double>& row, int target_class,
                            int out_len) {
  const int conv_idx = model.last_conv_layer();
  if (conv_idx < 0) throw NoConvLayerError();

  model.zero_grad();
  nn::RunContext ctx;  // eval mode
  Tensor x = Tensor::from({1, 1, static_cast<int>(row.size())}, row);
  const auto trace = model.forward_trace(x, ctx);

  // Prediction score: the target logit (pre-softmax when the model ends in one).
  const size_t n = trace.size();
  const bool has_softmax = model.layers().back().spec.kind == LayerKind::Softmax;
  const Tensor logits = trace[has_softmax ? n - 2 : n - 1];
  const Tensor score = nn::pick(logits, target_class);
  backward(score);

  Tensor feature_map = trace[static_cast<size_t>(conv_idx)];  // [1, K, Lc]
  const int K = feature_map.dim(1), Lc = feature_map.dim(2);
  const auto& A = feature_map.values();
  const auto& G = feature_map.grad();

  std::vector<double> cam(static_cast<size_t>(Lc), 0.0);
  for (int k = 0; k < K; ++k) {
    double wk = 0;
    for (int t = 0; t < Lc; ++t) wk += G[static_cast<size_t>(k) * Lc + t];
    wk /= static_cast<double>(Lc);
    for (int t = 0; t < Lc; ++t) cam[static_cast<size_t>(t)] += wk * A[static_cast<size_t>(k) * Lc + t];
  }
  for (auto& v : cam) v = std::max(v, 0.0);
  model.zero_grad();

  // Linear upsample to the input grid, then max-normalize to [0, 1].
  std::vector<double> curve(static_cast<size_t>(out_len), 0.0);
  if (Lc == 1) {
    std::fill(curve.begin(), curve.end(), cam[0]);
  } else {
    for (int t = 0; t < out_len; ++t) {
      const double s = static_cast<double>(t) * (Lc - 1) / (out_len - 1);
      const int lo = std::min(Lc - 2, static_cast<int>(std::floor(s)));
      const double frac = s - lo;
      curve[static_cast<size_t>(t)] =
          cam[static_cast<size_t>(lo)] * (1 - frac) + cam[static_cast<size_t>(lo + 1)] * frac;
    }
  }
  const double mx = *std::max_element(curve.begin(), curve.end());
  if (mx > 0)
    for (auto& v : curve) v /= mx;
  return curve;
}

SganModel build_sgan(const SganConfig& cfg, std::uint64_t seed) {
  if (cfg.discriminator.num_classes < 1)
    throw std::invalid_argument("build_sgan: discriminator num_classes required");
  if (cfg.gen_channels.empty()) throw std::invalid_argument("build_sgan: generator stack empty");

  SganModel sgan;
  sgan.latent_dim = cfg.latent_dim;
  sgan.num_real_classes = cfg.discriminator.num_classes;

  // Each stride-2 / kernel-6 / pad-2 stage doubles the length exactly, so the
  // seed length is output_len >> stages (any remainder is cropped at the end).
  const int stages = static_cast<int>(cfg.gen_channels.size());
  int start_len = cfg.output_len;
  for (int i = 0; i < stages; ++i) start_len = (start_len + 1) / 2;
  int produced = start_len;
  for (int i = 0; i < stages; ++i) produced *= 2;
  const int crop = produced - cfg.output_len;
  if (crop < 0 || crop > 15)
    throw std::invalid_argument("build_sgan: generator stack cannot reach the output length");

  std::mt19937_64 rng(seed + 1);
  Model g;
  const int c0 = cfg.gen_channels.front();
  auto d = LayerSpec::dense(cfg.latent_dim, c0 * start_len);
  g.add(d, rng);
  g.add(LayerSpec::leaky_relu(0.01), rng);
  g.add(LayerSpec::reshape3d(c0, start_len), rng);
  for (int i = 0; i < stages; ++i) {
    const int cin = cfg.gen_channels[static_cast<size_t>(i)];
    const int cout = i + 1 < stages ? cfg.gen_channels[static_cast<size_t>(i + 1)] : 1;
    g.add(LayerSpec::transposed_conv1d(cin, cout, cfg.gen_kernel, 2, 2), rng);
    if (i + 1 < stages) g.add(LayerSpec::leaky_relu(0.01), rng);
  }
  g.add(LayerSpec::tanh(), rng);
  // Tanh range rescaled to the normalized data range [0, 1].
  g.add(LayerSpec::rescale(0.5, 0.5), rng);
  if (crop > 0) g.add(LayerSpec::crop1d(cfg.output_len), rng);
  sgan.generator = std::move(g);
  sgan.generator.feature_layer = -1;

  CnnConfig dcfg = cfg.discriminator;
  dcfg.num_classes = cfg.discriminator.num_classes + 1;  // synthetic class last
  sgan.discriminator = build_cnn(dcfg, seed + 2);
  return sgan;
}

ContrastiveModel build_contrastive(const ContrastiveConfig& cfg, std::uint64_t seed) {
  ContrastiveModel cm;
  // Encoder = CNN backbone through the Tanh feature activation.
  CnnConfig ecfg = cfg.encoder;
  ecfg.num_classes = std::max(2, ecfg.num_classes);  // head discarded below
  Model full = build_cnn(ecfg, seed);
  std::mt19937_64 rng(seed + 7);
  Model enc;
  for (int i = 0; i <= full.feature_layer; ++i) {
    enc.add(full.layers()[static_cast<size_t>(i)].spec, rng);
    enc.layers().back().weight = full.layers()[static_cast<size_t>(i)].weight;
    enc.layers().back().bias = full.layers()[static_cast<size_t>(i)].bias;
  }
  enc.feature_layer = full.feature_layer;
  cm.encoder = std::move(enc);

  Model proj;
  proj.add(LayerSpec::dense(cfg.encoder.dense_width, cfg.projection_hidden), rng);
  proj.add(LayerSpec::relu(), rng);
  proj.add(LayerSpec::dense(cfg.projection_hidden, cfg.projection_dim), rng);
  cm.projector = std::move(proj);
  return cm;
}

AutoencoderModel build_autoencoder(const AutoencoderConfig& cfg, std::uint64_t seed) {
  if (cfg.encoder_widths.empty()) throw std::invalid_argument("autoencoder: empty encoder");
  std::mt19937_64 rng(seed);
  AutoencoderModel ae;
  ae.l1_coefficient = cfg.l1_coefficient;

  int in = cfg.input_len;
  for (int w : cfg.encoder_widths) {
    ae.encoder.add(LayerSpec::dense(in, w), rng);
    ae.encoder.add(LayerSpec::relu(), rng);
    in = w;
  }
  for (size_t i = cfg.encoder_widths.size(); i-- > 1;) {
    ae.decoder.add(LayerSpec::dense(cfg.encoder_widths[i], cfg.encoder_widths[i - 1]), rng);
    ae.decoder.add(LayerSpec::relu(), rng);
  }
  ae.decoder.add(LayerSpec::dense(cfg.encoder_widths.front(), cfg.input_len), rng);
  return ae;
}

}  // namespace spectral_forge
