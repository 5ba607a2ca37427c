#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spectral_forge/model.hpp"

namespace spectral_forge {

struct CollapsedFeatureMapError : std::runtime_error {
  CollapsedFeatureMapError() : std::runtime_error("pooled feature map collapsed below length 1") {}
};
struct NoConvLayerError : std::runtime_error {
  NoConvLayerError() : std::runtime_error("grad-cam needs at least one conv layer") {}
};

struct CnnConfig {
  std::vector<int> conv_channels = {16, 32, 64};
  std::vector<int> kernel_sizes = {21, 11, 5};
  int pool_size = 2;        // m
  int num_conv_blocks = 3;  // n
  int dense_width = 2048;
  double dropout_p = 0.5;
  double negative_slope = 0.01;
  int num_classes = 0;
  bool use_batchnorm = false;  // the paper's variant removes normalization
  int input_len = 1392;

  /// Channel/kernel lists for arbitrary n: channels double from 16 capped at
  /// 64, kernels continue [21, 11, 5, 5, ...]; n <= 3 takes prefixes.
  std::vector<int> channels_for_blocks() const;
  std::vector<int> kernels_for_blocks() const;
};

enum class MlpPreset { Small, Mid, Large };

struct MlpConfig {
  std::vector<int> hidden = {32, 64, 128};  // MID default
  int dense_width = 2048;
  double dropout_p = 0.5;
  double negative_slope = 0.01;
  int num_classes = 0;
  int input_len = 1392;

  static MlpConfig preset(MlpPreset p, int num_classes, int input_len = 1392);
};

struct SganConfig {
  int latent_dim = 128;
  CnnConfig discriminator;          // backbone; head width becomes C+1
  std::vector<int> gen_channels = {64, 32, 16, 8};  // stride-2 stages
  int gen_kernel = 6;               // with stride 2 / pad 2: exact doubling
  int output_len = 1392;
};

struct ContrastiveConfig {
  CnnConfig encoder;      // backbone without softmax head
  int projection_hidden = 512;
  int projection_dim = 128;
  double temperature = 0.5;
};

struct AutoencoderConfig {
  int input_len = 1392;
  std::vector<int> encoder_widths = {512, 256};  // latent = 256
  double l1_coefficient = 1e-3;
};

// --- builders ----------------------------------------------------------------

/// n blocks of {conv same-pad, LeakyReLU, maxpool(m)} -> flatten -> dense ->
/// Tanh -> dropout -> dense C -> softmax. feature_layer tags the Tanh output.
Model build_cnn(const CnnConfig& cfg, std::uint64_t seed);

Model build_mlp(const MlpConfig& cfg, std::uint64_t seed);

/// Post-Tanh activation (pre-dropout), eval mode: the CNN+KNN feature space.
std::vector<std::vector<double>> extract_features(const Model& model,
                                                  const std::vector<std::vector<double>>& rows);

/// 1-D Grad-CAM: importance curve over the input grid in [0, 1], length
/// out_len. Channel weights are the position-means of d score / d A at the
/// last conv layer's output A; the weighted map is ReLU'd, linearly
/// upsampled, and max-normalized.
std::vector<double> gradcam(const Model& model, const std::vector<double>& row, int target_class,
                            int out_len = 1392);

struct SganModel {
  Model generator;      // latent [B, latent_dim] -> [B, 1, output_len]
  Model discriminator;  // (C+1)-way head, synthetic class last
  int latent_dim = 128;
  int num_real_classes = 0;
};

SganModel build_sgan(const SganConfig& cfg, std::uint64_t seed);

struct ContrastiveModel {
  Model encoder;    // f: spectra -> 2048-d features (discarded g trains on top)
  Model projector;  // g: 2048 -> projection_dim
};

ContrastiveModel build_contrastive(const ContrastiveConfig& cfg, std::uint64_t seed);

struct AutoencoderModel {
  Model encoder;  // 1392 -> ... -> latent (ReLU, so L1 sparsity bites)
  Model decoder;  // latent -> ... -> 1392 (linear output)
  double l1_coefficient = 0;
};

AutoencoderModel build_autoencoder(const AutoencoderConfig& cfg, std::uint64_t seed);

/// Pooled length after the conv/pool stack (right-edge partial windows kept).
int pooled_length(int input_len, int pool_size, int blocks);

}  // namespace spectral_forge
