#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spectral_forge/nn.hpp"
#include "spectral_forge/tensor.hpp"

namespace spectral_forge {

enum class LayerKind {
  Conv1d,
  MaxPool1d,
  Dense,
  LeakyRelu,
  Tanh,
  Relu,
  Dropout,
  Softmax,
  TransposedConv1d,
  Flatten,
  Reshape3d,  // [B, F] -> [B, out_channels, out_features]
  Rescale,    // affine_mul * x + affine_add
  Crop1d,     // keep the first out_features positions of the last axis
};

enum class InitKind { KaimingLeaky, Xavier };

struct LayerSpec {
  LayerKind kind{};
  int in_channels = 0, out_channels = 0, kernel_size = 0;  // conv / transposed conv
  int pool_size = 0;                                       // maxpool
  int in_features = 0, out_features = 0;                   // dense
  int stride = 1, pad = 0;                                 // transposed conv
  double dropout_p = 0.5;
  double negative_slope = 0.01;
  double affine_mul = 1.0, affine_add = 0.0;               // rescale
  InitKind init = InitKind::KaimingLeaky;

  static LayerSpec conv1d(int cin, int cout, int k);
  static LayerSpec transposed_conv1d(int cin, int cout, int k, int stride, int pad);
  static LayerSpec maxpool(int m);
  static LayerSpec dense(int in, int out, InitKind init = InitKind::KaimingLeaky);
  static LayerSpec leaky_relu(double slope = 0.01);
  static LayerSpec tanh();
  static LayerSpec relu();
  static LayerSpec dropout(double p);
  static LayerSpec softmax();
  static LayerSpec flatten();
  static LayerSpec reshape3d(int channels, int length);
  static LayerSpec rescale(double mul, double add);
  static LayerSpec crop1d(int length);
};

/// One layer instance: spec plus owned parameters (empty for stateless kinds).
struct Layer {
  LayerSpec spec;
  Tensor weight;  // undefined for stateless layers
  Tensor bias;
  bool trainable = true;

  bool has_params() const { return weight.defined(); }
  Tensor forward(const Tensor& x, nn::RunContext& ctx) const;
};

/// Sequential stack of layers. Models are built by the constructors in
/// models.hpp; training loops own one model exclusively.
class Model {
 public:
  /// Appends a layer; parameters are drawn from rng per the spec's init kind.
  int add(const LayerSpec& spec, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, nn::RunContext& ctx) const;
  /// Stops before a trailing Softmax layer (training path for CE losses).
  Tensor forward_logits(const Tensor& x, nn::RunContext& ctx) const;
  /// Runs the stack capturing every layer's output (index aligned to layers()).
  std::vector<Tensor> forward_trace(const Tensor& x, nn::RunContext& ctx) const;
  /// Output of layers [0, upto_layer] only.
  Tensor forward_upto(const Tensor& x, int upto_layer, nn::RunContext& ctx) const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::vector<Tensor> parameters(bool trainable_only = false) const;
  std::int64_t parameter_count() const;
  void zero_grad() const;

  void set_trainable(int first_layer, int last_layer, bool trainable);
  /// FNV-1a hash over the exact parameter bytes of layers [first, last].
  std::uint64_t parameter_checksum(int first_layer = 0, int last_layer = -1) const;

  int last_conv_layer() const;

  /// Index of the feature activation (post-Tanh 2048 for the paper's CNN/MLP
  /// family); set by the model builders, -1 when inapplicable.
  int feature_layer = -1;

 private:
  std::vector<Layer> layers_;
};

// --- checkpoint I/O (versioned magic "SFCKPT1", header + f32 LE payload) ---

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& w) : std::runtime_error(w) {}
};

/// extra_json: optional caller payload (seed, schedule state, ...) carried
/// verbatim in the header; pass "{}" when unused.
void save_checkpoint(const Model& model, const std::string& path,
                     const std::string& extra_json = "{}");

struct LoadedCheckpoint {
  Model model;
  std::string extra_json;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace spectral_forge
