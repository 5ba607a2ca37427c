#include "spectral_forge/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "spectral_forge/io_util.hpp"

namespace spectral_forge {

using nlohmann::json;

LayerSpec LayerSpec::conv1d(int cin, int cout, int k) {
  LayerSpec s;
  s.kind = LayerKind::Conv1d;
  s.in_channels = cin;
  s.out_channels = cout;
  s.kernel_size = k;
  return s;
}

LayerSpec LayerSpec::transposed_conv1d(int cin, int cout, int k, int stride, int pad) {
  LayerSpec s;
  s.kind = LayerKind::TransposedConv1d;
  s.in_channels = cin;
  s.out_channels = cout;
  s.kernel_size = k;
  s.stride = stride;
  s.pad = pad;
  return s;
}

LayerSpec LayerSpec::maxpool(int m) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool1d;
  s.pool_size = m;
  return s;
}

LayerSpec LayerSpec::dense(int in, int out, InitKind init) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in_features = in;
  s.out_features = out;
  s.init = init;
  return s;
}

LayerSpec LayerSpec::leaky_relu(double slope) {
  LayerSpec s;
  s.kind = LayerKind::LeakyRelu;
  s.negative_slope = slope;
  return s;
}

LayerSpec LayerSpec::tanh() {
  LayerSpec s;
  s.kind = LayerKind::Tanh;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::Relu;
  return s;
}

LayerSpec LayerSpec::dropout(double p) {
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.dropout_p = p;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::Softmax;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

LayerSpec LayerSpec::reshape3d(int channels, int length) {
  LayerSpec s;
  s.kind = LayerKind::Reshape3d;
  s.out_channels = channels;
  s.out_features = length;
  return s;
}

LayerSpec LayerSpec::rescale(double mul, double add) {
  LayerSpec s;
  s.kind = LayerKind::Rescale;
  s.affine_mul = mul;
  s.affine_add = add;
  return s;
}

LayerSpec LayerSpec::crop1d(int length) {
  LayerSpec s;
  s.kind = LayerKind::Crop1d;
  s.out_features = length;
  return s;
}

Tensor Layer::forward(const Tensor& x, nn::RunContext& ctx) const {
  switch (spec.kind) {
    case LayerKind::Conv1d:
      return nn::conv1d(x, weight, bias);
    case LayerKind::TransposedConv1d:
      return nn::conv1d_transposed(x, weight, bias, spec.stride, spec.pad);
    case LayerKind::MaxPool1d:
      return nn::maxpool1d(x, spec.pool_size);
    case LayerKind::Dense:
      return nn::dense(x, weight, bias);
    case LayerKind::LeakyRelu:
      return nn::leaky_relu(x, spec.negative_slope);
    case LayerKind::Tanh:
      return nn::tanh_act(x);
    case LayerKind::Relu:
      return nn::relu(x);
    case LayerKind::Dropout:
      return nn::dropout(x, spec.dropout_p, ctx);
    case LayerKind::Softmax:
      return nn::softmax(x);
    case LayerKind::Flatten: {
      if (x.ndim() == 2) return x;
      std::int64_t f = 1;
      for (int i = 1; i < x.ndim(); ++i) f *= x.dim(i);
      return nn::reshape(x, {x.dim(0), static_cast<int>(f)});
    }
    case LayerKind::Reshape3d:
      return nn::reshape(x, {x.dim(0), spec.out_channels, spec.out_features});
    case LayerKind::Rescale:
      return nn::affine_const(x, spec.affine_mul, spec.affine_add);
    case LayerKind::Crop1d:
      return nn::crop1d(x, spec.out_features);
  }
  throw std::logic_error("unknown layer kind");
}

namespace {

// Kaiming-uniform with LeakyReLU gain, or Xavier-uniform for Tanh-fed layers.
void init_param(Tensor& w, int fan_in, int fan_out, InitKind init, double slope,
                std::mt19937_64& rng) {
  double bound;
  if (init == InitKind::KaimingLeaky) {
    const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
    bound = gain * std::sqrt(3.0 / fan_in);
  } else {
    bound = std::sqrt(6.0 / (fan_in + fan_out));
  }
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : w.values()) v = dist(rng);
}

}  // namespace

int Model::add(const LayerSpec& spec, std::mt19937_64& rng) {
  Layer layer;
  layer.spec = spec;
  switch (spec.kind) {
    case LayerKind::Conv1d: {
      layer.weight = Tensor::zeros({spec.out_channels, spec.in_channels, spec.kernel_size}, true);
      layer.bias = Tensor::zeros({spec.out_channels}, true);
      init_param(layer.weight, spec.in_channels * spec.kernel_size,
                 spec.out_channels * spec.kernel_size, spec.init, spec.negative_slope, rng);
      break;
    }
    case LayerKind::TransposedConv1d: {
      layer.weight = Tensor::zeros({spec.in_channels, spec.out_channels, spec.kernel_size}, true);
      layer.bias = Tensor::zeros({spec.out_channels}, true);
      init_param(layer.weight, spec.in_channels * spec.kernel_size,
                 spec.out_channels * spec.kernel_size, spec.init, spec.negative_slope, rng);
      break;
    }
    case LayerKind::Dense: {
      layer.weight = Tensor::zeros({spec.in_features, spec.out_features}, true);
      layer.bias = Tensor::zeros({spec.out_features}, true);
      init_param(layer.weight, spec.in_features, spec.out_features, spec.init,
                 spec.negative_slope, rng);
      break;
    }
    default:
      break;
  }
  layers_.push_back(std::move(layer));
  return static_cast<int>(layers_.size()) - 1;
}

Tensor Model::forward(const Tensor& x, nn::RunContext& ctx) const {
  Tensor cur = x;
  for (const auto& layer : layers_) cur = layer.forward(cur, ctx);
  return cur;
}

Tensor Model::forward_logits(const Tensor& x, nn::RunContext& ctx) const {
  Tensor cur = x;
  const size_t n = layers_.size();
  const size_t stop = (n > 0 && layers_.back().spec.kind == LayerKind::Softmax) ? n - 1 : n;
  for (size_t i = 0; i < stop; ++i) cur = layers_[i].forward(cur, ctx);
  return cur;
}

std::vector<Tensor> Model::forward_trace(const Tensor& x, nn::RunContext& ctx) const {
  std::vector<Tensor> outs;
  outs.reserve(layers_.size());
  Tensor cur = x;
  for (const auto& layer : layers_) {
    cur = layer.forward(cur, ctx);
    outs.push_back(cur);
  }
  return outs;
}

Tensor Model::forward_upto(const Tensor& x, int upto_layer, nn::RunContext& ctx) const {
  Tensor cur = x;
  for (int i = 0; i <= upto_layer; ++i) cur = layers_[static_cast<size_t>(i)].forward(cur, ctx);
  return cur;
}

std::vector<Tensor> Model::parameters(bool trainable_only) const {
  std::vector<Tensor> out;
  for (const auto& layer : layers_) {
    if (!layer.has_params()) continue;
    if (trainable_only && !layer.trainable) continue;
    out.push_back(layer.weight);
    out.push_back(layer.bias);
  }
  return out;
}

std::int64_t Model::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& t : parameters()) n += t.size();
  return n;
}

void Model::zero_grad() const {
  for (auto& t : parameters()) {
    Tensor tt = t;
    tt.zero_grad();
  }
}

void Model::set_trainable(int first_layer, int last_layer, bool trainable) {
  if (last_layer < 0) last_layer = static_cast<int>(layers_.size()) - 1;
  for (int i = first_layer; i <= last_layer; ++i)
    layers_[static_cast<size_t>(i)].trainable = trainable;
}

std::uint64_t Model::parameter_checksum(int first_layer, int last_layer) const {
  if (last_layer < 0) last_layer = static_cast<int>(layers_.size()) - 1;
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (int i = first_layer; i <= last_layer; ++i) {
    const auto& layer = layers_[static_cast<size_t>(i)];
    if (!layer.has_params()) continue;
    mix(layer.weight.data(), layer.weight.values().size() * sizeof(double));
    mix(layer.bias.data(), layer.bias.values().size() * sizeof(double));
  }
  return h;
}

int Model::last_conv_layer() const {
  for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i)
    if (layers_[static_cast<size_t>(i)].spec.kind == LayerKind::Conv1d) return i;
  return -1;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'F', 'C', 'K', 'P', 'T', '1', '\n'};

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::Dense: return "dense";
    case LayerKind::LeakyRelu: return "leaky_relu";
    case LayerKind::Tanh: return "tanh";
    case LayerKind::Relu: return "relu";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::TransposedConv1d: return "transposed_conv1d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Reshape3d: return "reshape3d";
    case LayerKind::Rescale: return "rescale";
    case LayerKind::Crop1d: return "crop1d";
  }
  return "?";
}

LayerKind kind_from(const std::string& s) {
  if (s == "conv1d") return LayerKind::Conv1d;
  if (s == "maxpool1d") return LayerKind::MaxPool1d;
  if (s == "dense") return LayerKind::Dense;
  if (s == "leaky_relu") return LayerKind::LeakyRelu;
  if (s == "tanh") return LayerKind::Tanh;
  if (s == "relu") return LayerKind::Relu;
  if (s == "dropout") return LayerKind::Dropout;
  if (s == "softmax") return LayerKind::Softmax;
  if (s == "transposed_conv1d") return LayerKind::TransposedConv1d;
  if (s == "flatten") return LayerKind::Flatten;
  if (s == "reshape3d") return LayerKind::Reshape3d;
  if (s == "rescale") return LayerKind::Rescale;
  if (s == "crop1d") return LayerKind::Crop1d;
  throw CheckpointError("unknown layer kind in checkpoint: " + s);
}

json spec_to_json(const LayerSpec& s) {
  return json{{"kind", kind_name(s.kind)},
              {"in_channels", s.in_channels},
              {"out_channels", s.out_channels},
              {"kernel_size", s.kernel_size},
              {"pool_size", s.pool_size},
              {"in_features", s.in_features},
              {"out_features", s.out_features},
              {"stride", s.stride},
              {"pad", s.pad},
              {"dropout_p", s.dropout_p},
              {"negative_slope", s.negative_slope},
              {"affine_mul", s.affine_mul},
              {"affine_add", s.affine_add}};
}

LayerSpec spec_from_json(const json& j) {
  LayerSpec s;
  s.kind = kind_from(j.at("kind").get<std::string>());
  s.in_channels = j.at("in_channels").get<int>();
  s.out_channels = j.at("out_channels").get<int>();
  s.kernel_size = j.at("kernel_size").get<int>();
  s.pool_size = j.at("pool_size").get<int>();
  s.in_features = j.at("in_features").get<int>();
  s.out_features = j.at("out_features").get<int>();
  s.stride = j.at("stride").get<int>();
  s.pad = j.at("pad").get<int>();
  s.dropout_p = j.at("dropout_p").get<double>();
  s.negative_slope = j.at("negative_slope").get<double>();
  s.affine_mul = j.at("affine_mul").get<double>();
  s.affine_add = j.at("affine_add").get<double>();
  return s;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path, const std::string& extra_json) {
  json header;
  header["format"] = "SFCKPT1";
  header["dtype"] = "f32le";
  header["feature_layer"] = model.feature_layer;
  header["extra"] = json::parse(extra_json);
  json jlayers = json::array();
  for (const auto& layer : model.layers()) {
    json jl = spec_to_json(layer.spec);
    jl["trainable"] = layer.trainable;
    if (layer.has_params()) {
      jl["weight_shape"] = layer.weight.shape();
      jl["bias_shape"] = layer.bias.shape();
    }
    jlayers.push_back(jl);
  }
  header["layers"] = jlayers;
  const std::string htext = header.dump();

  std::string blob;
  blob.reserve(htext.size() + 64);
  blob.append(kMagic, sizeof(kMagic));
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  blob.append(reinterpret_cast<const char*>(&hlen), 4);
  blob.append(htext);
  for (const auto& layer : model.layers()) {
    if (!layer.has_params()) continue;
    for (const Tensor* t : {&layer.weight, &layer.bias}) {
      for (double d : t->values()) {
        const float f = static_cast<float>(d);
        blob.append(reinterpret_cast<const char*>(&f), 4);
      }
    }
  }
  atomic_write_file(path, blob);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("bad checkpoint magic in " + path);
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in) throw CheckpointError("truncated checkpoint header in " + path);
  json header = json::parse(htext);

  LoadedCheckpoint result;
  result.extra_json = header.at("extra").dump();
  result.model.feature_layer = header.at("feature_layer").get<int>();
  std::mt19937_64 rng(0);  // values are overwritten below
  for (const auto& jl : header.at("layers")) {
    const LayerSpec spec = spec_from_json(jl);
    const int idx = result.model.add(spec, rng);
    auto& layer = result.model.layers()[static_cast<size_t>(idx)];
    layer.trainable = jl.at("trainable").get<bool>();
    if (layer.has_params()) {
      for (Tensor* t : {&layer.weight, &layer.bias}) {
        for (auto& v : t->values()) {
          float f;
          in.read(reinterpret_cast<char*>(&f), 4);
          v = static_cast<double>(f);
        }
      }
    }
  }
  if (!in) throw CheckpointError("truncated checkpoint payload in " + path);
  return result;
}

}  // namespace spectral_forge
