#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "leafnet/kernels.hpp"
#include "leafnet/tensor.hpp"

namespace leafnet {

enum class Activation : std::uint8_t { Linear = 0, Relu = 1 };

struct RescaleSpec {
  float factor = 1.0f / 255.0f;
};
/// 3x3, stride 1, same padding, ReLU.
struct Conv2DSpec {
  std::int64_t filters = 0;
};
/// 2x2, stride 2.
struct MaxPoolSpec {};
struct FlattenSpec {};
struct DenseSpec {
  std::int64_t units = 0;
  Activation activation = Activation::Relu;
};
/// Dense projection to `classes` logits followed by softmax. Must be last.
struct SoftmaxOutputSpec {
  std::int64_t classes = 0;
};

using LayerSpec =
    std::variant<RescaleSpec, Conv2DSpec, MaxPoolSpec, FlattenSpec, DenseSpec, SoftmaxOutputSpec>;

const char* layer_name(const LayerSpec& layer);

/// Rescale, Conv(16), Pool, Conv(32), Pool, Conv(64), Pool, Flatten,
/// Dense(128, ReLU), SoftmaxOutput(classes).
std::vector<LayerSpec> canonical_layers(std::int64_t classes = 8);

inline Shape image_input_shape(std::int64_t image_size) { return Shape{image_size, image_size, 3}; }

/// Per-sample output shape of every layer (the batch dimension is left out).
/// Throws ShapeError when a layer cannot accept its predecessor's output.
std::vector<Shape> shape_infer(const std::vector<LayerSpec>& layers, const Shape& input_shape);

/// Trainable parameter count of each layer.
std::vector<std::int64_t> layer_param_counts(const std::vector<LayerSpec>& layers,
                                             const Shape& input_shape);
std::int64_t param_count(const std::vector<LayerSpec>& layers, const Shape& input_shape);

/// Weights and bias of one layer; both empty for parameterless layers.
template <typename T>
struct LayerParams {
  BasicTensor<T> weights;
  BasicTensor<T> bias;

  bool present() const { return !weights.empty(); }
};

/// One entry per layer, aligned with the model's layer list.
template <typename T>
using ParamSet = std::vector<LayerParams<T>>;

enum class Init { GlorotUniform, Zeros };
enum class Mode { Train, Eval };

template <typename T>
class BasicModel {
 public:
  BasicModel() = default;

  /// Validates the architecture and initializes parameters. Glorot draws come
  /// from Rng(seed, streams::kInit) in layer order, weights before bias;
  /// biases start at zero.
  BasicModel(std::vector<LayerSpec> layers, Shape input_shape, Init init = Init::GlorotUniform,
             std::uint64_t seed = 0);

  /// Adopts externally supplied parameters (e.g. from a model file).
  BasicModel(std::vector<LayerSpec> layers, Shape input_shape, ParamSet<T> params);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const Shape& input_shape() const { return input_shape_; }
  const ParamSet<T>& params() const { return params_; }
  ParamSet<T>& params() { return params_; }

  /// Per-sample output shapes, cached at construction.
  const std::vector<Shape>& output_shapes() const { return shapes_; }
  std::int64_t num_classes() const { return shapes_.back()[0]; }
  std::int64_t param_count() const;

  template <typename U>
  BasicModel<U> cast() const {
    ParamSet<U> p;
    p.reserve(params_.size());
    for (const auto& lp : params_) p.push_back({lp.weights.template cast<U>(), lp.bias.template cast<U>()});
    return BasicModel<U>(layers_, input_shape_, std::move(p));
  }

 private:
  std::vector<LayerSpec> layers_;
  Shape input_shape_;
  std::vector<Shape> shapes_;
  ParamSet<T> params_;
};

using Model = BasicModel<float>;
using Model64 = BasicModel<double>;

/// Everything the backward pass needs from a forward pass.
template <typename T>
struct ForwardTrace {
  /// activations[i] is the input of layer i; activations.back() is the logits.
  /// Conv2D/Dense outputs are stored after their activation function.
  std::vector<BasicTensor<T>> activations;
  /// Argmax masks, indexed by layer (empty for non-pooling layers).
  std::vector<ArgmaxMask> masks;
  BasicTensor<T> probabilities;

  const BasicTensor<T>& logits() const { return activations.back(); }
  /// Input of the final layer, e.g. the 128-unit dense output of the
  /// canonical model.
  const BasicTensor<T>& penultimate() const { return activations[activations.size() - 2]; }
};

/// batch is (N, H, W, C) with raw pixel values; the model's own Rescale
/// layer maps them to [0, 1]. Eval and train modes compute the same function
/// (the architecture has no stochastic layers).
template <typename T>
ForwardTrace<T> model_forward(const BasicModel<T>& model, const BasicTensor<T>& batch,
                              Mode mode = Mode::Eval);

template <typename T>
ParamSet<T> model_backward(const BasicModel<T>& model, const ForwardTrace<T>& trace,
                           const BasicTensor<T>& grad_logits);

}  // namespace leafnet
