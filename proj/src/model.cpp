#include "leafnet/model.hpp"

#include <string>

#include "leafnet/errors.hpp"

namespace leafnet {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::string at_layer(std::size_t i, const LayerSpec& l) {
  return "layer " + std::to_string(i) + " (" + layer_name(l) + ")";
}

// (weights shape, bias shape) of a parametric layer given its input shape.
std::pair<Shape, Shape> param_shapes(const LayerSpec& layer, const Shape& in) {
  return std::visit(
      Overloaded{
          [&](const Conv2DSpec& c) {
            return std::pair{Shape{kKernelSize, kKernelSize, in[2], c.filters}, Shape{c.filters}};
          },
          [&](const DenseSpec& d) { return std::pair{Shape{in[0], d.units}, Shape{d.units}}; },
          [&](const SoftmaxOutputSpec& s) {
            return std::pair{Shape{in[0], s.classes}, Shape{s.classes}};
          },
          [](const auto&) { return std::pair{Shape{}, Shape{}}; },
      },
      layer);
}

bool has_params(const LayerSpec& layer) {
  return std::holds_alternative<Conv2DSpec>(layer) || std::holds_alternative<DenseSpec>(layer) ||
         std::holds_alternative<SoftmaxOutputSpec>(layer);
}

std::pair<std::int64_t, std::int64_t> fans(const LayerSpec& layer, const Shape& w) {
  if (std::holds_alternative<Conv2DSpec>(layer)) {
    const std::int64_t field = w[0] * w[1];
    return {field * w[2], field * w[3]};
  }
  return {w[0], w[1]};
}

}  // namespace

const char* layer_name(const LayerSpec& layer) {
  return std::visit(Overloaded{
                        [](const RescaleSpec&) { return "Rescale"; },
                        [](const Conv2DSpec&) { return "Conv2D"; },
                        [](const MaxPoolSpec&) { return "MaxPool"; },
                        [](const FlattenSpec&) { return "Flatten"; },
                        [](const DenseSpec&) { return "Dense"; },
                        [](const SoftmaxOutputSpec&) { return "SoftmaxOutput"; },
                    },
                    layer);
}

std::vector<LayerSpec> canonical_layers(std::int64_t classes) {
  return {RescaleSpec{},       Conv2DSpec{16}, MaxPoolSpec{},
          Conv2DSpec{32},      MaxPoolSpec{},  Conv2DSpec{64},
          MaxPoolSpec{},       FlattenSpec{},  DenseSpec{128, Activation::Relu},
          SoftmaxOutputSpec{classes}};
}

std::vector<Shape> shape_infer(const std::vector<LayerSpec>& layers, const Shape& input_shape) {
  if (layers.empty()) throw ShapeError("model has no layers");
  std::vector<Shape> out;
  out.reserve(layers.size());
  Shape cur = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& layer = layers[i];
    auto need_rank = [&](std::size_t r) {
      if (cur.rank() != r) {
        throw ShapeError(at_layer(i, layer) + " expects a rank-" + std::to_string(r) +
                         " input, got " + cur.str());
      }
    };
    cur = std::visit(
        Overloaded{
            [&](const RescaleSpec&) { return cur; },
            [&](const Conv2DSpec& c) {
              need_rank(3);
              if (c.filters < 1) throw ShapeError(at_layer(i, layer) + ": filters must be >= 1");
              return Shape{cur[0], cur[1], c.filters};
            },
            [&](const MaxPoolSpec&) {
              need_rank(3);
              if (cur[0] < kPoolSize || cur[1] < kPoolSize) {
                throw ShapeError(at_layer(i, layer) + ": input " + cur.str() + " is smaller than the pool");
              }
              return Shape{cur[0] / kPoolSize, cur[1] / kPoolSize, cur[2]};
            },
            [&](const FlattenSpec&) { return Shape{cur.elements()}; },
            [&](const DenseSpec& d) {
              need_rank(1);
              if (d.units < 1) throw ShapeError(at_layer(i, layer) + ": units must be >= 1");
              return Shape{d.units};
            },
            [&](const SoftmaxOutputSpec& s) {
              need_rank(1);
              if (s.classes < 1) throw ShapeError(at_layer(i, layer) + ": classes must be >= 1");
              if (i + 1 != layers.size()) throw ShapeError(at_layer(i, layer) + " must be the last layer");
              return Shape{s.classes};
            },
        },
        layer);
    out.push_back(cur);
  }
  if (out.back().rank() != 1) {
    throw ShapeError("model output must be a vector per sample, got " + out.back().str());
  }
  return out;
}

std::vector<std::int64_t> layer_param_counts(const std::vector<LayerSpec>& layers,
                                             const Shape& input_shape) {
  const auto shapes = shape_infer(layers, input_shape);
  std::vector<std::int64_t> counts;
  counts.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!has_params(layers[i])) {
      counts.push_back(0);
      continue;
    }
    const auto [w, b] = param_shapes(layers[i], i == 0 ? input_shape : shapes[i - 1]);
    counts.push_back(w.elements() + b.elements());
  }
  return counts;
}

std::int64_t param_count(const std::vector<LayerSpec>& layers, const Shape& input_shape) {
  std::int64_t total = 0;
  for (const auto c : layer_param_counts(layers, input_shape)) total += c;
  return total;
}

template <typename T>
BasicModel<T>::BasicModel(std::vector<LayerSpec> layers, Shape input_shape, Init init,
                          std::uint64_t seed)
    : layers_(std::move(layers)), input_shape_(std::move(input_shape)) {
  if (input_shape_.rank() != 3) throw ShapeError("model input must be (H, W, C), got " + input_shape_.str());
  shapes_ = shape_infer(layers_, input_shape_);
  Rng rng(seed, streams::kInit);
  params_.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!has_params(layers_[i])) continue;
    const auto [ws, bs] = param_shapes(layers_[i], i == 0 ? input_shape_ : shapes_[i - 1]);
    if (init == Init::GlorotUniform) {
      const auto [fan_in, fan_out] = fans(layers_[i], ws);
      params_[i].weights = glorot_uniform_init<T>(fan_in, fan_out, ws, rng);
    } else {
      params_[i].weights = BasicTensor<T>(ws);
    }
    params_[i].bias = BasicTensor<T>(bs);
  }
}

template <typename T>
BasicModel<T>::BasicModel(std::vector<LayerSpec> layers, Shape input_shape, ParamSet<T> params)
    : layers_(std::move(layers)), input_shape_(std::move(input_shape)), params_(std::move(params)) {
  if (input_shape_.rank() != 3) throw ShapeError("model input must be (H, W, C), got " + input_shape_.str());
  shapes_ = shape_infer(layers_, input_shape_);
  if (params_.size() != layers_.size()) throw ShapeError("parameter list does not match layer count");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!has_params(layers_[i])) {
      if (params_[i].present()) throw ShapeError(at_layer(i, layers_[i]) + " takes no parameters");
      continue;
    }
    const auto [ws, bs] = param_shapes(layers_[i], i == 0 ? input_shape_ : shapes_[i - 1]);
    if (params_[i].weights.shape() != ws || params_[i].bias.shape() != bs) {
      throw ShapeError(at_layer(i, layers_[i]) + ": parameters " + params_[i].weights.shape().str() +
                       "/" + params_[i].bias.shape().str() + " expected " + ws.str() + "/" + bs.str());
    }
  }
}

template <typename T>
std::int64_t BasicModel<T>::param_count() const {
  std::int64_t total = 0;
  for (const auto& p : params_) total += static_cast<std::int64_t>(p.weights.size() + p.bias.size());
  return total;
}

template <typename T>
ForwardTrace<T> model_forward(const BasicModel<T>& model, const BasicTensor<T>& batch, Mode) {
  const Shape& in = model.input_shape();
  const Shape& bs = batch.shape();
  if (bs.rank() != 4 || bs[1] != in[0] || bs[2] != in[1] || bs[3] != in[2]) {
    throw ShapeError("batch " + bs.str() + " does not match model input " + in.str());
  }
  const std::int64_t N = bs[0];
  const auto& layers = model.layers();
  ForwardTrace<T> trace;
  trace.activations.reserve(layers.size() + 1);
  trace.masks.resize(layers.size());
  trace.activations.push_back(batch);

  for (std::size_t i = 0; i < layers.size(); ++i) {
    const BasicTensor<T>& x = trace.activations.back();
    const LayerParams<T>& p = model.params()[i];
    BasicTensor<T> y = std::visit(
        Overloaded{
            [&](const RescaleSpec& r) {
              BasicTensor<T> out = x;
              const T f = static_cast<T>(r.factor);
              for (auto& v : out.values()) v *= f;
              return out;
            },
            [&](const Conv2DSpec&) {
              return kernels::relu(kernels::conv2d_forward(x, p.weights, p.bias));
            },
            [&](const MaxPoolSpec&) {
              auto r = kernels::maxpool_forward(x);
              trace.masks[i] = std::move(r.mask);
              return std::move(r.output);
            },
            [&](const FlattenSpec&) {
              return x.reshaped(Shape{N, x.shape().elements() / N});
            },
            [&](const DenseSpec& d) {
              auto out = kernels::dense_forward(x, p.weights, p.bias);
              return d.activation == Activation::Relu ? kernels::relu(out) : out;
            },
            [&](const SoftmaxOutputSpec&) { return kernels::dense_forward(x, p.weights, p.bias); },
        },
        layers[i]);
    trace.activations.push_back(std::move(y));
  }
  trace.probabilities = kernels::softmax(trace.activations.back());
  return trace;
}

template <typename T>
ParamSet<T> model_backward(const BasicModel<T>& model, const ForwardTrace<T>& trace,
                           const BasicTensor<T>& grad_logits) {
  const auto& layers = model.layers();
  if (trace.activations.size() != layers.size() + 1 || trace.masks.size() != layers.size()) {
    throw ArgumentError("model_backward: trace does not come from this model");
  }
  if (grad_logits.shape() != trace.logits().shape()) {
    throw ShapeError("model_backward: grad_logits " + grad_logits.shape().str() +
                     " does not match logits " + trace.logits().shape().str());
  }
  std::size_t first_param = layers.size();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (has_params(layers[i])) {
      first_param = i;
      break;
    }
  }

  ParamSet<T> grads(layers.size());
  BasicTensor<T> g = grad_logits;
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (i < first_param) break;  // nothing upstream needs a gradient
    const bool want_input = i > first_param;
    const BasicTensor<T>& x = trace.activations[i];
    const BasicTensor<T>& y = trace.activations[i + 1];
    const LayerParams<T>& p = model.params()[i];
    std::visit(
        Overloaded{
            [&](const RescaleSpec& r) {
              const T f = static_cast<T>(r.factor);
              for (auto& v : g.values()) v *= f;
            },
            [&](const Conv2DSpec&) {
              auto cg = kernels::conv2d_backward(x, p.weights, kernels::relu_backward(y, g), want_input);
              grads[i] = {std::move(cg.weights), std::move(cg.bias)};
              g = std::move(cg.input);
            },
            [&](const MaxPoolSpec&) { g = kernels::maxpool_backward(trace.masks[i], g); },
            [&](const FlattenSpec&) { g = std::move(g).reshaped(x.shape()); },
            [&](const DenseSpec& d) {
              auto dg = kernels::dense_backward(
                  x, p.weights, d.activation == Activation::Relu ? kernels::relu_backward(y, g) : g,
                  want_input);
              grads[i] = {std::move(dg.weights), std::move(dg.bias)};
              g = std::move(dg.input);
            },
            [&](const SoftmaxOutputSpec&) {
              auto dg = kernels::dense_backward(x, p.weights, g, want_input);
              grads[i] = {std::move(dg.weights), std::move(dg.bias)};
              g = std::move(dg.input);
            },
        },
        layers[i]);
  }
  return grads;
}

template class BasicModel<float>;
template class BasicModel<double>;
template ForwardTrace<float> model_forward(const BasicModel<float>&, const BasicTensor<float>&, Mode);
template ForwardTrace<double> model_forward(const BasicModel<double>&, const BasicTensor<double>&, Mode);
template ParamSet<float> model_backward(const BasicModel<float>&, const ForwardTrace<float>&,
                                        const BasicTensor<float>&);
template ParamSet<double> model_backward(const BasicModel<double>&, const ForwardTrace<double>&,
                                         const BasicTensor<double>&);

}  // namespace leafnet
