#pragma once

// Declarative layer graphs and their forward/reverse evaluation.
//
// A NetworkSpec is a list of nodes in topological order. Every node names
// the nodes it consumes, so single-path stacks, the two-path classifier and
// the U-Net with skip connections share one representation. Shapes are
// inferred as nodes are added; an illegal chain fails at build time.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace slc::nn {

enum class LayerKind {
  Input,
  Conv3x3,   // valid 3x3 convolution, `units` filters
  Pad1,      // one-pixel zero border
  Conv1x1,   // pointwise convolution, `units` filters
  MaxPool2,  // 2x2 window, stride 2
  Upsample2,
  Dense,     // `units` outputs
  Relu,
  Softmax,
  Sigmoid,
  Flatten,
  Concat,          // rank-1 join of two inputs
  ConcatChannels,  // channel join of two [C,H,W] inputs
};

const char* layer_kind_name(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::Input;
  std::string name;
  std::vector<std::size_t> inputs;
  std::size_t units = 0;
  Shape output_shape;
};

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  bool is_bias = false;
  std::size_t node = 0;
};

class NetworkSpec {
 public:
  explicit NetworkSpec(std::string name = "network") : name_(std::move(name)) {}

  std::size_t add_input(const std::string& name, Shape shape);
  /// Appends a node fed by `inputs` and returns its index.
  std::size_t add(LayerKind kind, const std::string& name, std::vector<std::size_t> inputs,
                  std::size_t units = 0);
  /// Convenience for single-input layers.
  std::size_t add(LayerKind kind, const std::string& name, std::size_t input,
                  std::size_t units = 0) {
    return add(kind, name, std::vector<std::size_t>{input}, units);
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  const LayerSpec& find(const std::string& name) const;
  const std::vector<std::size_t>& inputs() const noexcept { return inputs_; }
  std::size_t output() const;
  const Shape& output_shape() const { return layers_.at(output()).output_shape; }

  /// Trainable tensors in a fixed order (weight, then bias, per layer).
  const std::vector<ParamSpec>& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const;
  /// First parameter index of node i, if it has parameters.
  std::optional<std::size_t> param_index(std::size_t node) const;

  /// Human-readable layer table: index, name, kind, inputs, output shape,
  /// parameter count.
  std::string table() const;

 private:
  std::string name_;
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> inputs_;
  std::vector<ParamSpec> params_;
  std::vector<std::optional<std::size_t>> node_params_;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Ordered named parameter tensors. Gradients are accumulated in each
/// tensor's gradient buffer.
class Weights {
 public:
  Weights() = default;
  explicit Weights(std::vector<NamedTensor> tensors) : tensors_(std::move(tensors)) {}

  std::vector<NamedTensor>& tensors() noexcept { return tensors_; }
  const std::vector<NamedTensor>& tensors() const noexcept { return tensors_; }
  std::size_t size() const noexcept { return tensors_.size(); }
  Tensor& operator[](std::size_t i) { return tensors_[i].value; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i].value; }
  Tensor* find(const std::string& name);
  const Tensor* find(const std::string& name) const;
  std::size_t element_count() const;

  void zero_grad();
  void drop_grad();

  /// Values and names equal bit for bit (gradients ignored).
  bool bit_identical(const Weights& other) const;

 private:
  std::vector<NamedTensor> tensors_;
};

/// Xavier-uniform weights and zero biases, drawn in parameter order.
Weights init_weights(const NetworkSpec& spec, SeededRng& rng);
/// Throws unless names and shapes match the NetworkSpec one to one.
void check_weights(const NetworkSpec& spec, const Weights& weights);

/// Every node's output, kept for the reverse pass.
struct Trace {
  std::vector<Tensor> values;
  std::vector<std::vector<std::uint32_t>> argmax;

  const Tensor& output() const { return values.back(); }
};

Trace forward_trace(const NetworkSpec& spec, const Weights& weights,
                    std::span<const Tensor> inputs);
/// Output of the final node.
Tensor forward(const NetworkSpec& spec, const Weights& weights, std::span<const Tensor> inputs);

/// Reverse pass from dL/d(output). Parameter gradients are added to the
/// gradient buffers of `weights`. Input nodes receive no gradient.
void backward(const NetworkSpec& spec, Weights& weights, const Trace& trace,
              const Tensor& grad_output);

}  // namespace slc::nn
