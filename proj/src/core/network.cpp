#include "network.hpp"

#include <cstring>
#include <iomanip>
#include <sstream>

#include "error.hpp"
#include "ops.hpp"

namespace slc::nn {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Input: return "input";
    case LayerKind::Conv3x3: return "conv3x3";
    case LayerKind::Pad1: return "pad1";
    case LayerKind::Conv1x1: return "conv1x1";
    case LayerKind::MaxPool2: return "maxpool2";
    case LayerKind::Upsample2: return "upsample2";
    case LayerKind::Dense: return "dense";
    case LayerKind::Relu: return "relu";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Concat: return "concat";
    case LayerKind::ConcatChannels: return "concat-channels";
  }
  return "?";
}

namespace {

[[noreturn]] void chain_error(const std::string& layer, const std::string& why) {
  fail(ErrorCode::Shape, "layer '" + layer + "': " + why);
}

std::size_t arity(LayerKind kind) {
  switch (kind) {
    case LayerKind::Input: return 0;
    case LayerKind::Concat:
    case LayerKind::ConcatChannels: return 2;
    default: return 1;
  }
}

}  // namespace

std::size_t NetworkSpec::add_input(const std::string& name, Shape shape) {
  for (auto d : shape)
    if (d == 0) chain_error(name, "input dims must be positive, got " + shape_str(shape));
  LayerSpec l;
  l.kind = LayerKind::Input;
  l.name = name;
  l.output_shape = std::move(shape);
  layers_.push_back(std::move(l));
  node_params_.push_back(std::nullopt);
  inputs_.push_back(layers_.size() - 1);
  return layers_.size() - 1;
}

std::size_t NetworkSpec::add(LayerKind kind, const std::string& name,
                             std::vector<std::size_t> inputs, std::size_t units) {
  require(kind != LayerKind::Input, ErrorCode::InvalidArgument, "use add_input for inputs");
  for (const auto& l : layers_)
    if (l.name == name) chain_error(name, "duplicate layer name");
  if (inputs.size() != arity(kind))
    chain_error(name, std::string(layer_kind_name(kind)) + " takes " +
                          std::to_string(arity(kind)) + " input(s)");
  for (auto i : inputs)
    if (i >= layers_.size()) chain_error(name, "input index out of range");

  const Shape& in = layers_[inputs[0]].output_shape;
  auto need_rank = [&](std::size_t r) {
    if (in.size() != r)
      chain_error(name, "expects rank-" + std::to_string(r) + " input, got " + shape_str(in));
  };

  Shape out;
  std::vector<ParamSpec> params;
  switch (kind) {
    case LayerKind::Conv3x3:
      need_rank(3);
      if (units == 0) chain_error(name, "filter count must be positive");
      if (in[1] < 3 || in[2] < 3) chain_error(name, "input too small: " + shape_str(in));
      out = {units, in[1] - 2, in[2] - 2};
      params.push_back({name + ".weight", {units, in[0], 3, 3}, in[0] * 9, units * 9, false, 0});
      params.push_back({name + ".bias", {units}, 0, 0, true, 0});
      break;
    case LayerKind::Pad1:
      need_rank(3);
      out = {in[0], in[1] + 2, in[2] + 2};
      break;
    case LayerKind::Conv1x1:
      need_rank(3);
      if (units == 0) chain_error(name, "filter count must be positive");
      out = {units, in[1], in[2]};
      params.push_back({name + ".weight", {units, in[0]}, in[0], units, false, 0});
      params.push_back({name + ".bias", {units}, 0, 0, true, 0});
      break;
    case LayerKind::MaxPool2:
      need_rank(3);
      if (in[1] < 2 || in[2] < 2) chain_error(name, "input too small: " + shape_str(in));
      out = {in[0], in[1] / 2, in[2] / 2};
      break;
    case LayerKind::Upsample2:
      need_rank(3);
      out = {in[0], in[1] * 2, in[2] * 2};
      break;
    case LayerKind::Dense:
      need_rank(1);
      if (units == 0) chain_error(name, "unit count must be positive");
      out = {units};
      params.push_back({name + ".weight", {units, in[0]}, in[0], units, false, 0});
      params.push_back({name + ".bias", {units}, 0, 0, true, 0});
      break;
    case LayerKind::Relu:
    case LayerKind::Sigmoid:
      out = in;
      break;
    case LayerKind::Softmax:
      need_rank(1);
      out = in;
      break;
    case LayerKind::Flatten:
      out = {shape_numel(in)};
      break;
    case LayerKind::Concat: {
      const Shape& b = layers_[inputs[1]].output_shape;
      if (in.size() != 1 || b.size() != 1)
        chain_error(name, "concat joins rank-1 inputs, got " + shape_str(in) + " and " +
                              shape_str(b));
      out = {in[0] + b[0]};
      break;
    }
    case LayerKind::ConcatChannels: {
      const Shape& b = layers_[inputs[1]].output_shape;
      need_rank(3);
      if (b.size() != 3 || b[1] != in[1] || b[2] != in[2])
        chain_error(name, "spatial dims differ: " + shape_str(in) + " vs " + shape_str(b));
      out = {in[0] + b[0], in[1], in[2]};
      break;
    }
    case LayerKind::Input:
      break;
  }

  LayerSpec l;
  l.kind = kind;
  l.name = name;
  l.inputs = std::move(inputs);
  l.units = units;
  l.output_shape = std::move(out);
  layers_.push_back(std::move(l));
  const std::size_t node = layers_.size() - 1;
  if (params.empty()) {
    node_params_.push_back(std::nullopt);
  } else {
    node_params_.push_back(params_.size());
    for (auto& p : params) {
      p.node = node;
      params_.push_back(std::move(p));
    }
  }
  return node;
}

const LayerSpec& NetworkSpec::find(const std::string& name) const {
  for (const auto& l : layers_)
    if (l.name == name) return l;
  fail(ErrorCode::InvalidArgument, "no layer named '" + name + "' in " + name_);
}

std::size_t NetworkSpec::output() const {
  require(!layers_.empty(), ErrorCode::Validation, "network has no layers");
  return layers_.size() - 1;
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += shape_numel(p.shape);
  return n;
}

std::optional<std::size_t> NetworkSpec::param_index(std::size_t node) const {
  return node_params_.at(node);
}

std::string NetworkSpec::table() const {
  std::ostringstream os;
  os << name_ << '\n';
  os << std::left << std::setw(4) << "#" << std::setw(22) << "layer" << std::setw(17) << "kind"
     << std::setw(10) << "inputs" << std::setw(18) << "output" << "params\n";
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    std::string ins;
    for (auto j : l.inputs) ins += (ins.empty() ? "" : ",") + std::to_string(j);
    std::size_t np = 0;
    if (auto p = node_params_[i])
      np = shape_numel(params_[*p].shape) + shape_numel(params_[*p + 1].shape);
    os << std::left << std::setw(4) << i << std::setw(22) << l.name << std::setw(17)
       << layer_kind_name(l.kind) << std::setw(10) << (ins.empty() ? "-" : ins) << std::setw(18)
       << shape_str(l.output_shape) << np << '\n';
  }
  os << "total parameters: " << parameter_count() << '\n';
  return os.str();
}

// --- weights ---------------------------------------------------------------

Tensor* Weights::find(const std::string& name) {
  for (auto& t : tensors_)
    if (t.name == name) return &t.value;
  return nullptr;
}

const Tensor* Weights::find(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return &t.value;
  return nullptr;
}

std::size_t Weights::element_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.value.size();
  return n;
}

void Weights::zero_grad() {
  for (auto& t : tensors_) t.value.zero_grad();
}

void Weights::drop_grad() {
  for (auto& t : tensors_) t.value.drop_grad();
}

bool Weights::bit_identical(const Weights& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].name != other.tensors_[i].name ||
        !slc::bit_identical(tensors_[i].value, other.tensors_[i].value))
      return false;
  return true;
}

Weights init_weights(const NetworkSpec& spec, SeededRng& rng) {
  std::vector<NamedTensor> out;
  out.reserve(spec.parameters().size());
  for (const auto& p : spec.parameters()) {
    if (p.is_bias)
      out.push_back({p.name, Tensor(p.shape)});
    else
      out.push_back({p.name, ops::xavier_uniform(p.shape, p.fan_in, p.fan_out, rng)});
  }
  return Weights(std::move(out));
}

void check_weights(const NetworkSpec& spec, const Weights& weights) {
  const auto& params = spec.parameters();
  require(params.size() == weights.size(), ErrorCode::Shape,
          spec.name() + " expects " + std::to_string(params.size()) + " weight tensors, got " +
              std::to_string(weights.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& nt = weights.tensors()[i];
    require(nt.name == params[i].name, ErrorCode::Shape,
            "weight " + std::to_string(i) + " is '" + nt.name + "', expected '" +
                params[i].name + "'");
    check_shape(nt.value, params[i].shape, params[i].name.c_str());
  }
}

// --- evaluation ------------------------------------------------------------

Trace forward_trace(const NetworkSpec& spec, const Weights& weights,
                    std::span<const Tensor> inputs) {
  check_weights(spec, weights);
  require(inputs.size() == spec.inputs().size(), ErrorCode::Shape,
          spec.name() + " takes " + std::to_string(spec.inputs().size()) + " input(s), got " +
              std::to_string(inputs.size()));
  const auto& layers = spec.layers();
  Trace tr;
  tr.values.resize(layers.size());
  tr.argmax.resize(layers.size());
  std::size_t next_input = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    auto in = [&](std::size_t k) -> const Tensor& { return tr.values[l.inputs[k]]; };
    auto param = [&](std::size_t k) -> const Tensor& { return weights[*spec.param_index(i) + k]; };
    switch (l.kind) {
      case LayerKind::Input: {
        const Tensor& x = inputs[next_input++];
        check_shape(x, l.output_shape, ("input '" + l.name + "'").c_str());
        tr.values[i] = x;
        break;
      }
      case LayerKind::Conv3x3: tr.values[i] = ops::conv2d(in(0), param(0), param(1)); break;
      case LayerKind::Pad1: tr.values[i] = ops::pad1(in(0)); break;
      case LayerKind::Conv1x1: tr.values[i] = ops::conv1x1(in(0), param(0), param(1)); break;
      case LayerKind::MaxPool2: {
        auto r = ops::maxpool2d(in(0));
        tr.values[i] = std::move(r.output);
        tr.argmax[i] = std::move(r.argmax);
        break;
      }
      case LayerKind::Upsample2: tr.values[i] = ops::upsample2x(in(0)); break;
      case LayerKind::Dense: tr.values[i] = ops::dense(in(0), param(0), param(1)); break;
      case LayerKind::Relu: tr.values[i] = ops::relu(in(0)); break;
      case LayerKind::Softmax: tr.values[i] = ops::softmax(in(0)); break;
      case LayerKind::Sigmoid: tr.values[i] = ops::sigmoid(in(0)); break;
      case LayerKind::Flatten: tr.values[i] = ops::flatten(in(0)); break;
      case LayerKind::Concat: tr.values[i] = ops::concat(in(0), in(1)); break;
      case LayerKind::ConcatChannels: tr.values[i] = ops::concat_channels(in(0), in(1)); break;
    }
  }
  return tr;
}

Tensor forward(const NetworkSpec& spec, const Weights& weights, std::span<const Tensor> inputs) {
  Trace tr = forward_trace(spec, weights, inputs);
  return std::move(tr.values.back());
}

namespace {
void accumulate(std::optional<Tensor>& slot, Tensor&& g) {
  if (!slot) {
    slot = std::move(g);
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) (*slot)[i] += g[i];
}
}  // namespace

void backward(const NetworkSpec& spec, Weights& weights, const Trace& trace,
              const Tensor& grad_output) {
  const auto& layers = spec.layers();
  require(trace.values.size() == layers.size(), ErrorCode::Shape,
          "backward: trace does not belong to " + spec.name());
  check_shape(grad_output, layers.back().output_shape, "backward grad_output");

  std::vector<std::optional<Tensor>> grads(layers.size());
  grads.back() = grad_output;

  for (std::size_t i = layers.size(); i-- > 0;) {
    if (!grads[i]) continue;
    const auto& l = layers[i];
    if (l.kind == LayerKind::Input) {
      grads[i].reset();
      continue;
    }
    const Tensor g = std::move(*grads[i]);
    grads[i].reset();
    auto in = [&](std::size_t k) -> const Tensor& { return trace.values[l.inputs[k]]; };
    auto wants = [&](std::size_t k) { return layers[l.inputs[k]].kind != LayerKind::Input; };
    auto send = [&](std::size_t k, Tensor&& t) {
      if (wants(k)) accumulate(grads[l.inputs[k]], std::move(t));
    };

    switch (l.kind) {
      case LayerKind::Conv3x3: {
        const std::size_t p = *spec.param_index(i);
        Tensor gi;
        ops::conv2d_backward(in(0), weights[p], g, wants(0) ? &gi : nullptr, weights[p].grad(),
                             weights[p + 1].grad());
        if (wants(0)) send(0, std::move(gi));
        break;
      }
      case LayerKind::Conv1x1: {
        const std::size_t p = *spec.param_index(i);
        Tensor gi;
        ops::conv1x1_backward(in(0), weights[p], g, wants(0) ? &gi : nullptr, weights[p].grad(),
                              weights[p + 1].grad());
        if (wants(0)) send(0, std::move(gi));
        break;
      }
      case LayerKind::Dense: {
        const std::size_t p = *spec.param_index(i);
        Tensor gi;
        ops::dense_backward(in(0), weights[p], g, wants(0) ? &gi : nullptr, weights[p].grad(),
                            weights[p + 1].grad());
        if (wants(0)) send(0, std::move(gi));
        break;
      }
      case LayerKind::Pad1: send(0, ops::pad1_backward(g)); break;
      case LayerKind::MaxPool2:
        send(0, ops::maxpool2d_backward(in(0).shape(), trace.argmax[i], g));
        break;
      case LayerKind::Upsample2: send(0, ops::upsample2x_backward(g)); break;
      case LayerKind::Relu: send(0, ops::relu_backward(in(0), g)); break;
      case LayerKind::Softmax: send(0, ops::softmax_backward(trace.values[i], g)); break;
      case LayerKind::Sigmoid: send(0, ops::sigmoid_backward(trace.values[i], g)); break;
      case LayerKind::Flatten: send(0, g.reshaped(in(0).shape())); break;
      case LayerKind::Concat: {
        auto [a, b] = ops::concat_backward(g, in(0).size());
        send(0, std::move(a));
        send(1, std::move(b));
        break;
      }
      case LayerKind::ConcatChannels: {
        auto [a, b] = ops::concat_channels_backward(g, in(0).dim(0));
        send(0, std::move(a));
        send(1, std::move(b));
        break;
      }
      case LayerKind::Input: break;
    }
  }
}

}  // namespace slc::nn
