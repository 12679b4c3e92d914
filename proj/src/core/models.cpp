#include "models.hpp"

#include "error.hpp"

namespace slc::models {

using nn::LayerKind;

ModelKind parse_model_kind(std::string_view s) {
  if (s == "m1") return ModelKind::Model1;
  if (s == "m2-one") return ModelKind::OnePath;
  if (s == "m2-dual") return ModelKind::DualPath;
  fail(ErrorCode::InvalidArgument,
       "unknown model '" + std::string(s) + "' (expected m1, m2-one or m2-dual)");
}

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Model1: return "m1";
    case ModelKind::OnePath: return "m2-one";
    case ModelKind::DualPath: return "m2-dual";
  }
  return "?";
}

std::size_t default_input_size(ModelKind kind) { return kind == ModelKind::Model1 ? 512 : 256; }

std::size_t input_channels(ModelKind kind) { return kind == ModelKind::Model1 ? 1 : 3; }

std::size_t class_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumClasses; ++i)
    if (kClassNames[i] == name) return i;
  fail(ErrorCode::InvalidArgument, "unknown class name '" + std::string(name) + "'");
}

namespace {

std::size_t dense_head(nn::NetworkSpec& net, std::size_t x, std::size_t hidden1,
                       std::size_t hidden2) {
  if (hidden1 > 0) {
    x = net.add(LayerKind::Dense, "dense" + std::to_string(hidden1), x, hidden1);
    x = net.add(LayerKind::Relu, "dense" + std::to_string(hidden1) + ".relu", x);
  }
  x = net.add(LayerKind::Dense, "dense" + std::to_string(hidden2), x, hidden2);
  x = net.add(LayerKind::Relu, "dense" + std::to_string(hidden2) + ".relu", x);
  x = net.add(LayerKind::Dense, "output", x, kNumClasses);
  return net.add(LayerKind::Softmax, "softmax", x);
}

// conv(32) relu conv(64) relu pool flatten
std::size_t masked_conv_stack(nn::NetworkSpec& net, const std::string& prefix, std::size_t x) {
  x = net.add(LayerKind::Conv3x3, prefix + "conv1", x, 32);
  x = net.add(LayerKind::Relu, prefix + "conv1.relu", x);
  x = net.add(LayerKind::Conv3x3, prefix + "conv2", x, 64);
  x = net.add(LayerKind::Relu, prefix + "conv2.relu", x);
  x = net.add(LayerKind::MaxPool2, prefix + "pool", x);
  return net.add(LayerKind::Flatten, prefix + "flatten", x);
}

}  // namespace

nn::NetworkSpec build_model1(std::size_t input_size) {
  nn::NetworkSpec net("model1");
  auto x = net.add_input("image", {1, input_size, input_size});
  x = net.add(LayerKind::Conv3x3, "conv1", x, 64);
  x = net.add(LayerKind::Relu, "conv1.relu", x);
  x = net.add(LayerKind::MaxPool2, "pool1", x);
  x = net.add(LayerKind::Conv3x3, "conv2", x, 32);
  x = net.add(LayerKind::Relu, "conv2.relu", x);
  x = net.add(LayerKind::MaxPool2, "pool2", x);
  x = net.add(LayerKind::Flatten, "flatten", x);
  dense_head(net, x, 0, 32);
  return net;
}

nn::NetworkSpec build_model2_onepath(std::size_t input_size) {
  nn::NetworkSpec net("model2-onepath");
  auto x = net.add_input("image", {3, input_size, input_size});
  x = masked_conv_stack(net, "", x);
  dense_head(net, x, 64, 32);
  return net;
}

nn::NetworkSpec build_model2_dualpath(std::size_t input_size) {
  nn::NetworkSpec net("model2-dualpath");
  const auto image = net.add_input("image", {3, input_size, input_size});
  const auto mask = net.add_input("mask", {3, input_size, input_size});
  const auto a = masked_conv_stack(net, "path1.", image);
  const auto b = masked_conv_stack(net, "path2.", mask);
  const auto x = net.add(LayerKind::Concat, "concat", {a, b});
  dense_head(net, x, 64, 32);
  return net;
}

nn::NetworkSpec build_model(ModelKind kind, std::size_t input_size) {
  if (input_size == 0) input_size = default_input_size(kind);
  switch (kind) {
    case ModelKind::Model1: return build_model1(input_size);
    case ModelKind::OnePath: return build_model2_onepath(input_size);
    case ModelKind::DualPath: return build_model2_dualpath(input_size);
  }
  fail(ErrorCode::InvalidArgument, "unknown model kind");
}

std::size_t argmax(const Tensor& probabilities) {
  require(probabilities.rank() == 1 && probabilities.size() > 0, ErrorCode::Shape,
          "argmax expects a non-empty rank-1 tensor, got " + shape_str(probabilities.shape()));
  std::size_t best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i)
    if (probabilities[i] > probabilities[best]) best = i;
  return best;
}

Tensor predict(const Tensor& probabilities) {
  return one_hot(argmax(probabilities), probabilities.size());
}

Tensor one_hot(std::size_t index, std::size_t classes) {
  require(index < classes, ErrorCode::InvalidArgument, "one_hot index out of range");
  Tensor t({classes});
  t[index] = 1.0f;
  return t;
}

}  // namespace slc::models
