#pragma once

#include <array>
#include <string>
#include <string_view>

#include "network.hpp"

namespace slc::models {

inline constexpr std::size_t kNumClasses = 8;

/// Class order used everywhere: index i of every probability vector and
/// one-hot target refers to kClassNames[i].
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "MLN", "MCN", "BCC", "AK", "BK", "DF", "VL", "SCC"};

enum class ModelKind { Model1, OnePath, DualPath };

ModelKind parse_model_kind(std::string_view s);  // m1 | m2-one | m2-dual
const char* model_kind_name(ModelKind kind);
std::size_t default_input_size(ModelKind kind);  // 512 for m1, 256 otherwise
std::size_t input_channels(ModelKind kind);      // 1 for m1, 3 otherwise
std::size_t class_index(std::string_view name);

/// Grayscale classifier: conv(64) pool conv(32) pool flatten dense(32) dense(8).
nn::NetworkSpec build_model1(std::size_t input_size = 512);
/// Masked-image classifier: conv(32) conv(64) pool flatten dense(64) dense(32) dense(8).
nn::NetworkSpec build_model2_onepath(std::size_t input_size = 256);
/// Image and mask through two copies of the one-path conv stack, joined
/// after flattening, then the same dense head.
nn::NetworkSpec build_model2_dualpath(std::size_t input_size = 256);
/// input_size 0 selects the model's default.
nn::NetworkSpec build_model(ModelKind kind, std::size_t input_size = 0);

/// Index of the largest probability; the lowest index wins exact ties.
std::size_t argmax(const Tensor& probabilities);
/// One-hot vector at argmax.
Tensor predict(const Tensor& probabilities);
Tensor one_hot(std::size_t index, std::size_t classes = kNumClasses);

}  // namespace slc::models
