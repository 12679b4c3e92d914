#pragma once

// Layer primitives with explicit reverse passes.
//
// Values are stored as f32; every reduction accumulates in f64 in a fixed
// order, so results are bit-identical from run to run. Backward functions
// named *_backward accumulate (+=) into caller-owned parameter gradient
// buffers so a batch can be summed without temporaries; the *_grads helpers
// return fresh tensors and exist for checks and one-off use.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace slc::ops {

inline constexpr double kLogEpsilon = 1e-7;

// --- convolution -----------------------------------------------------------

/// Valid 3x3 convolution, stride 1: [Ci,H,W] * [Co,Ci,3,3] + [Co] -> [Co,H-2,W-2].
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);

/// grad_input may be null when the caller does not need it (first layer).
void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Tensor* grad_input, std::span<float> grad_kernels,
                     std::span<float> grad_bias);

struct Conv2dGrads {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};
Conv2dGrads conv2d_grads(const Tensor& input, const Tensor& kernels, const Tensor& grad_out);

/// Pointwise (1x1) convolution: [Ci,H,W] with weights [Co,Ci] + [Co] -> [Co,H,W].
Tensor conv1x1(const Tensor& input, const Tensor& weights, const Tensor& bias);
void conv1x1_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                      Tensor* grad_input, std::span<float> grad_weights,
                      std::span<float> grad_bias);

/// Zero border of one pixel: [C,H,W] -> [C,H+2,W+2]. Followed by conv2d this
/// gives a same-size convolution.
Tensor pad1(const Tensor& input);
Tensor pad1_backward(const Tensor& grad_out);

// --- pooling / resampling --------------------------------------------------

struct PoolResult {
  Tensor output;
  /// Flat input index of the winning element for every output cell.
  std::vector<std::uint32_t> argmax;
};

/// Max pooling; only window = stride = 2 is supported. Trailing odd rows and
/// columns are dropped. Ties go to the first element in row-major order.
PoolResult maxpool2d(const Tensor& input, std::size_t window = 2, std::size_t stride = 2);
Tensor maxpool2d_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                          const Tensor& grad_out);

/// Nearest-neighbour 2x upsampling: [C,H,W] -> [C,2H,2W].
Tensor upsample2x(const Tensor& input);
Tensor upsample2x_backward(const Tensor& grad_out);

// --- dense -----------------------------------------------------------------

/// out[m] = sum_n w[m,n] x[n] + b[m]
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);
void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                    Tensor* grad_input, std::span<float> grad_weights,
                    std::span<float> grad_bias);

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};
DenseGrads dense_grads(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

// --- activations -----------------------------------------------------------

Tensor relu(const Tensor& input);
/// Indicator x > 0; the derivative at exactly 0 is taken as 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

/// Max-subtracted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& input);
Tensor softmax_backward(const Tensor& output, const Tensor& grad_out);

Tensor sigmoid(const Tensor& input);
Tensor sigmoid_backward(const Tensor& output, const Tensor& grad_out);

// --- reshaping -------------------------------------------------------------

Tensor flatten(const Tensor& input);
Tensor concat(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> concat_backward(const Tensor& grad_out, std::size_t first_len);

/// Channel concatenation: [Ca,H,W] ++ [Cb,H,W] -> [Ca+Cb,H,W].
Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> concat_channels_backward(const Tensor& grad_out,
                                                   std::size_t first_channels);

// --- losses ----------------------------------------------------------------

/// Per-class binary cross-entropy averaged over the K classes:
///   L = -1/K sum_i [y_i log p_i + (1 - y_i) log(1 - p_i)],
/// with p clamped to [1e-7, 1 - 1e-7]. The target must be one-hot.
double categorical_cross_entropy(const Tensor& predicted, const Tensor& target);
/// dL/dp; zero where the clamp is active.
Tensor categorical_cross_entropy_backward(const Tensor& predicted, const Tensor& target);

/// Mean per-element binary cross-entropy for probability maps against {0,1}
/// targets, same clamp as above.
double binary_cross_entropy(const Tensor& predicted, const Tensor& target);
Tensor binary_cross_entropy_backward(const Tensor& predicted, const Tensor& target);

/// Soft Dice loss 1 - (2 sum pt + 1) / (sum p + sum t + 1).
double dice_loss(const Tensor& predicted, const Tensor& target);
Tensor dice_loss_backward(const Tensor& predicted, const Tensor& target);

// --- initialisation --------------------------------------------------------

/// I.i.d. uniform on [-b, b], b = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                      SeededRng& rng);

}  // namespace slc::ops
