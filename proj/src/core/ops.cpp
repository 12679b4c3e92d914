#include "ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace slc::ops {

namespace {

constexpr std::size_t kLanes = 8;

std::vector<double> widen(std::span<const float> v) {
  return std::vector<double>(v.begin(), v.end());
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank)
    fail(ErrorCode::Shape, std::string(what) + ": expected rank " + std::to_string(rank) +
                               ", got " + shape_str(t.shape()));
}

// Fixed-order horizontal sum of the lane accumulators.
inline double lane_sum(const double* lanes) {
  double s = 0.0;
  for (std::size_t j = 0; j < kLanes; ++j) s += lanes[j];
  return s;
}

// Dot product of two f64 rows accumulated in kLanes interleaved partial sums.
inline void lane_dot(const double* a, const double* b, std::size_t n, double* lanes) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    for (std::size_t j = 0; j < kLanes; ++j) lanes[j] += a[i + j] * b[i + j];
  for (std::size_t j = 0; i + j < n; ++j) lanes[j] += a[i + j] * b[i + j];
}

double clamp_prob(double p) { return std::clamp(p, kLogEpsilon, 1.0 - kLogEpsilon); }

}  // namespace

// --- convolution -----------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  const std::size_t ci_n = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t co_n = kernels.dim(0);
  check_shape(kernels, {co_n, ci_n, 3, 3}, "conv2d kernels");
  check_shape(bias, {co_n}, "conv2d bias");
  require(h >= 3 && w >= 3, ErrorCode::Shape,
          "conv2d needs H,W >= 3, got " + shape_str(input.shape()));

  const std::size_t ho = h - 2, wo = w - 2;
  const std::vector<double> x = widen(input.data());
  Tensor out({co_n, ho, wo});
  std::vector<double> acc(ho * wo);

  for (std::size_t co = 0; co < co_n; ++co) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(bias[co]));
    for (std::size_t ci = 0; ci < ci_n; ++ci) {
      const float* kp = kernels.ptr() + (co * ci_n + ci) * 9;
      const double k0 = kp[0], k1 = kp[1], k2 = kp[2], k3 = kp[3], k4 = kp[4], k5 = kp[5],
                   k6 = kp[6], k7 = kp[7], k8 = kp[8];
      const double* plane = x.data() + ci * h * w;
      for (std::size_t y = 0; y < ho; ++y) {
        const double* r0 = plane + y * w;
        const double* r1 = r0 + w;
        const double* r2 = r1 + w;
        double* a = acc.data() + y * wo;
        for (std::size_t i = 0; i < wo; ++i) {
          double v = a[i];
          v += k0 * r0[i];
          v += k1 * r0[i + 1];
          v += k2 * r0[i + 2];
          v += k3 * r1[i];
          v += k4 * r1[i + 1];
          v += k5 * r1[i + 2];
          v += k6 * r2[i];
          v += k7 * r2[i + 1];
          v += k8 * r2[i + 2];
          a[i] = v;
        }
      }
    }
    float* o = out.ptr() + co * ho * wo;
    for (std::size_t i = 0; i < ho * wo; ++i) o[i] = static_cast<float>(acc[i]);
  }
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Tensor* grad_input, std::span<float> grad_kernels,
                     std::span<float> grad_bias) {
  require_rank(input, 3, "conv2d_backward input");
  const std::size_t ci_n = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t co_n = kernels.dim(0);
  const std::size_t ho = h - 2, wo = w - 2;
  check_shape(kernels, {co_n, ci_n, 3, 3}, "conv2d_backward kernels");
  check_shape(grad_out, {co_n, ho, wo}, "conv2d_backward grad_out");
  require(grad_kernels.size() == kernels.size() && grad_bias.size() == co_n, ErrorCode::Shape,
          "conv2d_backward: gradient buffers do not match parameters");

  const std::vector<double> x = widen(input.data());
  const std::vector<double> g = widen(grad_out.data());

  for (std::size_t co = 0; co < co_n; ++co) {
    const double* gp = g.data() + co * ho * wo;
    double s = 0.0;
    for (std::size_t i = 0; i < ho * wo; ++i) s += gp[i];
    grad_bias[co] += static_cast<float>(s);

    for (std::size_t ci = 0; ci < ci_n; ++ci) {
      const double* plane = x.data() + ci * h * w;
      double tap[9][kLanes] = {};
      for (std::size_t y = 0; y < ho; ++y) {
        const double* gr = gp + y * wo;
        const double* r0 = plane + y * w;
        const double* r1 = r0 + w;
        const double* r2 = r1 + w;
        std::size_t i = 0;
        for (; i + kLanes <= wo; i += kLanes) {
          for (std::size_t j = 0; j < kLanes; ++j) {
            const double gv = gr[i + j];
            tap[0][j] += gv * r0[i + j];
            tap[1][j] += gv * r0[i + j + 1];
            tap[2][j] += gv * r0[i + j + 2];
            tap[3][j] += gv * r1[i + j];
            tap[4][j] += gv * r1[i + j + 1];
            tap[5][j] += gv * r1[i + j + 2];
            tap[6][j] += gv * r2[i + j];
            tap[7][j] += gv * r2[i + j + 1];
            tap[8][j] += gv * r2[i + j + 2];
          }
        }
        for (std::size_t j = 0; i + j < wo; ++j) {
          const double gv = gr[i + j];
          tap[0][j] += gv * r0[i + j];
          tap[1][j] += gv * r0[i + j + 1];
          tap[2][j] += gv * r0[i + j + 2];
          tap[3][j] += gv * r1[i + j];
          tap[4][j] += gv * r1[i + j + 1];
          tap[5][j] += gv * r1[i + j + 2];
          tap[6][j] += gv * r2[i + j];
          tap[7][j] += gv * r2[i + j + 1];
          tap[8][j] += gv * r2[i + j + 2];
        }
      }
      float* gk = grad_kernels.data() + (co * ci_n + ci) * 9;
      for (std::size_t t = 0; t < 9; ++t) gk[t] += static_cast<float>(lane_sum(tap[t]));
    }
  }

  if (grad_input == nullptr) return;

  // Full correlation of the zero-bordered output gradient with the flipped
  // kernels. Padding contributes exact zeros, so each input cell sums over
  // (co, ky, kx) in ascending order.
  const std::size_t hp = ho + 4, wp = wo + 4;  // == h + 2, w + 2
  std::vector<double> gpad(co_n * hp * wp, 0.0);
  for (std::size_t co = 0; co < co_n; ++co)
    for (std::size_t y = 0; y < ho; ++y)
      std::copy_n(g.data() + (co * ho + y) * wo, wo, gpad.data() + (co * hp + y + 2) * wp + 2);

  *grad_input = Tensor(input.shape());
  std::vector<double> acc(h * w);
  for (std::size_t ci = 0; ci < ci_n; ++ci) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t co = 0; co < co_n; ++co) {
      const float* kp = kernels.ptr() + (co * ci_n + ci) * 9;
      // Output cell (Y-ky, X-kx) lives at padded (Y-ky+2, X-kx+2).
      const double k0 = kp[0], k1 = kp[1], k2 = kp[2], k3 = kp[3], k4 = kp[4], k5 = kp[5],
                   k6 = kp[6], k7 = kp[7], k8 = kp[8];
      const double* plane = gpad.data() + co * hp * wp;
      for (std::size_t y = 0; y < h; ++y) {
        const double* q2 = plane + (y + 2) * wp;  // ky = 0
        const double* q1 = plane + (y + 1) * wp;  // ky = 1
        const double* q0 = plane + y * wp;        // ky = 2
        double* a = acc.data() + y * w;
        for (std::size_t i = 0; i < w; ++i) {
          double v = a[i];
          v += k0 * q2[i + 2];
          v += k1 * q2[i + 1];
          v += k2 * q2[i];
          v += k3 * q1[i + 2];
          v += k4 * q1[i + 1];
          v += k5 * q1[i];
          v += k6 * q0[i + 2];
          v += k7 * q0[i + 1];
          v += k8 * q0[i];
          a[i] = v;
        }
      }
    }
    float* gi = grad_input->ptr() + ci * h * w;
    for (std::size_t i = 0; i < h * w; ++i) gi[i] = static_cast<float>(acc[i]);
  }
}

Conv2dGrads conv2d_grads(const Tensor& input, const Tensor& kernels, const Tensor& grad_out) {
  Conv2dGrads r{Tensor(), Tensor(kernels.shape()), Tensor({kernels.dim(0)})};
  conv2d_backward(input, kernels, grad_out, &r.input, r.kernels.data(), r.bias.data());
  return r;
}

Tensor conv1x1(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 3, "conv1x1 input");
  require_rank(weights, 2, "conv1x1 weights");
  const std::size_t ci_n = input.dim(0), hw = input.dim(1) * input.dim(2);
  const std::size_t co_n = weights.dim(0);
  check_shape(weights, {co_n, ci_n}, "conv1x1 weights");
  check_shape(bias, {co_n}, "conv1x1 bias");

  const std::vector<double> x = widen(input.data());
  Tensor out({co_n, input.dim(1), input.dim(2)});
  std::vector<double> acc(hw);
  for (std::size_t co = 0; co < co_n; ++co) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(bias[co]));
    for (std::size_t ci = 0; ci < ci_n; ++ci) {
      const double wv = weights[co * ci_n + ci];
      const double* p = x.data() + ci * hw;
      for (std::size_t i = 0; i < hw; ++i) acc[i] += wv * p[i];
    }
    float* o = out.ptr() + co * hw;
    for (std::size_t i = 0; i < hw; ++i) o[i] = static_cast<float>(acc[i]);
  }
  return out;
}

void conv1x1_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                      Tensor* grad_input, std::span<float> grad_weights,
                      std::span<float> grad_bias) {
  const std::size_t ci_n = input.dim(0), hw = input.dim(1) * input.dim(2);
  const std::size_t co_n = weights.dim(0);
  check_shape(grad_out, {co_n, input.dim(1), input.dim(2)}, "conv1x1_backward grad_out");
  require(grad_weights.size() == weights.size() && grad_bias.size() == co_n, ErrorCode::Shape,
          "conv1x1_backward: gradient buffers do not match parameters");

  const std::vector<double> x = widen(input.data());
  const std::vector<double> g = widen(grad_out.data());
  for (std::size_t co = 0; co < co_n; ++co) {
    const double* gp = g.data() + co * hw;
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += gp[i];
    grad_bias[co] += static_cast<float>(s);
    for (std::size_t ci = 0; ci < ci_n; ++ci) {
      double lanes[kLanes] = {};
      lane_dot(gp, x.data() + ci * hw, hw, lanes);
      grad_weights[co * ci_n + ci] += static_cast<float>(lane_sum(lanes));
    }
  }
  if (grad_input == nullptr) return;
  *grad_input = Tensor(input.shape());
  std::vector<double> acc(hw);
  for (std::size_t ci = 0; ci < ci_n; ++ci) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t co = 0; co < co_n; ++co) {
      const double wv = weights[co * ci_n + ci];
      const double* gp = g.data() + co * hw;
      for (std::size_t i = 0; i < hw; ++i) acc[i] += wv * gp[i];
    }
    float* o = grad_input->ptr() + ci * hw;
    for (std::size_t i = 0; i < hw; ++i) o[i] = static_cast<float>(acc[i]);
  }
}

Tensor pad1(const Tensor& input) {
  require_rank(input, 3, "pad1 input");
  const std::size_t c_n = input.dim(0), h = input.dim(1), w = input.dim(2);
  Tensor out({c_n, h + 2, w + 2});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(input.ptr() + (c * h + y) * w, w, out.ptr() + (c * (h + 2) + y + 1) * (w + 2) + 1);
  return out;
}

Tensor pad1_backward(const Tensor& grad_out) {
  require_rank(grad_out, 3, "pad1_backward grad_out");
  const std::size_t c_n = grad_out.dim(0), h = grad_out.dim(1) - 2, w = grad_out.dim(2) - 2;
  Tensor out({c_n, h, w});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(grad_out.ptr() + (c * (h + 2) + y + 1) * (w + 2) + 1, w,
                  out.ptr() + (c * h + y) * w);
  return out;
}

// --- pooling / resampling --------------------------------------------------

PoolResult maxpool2d(const Tensor& input, std::size_t window, std::size_t stride) {
  require(window == 2 && stride == 2, ErrorCode::Unsupported,
          "maxpool2d supports only window 2, stride 2 (got window " + std::to_string(window) +
              ", stride " + std::to_string(stride) + ")");
  require_rank(input, 3, "maxpool2d input");
  const std::size_t c_n = input.dim(0), h = input.dim(1), w = input.dim(2);
  require(h >= 2 && w >= 2, ErrorCode::Shape,
          "maxpool2d needs H,W >= 2, got " + shape_str(input.shape()));
  const std::size_t ho = h / 2, wo = w / 2;

  PoolResult r{Tensor({c_n, ho, wo}), std::vector<std::uint32_t>(c_n * ho * wo)};
  for (std::size_t c = 0; c < c_n; ++c) {
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t x = 0; x < wo; ++x) {
        const std::size_t base = (c * h + 2 * y) * w + 2 * x;
        const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = cand[0];
        for (std::size_t k = 1; k < 4; ++k)
          if (input[cand[k]] > input[best]) best = cand[k];
        const std::size_t o = (c * ho + y) * wo + x;
        r.output[o] = input[best];
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

Tensor maxpool2d_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                          const Tensor& grad_out) {
  require(argmax.size() == grad_out.size(), ErrorCode::Shape,
          "maxpool2d_backward: argmax and grad_out sizes differ");
  Tensor gi(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) gi[argmax[i]] += grad_out[i];
  return gi;
}

Tensor upsample2x(const Tensor& input) {
  require_rank(input, 3, "upsample2x input");
  const std::size_t c_n = input.dim(0), h = input.dim(1), w = input.dim(2);
  Tensor out({c_n, 2 * h, 2 * w});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (std::size_t x = 0; x < 2 * w; ++x) out.at(c, y, x) = input.at(c, y / 2, x / 2);
  return out;
}

Tensor upsample2x_backward(const Tensor& grad_out) {
  require_rank(grad_out, 3, "upsample2x_backward grad_out");
  const std::size_t c_n = grad_out.dim(0), h = grad_out.dim(1) / 2, w = grad_out.dim(2) / 2;
  Tensor gi({c_n, h, w});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double s = grad_out.at(c, 2 * y, 2 * x);
        s += grad_out.at(c, 2 * y, 2 * x + 1);
        s += grad_out.at(c, 2 * y + 1, 2 * x);
        s += grad_out.at(c, 2 * y + 1, 2 * x + 1);
        gi.at(c, y, x) = static_cast<float>(s);
      }
  return gi;
}

// --- dense -----------------------------------------------------------------

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 1, "dense input");
  require_rank(weights, 2, "dense weights");
  const std::size_t n = input.dim(0), m_n = weights.dim(0);
  check_shape(weights, {m_n, n}, "dense weights");
  check_shape(bias, {m_n}, "dense bias");

  const std::vector<double> x = widen(input.data());
  Tensor out({m_n});
  for (std::size_t m = 0; m < m_n; ++m) {
    const float* wr = weights.ptr() + m * n;
    double lanes[kLanes] = {};
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
      for (std::size_t j = 0; j < kLanes; ++j)
        lanes[j] += static_cast<double>(wr[i + j]) * x[i + j];
    for (std::size_t j = 0; i + j < n; ++j) lanes[j] += static_cast<double>(wr[i + j]) * x[i + j];
    out[m] = static_cast<float>(lane_sum(lanes) + static_cast<double>(bias[m]));
  }
  return out;
}

void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                    Tensor* grad_input, std::span<float> grad_weights,
                    std::span<float> grad_bias) {
  const std::size_t n = input.size(), m_n = weights.dim(0);
  check_shape(weights, {m_n, n}, "dense_backward weights");
  check_shape(grad_out, {m_n}, "dense_backward grad_out");
  require(grad_weights.size() == weights.size() && grad_bias.size() == m_n, ErrorCode::Shape,
          "dense_backward: gradient buffers do not match parameters");

  for (std::size_t m = 0; m < m_n; ++m) {
    const double gm = grad_out[m];
    grad_bias[m] += grad_out[m];
    if (gm == 0.0) continue;
    float* gw = grad_weights.data() + m * n;
    const float* x = input.ptr();
    for (std::size_t i = 0; i < n; ++i) gw[i] += static_cast<float>(gm * x[i]);
  }
  if (grad_input == nullptr) return;
  std::vector<double> acc(n, 0.0);
  for (std::size_t m = 0; m < m_n; ++m) {
    const double gm = grad_out[m];
    const float* wr = weights.ptr() + m * n;
    for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(wr[i]) * gm;
  }
  *grad_input = Tensor({n});
  for (std::size_t i = 0; i < n; ++i) (*grad_input)[i] = static_cast<float>(acc[i]);
}

DenseGrads dense_grads(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
  DenseGrads r{Tensor(), Tensor(weights.shape()), Tensor({weights.dim(0)})};
  dense_backward(input, weights, grad_out, &r.input, r.weights.data(), r.bias.data());
  return r;
}

// --- activations -----------------------------------------------------------

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.data()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  check_shape(grad_out, input.shape(), "relu_backward grad_out");
  Tensor gi(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) gi[i] = input[i] > 0.0f ? grad_out[i] : 0.0f;
  return gi;
}

Tensor softmax(const Tensor& input) {
  require_rank(input, 1, "softmax input");
  double mx = input[0];
  for (float v : input.data()) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> e(input.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    e[i] = std::exp(static_cast<double>(input[i]) - mx);
    sum += e[i];
  }
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = static_cast<float>(e[i] / sum);
  return out;
}

Tensor softmax_backward(const Tensor& output, const Tensor& grad_out) {
  check_shape(grad_out, output.shape(), "softmax_backward grad_out");
  double dot = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i)
    dot += static_cast<double>(output[i]) * grad_out[i];
  Tensor gi(output.shape());
  for (std::size_t i = 0; i < output.size(); ++i)
    gi[i] = static_cast<float>(static_cast<double>(output[i]) * (grad_out[i] - dot));
  return gi;
}

Tensor sigmoid(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double v = input[i];
    // Both branches avoid exp overflow.
    const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    out[i] = static_cast<float>(s);
  }
  return out;
}

Tensor sigmoid_backward(const Tensor& output, const Tensor& grad_out) {
  check_shape(grad_out, output.shape(), "sigmoid_backward grad_out");
  Tensor gi(output.shape());
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double s = output[i];
    gi[i] = static_cast<float>(grad_out[i] * s * (1.0 - s));
  }
  return gi;
}

// --- reshaping -------------------------------------------------------------

Tensor flatten(const Tensor& input) { return input.reshaped({input.size()}); }

Tensor concat(const Tensor& a, const Tensor& b) {
  require_rank(a, 1, "concat a");
  require_rank(b, 1, "concat b");
  std::vector<float> v;
  v.reserve(a.size() + b.size());
  v.insert(v.end(), a.data().begin(), a.data().end());
  v.insert(v.end(), b.data().begin(), b.data().end());
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

std::pair<Tensor, Tensor> concat_backward(const Tensor& grad_out, std::size_t first_len) {
  require(first_len > 0 && first_len < grad_out.size(), ErrorCode::Shape,
          "concat_backward: split point out of range");
  auto d = grad_out.data();
  return {Tensor({first_len}, std::vector<float>(d.begin(), d.begin() + first_len)),
          Tensor({d.size() - first_len}, std::vector<float>(d.begin() + first_len, d.end()))};
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels a");
  require_rank(b, 3, "concat_channels b");
  require(a.dim(1) == b.dim(1) && a.dim(2) == b.dim(2), ErrorCode::Shape,
          "concat_channels: spatial dims differ, " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
  std::vector<float> v;
  v.reserve(a.size() + b.size());
  v.insert(v.end(), a.data().begin(), a.data().end());
  v.insert(v.end(), b.data().begin(), b.data().end());
  return Tensor({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(v));
}

std::pair<Tensor, Tensor> concat_channels_backward(const Tensor& grad_out,
                                                   std::size_t first_channels) {
  require_rank(grad_out, 3, "concat_channels_backward grad_out");
  const std::size_t c_n = grad_out.dim(0), h = grad_out.dim(1), w = grad_out.dim(2);
  require(first_channels > 0 && first_channels < c_n, ErrorCode::Shape,
          "concat_channels_backward: split point out of range");
  auto d = grad_out.data();
  const std::size_t split = first_channels * h * w;
  return {Tensor({first_channels, h, w}, std::vector<float>(d.begin(), d.begin() + split)),
          Tensor({c_n - first_channels, h, w}, std::vector<float>(d.begin() + split, d.end()))};
}

// --- losses ----------------------------------------------------------------

namespace {
void validate_one_hot(const Tensor& target) {
  std::size_t ones = 0;
  for (float v : target.data()) {
    if (v == 1.0f)
      ++ones;
    else if (v != 0.0f)
      fail(ErrorCode::Validation, "target is not one-hot: contains value " + std::to_string(v));
  }
  require(ones == 1, ErrorCode::Validation,
          "target is not one-hot: " + std::to_string(ones) + " entries equal 1");
}
}  // namespace

double categorical_cross_entropy(const Tensor& predicted, const Tensor& target) {
  require_rank(predicted, 1, "categorical_cross_entropy predicted");
  check_shape(target, predicted.shape(), "categorical_cross_entropy target");
  validate_one_hot(target);
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double p = clamp_prob(predicted[i]);
    const double y = target[i];
    s += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return -s / static_cast<double>(predicted.size());
}

Tensor categorical_cross_entropy_backward(const Tensor& predicted, const Tensor& target) {
  check_shape(target, predicted.shape(), "categorical_cross_entropy_backward target");
  validate_one_hot(target);
  const double k = static_cast<double>(predicted.size());
  Tensor g(predicted.shape());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double raw = predicted[i];
    if (raw < kLogEpsilon || raw > 1.0 - kLogEpsilon) continue;
    const double y = target[i];
    g[i] = static_cast<float>(-(y / raw - (1.0 - y) / (1.0 - raw)) / k);
  }
  return g;
}

double binary_cross_entropy(const Tensor& predicted, const Tensor& target) {
  check_shape(target, predicted.shape(), "binary_cross_entropy target");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double p = clamp_prob(predicted[i]);
    const double t = target[i];
    s += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return -s / static_cast<double>(predicted.size());
}

Tensor binary_cross_entropy_backward(const Tensor& predicted, const Tensor& target) {
  check_shape(target, predicted.shape(), "binary_cross_entropy_backward target");
  const double n = static_cast<double>(predicted.size());
  Tensor g(predicted.shape());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double raw = predicted[i];
    if (raw < kLogEpsilon || raw > 1.0 - kLogEpsilon) continue;
    const double t = target[i];
    g[i] = static_cast<float>(-(t / raw - (1.0 - t) / (1.0 - raw)) / n);
  }
  return g;
}

namespace {
struct DiceSums {
  double inter = 0.0, p = 0.0, t = 0.0;
};
DiceSums dice_sums(const Tensor& predicted, const Tensor& target) {
  check_shape(target, predicted.shape(), "dice_loss target");
  DiceSums s;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    s.inter += static_cast<double>(predicted[i]) * target[i];
    s.p += predicted[i];
    s.t += target[i];
  }
  return s;
}
constexpr double kDiceSmooth = 1.0;
}  // namespace

double dice_loss(const Tensor& predicted, const Tensor& target) {
  const DiceSums s = dice_sums(predicted, target);
  return 1.0 - (2.0 * s.inter + kDiceSmooth) / (s.p + s.t + kDiceSmooth);
}

Tensor dice_loss_backward(const Tensor& predicted, const Tensor& target) {
  const DiceSums s = dice_sums(predicted, target);
  const double num = 2.0 * s.inter + kDiceSmooth;
  const double den = s.p + s.t + kDiceSmooth;
  Tensor g(predicted.shape());
  for (std::size_t i = 0; i < predicted.size(); ++i)
    g[i] = static_cast<float>(-(2.0 * target[i] * den - num) / (den * den));
  return g;
}

// --- initialisation --------------------------------------------------------

Tensor xavier_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                      SeededRng& rng) {
  require(fan_in >= 1 && fan_out >= 1, ErrorCode::InvalidArgument,
          "xavier_uniform: fan_in and fan_out must be >= 1");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(shape);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

}  // namespace slc::ops
