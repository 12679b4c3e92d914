#pragma once

#include <functional>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace slc {

struct GradCheckReport {
  /// ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2) per input.
  std::vector<double> rel_error;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Scalar objective over a list of inputs, evaluated in f64.
using ScalarFn = std::function<double(const std::vector<Tensor>&)>;
/// Analytic gradient of the objective with respect to each input.
using GradientFn = std::function<std::vector<Tensor>(const std::vector<Tensor>&)>;

/// Central differences (f(x+h) - f(x-h)) / 2h for every element of every
/// input, compared with the analytic gradient.
GradCheckReport gradient_check(const ScalarFn& objective, const GradientFn& analytic,
                               const std::vector<Tensor>& inputs, double step,
                               double tolerance);

/// sum_i weights[i] * t[i] in f64; turns a tensor-valued op into a scalar
/// whose gradient with respect to the op output is `weights`.
double project(const Tensor& t, const Tensor& weights);

/// Uniform[-1, 1) tensor for checks.
Tensor random_tensor(const Shape& shape, SeededRng& rng, double lo = -1.0, double hi = 1.0);

}  // namespace slc
