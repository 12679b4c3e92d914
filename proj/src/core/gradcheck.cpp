#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace slc {

GradCheckReport gradient_check(const ScalarFn& objective, const GradientFn& analytic,
                               const std::vector<Tensor>& inputs, double step,
                               double tolerance) {
  require(step > 0.0, ErrorCode::InvalidArgument, "gradient_check: step must be positive");
  const std::vector<Tensor> grads = analytic(inputs);
  require(grads.size() == inputs.size(), ErrorCode::Shape,
          "gradient_check: analytic gradient count differs from input count");

  GradCheckReport report;
  report.tolerance = tolerance;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    check_shape(grads[k], inputs[k].shape(), "gradient_check analytic gradient");
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const float orig = inputs[k][i];
      const float plus = static_cast<float>(orig + step);
      const float minus = static_cast<float>(orig - step);
      probe[k][i] = plus;
      const double fp = objective(probe);
      probe[k][i] = minus;
      const double fm = objective(probe);
      probe[k][i] = orig;
      // Divide by the step actually taken after rounding to f32.
      const double numeric = (fp - fm) / (static_cast<double>(plus) - minus);
      const double a = grads[k][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
    const double rel = denom > 0.0 ? std::sqrt(diff2) / denom : 0.0;
    report.rel_error.push_back(rel);
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

double project(const Tensor& t, const Tensor& weights) {
  check_shape(weights, t.shape(), "project weights");
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += static_cast<double>(t[i]) * weights[i];
  return s;
}

Tensor random_tensor(const Shape& shape, SeededRng& rng, double lo, double hi) {
  Tensor t(shape);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

}  // namespace slc
