#pragma once

// Scalar reference implementations and a finite-difference gradient checker,
// written independently of the tensor code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <torch/torch.h>
#include <vector>

namespace histo::test {

using Matrix = std::vector<std::vector<double>>;

inline Matrix to_matrix(const torch::Tensor& t) {
  const auto d = t.to(torch::kDouble).contiguous();
  Matrix m(d.size(0), std::vector<double>(d.size(1)));
  auto a = d.accessor<double, 2>();
  for (int64_t i = 0; i < d.size(0); ++i) {
    for (int64_t j = 0; j < d.size(1); ++j) m[i][j] = a[i][j];
  }
  return m;
}

inline std::vector<double> softmax_row(const std::vector<double>& z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - mx));
  for (double& v : p) v /= s;
  return p;
}

/// mean_b -sum_c t_c (1 - p_c)^gamma log p_c; gamma = 0 is plain cross entropy.
inline double focal_oracle(const Matrix& logits, const Matrix& targets, double gamma) {
  double total = 0.0;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    const auto p = softmax_row(logits[b]);
    for (std::size_t c = 0; c < p.size(); ++c) {
      const double mod = gamma == 0.0 ? 1.0 : std::pow(1.0 - p[c], gamma);
      total -= targets[b][c] * mod * std::log(p[c]);
    }
  }
  return total / static_cast<double>(logits.size());
}

inline double ce_oracle(const Matrix& logits, const Matrix& targets) { return focal_oracle(logits, targets, 0.0); }

inline double label_smoothing_oracle(const Matrix& logits, Matrix targets, double s) {
  for (auto& row : targets) {
    for (double& t : row) t = (1.0 - s) * t + s / static_cast<double>(row.size());
  }
  return ce_oracle(logits, targets);
}

/// Gradients with a norm below this are treated as zero (a softmax bias, say).
inline constexpr double kZeroGradient = 1e-6;

inline double relative_error(const torch::Tensor& analytic, const torch::Tensor& numeric) {
  const double denom = std::max({analytic.norm().item<double>(), numeric.norm().item<double>(), kZeroGradient});
  return (analytic - numeric).norm().item<double>() / denom;
}

/// ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2) for the
/// gradient of scalar f at x (central differences, double precision).
inline double gradient_relative_error(const std::function<torch::Tensor(const torch::Tensor&)>& f, torch::Tensor x,
                                      double eps = 1e-6) {
  x = x.to(torch::kDouble).detach().clone().set_requires_grad(true);
  f(x).backward();
  const auto analytic = x.grad().detach().clone().flatten();
  auto flat = x.detach().clone().flatten();
  auto numeric = torch::zeros_like(flat);
  torch::NoGradGuard no_grad;
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double orig = flat[i].item<double>();
    flat[i] = orig + eps;
    const double up = f(flat.view(x.sizes())).item<double>();
    flat[i] = orig - eps;
    const double down = f(flat.view(x.sizes())).item<double>();
    flat[i] = orig;
    numeric[i] = (up - down) / (2.0 * eps);
  }
  return relative_error(analytic, numeric);
}

/// Same check for every parameter of a module, one parameter tensor at a time.
/// Returns the worst relative error.
inline double module_gradient_relative_error(torch::nn::Module& m, const std::function<torch::Tensor()>& loss,
                                             double eps = 1e-6) {
  double worst = 0.0;
  for (auto& p : m.parameters()) {
    for (auto& q : m.parameters()) q.mutable_grad() = torch::Tensor();
    loss().backward();
    const auto analytic = p.grad().detach().clone().flatten();
    auto numeric = torch::zeros_like(analytic);
    torch::NoGradGuard no_grad;
    auto flat = p.view({-1});
    for (int64_t i = 0; i < flat.numel(); ++i) {
      const double orig = flat[i].item<double>();
      flat[i] = orig + eps;
      const double up = loss().item<double>();
      flat[i] = orig - eps;
      const double down = loss().item<double>();
      flat[i] = orig;
      numeric[i] = (up - down) / (2.0 * eps);
    }
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace histo::test
