#include "cgnp/gpgen/gp.hpp"

#include <cmath>
#include <string>

namespace cgnp {

double eq_kernel(double x1, double x2, const EqKernelSpec& spec) {
  const double d = x1 - x2;
  return spec.signal_variance * std::exp(-d * d / (2.0 * spec.length_scale * spec.length_scale));
}

Matrix kernel_matrix(std::span<const double> xs, const EqKernelSpec& spec) {
  const std::size_t n = xs.size();
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = eq_kernel(xs[i], xs[i], spec) + spec.jitter;
    for (std::size_t j = 0; j < i; ++j) {
      const double v = eq_kernel(xs[i], xs[j], spec);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix cholesky(const Matrix& k) {
  if (k.rows() != k.cols()) throw DimensionError("cholesky: matrix is not square");
  const std::size_t n = k.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = k(j, j);
    for (std::size_t p = 0; p < j; ++p) diag -= l(j, p) * l(j, p);
    if (!(diag > 0.0)) {
      throw NotPositiveDefiniteError("cholesky: non-positive pivot " + std::to_string(diag) +
                                     " at column " + std::to_string(j));
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = k(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

std::vector<double> sample_function_values(std::span<const double> xs, const EqKernelSpec& spec,
                                           Rng& rng) {
  Matrix l;
  try {
    l = cholesky(kernel_matrix(xs, spec));
  } catch (const NotPositiveDefiniteError&) {
    EqKernelSpec retry = spec;
    retry.jitter = spec.jitter > 0.0 ? spec.jitter * 100.0 : 1e-6;
    l = cholesky(kernel_matrix(xs, retry));
  }

  const std::size_t n = xs.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(n);
  for (double& v : z) v = normal(rng);

  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) y[i] += l(i, j) * z[j];
  return y;
}

}  // namespace cgnp
