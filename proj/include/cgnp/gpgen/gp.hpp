#pragma once

#include <span>
#include <vector>

#include "cgnp/gpgen/rng.hpp"
#include "cgnp/numkit/errors.hpp"
#include "cgnp/numkit/matrix.hpp"

namespace cgnp {

class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// Exponentiated quadratic (RBF) kernel parameters.
struct EqKernelSpec {
  double length_scale = 0.4;
  double signal_variance = 1.0;
  double jitter = 1e-6;
};

double eq_kernel(double x1, double x2, const EqKernelSpec& spec);

/// Gram matrix with `spec.jitter` on the diagonal.
Matrix kernel_matrix(std::span<const double> xs, const EqKernelSpec& spec);

/// Lower-triangular L with L * L^T = k. Throws NotPositiveDefiniteError on a
/// non-positive pivot.
Matrix cholesky(const Matrix& k);

/// One joint draw from the zero-mean GP prior at `xs`. If the factorization
/// fails, it is retried once with 100x jitter.
std::vector<double> sample_function_values(std::span<const double> xs, const EqKernelSpec& spec,
                                           Rng& rng);

}  // namespace cgnp
