#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cgnp/numkit/matrix.hpp"
#include "cgnp/numkit/tape.hpp"

namespace cgnp {

enum class Mode { kTrain, kEval };

/// Running statistics of one batch-norm layer. gamma/beta live in the
/// parameter store as ParamLeafs of shape 1 x width.
struct BatchNormStats {
  Matrix running_mean;  // 1 x width
  Matrix running_var;   // 1 x width
  double momentum = 0.9;
  double eps = 1e-5;

  explicit BatchNormStats(std::size_t width = 0)
      : running_mean(1, width, 0.0), running_var(1, width, 1.0) {}

  std::size_t width() const { return running_mean.cols(); }
};

/// x * W + b with b broadcast over rows. W is d_in x d_out, b is 1 x d_out.
Var affine(Var x, Var w, Var b);

/// max(0, x); subgradient at exactly 0 is 0.
Var relu(Var x);

/// 0.1 + 0.9 * log(1 + exp(s)), elementwise.
Var bounded_softplus(Var s);
double bounded_softplus(double s);

/// Per-column normalization. Train mode uses batch mean and biased variance
/// and folds them into `stats`; eval mode uses the running statistics.
Var batch_norm(Var x, Var gamma, Var beta, BatchNormStats& stats, Mode mode);

/// Mean over all entries of 0.5*log(2*pi*sigma^2) + (y - mu)^2 / (2*sigma^2).
Var gaussian_nll(const Matrix& y, Var mu, Var sigma);

/// Sum over entries of weight * nll term; `weights` has the shape of `y`.
Var gaussian_nll_weighted(const Matrix& y, Var mu, Var sigma, const Matrix& weights);

/// Elementwise Gaussian NLL term, no tape involved.
double gaussian_nll_term(double y, double mu, double sigma);

// Shape plumbing used by the models.

Var concat_cols(Var a, Var b);
/// Columns [begin, begin + count).
Var slice_cols(Var x, std::size_t begin, std::size_t count);
/// out.row(k) = x.row(index[k]).
Var gather_rows(Var x, std::vector<std::size_t> index);
/// Mean of consecutive row blocks. `offsets` has one entry per segment plus a
/// terminating entry equal to x.rows(); each segment must be non-empty.
Var segment_mean(Var x, std::vector<std::size_t> offsets);
Var add(Var a, Var b);
Var scale(Var x, double factor);
/// Sum of all entries as a 1x1 node.
Var sum(Var x);

}  // namespace cgnp
