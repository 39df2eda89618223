#include "cgnp/numkit/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cgnp/numkit/errors.hpp"

namespace cgnp {
namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw UsageError("operands recorded on different tapes");
  return a.tape();
}

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

}  // namespace

Var affine(Var x, Var w, Var b) {
  Tape& tape = same_tape(x, w);
  same_tape(x, b);
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Matrix& bv = b.value();
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
    throw DimensionError("affine: x " + shape_str(xv) + ", W " + shape_str(wv) + ", b " +
                         shape_str(bv));
  }
  Matrix out = matmul(xv, wv);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bv(0, j);
  }
  return tape.record(std::move(out), {x, w, b}, [x, w, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate(x, matmul(g, t.value(w).transposed()));
    if (t.requires_grad(w)) t.accumulate(w, matmul(t.value(x).transposed(), g));
    if (t.requires_grad(b)) {
      Matrix gb(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
      t.accumulate(b, gb);
    }
  }, "affine");
}

Var relu(Var x) {
  Matrix out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    Matrix gx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) gx.data()[i] = xv.data()[i] > 0.0 ? g.data()[i] : 0.0;
    t.accumulate(x, gx);
  }, "relu");
}

double bounded_softplus(double s) {
  const double softplus = std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
  return 0.1 + 0.9 * softplus;
}

Var bounded_softplus(Var s) {
  Matrix out = s.value();
  for (double& v : out.data()) v = bounded_softplus(v);
  return s.tape().record(std::move(out), {s}, [s](Tape& t, const Matrix& g) {
    const Matrix& sv = t.value(s);
    Matrix gs(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) gs.data()[i] = g.data()[i] * 0.9 * sigmoid(sv.data()[i]);
    t.accumulate(s, gs);
  }, "bounded_softplus");
}

Var batch_norm(Var x, Var gamma, Var beta, BatchNormStats& stats, Mode mode) {
  Tape& tape = same_tape(x, gamma);
  same_tape(x, beta);
  const Matrix& xv = x.value();
  const std::size_t n = xv.rows();
  const std::size_t d = xv.cols();
  if (d != stats.width() || gamma.value().cols() != d || beta.value().cols() != d) {
    throw DimensionError("batch_norm: input width " + std::to_string(d) + ", layer width " +
                         std::to_string(stats.width()));
  }
  if (mode == Mode::kTrain && n < 2) {
    throw DegenerateBatchError("batch_norm in train mode needs at least 2 rows, got " +
                               std::to_string(n));
  }

  Matrix mean(1, d);
  Matrix var(1, d);
  if (mode == Mode::kTrain) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) mean(0, j) += xv(i, j);
    for (std::size_t j = 0; j < d; ++j) mean(0, j) /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double c = xv(i, j) - mean(0, j);
        var(0, j) += c * c;
      }
    for (std::size_t j = 0; j < d; ++j) var(0, j) /= static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) {
      stats.running_mean(0, j) = stats.momentum * stats.running_mean(0, j) + (1.0 - stats.momentum) * mean(0, j);
      stats.running_var(0, j) = stats.momentum * stats.running_var(0, j) + (1.0 - stats.momentum) * var(0, j);
    }
  } else {
    mean = stats.running_mean;
    var = stats.running_var;
  }

  Matrix inv_std(1, d);
  for (std::size_t j = 0; j < d; ++j) inv_std(0, j) = 1.0 / std::sqrt(var(0, j) + stats.eps);
  Matrix xhat(n, d);
  Matrix out(n, d);
  const Matrix& gv = gamma.value();
  const Matrix& bv = beta.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      xhat(i, j) = (xv(i, j) - mean(0, j)) * inv_std(0, j);
      out(i, j) = gv(0, j) * xhat(i, j) + bv(0, j);
    }

  const bool batch_stats = mode == Mode::kTrain;
  return tape.record(std::move(out), {x, gamma, beta},
                     [x, gamma, beta, xhat = std::move(xhat), inv_std, batch_stats](Tape& t, const Matrix& g) {
    const std::size_t n = g.rows();
    const std::size_t d = g.cols();
    const Matrix& gv = t.value(gamma);
    Matrix g_gamma(1, d);
    Matrix g_beta(1, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        g_gamma(0, j) += g(i, j) * xhat(i, j);
        g_beta(0, j) += g(i, j);
      }
    t.accumulate(gamma, g_gamma);
    t.accumulate(beta, g_beta);
    if (!t.requires_grad(x)) return;

    Matrix gx(n, d);
    if (batch_stats) {
      // dx = inv_std / n * (n*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
      const double nn = static_cast<double>(n);
      for (std::size_t j = 0; j < d; ++j) {
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double dxh = g(i, j) * gv(0, j);
          s1 += dxh;
          s2 += dxh * xhat(i, j);
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double dxh = g(i, j) * gv(0, j);
          gx(i, j) = inv_std(0, j) / nn * (nn * dxh - s1 - xhat(i, j) * s2);
        }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gx(i, j) = g(i, j) * gv(0, j) * inv_std(0, j);
    }
    t.accumulate(x, gx);
  }, "batch_norm");
}

double gaussian_nll_term(double y, double mu, double sigma) {
  const double r = y - mu;
  return 0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma) + r * r / (2.0 * sigma * sigma);
}

Var gaussian_nll_weighted(const Matrix& y, Var mu, Var sigma, const Matrix& weights) {
  Tape& tape = same_tape(mu, sigma);
  const Matrix& mv = mu.value();
  const Matrix& sv = sigma.value();
  if (!y.same_shape(mv) || !y.same_shape(sv) || !y.same_shape(weights)) {
    throw DimensionError("gaussian_nll: y " + shape_str(y) + ", mu " + shape_str(mv) + ", sigma " +
                         shape_str(sv));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double s = sv.data()[i];
    if (!(s > 0.0)) throw DomainError("gaussian_nll: sigma must be positive, got " + std::to_string(s));
    total += weights.data()[i] * gaussian_nll_term(y.data()[i], mv.data()[i], s);
  }
  return tape.record(Matrix(1, 1, total), {mu, sigma}, [y, weights, mu, sigma](Tape& t, const Matrix& g) {
    const Matrix& mv = t.value(mu);
    const Matrix& sv = t.value(sigma);
    const double up = g(0, 0);
    Matrix g_mu(y.rows(), y.cols());
    Matrix g_sigma(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double s = sv.data()[i];
      const double r = y.data()[i] - mv.data()[i];
      const double w = weights.data()[i] * up;
      g_mu.data()[i] = -w * r / (s * s);
      g_sigma.data()[i] = w * (1.0 / s - r * r / (s * s * s));
    }
    t.accumulate(mu, g_mu);
    t.accumulate(sigma, g_sigma);
  }, "gaussian_nll");
}

Var gaussian_nll(const Matrix& y, Var mu, Var sigma) {
  if (y.size() == 0) throw DimensionError("gaussian_nll: empty input");
  return gaussian_nll_weighted(y, mu, sigma,
                               Matrix(y.rows(), y.cols(), 1.0 / static_cast<double>(y.size())));
}

Var concat_cols(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: " + shape_str(av) + " and " + shape_str(bv));
  }
  const std::size_t ca = av.cols();
  const std::size_t cb = bv.cols();
  Matrix out(av.rows(), ca + cb);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    for (std::size_t j = 0; j < ca; ++j) out(i, j) = av(i, j);
    for (std::size_t j = 0; j < cb; ++j) out(i, ca + j) = bv(i, j);
  }
  return tape.record(std::move(out), {a, b}, [a, b, ca, cb](Tape& t, const Matrix& g) {
    Matrix ga(g.rows(), ca);
    Matrix gb(g.rows(), cb);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = 0; j < ca; ++j) ga(i, j) = g(i, j);
      for (std::size_t j = 0; j < cb; ++j) gb(i, j) = g(i, ca + j);
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  }, "concat_cols");
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Matrix& xv = x.value();
  if (begin + count > xv.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") of " + shape_str(xv));
  }
  Matrix out(xv.rows(), count);
  for (std::size_t i = 0; i < xv.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = xv(i, begin + j);
  const std::size_t total = xv.cols();
  return x.tape().record(std::move(out), {x}, [x, begin, count, total](Tape& t, const Matrix& g) {
    Matrix gx(g.rows(), total);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < count; ++j) gx(i, begin + j) = g(i, j);
    t.accumulate(x, gx);
  }, "slice_cols");
}

Var gather_rows(Var x, std::vector<std::size_t> index) {
  const Matrix& xv = x.value();
  Matrix out(index.size(), xv.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= xv.rows()) throw DimensionError("gather_rows: row index out of range");
    auto src = xv.row(index[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return x.tape().record(std::move(out), {x}, [x, index = std::move(index)](Tape& t, const Matrix& g) {
    Matrix& gx = t.grad_buffer(x);
    for (std::size_t k = 0; k < index.size(); ++k) {
      auto dst = gx.row(index[k]);
      auto src = g.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }, "gather_rows");
}

Var segment_mean(Var x, std::vector<std::size_t> offsets) {
  const Matrix& xv = x.value();
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != xv.rows()) {
    throw DimensionError("segment_mean: offsets must span [0, rows]");
  }
  const std::size_t segs = offsets.size() - 1;
  Matrix out(segs, xv.cols());
  for (std::size_t s = 0; s < segs; ++s) {
    const std::size_t lo = offsets[s];
    const std::size_t hi = offsets[s + 1];
    if (hi <= lo) throw DimensionError("segment_mean: empty segment");
    auto dst = out.row(s);
    for (std::size_t i = lo; i < hi; ++i) {
      auto src = xv.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (double& v : dst) v *= inv;
  }
  return x.tape().record(std::move(out), {x}, [x, offsets = std::move(offsets)](Tape& t, const Matrix& g) {
    Matrix& gx = t.grad_buffer(x);
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      const double inv = 1.0 / static_cast<double>(offsets[s + 1] - offsets[s]);
      auto src = g.row(s);
      for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
        auto dst = gx.row(i);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j] * inv;
      }
    }
  }, "segment_mean");
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  if (!a.value().same_shape(b.value())) {
    throw DimensionError("add: " + shape_str(a.value()) + " and " + shape_str(b.value()));
  }
  Matrix out = a.value();
  add_inplace(out, b.value());
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  }, "add");
}

Var scale(Var x, double factor) {
  Matrix out = x.value();
  for (double& v : out.data()) v *= factor;
  return x.tape().record(std::move(out), {x}, [x, factor](Tape& t, const Matrix& g) {
    Matrix gx = g;
    for (double& v : gx.data()) v *= factor;
    t.accumulate(x, gx);
  }, "scale");
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.tape().record(Matrix(1, 1, total), {x}, [x](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    t.accumulate(x, Matrix(xv.rows(), xv.cols(), g(0, 0)));
  }, "sum");
}

}  // namespace cgnp
