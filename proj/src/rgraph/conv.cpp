#include "cgnp/rgraph/conv.hpp"

#include <string>
#include <vector>

#include "cgnp/numkit/ops.hpp"

namespace cgnp {
namespace {

/// Neighbor lists flattened for the backward closure.
struct FlatEdges {
  std::vector<std::size_t> offsets;  // output_count + 1
  std::vector<std::size_t> source;
  std::vector<double> rel_pos;
};

FlatEdges flatten(const BipartiteGraph& g) {
  FlatEdges e;
  e.offsets.reserve(g.output_count() + 1);
  e.offsets.push_back(0);
  e.source.reserve(g.edge_count());
  e.rel_pos.reserve(g.edge_count());
  for (std::size_t o = 0; o < g.output_count(); ++o) {
    for (std::size_t i : g.neighbors[o]) {
      e.source.push_back(i);
      e.rel_pos.push_back(g.coords_in[i] - g.coords_out[o]);
    }
    e.offsets.push_back(e.source.size());
  }
  return e;
}

}  // namespace

Var bipartite_conv(const BipartiteGraph& g, Var feats_in, std::optional<Var> self_feats,
                   const ConvLayerParams& params) {
  Tape& tape = feats_in.tape();
  const Matrix& f = feats_in.value();
  const Matrix& w = params.w_nbr.value();
  const Matrix& b = params.bias.value();
  const std::size_t d_in = f.cols();
  const std::size_t d_out = w.cols();
  const std::size_t n_out = g.output_count();

  if (g.neighbors.size() != n_out) throw DimensionError("bipartite_conv: malformed graph");
  if (f.rows() != g.input_count()) {
    throw DimensionError("bipartite_conv: " + std::to_string(f.rows()) + " feature rows for " +
                         std::to_string(g.input_count()) + " input nodes");
  }
  if (w.rows() != d_in + 1) {
    throw DimensionError("bipartite_conv: w_nbr has " + std::to_string(w.rows()) +
                         " rows, expected feature width + 1 = " + std::to_string(d_in + 1));
  }
  if (b.rows() != 1 || b.cols() != d_out) throw DimensionError("bipartite_conv: bias shape");
  if (self_feats.has_value() != params.w_self.has_value()) {
    throw UsageError("bipartite_conv: self features and self weights must be given together");
  }
  const bool has_self = self_feats.has_value();
  if (has_self) {
    const Matrix& s = self_feats->value();
    const Matrix& ws = params.w_self->value();
    if (s.rows() != n_out || ws.rows() != s.cols() || ws.cols() != d_out) {
      throw DimensionError("bipartite_conv: self term shape mismatch");
    }
  }

  FlatEdges edges = flatten(g);
  for (std::size_t o = 0; o < n_out; ++o) {
    if (!has_self && edges.offsets[o] == edges.offsets[o + 1]) {
      throw IsolatedNodeError("bipartite_conv: output node " + std::to_string(o) + " at x=" +
                              std::to_string(g.coords_out[o]) +
                              " has no neighbors and the layer has no self term");
    }
  }

  // Messages split as f_i * W[:d_in] + dx * W[d_in] so the feature product is
  // computed once per input node rather than once per edge.
  Matrix w_feat(d_in, d_out);
  for (std::size_t k = 0; k < d_in; ++k)
    for (std::size_t j = 0; j < d_out; ++j) w_feat(k, j) = w(k, j);
  const Matrix projected = matmul(f, w_feat);
  Matrix self_projected;
  if (has_self) self_projected = matmul(self_feats->value(), params.w_self->value());

  Matrix out(n_out, d_out);
  for (std::size_t o = 0; o < n_out; ++o) {
    auto row = out.row(o);
    for (std::size_t e = edges.offsets[o]; e < edges.offsets[o + 1]; ++e) {
      auto src = projected.row(edges.source[e]);
      const double dx = edges.rel_pos[e];
      for (std::size_t j = 0; j < d_out; ++j) row[j] += src[j] + dx * w(d_in, j);
    }
    if (has_self) {
      auto src = self_projected.row(o);
      for (std::size_t j = 0; j < d_out; ++j) row[j] += src[j];
    }
    const std::size_t count = edges.offsets[o + 1] - edges.offsets[o] + (has_self ? 1 : 0);
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t j = 0; j < d_out; ++j) row[j] = row[j] * inv + b(0, j);
  }

  std::vector<Var> inputs{feats_in, params.w_nbr, params.bias};
  if (has_self) {
    inputs.push_back(*self_feats);
    inputs.push_back(*params.w_self);
  }
  const Var self_var = has_self ? *self_feats : Var();
  const Var w_self_var = has_self ? *params.w_self : Var();
  const Var w_nbr = params.w_nbr;
  const Var bias = params.bias;

  return tape.record(std::move(out), inputs,
                     [feats_in, w_nbr, bias, self_var, w_self_var, has_self,
                      edges = std::move(edges), w_feat = std::move(w_feat)](Tape& t, const Matrix& g) {
    const Matrix& f = t.value(feats_in);
    const std::size_t n_out = g.rows();
    const std::size_t d_out = g.cols();
    const std::size_t d_in = f.cols();

    Matrix g_bias(1, d_out);
    Matrix g_projected(f.rows(), d_out);  // d loss / d (f * w_feat)
    Matrix g_w_nbr(d_in + 1, d_out);
    Matrix g_self_projected(has_self ? n_out : 0, d_out);

    for (std::size_t o = 0; o < n_out; ++o) {
      const std::size_t count = edges.offsets[o + 1] - edges.offsets[o] + (has_self ? 1 : 0);
      const double inv = 1.0 / static_cast<double>(count);
      auto go = g.row(o);
      for (std::size_t j = 0; j < d_out; ++j) g_bias(0, j) += go[j];
      for (std::size_t e = edges.offsets[o]; e < edges.offsets[o + 1]; ++e) {
        auto dst = g_projected.row(edges.source[e]);
        const double dx = edges.rel_pos[e];
        for (std::size_t j = 0; j < d_out; ++j) {
          dst[j] += go[j] * inv;
          g_w_nbr(d_in, j) += dx * go[j] * inv;
        }
      }
      if (has_self) {
        auto dst = g_self_projected.row(o);
        for (std::size_t j = 0; j < d_out; ++j) dst[j] = go[j] * inv;
      }
    }

    t.accumulate(bias, g_bias);
    if (t.requires_grad(w_nbr)) {
      const Matrix g_w_feat = matmul(f.transposed(), g_projected);
      for (std::size_t k = 0; k < d_in; ++k)
        for (std::size_t j = 0; j < d_out; ++j) g_w_nbr(k, j) = g_w_feat(k, j);
      t.accumulate(w_nbr, g_w_nbr);
    }
    if (t.requires_grad(feats_in)) t.accumulate(feats_in, matmul(g_projected, w_feat.transposed()));
    if (has_self) {
      if (t.requires_grad(w_self_var)) {
        t.accumulate(w_self_var, matmul(t.value(self_var).transposed(), g_self_projected));
      }
      if (t.requires_grad(self_var)) {
        t.accumulate(self_var, matmul(g_self_projected, t.value(w_self_var).transposed()));
      }
    }
  }, "bipartite_conv");
}

Var mean_pool(Var feats) {
  const std::size_t n = feats.value().rows();
  if (n == 0) throw EmptyPoolError("mean_pool: no rows to pool");
  return segment_mean(feats, {0, n});
}

Matrix mean_pool(const Matrix& feats) {
  if (feats.rows() == 0) throw EmptyPoolError("mean_pool: no rows to pool");
  Matrix out(1, feats.cols());
  for (std::size_t i = 0; i < feats.rows(); ++i)
    for (std::size_t j = 0; j < feats.cols(); ++j) out(0, j) += feats(i, j);
  const double inv = 1.0 / static_cast<double>(feats.rows());
  for (double& v : out.data()) v *= inv;
  return out;
}

}  // namespace cgnp
