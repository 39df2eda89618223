#pragma once

#include <optional>

#include "cgnp/numkit/errors.hpp"
#include "cgnp/numkit/matrix.hpp"
#include "cgnp/numkit/tape.hpp"
#include "cgnp/rgraph/graph.hpp"

namespace cgnp {

class IsolatedNodeError : public Error {
 public:
  using Error::Error;
};

class EmptyPoolError : public Error {
 public:
  using Error::Error;
};

/// Weights of one bipartite convolution layer, as tape handles.
///
/// `w_nbr` is (d_in + 1) x d_out: the last row multiplies the relative
/// position x_i - x_o of the neighbor. `w_self`, when present, is
/// d_self x d_out and maps the output node's own feature.
struct ConvLayerParams {
  Var w_nbr;
  std::optional<Var> w_self;
  Var bias;
};

/// For each output node o, the arithmetic mean of
///   { concat(f_i, x_i - x_o) * w_nbr + bias : i in neighbors(o) }
/// together with self_feats[o] * w_self + bias when a self term is given.
///
/// Throws IsolatedNodeError when some output node has no neighbors and the
/// layer has no self term.
Var bipartite_conv(const BipartiteGraph& g, Var feats_in, std::optional<Var> self_feats,
                   const ConvLayerParams& params);

/// Column-wise mean of the rows, as a 1 x D node. Throws EmptyPoolError for
/// zero rows.
Var mean_pool(Var feats);
Matrix mean_pool(const Matrix& feats);

}  // namespace cgnp
