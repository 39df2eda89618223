#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cgnp {

/// Radius neighborhoods from input nodes to output nodes over 1-D coordinates.
/// Input i is a neighbor of output o iff |coords_in[i] - coords_out[o]| <= radius.
struct BipartiteGraph {
  std::vector<double> coords_in;
  std::vector<double> coords_out;
  double radius = 0.0;
  /// Per output node, input indices in ascending order.
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t input_count() const { return coords_in.size(); }
  std::size_t output_count() const { return coords_out.size(); }
  std::size_t edge_count() const;
};

/// Closed-ball radius graph. Empty neighborhoods are allowed.
BipartiteGraph build_radius_graph(std::span<const double> coords_in,
                                  std::span<const double> coords_out, double radius);

/// Block-diagonal union: node indices of part k are shifted by the sizes of
/// parts 0..k-1 on each side. The radius of the result is that of the first part.
BipartiteGraph disjoint_union(std::span<const BipartiteGraph> parts);

}  // namespace cgnp
