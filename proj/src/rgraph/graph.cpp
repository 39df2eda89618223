#include "cgnp/rgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cgnp/numkit/errors.hpp"

namespace cgnp {

std::size_t BipartiteGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& nb : neighbors) n += nb.size();
  return n;
}

BipartiteGraph build_radius_graph(std::span<const double> coords_in,
                                  std::span<const double> coords_out, double radius) {
  if (!(radius >= 0.0)) throw DomainError("build_radius_graph: radius must be >= 0");
  for (double c : coords_in)
    if (!std::isfinite(c)) throw DomainError("build_radius_graph: non-finite input coordinate");
  for (double c : coords_out)
    if (!std::isfinite(c)) throw DomainError("build_radius_graph: non-finite output coordinate");

  BipartiteGraph g;
  g.coords_in.assign(coords_in.begin(), coords_in.end());
  g.coords_out.assign(coords_out.begin(), coords_out.end());
  g.radius = radius;
  g.neighbors.resize(coords_out.size());

  // Sort inputs by coordinate; for a fixed output the rounded distance is
  // monotone on either side, so the neighbors form one contiguous run.
  std::vector<std::size_t> order(coords_in.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return coords_in[a] < coords_in[b]; });

  for (std::size_t o = 0; o < coords_out.size(); ++o) {
    const double x = coords_out[o];
    auto first = std::partition_point(order.begin(), order.end(), [&](std::size_t i) {
      return coords_in[i] < x && std::abs(coords_in[i] - x) > radius;
    });
    auto last = std::partition_point(first, order.end(), [&](std::size_t i) {
      return !(coords_in[i] > x && std::abs(coords_in[i] - x) > radius);
    });
    auto& nb = g.neighbors[o];
    nb.assign(first, last);
    std::sort(nb.begin(), nb.end());
  }
  return g;
}

BipartiteGraph disjoint_union(std::span<const BipartiteGraph> parts) {
  BipartiteGraph g;
  if (parts.empty()) return g;
  g.radius = parts.front().radius;
  std::size_t in_offset = 0;
  for (const BipartiteGraph& p : parts) {
    g.coords_in.insert(g.coords_in.end(), p.coords_in.begin(), p.coords_in.end());
    g.coords_out.insert(g.coords_out.end(), p.coords_out.begin(), p.coords_out.end());
    for (const auto& nb : p.neighbors) {
      auto& dst = g.neighbors.emplace_back();
      dst.reserve(nb.size());
      for (std::size_t i : nb) dst.push_back(i + in_offset);
    }
    in_offset += p.coords_in.size();
  }
  return g;
}

}  // namespace cgnp
