#include "cgnp/npmodels/model.hpp"

#include <string>

#include "cgnp/numkit/errors.hpp"
#include "cgnp/rgraph/conv.hpp"
#include "cgnp/rgraph/graph.hpp"

namespace cgnp {

BatchLayout::BatchLayout(std::span<const Episode> episodes) {
  if (episodes.empty()) throw UsageError("forward: no episodes");
  context_offsets.push_back(0);
  target_offsets.push_back(0);
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    if (ep.x_c.empty() || ep.x_c.size() != ep.y_c.size()) {
      throw DimensionError("episode " + std::to_string(e) + ": context needs matching non-empty x_c/y_c");
    }
    if (ep.x_t.empty()) throw DimensionError("episode " + std::to_string(e) + ": no targets");
    if (!ep.y_t.empty() && ep.y_t.size() != ep.x_t.size()) {
      throw DimensionError("episode " + std::to_string(e) + ": x_t/y_t length mismatch");
    }
    x_c.insert(x_c.end(), ep.x_c.begin(), ep.x_c.end());
    y_c.insert(y_c.end(), ep.y_c.begin(), ep.y_c.end());
    x_t.insert(x_t.end(), ep.x_t.begin(), ep.x_t.end());
    y_t.insert(y_t.end(), ep.y_t.begin(), ep.y_t.end());
    target_episode.insert(target_episode.end(), ep.x_t.size(), e);
    context_offsets.push_back(x_c.size());
    target_offsets.push_back(x_t.size());
  }
}

namespace {

std::span<const double> slice(const std::vector<double>& v, const std::vector<std::size_t>& offsets,
                              std::size_t e) {
  return std::span<const double>(v).subspan(offsets[e], offsets[e + 1] - offsets[e]);
}

BipartiteGraph context_graph(const BatchLayout& layout, double radius) {
  std::vector<BipartiteGraph> parts;
  parts.reserve(layout.episode_count());
  for (std::size_t e = 0; e < layout.episode_count(); ++e) {
    const auto xc = slice(layout.x_c, layout.context_offsets, e);
    parts.push_back(build_radius_graph(xc, xc, radius));
  }
  return disjoint_union(parts);
}

BipartiteGraph target_graph(const BatchLayout& layout, double radius) {
  std::vector<BipartiteGraph> parts;
  parts.reserve(layout.episode_count());
  for (std::size_t e = 0; e < layout.episode_count(); ++e) {
    parts.push_back(build_radius_graph(slice(layout.x_c, layout.context_offsets, e),
                                       slice(layout.x_t, layout.target_offsets, e), radius));
  }
  return disjoint_union(parts);
}

Var norm_block(Tape& tape, Var x, ParameterStore& store, const std::string& prefix, Mode mode) {
  return batch_norm(x, tape.param(store.at(prefix + ".bn.gamma")),
                    tape.param(store.at(prefix + ".bn.beta")), store.norm(prefix + ".bn"), mode);
}

}  // namespace

Var encode_context(Tape& tape, const BatchLayout& layout, ParameterStore& store,
                   const ModelConfig& cfg, Mode mode) {
  Var h = concat_cols(tape.constant(Matrix::column_vector(layout.x_c)),
                      tape.constant(Matrix::column_vector(layout.y_c)));
  const bool graph = cfg.kind == ModelKind::kCgnp;
  const BipartiteGraph g = graph ? context_graph(layout, cfg.radius) : BipartiteGraph{};

  for (std::size_t k = 0; k < ModelConfig::kEncoderDepth; ++k) {
    const std::string prefix = "enc." + std::to_string(k);
    Var b = tape.param(store.at(prefix + ".b"));
    if (graph) {
      h = bipartite_conv(g, h, std::nullopt, {tape.param(store.at(prefix + ".W_nbr")), std::nullopt, b});
    } else {
      h = affine(h, tape.param(store.at(prefix + ".W")), b);
    }
    h = norm_block(tape, h, store, prefix, mode);
    if (k + 1 < ModelConfig::kEncoderDepth) h = relu(h);
  }
  return h;
}

Var pool_latent(Var h, const BatchLayout& layout) {
  if (layout.context_offsets.back() == 0) throw EmptyPoolError("pool_latent: no context rows");
  return segment_mean(h, layout.context_offsets);
}

PredictionVars decode_targets(Tape& tape, const BatchLayout& layout, Var latent, Var h,
                              ParameterStore& store, const ModelConfig& cfg, Mode mode) {
  if (latent.value().cols() != cfg.latent_dim) {
    throw DimensionError("decode_targets: latent width " + std::to_string(latent.value().cols()) +
                         ", model width " + std::to_string(cfg.latent_dim));
  }
  Var query = concat_cols(tape.constant(Matrix::column_vector(layout.x_t)),
                          gather_rows(latent, layout.target_episode));
  Var b0 = tape.param(store.at("dec.0.b"));
  Var z;
  if (cfg.kind == ModelKind::kCgnp) {
    const BipartiteGraph g = target_graph(layout, cfg.radius);
    z = bipartite_conv(g, h, query,
                       {tape.param(store.at("dec.0.W_nbr")), tape.param(store.at("dec.0.W_self")), b0});
  } else {
    z = affine(query, tape.param(store.at("dec.0.W")), b0);
  }
  z = relu(norm_block(tape, z, store, "dec.0", mode));
  Var out = affine(z, tape.param(store.at("dec.1.W")), tape.param(store.at("dec.1.b")));
  return {slice_cols(out, 0, 1), bounded_softplus(slice_cols(out, 1, 1))};
}

PredictionVars forward(Tape& tape, const BatchLayout& layout, ParameterStore& store,
                       const ModelConfig& cfg, Mode mode) {
  Var h = encode_context(tape, layout, store, cfg, mode);
  Var r = pool_latent(h, layout);
  return decode_targets(tape, layout, r, h, store, cfg, mode);
}

GaussianPrediction forward(const Episode& episode, ParameterStore& store, const ModelConfig& cfg,
                           Mode mode) {
  Tape tape;
  const BatchLayout layout(std::span<const Episode>(&episode, 1));
  const PredictionVars p = forward(tape, layout, store, cfg, mode);
  const auto mu = p.mu.value().data();
  const auto sigma = p.sigma.value().data();
  return {std::vector<double>(mu.begin(), mu.end()), std::vector<double>(sigma.begin(), sigma.end())};
}

GaussianPrediction predict(const Episode& episode, const ParameterStore& store,
                           const ModelConfig& cfg) {
  // Eval mode never writes to the store; the cast lets it share the tape path.
  return forward(episode, const_cast<ParameterStore&>(store), cfg, Mode::kEval);
}

}  // namespace cgnp
