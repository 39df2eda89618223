#pragma once

#include <span>
#include <vector>

#include "cgnp/gpgen/protocol.hpp"
#include "cgnp/npmodels/params.hpp"
#include "cgnp/numkit/ops.hpp"
#include "cgnp/numkit/tape.hpp"

namespace cgnp {

/// Per-target Gaussian: sigma[t] >= 0.1.
struct GaussianPrediction {
  std::vector<double> mu;
  std::vector<double> sigma;
};

/// Several episodes flattened into shared row blocks so that batch norm sees
/// every point of the batch at once.
struct BatchLayout {
  std::vector<double> x_c, y_c, x_t, y_t;
  std::vector<std::size_t> context_offsets;  // episodes + 1
  std::vector<std::size_t> target_offsets;   // episodes + 1
  std::vector<std::size_t> target_episode;   // owning episode of each target row

  explicit BatchLayout(std::span<const Episode> episodes);
  std::size_t episode_count() const { return context_offsets.size() - 1; }
};

/// Tape handles for the mean and sigma columns (targets x 1 each).
struct PredictionVars {
  Var mu;
  Var sigma;
};

/// Encoded context points, one row per context point (width D).
/// CNP: three pointwise affine -> BN blocks, ReLU after the first two.
/// CGNP: the same blocks with each affine replaced by a convolution over the
/// context->context radius graph of each episode.
Var encode_context(Tape& tape, const BatchLayout& layout, ParameterStore& store,
                   const ModelConfig& cfg, Mode mode);

/// Per-episode mean of the encoded rows (episodes x D).
Var pool_latent(Var h, const BatchLayout& layout);

/// CNP: concat(x_t, r) -> affine -> BN -> ReLU -> affine(2).
/// CGNP: the first block is a context->target convolution over h with a self
/// term on concat(x_t, r). Column 0 is mu, column 1 goes through
/// bounded_softplus to give sigma.
PredictionVars decode_targets(Tape& tape, const BatchLayout& layout, Var latent, Var h,
                              ParameterStore& store, const ModelConfig& cfg, Mode mode);

PredictionVars forward(Tape& tape, const BatchLayout& layout, ParameterStore& store,
                       const ModelConfig& cfg, Mode mode);

/// Eval-mode prediction for one episode. The store is not modified.
GaussianPrediction predict(const Episode& episode, const ParameterStore& store,
                           const ModelConfig& cfg);

/// Forward for one episode in the given mode; train mode updates running
/// statistics.
GaussianPrediction forward(const Episode& episode, ParameterStore& store, const ModelConfig& cfg,
                           Mode mode);

}  // namespace cgnp
