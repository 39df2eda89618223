#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "cgnp/gpgen/gp.hpp"
#include "cgnp/gpgen/protocol.hpp"
#include "cgnp/npmodels/model.hpp"
#include "cgnp/npmodels/params.hpp"
#include "cgnp/numkit/errors.hpp"
#include "cgnp/numkit/tape.hpp"

namespace cgnp {

/// Raised when the training loss or a gradient stops being finite.
class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

struct TrainConfig {
  ModelConfig model;
  ProtocolConfig data;  // master_seed, batch count and batch size live here
  EqKernelSpec kernel;
  double lr = 1e-3;
  std::size_t eval_every = 0;      // 0 disables periodic held-out evaluation
  std::size_t held_out_episodes = 64;
  std::size_t log_every = 0;       // 0 disables the progress callback

  void validate() const;
};

struct Metrics {
  double nll_per_point = 0.0;    // mean over every target point
  double nll_per_episode = 0.0;  // mean over episodes of the summed target NLL
  double mse = 0.0;
  std::size_t episode_count = 0;
  std::size_t target_count = 0;
};

struct TrainReport {
  std::vector<double> loss_curve;  // one entry per batch
  std::vector<std::pair<std::size_t, Metrics>> held_out;  // (batch index, metrics)
  double seconds = 0.0;
  TrainConfig config;
};

struct TrainResult {
  ParameterStore params;
  TrainReport report;
};

/// Per-target weights 1 / (episodes * targets in that episode), as a column.
Matrix episode_mean_weights(const BatchLayout& layout);

/// Mean over episodes of the per-episode mean target NLL, recorded on `tape`.
/// Batch norm runs in train mode over all points of the batch.
Var batch_loss(Tape& tape, std::span<const Episode> episodes, ParameterStore& store,
               const ModelConfig& cfg);
double batch_loss(std::span<const Episode> episodes, ParameterStore& store, const ModelConfig& cfg);

using ProgressFn = std::function<void(std::size_t batch_index, double loss)>;

/// Runs the optimisation loop; deterministic in (data.master_seed, model.init_seed).
TrainResult train(const TrainConfig& cfg, const ProgressFn& progress = {});

/// Eval-mode metrics over target points of `test_set`. Throws UsageError on
/// an empty set.
Metrics evaluate(const ParameterStore& store, const ModelConfig& cfg,
                 std::span<const Episode> test_set);

/// Relative drop (head - tail) / |head| between the mean of the first and
/// the mean of the last `window` entries of a loss curve.
double moving_average_drop(std::span<const double> curve, std::size_t window);

}  // namespace cgnp
