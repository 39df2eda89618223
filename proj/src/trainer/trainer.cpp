#include "cgnp/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "cgnp/numkit/adam.hpp"
#include "cgnp/numkit/ops.hpp"

namespace cgnp {

void TrainConfig::validate() const {
  model.validate();
  data.validate();
  if (data.batch_size < 2) throw UsageError("train: batch_size must be >= 2 for batch norm");
  if (!(lr > 0.0)) throw UsageError("train: lr must be > 0");
  if (!(kernel.length_scale > 0.0) || !(kernel.signal_variance > 0.0) || kernel.jitter < 0.0) {
    throw UsageError("train: invalid kernel parameters");
  }
}

Matrix episode_mean_weights(const BatchLayout& layout) {
  const double episodes_inv = 1.0 / static_cast<double>(layout.episode_count());
  Matrix weights(layout.x_t.size(), 1);
  for (std::size_t e = 0; e < layout.episode_count(); ++e) {
    const std::size_t lo = layout.target_offsets[e];
    const std::size_t hi = layout.target_offsets[e + 1];
    for (std::size_t i = lo; i < hi; ++i) weights(i, 0) = episodes_inv / static_cast<double>(hi - lo);
  }
  return weights;
}

Var batch_loss(Tape& tape, std::span<const Episode> episodes, ParameterStore& store,
               const ModelConfig& cfg) {
  const BatchLayout layout(episodes);
  const PredictionVars pred = forward(tape, layout, store, cfg, Mode::kTrain);
  if (layout.y_t.size() != layout.x_t.size()) throw DimensionError("batch_loss: targets need y values");
  return gaussian_nll_weighted(Matrix::column_vector(layout.y_t), pred.mu, pred.sigma,
                               episode_mean_weights(layout));
}

double batch_loss(std::span<const Episode> episodes, ParameterStore& store, const ModelConfig& cfg) {
  Tape tape;
  return batch_loss(tape, episodes, store, cfg).value()(0, 0);
}

namespace {

std::string norm_summary(const ParameterStore& store) {
  std::ostringstream os;
  for (const ParamLeaf& p : store.params()) os << " |" << p.name << "|=" << norm(p.value);
  return os.str();
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  TrainResult result{init_params(cfg.model), {}};
  result.report.config = cfg;
  result.report.loss_curve.reserve(cfg.data.train_batches);

  std::vector<Episode> held_out;
  if (cfg.eval_every > 0) {
    held_out = make_test_set(cfg.data, cfg.kernel, cfg.held_out_episodes, StreamDomain::kHeldOut);
  }

  ParameterStore& store = result.params;
  const std::vector<ParamLeaf*> leaves = store.leaves();
  AdamState adam(AdamConfig{.lr = cfg.lr});

  for (std::size_t b = 0; b < cfg.data.train_batches; ++b) {
    const EpisodeBatch batch = make_train_batch(cfg.data, cfg.kernel, b);
    store.zero_grad();
    double loss = 0.0;
    try {
      Tape tape;
      Var l = batch_loss(tape, batch.episodes, store, cfg.model);
      loss = l.value()(0, 0);
      tape.backward(l);
    } catch (const NonFiniteError& e) {
      throw TrainingDivergedError("non-finite value at batch " + std::to_string(b) + ": " + e.what() +
                                  "; parameter norms:" + norm_summary(store));
    }
    for (const ParamLeaf* p : leaves) {
      if (!p->grad.all_finite()) {
        throw TrainingDivergedError("non-finite gradient for '" + p->name + "' at batch " +
                                    std::to_string(b) + "; parameter norms:" + norm_summary(store));
      }
    }
    adam_step(leaves, adam);
    result.report.loss_curve.push_back(loss);

    if (progress && cfg.log_every > 0 && (b % cfg.log_every == 0 || b + 1 == cfg.data.train_batches)) {
      progress(b, loss);
    }
    if (cfg.eval_every > 0 && (b + 1) % cfg.eval_every == 0) {
      result.report.held_out.emplace_back(b + 1, evaluate(store, cfg.model, held_out));
    }
  }

  result.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Metrics evaluate(const ParameterStore& store, const ModelConfig& cfg,
                 std::span<const Episode> test_set) {
  if (test_set.empty()) throw UsageError("evaluate: empty test set");
  Metrics m;
  double nll_sum = 0.0;
  double sq_sum = 0.0;
  double episode_nll_sum = 0.0;
  for (const Episode& ep : test_set) {
    if (ep.y_t.size() != ep.x_t.size()) throw DimensionError("evaluate: targets need y values");
    const GaussianPrediction pred = predict(ep, store, cfg);
    double ep_nll = 0.0;
    for (std::size_t t = 0; t < ep.x_t.size(); ++t) {
      const double r = ep.y_t[t] - pred.mu[t];
      ep_nll += gaussian_nll_term(ep.y_t[t], pred.mu[t], pred.sigma[t]);
      sq_sum += r * r;
    }
    nll_sum += ep_nll;
    episode_nll_sum += ep_nll;
    m.target_count += ep.x_t.size();
  }
  m.episode_count = test_set.size();
  m.nll_per_point = nll_sum / static_cast<double>(m.target_count);
  m.nll_per_episode = episode_nll_sum / static_cast<double>(m.episode_count);
  m.mse = sq_sum / static_cast<double>(m.target_count);
  return m;
}

double moving_average_drop(std::span<const double> curve, std::size_t window) {
  if (window == 0 || curve.size() < window) throw UsageError("moving_average_drop: curve shorter than window");
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    head += curve[i];
    tail += curve[curve.size() - window + i];
  }
  return (head - tail) / std::abs(head);
}

}  // namespace cgnp
