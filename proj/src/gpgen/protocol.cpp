#include "cgnp/gpgen/protocol.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace cgnp {

void ProtocolConfig::validate() const {
  if (!(x_min < x_max)) throw UsageError("protocol: empty sampling interval");
  if (min_context == 0 || min_context > max_context) throw UsageError("protocol: bad context range");
  if (min_target == 0 || min_target > max_target) throw UsageError("protocol: bad target range");
  if (batch_size == 0) throw UsageError("protocol: batch size must be positive");
  if (grid_size < max_context + 1) {
    throw UsageError("protocol: grid size " + std::to_string(grid_size) +
                     " leaves no targets for " + std::to_string(max_context) + " contexts");
  }
}

EpisodeBatch make_train_batch(const ProtocolConfig& cfg, const EqKernelSpec& spec,
                              std::size_t batch_index) {
  if (batch_index >= cfg.train_batches) {
    throw UsageError("make_train_batch: index " + std::to_string(batch_index) + " >= batch count " +
                     std::to_string(cfg.train_batches));
  }
  Rng rng = make_rng(cfg.master_seed, StreamDomain::kTrainBatch, batch_index);
  std::uniform_int_distribution<std::size_t> context_dist(cfg.min_context, cfg.max_context);
  std::uniform_int_distribution<std::size_t> target_dist(cfg.min_target, cfg.max_target);
  std::uniform_real_distribution<double> x_dist(cfg.x_min, cfg.x_max);

  EpisodeBatch batch;
  batch.context_count = context_dist(rng);
  batch.target_count = target_dist(rng);
  const std::size_t n = batch.context_count + batch.target_count;
  batch.episodes.reserve(cfg.batch_size);

  std::vector<double> xs(n);
  for (std::size_t e = 0; e < cfg.batch_size; ++e) {
    for (double& x : xs) x = x_dist(rng);
    const std::vector<double> ys = sample_function_values(xs, spec, rng);
    const auto split = static_cast<std::ptrdiff_t>(batch.context_count);
    Episode ep;
    ep.x_c.assign(xs.begin(), xs.begin() + split);
    ep.y_c.assign(ys.begin(), ys.begin() + split);
    ep.x_t.assign(xs.begin() + split, xs.end());
    ep.y_t.assign(ys.begin() + split, ys.end());
    batch.episodes.push_back(std::move(ep));
  }
  return batch;
}

std::vector<double> test_grid(const ProtocolConfig& cfg) {
  std::vector<double> grid(cfg.grid_size);
  const double step = (cfg.x_max - cfg.x_min) / static_cast<double>(cfg.grid_size - 1);
  for (std::size_t i = 0; i < cfg.grid_size; ++i) grid[i] = cfg.x_min + step * static_cast<double>(i);
  grid.back() = cfg.x_max;
  return grid;
}

TestEpisodeSampler::TestEpisodeSampler(const ProtocolConfig& cfg, const EqKernelSpec& spec,
                                       StreamDomain domain)
    : cfg_(cfg), domain_(domain), grid_(test_grid(cfg)) {
  cfg_.validate();
  try {
    chol_ = cholesky(kernel_matrix(grid_, spec));
  } catch (const NotPositiveDefiniteError&) {
    EqKernelSpec retry = spec;
    retry.jitter = spec.jitter > 0.0 ? spec.jitter * 100.0 : 1e-6;
    chol_ = cholesky(kernel_matrix(grid_, retry));
  }
}

Episode TestEpisodeSampler::operator()(std::size_t episode_index) const {
  Rng rng = make_rng(cfg_.master_seed, domain_, episode_index);
  const std::size_t n = grid_.size();

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(n);
  for (double& v : z) v = normal(rng);
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = chol_.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) acc += row[j] * z[j];
    y[i] = acc;
  }

  std::uniform_int_distribution<std::size_t> context_dist(cfg_.min_context, cfg_.max_context);
  const std::size_t n_c = context_dist(rng);
  // Partial Fisher-Yates: the first n_c entries become a uniform subset.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < n_c; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<bool> is_context(n, false);
  for (std::size_t i = 0; i < n_c; ++i) is_context[order[i]] = true;

  Episode ep;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_context[i]) {
      ep.x_c.push_back(grid_[i]);
      ep.y_c.push_back(y[i]);
    } else {
      ep.x_t.push_back(grid_[i]);
      ep.y_t.push_back(y[i]);
    }
  }
  return ep;
}

Episode make_test_episode(const ProtocolConfig& cfg, const EqKernelSpec& spec,
                          std::size_t episode_index) {
  if (episode_index >= cfg.test_episodes) {
    throw UsageError("make_test_episode: index " + std::to_string(episode_index) +
                     " >= test episode count " + std::to_string(cfg.test_episodes));
  }
  return TestEpisodeSampler(cfg, spec)(episode_index);
}

std::vector<Episode> make_test_set(const ProtocolConfig& cfg, const EqKernelSpec& spec,
                                   std::size_t count, StreamDomain domain) {
  TestEpisodeSampler sampler(cfg, spec, domain);
  std::vector<Episode> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler(i));
  return out;
}

}  // namespace cgnp
