#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cgnp/gpgen/gp.hpp"
#include "cgnp/gpgen/rng.hpp"
#include "cgnp/numkit/matrix.hpp"

namespace cgnp {

/// One function instance split into context and target points.
struct Episode {
  std::vector<double> x_c;
  std::vector<double> y_c;
  std::vector<double> x_t;
  std::vector<double> y_t;

  std::size_t context_count() const { return x_c.size(); }
  std::size_t target_count() const { return x_t.size(); }

  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Episodes sharing one (context count, target count) pair.
struct EpisodeBatch {
  std::vector<Episode> episodes;
  std::size_t context_count = 0;
  std::size_t target_count = 0;

  friend bool operator==(const EpisodeBatch&, const EpisodeBatch&) = default;
};

/// Data protocol: sampling interval, set sizes and seeds.
struct ProtocolConfig {
  double x_min = -2.0;
  double x_max = 2.0;
  std::size_t min_context = 3;
  std::size_t max_context = 10;
  std::size_t min_target = 2;
  std::size_t max_target = 10;
  std::size_t batch_size = 64;
  std::size_t train_batches = 20'000;
  std::size_t grid_size = 400;
  std::size_t test_episodes = 1'000;
  std::uint64_t master_seed = 0;

  static constexpr std::size_t kFullTrainBatches = 200'000;
  static constexpr std::size_t kFullTestEpisodes = 10'000;

  /// Throws UsageError on empty ranges or a grid too small for the contexts.
  void validate() const;
};

EpisodeBatch make_train_batch(const ProtocolConfig& cfg, const EqKernelSpec& spec,
                              std::size_t batch_index);

/// 400-point evenly spaced grid including both interval endpoints.
std::vector<double> test_grid(const ProtocolConfig& cfg);

/// Draws test-protocol episodes. The grid factorization is computed once and
/// reused, which matters because the grid kernel is the same for every episode.
class TestEpisodeSampler {
 public:
  TestEpisodeSampler(const ProtocolConfig& cfg, const EqKernelSpec& spec,
                     StreamDomain domain = StreamDomain::kTestEpisode);

  Episode operator()(std::size_t episode_index) const;

 private:
  ProtocolConfig cfg_;
  StreamDomain domain_;
  std::vector<double> grid_;
  Matrix chol_;
};

Episode make_test_episode(const ProtocolConfig& cfg, const EqKernelSpec& spec,
                          std::size_t episode_index);

/// Episodes [0, count) of `domain`.
std::vector<Episode> make_test_set(const ProtocolConfig& cfg, const EqKernelSpec& spec,
                                   std::size_t count,
                                   StreamDomain domain = StreamDomain::kTestEpisode);

}  // namespace cgnp
