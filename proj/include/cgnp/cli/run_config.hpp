#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "cgnp/trainer/trainer.hpp"

namespace cgnp {

/// Flat `key = value` run configuration. Lines starting with '#' are
/// comments. Unknown keys are rejected; `paths.*` keys are free-form.
///
///   model.kind        cgnp          model.latent_dim   8
///   model.radius      0.7           train.lr           1e-3
///   train.batches     20000         train.batch_size   64
///   train.eval_every  0             train.log_every    1000
///   seed.master       0             seed.init          0
///   data.length_scale 0.4           data.jitter        1e-6
///   data.signal_variance 1.0        data.test_episodes 1000
struct RunConfig {
  TrainConfig train;
  std::map<std::string, std::string> paths;

  RunConfig();

  /// Applies one `key=value` assignment.
  void set(std::string_view key, std::string_view value);
  /// Every key with its current value, in a fixed order.
  std::map<std::string, std::string> entries() const;
  /// `key=value` pairs separated by single spaces.
  std::string echo() const;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Applies `key=value` overrides; later ones win.
void apply_overrides(RunConfig& cfg, std::span<const std::string> overrides);

/// Shortest decimal that parses back to the same double; '.' separator.
std::string format_double(double v);
double parse_double(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

}  // namespace cgnp
