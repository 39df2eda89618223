#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cgnp/cli/checkpoint.hpp"
#include "cgnp/cli/run_config.hpp"
#include "cgnp/trainer/trainer.hpp"

namespace cgnp {

/// Writes `data.test_episodes` test-protocol episodes for `seed.master`.
void cmd_generate(const RunConfig& cfg, const std::filesystem::path& out);

/// Trains and writes checkpoint.json, loss.csv and metrics.csv to `out_dir`.
/// Progress lines "batch=<i> loss=<v>" go to `log`. The metrics use
/// `paths.test_data` when set, otherwise a freshly generated test set.
TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Prints one "nll_per_point=.. nll_per_episode=.. mse=.. episode_count=.."
/// line to `out` and writes the same record as CSV to `out_csv`.
Metrics cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                 const std::filesystem::path& out_csv, std::ostream& out);

struct CompareRow {
  std::string model;  // "cnp" or "cgnp"
  double radius = 0.0;
  std::size_t seed_offset = 0;
  Metrics metrics;
  double loss_drop = 0.0;  // relative moving-average drop of the training loss
  double seconds = 0.0;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::filesystem::path test_set;
  std::string test_hash;

  /// Rows for one variant, in seed order.
  std::vector<CompareRow> variant(const std::string& model, double radius) const;
};

/// Window used for the loss-drop column: 1000 batches, or half the run when
/// it is shorter.
std::size_t loss_drop_window(std::size_t batches);

/// Trains CNP, CGNP(model.radius) and CGNP(0) for `seeds` seed offsets (seed.master
/// and seed.init both shifted by the offset), evaluates all of them on one
/// shared test file written next to `out`, and writes the table to `out`.
CompareResult cmd_compare(const RunConfig& cfg, std::size_t seeds, const std::filesystem::path& out,
                          std::ostream& log);

/// CSV x,y_true,mu,sigma,is_context over every point of episode `index`,
/// sorted by x.
void cmd_plot(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
              std::size_t index, const std::filesystem::path& out);

std::string metrics_csv(const Metrics& m, const std::string& header_comment);

}  // namespace cgnp
