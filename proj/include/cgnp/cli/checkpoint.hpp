#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cgnp/cli/run_config.hpp"
#include "cgnp/npmodels/params.hpp"

namespace cgnp {

struct Checkpoint {
  RunConfig config;
  ParameterStore params;
};

/// JSON document:
///   {"format": "cgnp-checkpoint", "version": 1,
///    "config": {key: value, ...},
///    "params": [{"name", "shape": [rows, cols], "values": [...]}, ...],
///    "batch_norm": [{"name", "momentum", "eps", "running_mean", "running_var"}, ...]}
std::string serialize_checkpoint(const Checkpoint& ckpt);

/// Throws IoError on malformed documents and DimensionError when the stored
/// parameters do not match the shapes the stored config implies.
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cgnp
