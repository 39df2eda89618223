#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgnp/numkit/matrix.hpp"
#include "cgnp/numkit/tape.hpp"

namespace cgnp {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers, one pair per parameter, in the order the
/// parameters are passed to adam_step.
struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : config(cfg) {}
};

/// One bias-corrected Adam update. Moment buffers are created lazily on the
/// first call; later calls must pass the same parameters in the same order.
/// Gradients are read, never cleared.
void adam_step(std::span<ParamLeaf* const> params, AdamState& state);

}  // namespace cgnp
