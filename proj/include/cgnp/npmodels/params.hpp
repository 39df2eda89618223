#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "cgnp/numkit/ops.hpp"
#include "cgnp/numkit/tape.hpp"

namespace cgnp {

enum class ModelKind { kCnp, kCgnp };

std::string_view to_string(ModelKind kind);
/// Accepts "cnp" / "cgnp" (case-insensitive).
ModelKind parse_model_kind(std::string_view text);

struct ModelConfig {
  ModelKind kind = ModelKind::kCgnp;
  std::size_t latent_dim = 8;
  double radius = 0.7;  // CGNP only
  std::uint64_t init_seed = 0;

  static constexpr std::size_t kEncoderDepth = 3;
  static constexpr std::size_t kDecoderDepth = 2;
  static constexpr double kSigmaFloor = 0.1;

  void validate() const;
};

/// Named trainable leaves plus batch-norm running statistics for one model.
/// Leaves keep stable addresses for the lifetime of the store.
class ParameterStore {
 public:
  struct NamedStats {
    std::string name;
    BatchNormStats stats;
  };

  ParamLeaf& add(std::string name, Matrix value);
  BatchNormStats& add_norm(std::string name, std::size_t width);

  ParamLeaf& at(std::string_view name);
  const ParamLeaf& at(std::string_view name) const;
  bool contains(std::string_view name) const;
  BatchNormStats& norm(std::string_view name);
  const BatchNormStats& norm(std::string_view name) const;

  std::deque<ParamLeaf>& params() { return params_; }
  const std::deque<ParamLeaf>& params() const { return params_; }
  std::deque<NamedStats>& norms() { return norms_; }
  const std::deque<NamedStats>& norms() const { return norms_; }

  /// Pointers in insertion order, the order the optimizer state follows.
  std::vector<ParamLeaf*> leaves();
  void zero_grad();
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  std::deque<ParamLeaf> params_;
  std::deque<NamedStats> norms_;
};

/// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero
/// biases, gamma = 1, beta = 0, running statistics (0, 1).
///
/// Layout for latent width D (CGNP adds one relative-position row to every
/// neighbor weight and a self weight on decoder layer 0):
///   enc.0.W 2xD, enc.1.W DxD, enc.2.W DxD, each with .b and .bn
///   dec.0.W (1+D)xD with .b and .bn, dec.1.W Dx2 with .b
/// CGNP names the neighbor weights W_nbr and the decoder self weight W_self.
ParameterStore init_params(const ModelConfig& cfg);

/// Maps CGNP weights onto a CNP store by dropping relative-position rows and
/// using dec.0.W_self as the CNP dec.0.W. With radius 0 and distinct
/// coordinates both stores compute the same function.
ParameterStore cnp_equivalent(const ParameterStore& cgnp, const ModelConfig& cgnp_cfg);

}  // namespace cgnp
