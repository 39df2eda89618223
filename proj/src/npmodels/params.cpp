#include "cgnp/npmodels/params.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "cgnp/gpgen/rng.hpp"
#include "cgnp/numkit/errors.hpp"

namespace cgnp {

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kCnp ? "cnp" : "cgnp";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "cnp") return ModelKind::kCnp;
  if (lower == "cgnp") return ModelKind::kCgnp;
  throw UsageError("unknown model kind '" + std::string(text) + "' (expected cnp or cgnp)");
}

void ModelConfig::validate() const {
  if (latent_dim == 0) throw UsageError("model: latent_dim must be >= 1");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw UsageError("model: radius must be finite and >= 0");
}

ParamLeaf& ParameterStore::add(std::string name, Matrix value) {
  if (contains(name)) throw UsageError("duplicate parameter '" + name + "'");
  return params_.emplace_back(std::move(name), std::move(value));
}

BatchNormStats& ParameterStore::add_norm(std::string name, std::size_t width) {
  return norms_.emplace_back(NamedStats{std::move(name), BatchNormStats(width)}).stats;
}

ParamLeaf& ParameterStore::at(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw UsageError("no parameter named '" + std::string(name) + "'");
}

const ParamLeaf& ParameterStore::at(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->at(name);
}

bool ParameterStore::contains(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const ParamLeaf& p) { return p.name == name; });
}

BatchNormStats& ParameterStore::norm(std::string_view name) {
  for (auto& n : norms_)
    if (n.name == name) return n.stats;
  throw UsageError("no batch-norm layer named '" + std::string(name) + "'");
}

const BatchNormStats& ParameterStore::norm(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->norm(name);
}

std::vector<ParamLeaf*> ParameterStore::leaves() {
  std::vector<ParamLeaf*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.params_.size() != b.params_.size() || a.norms_.size() != b.norms_.size()) return false;
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    if (a.params_[i].name != b.params_[i].name || !(a.params_[i].value == b.params_[i].value)) return false;
  }
  for (std::size_t i = 0; i < a.norms_.size(); ++i) {
    const auto& x = a.norms_[i];
    const auto& y = b.norms_[i];
    if (x.name != y.name || !(x.stats.running_mean == y.stats.running_mean) ||
        !(x.stats.running_var == y.stats.running_var) || x.stats.momentum != y.stats.momentum ||
        x.stats.eps != y.stats.eps) {
      return false;
    }
  }
  return true;
}

namespace {

Matrix uniform_weights(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix w(fan_in, fan_out);
  for (double& v : w.data()) v = dist(rng);
  return w;
}

void add_norm_layer(ParameterStore& store, const std::string& prefix, std::size_t width) {
  store.add(prefix + ".bn.gamma", Matrix(1, width, 1.0));
  store.add(prefix + ".bn.beta", Matrix(1, width, 0.0));
  store.add_norm(prefix + ".bn", width);
}

}  // namespace

ParameterStore init_params(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.latent_dim;
  const bool graph = cfg.kind == ModelKind::kCgnp;
  const std::size_t pos = graph ? 1 : 0;
  const std::string nbr = graph ? ".W_nbr" : ".W";
  Rng rng = make_rng(cfg.init_seed, StreamDomain::kInit, 0);

  ParameterStore store;
  const std::size_t enc_in[ModelConfig::kEncoderDepth] = {2, d, d};
  for (std::size_t k = 0; k < ModelConfig::kEncoderDepth; ++k) {
    const std::string prefix = "enc." + std::to_string(k);
    store.add(prefix + nbr, uniform_weights(enc_in[k] + pos, d, rng));
    store.add(prefix + ".b", Matrix(1, d, 0.0));
    add_norm_layer(store, prefix, d);
  }

  if (graph) {
    store.add("dec.0.W_nbr", uniform_weights(d + 1, d, rng));
    store.add("dec.0.W_self", uniform_weights(1 + d, d, rng));
  } else {
    store.add("dec.0.W", uniform_weights(1 + d, d, rng));
  }
  store.add("dec.0.b", Matrix(1, d, 0.0));
  add_norm_layer(store, "dec.0", d);
  store.add("dec.1.W", uniform_weights(d, 2, rng));
  store.add("dec.1.b", Matrix(1, 2, 0.0));
  return store;
}

ParameterStore cnp_equivalent(const ParameterStore& cgnp, const ModelConfig& cgnp_cfg) {
  if (cgnp_cfg.kind != ModelKind::kCgnp) throw UsageError("cnp_equivalent expects a CGNP store");
  ParameterStore out;
  for (const ParamLeaf& p : cgnp.params()) {
    const std::string& name = p.name;
    if (name == "dec.0.W_nbr") continue;
    if (name == "dec.0.W_self") {
      out.add("dec.0.W", p.value);
    } else if (name.ends_with(".W_nbr")) {
      Matrix w(p.value.rows() - 1, p.value.cols());
      for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = p.value(i, j);
      out.add(name.substr(0, name.size() - 6) + ".W", std::move(w));
    } else {
      out.add(name, p.value);
    }
  }
  for (const auto& n : cgnp.norms()) out.norms().push_back(n);
  return out;
}

}  // namespace cgnp
