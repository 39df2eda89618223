#include "cgnp/cli/checkpoint.hpp"

#include <json.hpp>

#include "cgnp/cli/episode_io.hpp"

namespace cgnp {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "cgnp-checkpoint";
constexpr int kVersion = 1;

std::vector<double> values_of(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

std::string shape_str(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  json config = json::object();
  for (const auto& [k, v] : ckpt.config.entries()) config[k] = v;
  doc["config"] = config;

  json params = json::array();
  for (const ParamLeaf& p : ckpt.params.params()) {
    params.push_back({{"name", p.name},
                      {"shape", {p.value.rows(), p.value.cols()}},
                      {"values", values_of(p.value)}});
  }
  doc["params"] = params;

  json norms = json::array();
  for (const auto& n : ckpt.params.norms()) {
    norms.push_back({{"name", n.name},
                     {"momentum", n.stats.momentum},
                     {"eps", n.stats.eps},
                     {"running_mean", values_of(n.stats.running_mean)},
                     {"running_var", values_of(n.stats.running_var)}});
  }
  doc["batch_norm"] = norms;
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }

  Checkpoint ckpt;
  ParameterStore loaded;
  try {
    if (doc.at("format").get<std::string>() != kFormat || doc.at("version").get<int>() != kVersion) {
      throw IoError("unsupported checkpoint format/version");
    }
    for (const auto& [k, v] : doc.at("config").items()) ckpt.config.set(k, v.get<std::string>());

    for (const json& p : doc.at("params")) {
      const auto shape = p.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw IoError("parameter shape must have two entries");
      loaded.add(p.at("name").get<std::string>(),
                 Matrix(shape[0], shape[1], p.at("values").get<std::vector<double>>()));
    }
    for (const json& n : doc.at("batch_norm")) {
      const auto mean = n.at("running_mean").get<std::vector<double>>();
      const auto var = n.at("running_var").get<std::vector<double>>();
      if (mean.size() != var.size()) throw DimensionError("batch-norm statistics widths differ");
      BatchNormStats& s = loaded.add_norm(n.at("name").get<std::string>(), mean.size());
      s.momentum = n.at("momentum").get<double>();
      s.eps = n.at("eps").get<double>();
      s.running_mean = Matrix::row_vector(mean);
      s.running_var = Matrix::row_vector(var);
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }

  // The config decides the architecture; every stored tensor must match it.
  ckpt.params = init_params(ckpt.config.train.model);
  if (loaded.params().size() != ckpt.params.params().size()) {
    throw DimensionError("checkpoint has " + std::to_string(loaded.params().size()) +
                         " parameters, config implies " + std::to_string(ckpt.params.params().size()));
  }
  for (ParamLeaf& expect : ckpt.params.params()) {
    if (!loaded.contains(expect.name)) {
      throw DimensionError("checkpoint lacks parameter '" + expect.name + "' required by the config");
    }
    const ParamLeaf& got = loaded.at(expect.name);
    if (!got.value.same_shape(expect.value)) {
      throw DimensionError("shape mismatch for '" + expect.name + "': checkpoint " +
                           shape_str(got.value.rows(), got.value.cols()) + ", config implies " +
                           shape_str(expect.value.rows(), expect.value.cols()));
    }
    expect.value = got.value;
  }
  if (loaded.norms().size() != ckpt.params.norms().size()) {
    throw DimensionError("checkpoint batch-norm layer count does not match the config");
  }
  for (auto& expect : ckpt.params.norms()) {
    const BatchNormStats& got = loaded.norm(expect.name);
    if (got.width() != expect.stats.width()) {
      throw DimensionError("shape mismatch for batch-norm '" + expect.name + "'");
    }
    expect.stats = got;
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace cgnp
