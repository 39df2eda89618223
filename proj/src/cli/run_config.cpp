#include "cgnp/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cgnp {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw UsageError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw UsageError("not a non-negative integer: '" + std::string(text) + "'");
  }
  return v;
}

RunConfig::RunConfig() { train.log_every = 1000; }

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  const std::string k(key);
  if (k.starts_with("paths.") && k.size() > 6) {
    paths[k] = std::string(value);
  } else if (k == "model.kind") {
    train.model.kind = parse_model_kind(value);
  } else if (k == "model.latent_dim") {
    train.model.latent_dim = parse_uint(value);
  } else if (k == "model.radius") {
    train.model.radius = parse_double(value);
  } else if (k == "train.lr") {
    train.lr = parse_double(value);
  } else if (k == "train.batches") {
    train.data.train_batches = parse_uint(value);
  } else if (k == "train.batch_size") {
    train.data.batch_size = parse_uint(value);
  } else if (k == "train.eval_every") {
    train.eval_every = parse_uint(value);
  } else if (k == "train.log_every") {
    train.log_every = parse_uint(value);
  } else if (k == "seed.master") {
    train.data.master_seed = parse_uint(value);
  } else if (k == "seed.init") {
    train.model.init_seed = parse_uint(value);
  } else if (k == "data.length_scale") {
    train.kernel.length_scale = parse_double(value);
  } else if (k == "data.jitter") {
    train.kernel.jitter = parse_double(value);
  } else if (k == "data.signal_variance") {
    train.kernel.signal_variance = parse_double(value);
  } else if (k == "data.test_episodes") {
    train.data.test_episodes = parse_uint(value);
  } else {
    throw UsageError("unknown config key '" + k + "'");
  }
}

std::map<std::string, std::string> RunConfig::entries() const {
  std::map<std::string, std::string> e{
      {"model.kind", std::string(to_string(train.model.kind))},
      {"model.latent_dim", std::to_string(train.model.latent_dim)},
      {"model.radius", format_double(train.model.radius)},
      {"train.lr", format_double(train.lr)},
      {"train.batches", std::to_string(train.data.train_batches)},
      {"train.batch_size", std::to_string(train.data.batch_size)},
      {"train.eval_every", std::to_string(train.eval_every)},
      {"train.log_every", std::to_string(train.log_every)},
      {"seed.master", std::to_string(train.data.master_seed)},
      {"seed.init", std::to_string(train.model.init_seed)},
      {"data.length_scale", format_double(train.kernel.length_scale)},
      {"data.jitter", format_double(train.kernel.jitter)},
      {"data.signal_variance", format_double(train.kernel.signal_variance)},
      {"data.test_episodes", std::to_string(train.data.test_episodes)},
  };
  e.insert(paths.begin(), paths.end());
  return e;
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : entries()) {
    if (!out.empty()) out += ' ';
    out += k + "=" + v;
  }
  return out;
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      cfg.set(body.substr(0, eq), body.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

void apply_overrides(RunConfig& cfg, std::span<const std::string> overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("override '" + o + "' is not key=value");
    cfg.set(std::string_view(o).substr(0, eq), std::string_view(o).substr(eq + 1));
  }
}

}  // namespace cgnp
