#include "cgnp/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cgnp/cli/episode_io.hpp"

namespace cgnp {
namespace fs = std::filesystem;

namespace {

std::string metrics_record(const Metrics& m) {
  return "nll_per_point=" + format_double(m.nll_per_point) + " nll_per_episode=" +
         format_double(m.nll_per_episode) + " mse=" + format_double(m.mse) +
         " episode_count=" + std::to_string(m.episode_count);
}

std::vector<Episode> test_set_for(const RunConfig& cfg) {
  const auto it = cfg.paths.find("paths.test_data");
  if (it != cfg.paths.end()) return read_episodes(it->second);
  return make_test_set(cfg.train.data, cfg.train.kernel, cfg.train.data.test_episodes);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string metrics_csv(const Metrics& m, const std::string& header_comment) {
  std::string out = "# " + header_comment + "\n";
  out += "nll_per_point,nll_per_episode,mse,episode_count\n";
  out += format_double(m.nll_per_point) + "," + format_double(m.nll_per_episode) + "," +
         format_double(m.mse) + "," + std::to_string(m.episode_count) + "\n";
  return out;
}

void cmd_generate(const RunConfig& cfg, const fs::path& out) {
  const auto eps = make_test_set(cfg.train.data, cfg.train.kernel, cfg.train.data.test_episodes);
  write_episodes(out, eps);
}

TrainResult cmd_train(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  fs::create_directories(out_dir);
  TrainResult result = train(cfg.train, [&](std::size_t b, double loss) {
    log << "batch=" << b << " loss=" << format_double(loss) << '\n';
    log.flush();
  });
  save_checkpoint(out_dir / "checkpoint.json", Checkpoint{cfg, result.params});

  std::string curve = "# " + cfg.echo() + "\nbatch,loss\n";
  for (std::size_t i = 0; i < result.report.loss_curve.size(); ++i) {
    curve += std::to_string(i) + "," + format_double(result.report.loss_curve[i]) + "\n";
  }
  write_file_atomic(out_dir / "loss.csv", curve);

  const auto test = test_set_for(cfg);
  const Metrics m = evaluate(result.params, cfg.train.model, test);
  write_file_atomic(out_dir / "metrics.csv",
                    metrics_csv(m, cfg.echo() + " test_hash=" + content_hash(serialize_episodes(test)) +
                                       " seconds=" + format_double(result.report.seconds)));
  log << metrics_record(m) << '\n';
  return result;
}

Metrics cmd_eval(const fs::path& checkpoint, const fs::path& data, const fs::path& out_csv,
                 std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const std::string bytes = read_file(data);
  const std::vector<Episode> eps = parse_episodes(bytes);
  if (eps.empty()) throw IoError("episode file " + data.string() + " contains no episodes");
  const Metrics m = evaluate(ckpt.params, ckpt.config.train.model, eps);
  out << metrics_record(m) << '\n';
  write_file_atomic(out_csv, metrics_csv(m, ckpt.config.echo() + " test_set=" + data.string() +
                                                " test_hash=" + content_hash(bytes)));
  return m;
}

std::vector<CompareRow> CompareResult::variant(const std::string& model, double radius) const {
  std::vector<CompareRow> out;
  for (const CompareRow& r : rows)
    if (r.model == model && r.radius == radius) out.push_back(r);
  return out;
}

std::size_t loss_drop_window(std::size_t batches) { return std::min<std::size_t>(1000, batches / 2); }

CompareResult cmd_compare(const RunConfig& cfg, std::size_t seeds, const fs::path& out, std::ostream& log) {
  if (seeds == 0) throw UsageError("compare: need at least one seed");
  if (cfg.train.data.train_batches < 2) throw UsageError("compare: need at least two training batches");

  CompareResult result;
  fs::path test_path = out;
  test_path.replace_extension(".test.jsonl");
  const auto test = make_test_set(cfg.train.data, cfg.train.kernel, cfg.train.data.test_episodes);
  const std::string test_bytes = serialize_episodes(test);
  write_file_atomic(test_path, test_bytes);
  result.test_set = test_path;
  result.test_hash = content_hash(test_bytes);
  // Every model reads the file back, so all rows are scored on identical data.
  const auto shared = read_episodes(test_path);
  if (content_hash(serialize_episodes(shared)) != result.test_hash) {
    throw IoError("compare: shared test set did not round-trip");
  }

  struct Variant {
    ModelKind kind;
    double radius;
  };
  const Variant variants[] = {{ModelKind::kCnp, 0.0},
                              {ModelKind::kCgnp, cfg.train.model.radius},
                              {ModelKind::kCgnp, 0.0}};

  for (std::size_t s = 0; s < seeds; ++s) {
    for (const Variant& v : variants) {
      TrainConfig tc = cfg.train;
      tc.model.kind = v.kind;
      tc.model.radius = v.radius;
      tc.data.master_seed += s;
      tc.model.init_seed += s;
      tc.log_every = 0;
      const TrainResult r = train(tc);
      CompareRow row;
      row.model = std::string(to_string(v.kind));
      row.radius = v.radius;
      row.seed_offset = s;
      row.metrics = evaluate(r.params, tc.model, shared);
      row.loss_drop = moving_average_drop(r.report.loss_curve, loss_drop_window(r.report.loss_curve.size()));
      row.seconds = r.report.seconds;
      log << "model=" << row.model << " rho=" << format_double(row.radius) << " seed=" << s << " "
          << metrics_record(row.metrics) << " loss_drop=" << format_double(row.loss_drop)
          << " seconds=" << format_double(row.seconds) << '\n';
      log.flush();
      result.rows.push_back(row);
    }
  }

  std::string table = "# " + cfg.echo() + " seeds=" + std::to_string(seeds) + " test_set=" +
                      test_path.filename().string() + " test_hash=" + result.test_hash + "\n";
  table += "model,rho,seed,nll_per_point,nll_per_episode,mse,loss_drop\n";
  for (const CompareRow& r : result.rows) {
    table += r.model + "," + format_double(r.radius) + "," + std::to_string(r.seed_offset) + "," +
             format_double(r.metrics.nll_per_point) + "," + format_double(r.metrics.nll_per_episode) + "," +
             format_double(r.metrics.mse) + "," + format_double(r.loss_drop) + "\n";
  }
  for (const Variant& v : variants) {
    const auto rows = result.variant(std::string(to_string(v.kind)), v.radius);
    std::vector<double> nll, nll_ep, mse, drop;
    for (const auto& r : rows) {
      nll.push_back(r.metrics.nll_per_point);
      nll_ep.push_back(r.metrics.nll_per_episode);
      mse.push_back(r.metrics.mse);
      drop.push_back(r.loss_drop);
    }
    const std::string prefix = std::string(to_string(v.kind)) + "," + format_double(v.radius) + ",";
    table += prefix + "mean," + format_double(mean_of(nll)) + "," + format_double(mean_of(nll_ep)) + "," +
             format_double(mean_of(mse)) + "," + format_double(mean_of(drop)) + "\n";
    table += prefix + "std," + format_double(sample_std(nll)) + "," + format_double(sample_std(nll_ep)) + "," +
             format_double(sample_std(mse)) + "," + format_double(sample_std(drop)) + "\n";
  }
  write_file_atomic(out, table);
  return result;
}

void cmd_plot(const fs::path& checkpoint, const fs::path& data, std::size_t index, const fs::path& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const std::vector<Episode> eps = read_episodes(data);
  if (index >= eps.size()) {
    throw UsageError("episode index " + std::to_string(index) + " out of range (file has " +
                     std::to_string(eps.size()) + ")");
  }
  const Episode& ep = eps[index];

  // Contexts are predicted too, so every grid point gets a (mu, sigma).
  Episode query = ep;
  query.x_t.insert(query.x_t.end(), ep.x_c.begin(), ep.x_c.end());
  query.y_t.insert(query.y_t.end(), ep.y_c.begin(), ep.y_c.end());
  const GaussianPrediction pred = predict(query, ckpt.params, ckpt.config.train.model);

  std::vector<std::size_t> order(query.x_t.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return query.x_t[a] < query.x_t[b]; });

  std::string csv = "x,y_true,mu,sigma,is_context\n";
  for (std::size_t k : order) {
    csv += format_double(query.x_t[k]) + "," + format_double(query.y_t[k]) + "," + format_double(pred.mu[k]) +
           "," + format_double(pred.sigma[k]) + "," + (k >= ep.x_t.size() ? "1" : "0") + "\n";
  }
  write_file_atomic(out, csv);
}

}  // namespace cgnp
