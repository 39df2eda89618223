// cgnp: data generation, training, evaluation and comparison of conditional
// (graph) neural processes on GP-sampled 1-D regression episodes.

#include <CLI11.hpp>

#include <clocale>
#include <iostream>
#include <string>
#include <vector>

#include "cgnp/cli/commands.hpp"
#include "cgnp/cli/episode_io.hpp"

namespace {

cgnp::RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  cgnp::RunConfig cfg = path.empty() ? cgnp::RunConfig{} : cgnp::load_run_config(path);
  cgnp::apply_overrides(cfg, overrides);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");
  CLI::App app{"Conditional (graph) neural processes on GP regression episodes"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path;
  std::string out_dir;
  std::string checkpoint;
  std::string data;
  std::size_t seeds = 1;
  std::size_t index = 0;

  auto* gen = app.add_subcommand("generate", "write the test-protocol episode file");
  gen->add_option("--config", config_path, "run config file");
  gen->add_option("--out", out_path, "output episode file")->required();
  gen->add_option("overrides", overrides, "key=value config overrides");

  auto* tr = app.add_subcommand("train", "train one model");
  tr->add_option("--config", config_path, "run config file");
  tr->add_option("--out-dir", out_dir, "directory for checkpoint and reports")->required();
  tr->add_option("overrides", overrides, "key=value config overrides");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on an episode file");
  ev->add_option("--checkpoint", checkpoint)->required();
  ev->add_option("--data", data)->required();
  ev->add_option("--out", out_path, "metrics CSV (default: <checkpoint>.eval.csv)");

  auto* cmp = app.add_subcommand("compare", "train CNP, CGNP and edgeless CGNP and tabulate test metrics");
  cmp->add_option("--config", config_path, "run config file");
  cmp->add_option("--seeds", seeds, "number of seed offsets")->check(CLI::PositiveNumber);
  cmp->add_option("--out", out_path, "comparison table CSV")->required();
  cmp->add_option("overrides", overrides, "key=value config overrides");

  auto* pl = app.add_subcommand("plot", "export the fit of one episode as CSV");
  pl->add_option("--checkpoint", checkpoint)->required();
  pl->add_option("--data", data)->required();
  pl->add_option("--index", index)->required();
  pl->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      cgnp::cmd_generate(resolve_config(config_path, overrides), out_path);
    } else if (*tr) {
      cgnp::cmd_train(resolve_config(config_path, overrides), out_dir, std::cout);
    } else if (*ev) {
      if (out_path.empty()) out_path = checkpoint + ".eval.csv";
      cgnp::cmd_eval(checkpoint, data, out_path, std::cout);
    } else if (*cmp) {
      cgnp::cmd_compare(resolve_config(config_path, overrides), seeds, out_path, std::cout);
    } else if (*pl) {
      cgnp::cmd_plot(checkpoint, data, index, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
