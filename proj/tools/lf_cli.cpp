// Experiment harness: lf <subcommand> [options]

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lf/cli/pipeline.hpp"
#include "lf/core/errors.hpp"
#include "lf/simgen/io.hpp"

namespace fs = std::filesystem;
using lf::cli::ExperimentConfig;

namespace {

struct Overrides {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> streams, users, buckets, exposures, context, horizon, epochs;
  std::optional<std::size_t> stat_epochs, prod_epochs, rank_epochs;
  std::vector<std::string> variants;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--streams", o.streams, "Number of live streams");
  cmd->add_option("--users", o.users, "Number of users");
  cmd->add_option("--buckets", o.buckets, "Buckets per stream");
  cmd->add_option("--exposures", o.exposures, "Number of exposure samples");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--context", o.context, "Statistic history window W");
  cmd->add_option("--horizon", o.horizon, "Statistic forecast horizon");
  cmd->add_option("--epochs", o.epochs, "Epochs for every training stage");
  cmd->add_option("--stat-epochs", o.stat_epochs, "Statistic model epochs");
  cmd->add_option("--prod-epochs", o.prod_epochs, "Product model epochs");
  cmd->add_option("--rank-epochs", o.rank_epochs, "Ranker epochs");
  cmd->add_option("--variant", o.variants, "Ranker variant(s): base, stat, prod, both, all");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    try {
      c = lf::cli::config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw lf::ConfigError(o.config_file + ": " + e.what());
    }
  }
  if (o.seed) c.seed = *o.seed;
  c.apply_seed();
  if (o.streams) c.sim.streams = *o.streams;
  if (o.users) c.sim.users = *o.users;
  if (o.buckets) c.sim.buckets = *o.buckets;
  if (o.exposures) c.sim.exposures = *o.exposures;
  if (o.context) c.sim.context = c.stat.context = *o.context;
  if (o.horizon) c.stat.horizon = *o.horizon;
  if (o.epochs) c.stat.epochs = c.prod.epochs = c.rank.epochs = *o.epochs;
  if (o.stat_epochs) c.stat.epochs = *o.stat_epochs;
  if (o.prod_epochs) c.prod.epochs = *o.prod_epochs;
  if (o.rank_epochs) c.rank.epochs = *o.rank_epochs;
  if (!o.variants.empty()) {
    c.variants.clear();
    for (const auto& v : o.variants) {
      if (v == "all") {
        c.variants = {"base", "+stat", "+prod", "+both"};
        break;
      }
      c.variants.emplace_back(lf::ranker::variant_name(lf::ranker::parse_variant(v)));
    }
  }
  if (o.out) c.out = *o.out;
  return c;
}

// Reuses an exported world when one matching the config is on disk.
lf::cli::Experiment open_experiment(const ExperimentConfig& c) {
  lf::cli::Experiment exp(c);
  exp.set_model_cache(c.out / "models");
  const auto data = c.out / "data";
  if (fs::exists(data / "manifest.json")) {
    auto imported = lf::simgen::import_dataset(data);
    for (const auto& w : imported.warnings) std::cerr << "warning: " << w << '\n';
    if (nlohmann::json(imported.world.config) == nlohmann::json(c.sim)) {
      exp.use_world(std::move(imported.world));
    } else {
      std::cerr << "note: " << data.string() << " was generated with another config; regenerating\n";
    }
  }
  return exp;
}

void print_losses(const char* what, const std::vector<double>& losses) {
  if (losses.empty()) {
    std::cout << what << ": loaded from cache\n";
    return;
  }
  std::cout << what << " loss by epoch:";
  for (double l : losses) std::cout << ' ' << l;
  std::cout << '\n';
}

void print_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return;
  std::cout << "== " << p.filename().string() << '\n' << in.rdbuf() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Live-streaming foresight experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::string which;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic world and export it");
  auto* train_stat = app.add_subcommand("train-stat", "Train the statistic forecaster");
  auto* train_prod = app.add_subcommand("train-prod", "Train the product forecaster");
  auto* train_rank = app.add_subcommand("train-rank", "Train ranker variants and write rank_report.csv");
  auto* eval = app.add_subcommand("eval", "Evaluate forecasters and write forecast_report.csv");
  auto* run = app.add_subcommand("run", "Run every stage and write both reports");
  auto* ablate = app.add_subcommand("ablate", "Run one ablation and write ablation_<name>.csv");
  auto* report = app.add_subcommand("report", "Print the reports found in the output directory");
  for (auto* cmd : {gen, train_stat, train_prod, train_rank, eval, run, ablate, report}) add_common(cmd, o);
  gen->get_option("--seed")->required();
  ablate->add_option("which", which, "accuracy-stat, accuracy-prod, channels or steps")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig c = resolve(o);
    const auto t0 = std::chrono::steady_clock::now();
    if (*gen) {
      auto world = lf::simgen::gen_world(c.sim);
      lf::simgen::export_dataset(world, c.out / "data");
      std::cout << "wrote " << world.streams.size() << " streams, " << world.users.size() << " users, "
                << world.dataset.samples.size() << " samples to " << (c.out / "data").string() << '\n';
    } else if (*train_stat) {
      auto exp = open_experiment(c);
      exp.stat_model();
      print_losses("statistic model", exp.stat_losses());
      std::cout << "statistic model: " << (c.out / "models" / (exp.stat_key() + ".ckpt")).string() << '\n';
    } else if (*train_prod) {
      auto exp = open_experiment(c);
      exp.prod_model();
      print_losses("product model", exp.prod_losses());
      std::cout << "product model: " << (c.out / "models" / (exp.prod_key() + ".ckpt")).string() << '\n';
    } else if (*train_rank) {
      auto exp = open_experiment(c);
      lf::cli::write_report(c.out / "rank_report.csv", exp.rank_table(), c);
      print_file(c.out / "rank_report.csv");
    } else if (*eval) {
      auto exp = open_experiment(c);
      lf::cli::write_report(c.out / "forecast_report.csv", exp.forecast_table(), c);
      print_file(c.out / "forecast_report.csv");
    } else if (*run) {
      const auto out = lf::cli::run_pipeline(c);
      print_file(out.rank_report);
      print_file(out.forecast_report);
    } else if (*ablate) {
      lf::cli::run_ablation(c, which);
      print_file(c.out / ("ablation_" + which + ".csv"));
    } else if (*report) {
      if (!fs::is_directory(c.out)) throw lf::IoError("no output directory " + c.out.string());
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(c.out))
        if (e.path().extension() == ".csv") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      if (files.empty()) std::cout << "no reports under " << c.out.string() << '\n';
      for (const auto& f : files) print_file(f);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "done in " << secs << " s\n";
  } catch (const lf::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
