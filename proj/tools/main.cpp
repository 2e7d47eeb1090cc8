#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tall/config.hpp"
#include "tall/errors.hpp"
#include "tall/parallel.hpp"
#include "tall/pipeline.hpp"

namespace {

struct Opts {
  std::string config_path;
  std::string out_dir;
  std::string preset;
  std::string baseline;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  int k = 0;
  bool k_set = false;
};

tall::RunConfig resolve(const Opts& o) {
  tall::RunConfig cfg = tall::load_config(o.config_path);
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.seed_set) cfg.seed = o.seed;
  if (!o.preset.empty()) cfg.preset = o.preset;
  tall::apply_preset(cfg);
  if (o.k_set) cfg.eval_k = o.k;
  cfg.validate();
  tall::set_max_threads(o.threads);
  return cfg;
}

void add_common(CLI::App* sub, Opts& o) {
  sub->add_option("--config", o.config_path, "run configuration file")->required();
  sub->add_option("--out", o.out_dir, "override out_dir from the config");
  sub->add_option("--threads", o.threads, "worker thread cap (0 = hardware)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loss-driven mixture-of-experts recommender with adaptive user weights"};
  app.require_subcommand(1);
  Opts o;

  CLI::App* prepare = app.add_subcommand("prepare", "split a dataset and score users");
  add_common(prepare, o);
  prepare->add_option("--seed", o.seed, "override the run seed")
      ->each([&](const std::string&) { o.seed_set = true; });

  CLI::App* train = app.add_subcommand("train", "train the configured variant");
  add_common(train, o);
  train->add_option("--seed", o.seed, "override the run seed")
      ->each([&](const std::string&) { o.seed_set = true; });
  train->add_option("--preset", o.preset,
                    "variant preset (multvae|lmoe|lmoe_lc|lmoe_gap_raw|tall)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score the trained checkpoint");
  add_common(evaluate, o);
  evaluate->add_option("--preset", o.preset, "variant preset to evaluate");
  evaluate->add_option("--k", o.k, "ranking cutoff for the report")
      ->each([&](const std::string&) { o.k_set = true; });
  evaluate->add_option("--baseline", o.baseline,
                       "path to a baseline report.json for delta rows");

  CLI::App* report = app.add_subcommand("report", "merge variant reports into one table");
  add_common(report, o);
  report->add_option("--baseline", o.baseline, "variant name anchoring delta rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (prepare->parsed()) {
      tall::cmd_prepare(resolve(o));
    } else if (train->parsed()) {
      tall::cmd_train(resolve(o));
    } else if (evaluate->parsed()) {
      tall::cmd_evaluate(resolve(o), o.baseline);
    } else if (report->parsed()) {
      tall::cmd_report(resolve(o), o.baseline);
    }
  } catch (const tall::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tall::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const tall::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
