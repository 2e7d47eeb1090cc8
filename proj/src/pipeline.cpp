#include "tall/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "tall/checkpoint.hpp"
#include "tall/corpus.hpp"
#include "tall/errors.hpp"
#include "tall/metrics.hpp"
#include "tall/mixture.hpp"

namespace tall {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_history_csv(const fs::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out = open_out(path);
  out << "epoch,train_loss,val_ndcg,ndcg_low,ndcg_med_low,ndcg_medium,"
         "ndcg_med_high,ndcg_high,weight_low,weight_med_low,weight_medium,"
         "weight_med_high,weight_high\n";
  for (const EpochRecord& rec : history) {
    out << rec.epoch << "," << fmt_double(rec.train_loss) << ","
        << fmt_double(rec.val_ndcg);
    for (double g : rec.group_ndcg) out << "," << fmt_double(g);
    for (double w : rec.group_weight) out << "," << fmt_double(w);
    out << "\n";
  }
}

void write_weights_csv(const fs::path& path,
                       const std::vector<std::vector<double>>& weight_history) {
  std::ofstream out = open_out(path);
  out << "epoch,user,weight\n";
  for (std::size_t e = 0; e < weight_history.size(); ++e) {
    for (std::size_t u = 0; u < weight_history[e].size(); ++u) {
      out << (e + 1) << "," << u << "," << fmt_double(weight_history[e][u]) << "\n";
    }
  }
}

std::string report_json_hash(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return j.value("config_hash", "");
}

}  // namespace

fs::path manifest_dir(const RunConfig& cfg) {
  return fs::path(cfg.out_dir) / "manifest";
}

fs::path variant_dir(const RunConfig& cfg) {
  return fs::path(cfg.out_dir) / cfg.preset;
}

void cmd_prepare(const RunConfig& cfg) {
  InteractionSet data = load_interactions(cfg.dataset, cfg.rating_threshold);
  if (cfg.min_interactions > 0) {
    data = apply_min_interactions(data, cfg.min_interactions);
  }
  if (data.n_users < 2) {
    throw DataError("dataset has " + std::to_string(data.n_users) +
                    " users after filtering; need at least 2");
  }
  const SplitDataset sd = split(data, cfg.ratios(), cfg.seed);
  const MainstreamProfile profile = mainstream_scores(sd);

  const fs::path dir = manifest_dir(cfg);
  fs::create_directories(dir.parent_path());
  write_manifest(dir.string(), data, sd, profile, config_hash(cfg));

  const double density =
      static_cast<double>(data.pairs.size()) /
      (static_cast<double>(data.n_users) * static_cast<double>(data.n_items));
  std::cout << "prepared " << dir.string() << ": users=" << data.n_users
            << " items=" << data.n_items << " interactions=" << data.pairs.size()
            << " density=" << fmt4(100.0 * density) << "%\n";
}

void cmd_train(const RunConfig& cfg) {
  const SplitManifest manifest = load_manifest(manifest_dir(cfg).string());
  const std::string hash = config_hash(cfg);
  if (manifest.config_hash != hash) {
    throw DataError("manifest " + manifest_dir(cfg).string() +
                    " was prepared with different data settings (hash " +
                    manifest.config_hash + ", config wants " + hash + ")");
  }

  const TrainResult result = train(cfg.train_config(), manifest.split, manifest.profile);

  const fs::path dir = variant_dir(cfg);
  fs::create_directories(dir);
  open_out(dir / "config.txt") << serialize_config(cfg);
  write_history_csv(dir / "history.csv", result.history);
  write_weights_csv(dir / "weights.csv", result.weight_history);
  save_checkpoint(dir / "checkpoint", result.best, result.best_epoch,
                  result.best_val_ndcg, hash);

  std::cout << "trained " << cfg.preset << ": best val NDCG@" << cfg.eval_k << " = "
            << fmt4(result.best_val_ndcg) << " at epoch " << result.best_epoch
            << " -> " << dir.string() << "\n";
}

void cmd_evaluate(const RunConfig& cfg, const std::string& baseline_report) {
  const SplitManifest manifest = load_manifest(manifest_dir(cfg).string());
  const std::string hash = config_hash(cfg);
  if (manifest.config_hash != hash) {
    throw DataError("manifest " + manifest_dir(cfg).string() +
                    " was prepared with different data settings");
  }

  const fs::path dir = variant_dir(cfg);
  const LoadedCheckpoint lc = load_checkpoint(dir / "checkpoint");
  if (lc.meta.config_hash != manifest.config_hash) {
    throw DataError("checkpoint " + (dir / "checkpoint").string() +
                    " belongs to a different prepared dataset (hash " +
                    lc.meta.config_hash + ")");
  }
  if (lc.meta.n_items != manifest.split.n_items ||
      lc.meta.n_users != manifest.split.n_users) {
    throw DataError("checkpoint dims (" + std::to_string(lc.meta.n_users) + " users, " +
                    std::to_string(lc.meta.n_items) + " items) are incompatible with " +
                    "the manifest (" + std::to_string(manifest.split.n_users) +
                    " users, " + std::to_string(manifest.split.n_items) + " items)");
  }

  BiasReport baseline;
  const bool have_baseline = !baseline_report.empty();
  if (have_baseline) baseline = load_report_json(baseline_report);

  const SplitDataset& sd = manifest.split;
  auto scorer = [&](int u) {
    const std::vector<double> x = sd.normalized_train_vector(u);
    return ensemble_predict(lc.model, u, x);
  };
  BiasReport rep = bias_report(scorer, sd, manifest.profile, cfg.eval_k,
                               have_baseline ? &baseline : nullptr);
  rep.name = cfg.preset;

  write_report_json((dir / "report.json").string(), rep, hash);
  write_report_csv((dir / "report.csv").string(), {rep});

  std::cout << "evaluated " << cfg.preset << ": overall NDCG@" << rep.k << " = "
            << fmt4(rep.overall) << " low = " << fmt4(rep.group[0]) << " high = "
            << fmt4(rep.group[4]) << " -> " << (dir / "report.csv").string() << "\n";
}

void cmd_report(const RunConfig& cfg, const std::string& baseline_variant) {
  const std::string hash = config_hash(cfg);
  std::vector<std::string> variants;
  for (const std::string& name : preset_names()) {
    if (fs::exists(fs::path(cfg.out_dir) / name / "report.json")) {
      variants.push_back(name);
    }
  }
  if (variants.empty()) {
    throw DataError("no variant reports under " + cfg.out_dir +
                    " (run evaluate first)");
  }

  std::vector<BiasReport> reports;
  int baseline_index = -1;
  for (const std::string& name : variants) {
    const fs::path file = fs::path(cfg.out_dir) / name / "report.json";
    if (report_json_hash(file) != hash) {
      throw DataError(file.string() + " was produced under a different data config");
    }
    reports.push_back(load_report_json(file.string()));
    if (name == baseline_variant) baseline_index = static_cast<int>(reports.size()) - 1;
  }
  if (!baseline_variant.empty()) {
    if (baseline_index < 0) {
      throw ConfigError("baseline variant '" + baseline_variant +
                        "' has no report under " + cfg.out_dir);
    }
    const BiasReport base = reports[baseline_index];
    for (int i = 0; i < static_cast<int>(reports.size()); ++i) {
      if (i != baseline_index) attach_deltas(reports[i], base);
    }
    std::rotate(reports.begin(), reports.begin() + baseline_index,
                reports.begin() + baseline_index + 1);
  }

  const fs::path out = fs::path(cfg.out_dir) / "report.csv";
  write_report_csv(out.string(), reports);
  std::cout << "report: " << reports.size() << " variant(s) -> " << out.string()
            << "\n";
}

}  // namespace tall
