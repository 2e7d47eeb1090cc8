#include "tall/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "tall/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint tensors are raw little-endian float64");

namespace tall {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_tensor(const fs::path& dir, const std::string& name, const Matrix& m,
                  json& index) {
  const fs::path file = dir / (name + ".f64");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (!out) throw DataError("short write to " + file.string());
  index.push_back({{"name", name}, {"rows", m.rows}, {"cols", m.cols}});
}

Matrix read_tensor(const fs::path& dir, const std::string& name, int rows, int cols) {
  const fs::path file = dir / (name + ".f64");
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("missing checkpoint tensor " + file.string());
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(m.data.size() * sizeof(double))) {
    throw DataError(file.string() + ": expected " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " float64 values");
  }
  char extra;
  if (in.read(&extra, 1)) throw DataError(file.string() + ": trailing bytes");
  return m;
}

json config_to_json(const TrainConfig& c) {
  return json{{"n_experts", c.n_experts},
              {"hidden", c.hidden},
              {"latent", c.latent},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"beta_max", c.beta_max},
              {"beta_anneal_frac", c.beta_anneal_frac},
              {"dropout", c.dropout},
              {"gate_eps", c.gate_eps},
              {"adaptive_weights", c.adaptive_weights},
              {"weight_mode", c.weight_mode == WeightMode::kLossChange
                                  ? "loss_change" : "raw_loss"},
              {"alpha", c.alpha},
              {"gap_epochs", c.gap_epochs},
              {"window", c.window},
              {"eval_k", c.eval_k},
              {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.n_experts = j.at("n_experts").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.latent = j.at("latent").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr = j.at("lr").get<double>();
  c.beta_max = j.at("beta_max").get<double>();
  c.beta_anneal_frac = j.at("beta_anneal_frac").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.gate_eps = j.at("gate_eps").get<double>();
  c.adaptive_weights = j.at("adaptive_weights").get<bool>();
  c.weight_mode = j.at("weight_mode").get<std::string>() == "raw_loss"
                      ? WeightMode::kRawLoss : WeightMode::kLossChange;
  c.alpha = j.at("alpha").get<double>();
  c.gap_epochs = j.at("gap_epochs").get<int>();
  c.window = j.at("window").get<int>();
  c.eval_k = j.at("eval_k").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const fs::path& dir, const EnsembleModel& model, int epoch,
                     double val_ndcg, const std::string& config_hash) {
  if (model.experts.empty()) throw ConfigError("save_checkpoint: empty model");
  const ExpertDims dims = model.experts[0].dims;
  for (const auto& e : model.experts) {
    if (!(e.dims == dims)) throw DataError("save_checkpoint: expert dims disagree");
  }
  if (model.gate.values.cols != static_cast<int>(model.experts.size())) {
    throw DataError("save_checkpoint: gate width does not match expert count");
  }

  const fs::path tmp = dir.string() + ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);

  json index = json::array();
  for (std::size_t k = 0; k < model.experts.size(); ++k) {
    model.experts[k].for_each_param([&](const char* name, const Matrix& m) {
      write_tensor(tmp, "expert" + std::to_string(k) + "." + name, m, index);
    });
  }
  write_tensor(tmp, "gate.values", model.gate.values, index);
  write_tensor(tmp, "gate.source_losses", model.gate.source_losses, index);
  {
    Matrix fallback(1, static_cast<int>(model.gate.uniform_fallback.size()));
    for (int i = 0; i < fallback.cols; ++i) {
      fallback(0, i) = model.gate.uniform_fallback[i] ? 1.0 : 0.0;
    }
    write_tensor(tmp, "gate.fallback", fallback, index);
  }

  json meta;
  meta["kind"] = "checkpoint";
  meta["format_version"] = 1;
  meta["n_experts"] = static_cast<int>(model.experts.size());
  meta["n_items"] = dims.n_items;
  meta["hidden"] = dims.hidden;
  meta["latent"] = dims.latent;
  meta["n_users"] = model.gate.values.rows;
  meta["epoch"] = epoch;
  meta["val_ndcg"] = val_ndcg;
  meta["config_hash"] = config_hash;
  meta["gate_epoch"] = model.gate.epoch_computed;
  meta["config"] = config_to_json(model.config);
  meta["tensors"] = index;
  {
    std::ofstream out(tmp / "meta.json");
    if (!out) throw DataError("cannot write " + (tmp / "meta.json").string());
    out << meta.dump(2) << "\n";
  }

  fs::remove_all(dir, ec);
  fs::rename(tmp, dir);
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw DataError("missing checkpoint meta.json in " + dir.string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(dir.string() + "/meta.json: " + e.what());
  }
  if (meta.value("kind", "") != "checkpoint") {
    throw DataError(dir.string() + " is not a checkpoint directory");
  }
  if (meta.value("format_version", 0) != 1) {
    throw DataError(dir.string() + ": unsupported checkpoint format version");
  }

  LoadedCheckpoint out;
  out.meta.n_experts = meta.at("n_experts").get<int>();
  out.meta.n_items = meta.at("n_items").get<int>();
  out.meta.hidden = meta.at("hidden").get<int>();
  out.meta.latent = meta.at("latent").get<int>();
  out.meta.n_users = meta.at("n_users").get<int>();
  out.meta.epoch = meta.at("epoch").get<int>();
  out.meta.val_ndcg = meta.at("val_ndcg").get<double>();
  out.meta.config_hash = meta.at("config_hash").get<std::string>();
  if (out.meta.n_experts < 1 || out.meta.n_items < 1) {
    throw DataError(dir.string() + ": degenerate checkpoint dimensions");
  }

  out.model.config = config_from_json(meta.at("config"));
  const ExpertDims dims{out.meta.n_items, out.meta.hidden, out.meta.latent};
  out.model.experts.reserve(out.meta.n_experts);
  for (int k = 0; k < out.meta.n_experts; ++k) {
    ExpertParams p = ExpertParams::zeros(dims);
    p.for_each_param([&](const char* name, Matrix& m) {
      m = read_tensor(dir, "expert" + std::to_string(k) + "." + name, m.rows, m.cols);
    });
    out.model.experts.push_back(std::move(p));
  }
  out.model.gate.values =
      read_tensor(dir, "gate.values", out.meta.n_users, out.meta.n_experts);
  out.model.gate.source_losses =
      read_tensor(dir, "gate.source_losses", out.meta.n_users, out.meta.n_experts);
  const Matrix fallback = read_tensor(dir, "gate.fallback", 1, out.meta.n_users);
  out.model.gate.uniform_fallback.resize(out.meta.n_users);
  for (int i = 0; i < out.meta.n_users; ++i) {
    out.model.gate.uniform_fallback[i] = fallback(0, i) != 0.0 ? 1 : 0;
  }
  out.model.gate.epoch_computed = meta.value("gate_epoch", out.meta.epoch);
  return out;
}

}  // namespace tall
