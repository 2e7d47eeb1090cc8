#include "tall/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tall/errors.hpp"

namespace tall {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& origin, int line,
                            const std::string& key, const std::string& value) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": bad value '" + value +
                    "' for key '" + key + "'");
}

double to_double(const std::string& origin, int line, const std::string& key,
                 const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) bad_value(origin, line, key, value);
  return out;
}

long long to_int(const std::string& origin, int line, const std::string& key,
                 const std::string& value) {
  long long out = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) bad_value(origin, line, key, value);
  return out;
}

std::uint64_t to_u64(const std::string& origin, int line, const std::string& key,
                     const std::string& value) {
  std::uint64_t out = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) bad_value(origin, line, key, value);
  return out;
}

bool to_bool(const std::string& origin, int line, const std::string& key,
             const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  bad_value(origin, line, key, value);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"multvae", "lmoe", "lmoe_lc",
                                                 "lmoe_gap_raw", "tall"};
  return names;
}

void apply_preset(RunConfig& cfg) {
  if (cfg.preset == "multvae") {
    cfg.n_experts = 1;
    cfg.weights_enabled = false;
  } else if (cfg.preset == "lmoe") {
    cfg.weights_enabled = false;
  } else if (cfg.preset == "lmoe_lc") {
    cfg.weights_enabled = true;
    cfg.weight_mode = "loss_change";
    cfg.gap_epochs = 0;
  } else if (cfg.preset == "lmoe_gap_raw") {
    cfg.weights_enabled = true;
    cfg.weight_mode = "raw_loss";
  } else if (cfg.preset == "tall") {
    cfg.weights_enabled = true;
    cfg.weight_mode = "loss_change";
  } else {
    throw ConfigError("unknown preset '" + cfg.preset + "' (expected one of: " +
                      "multvae, lmoe, lmoe_lc, lmoe_gap_raw, tall)");
  }
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "': " + why);
  };
  if (dataset.empty()) fail("dataset", "must be a path");
  if (min_interactions < 0) fail("min_interactions", "must be >= 0");
  if (train_ratio <= 0.0 || val_ratio <= 0.0 || test_ratio <= 0.0) {
    fail("train_ratio/val_ratio/test_ratio", "each ratio must be > 0");
  }
  if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
    fail("train_ratio/val_ratio/test_ratio", "ratios must sum to 1");
  }
  if (std::find(preset_names().begin(), preset_names().end(), preset) ==
      preset_names().end()) {
    fail("preset", "unknown preset '" + preset + "'");
  }
  if (n_experts < 1) fail("n_experts", "must be >= 1");
  if (hidden < 1) fail("hidden", "must be >= 1");
  if (latent < 1) fail("latent", "must be >= 1");
  if (epochs < 1) fail("epochs", "must be >= 1");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (!(lr > 0.0)) fail("lr", "must be > 0");
  if (beta_max < 0.0) fail("beta_max", "must be >= 0");
  if (!(beta_anneal_frac > 0.0) || beta_anneal_frac > 1.0) {
    fail("beta_anneal_frac", "must be in (0, 1]");
  }
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout", "must be in [0, 1)");
  if (!(gate_eps > 0.0)) fail("gate_eps", "must be > 0");
  if (weight_mode != "raw_loss" && weight_mode != "loss_change") {
    fail("weight_mode", "must be raw_loss or loss_change");
  }
  if (!(alpha > 0.0)) fail("alpha", "must be > 0");
  if (gap_epochs < 0) fail("gap_epochs", "must be >= 0");
  if (window < 1) fail("window", "must be >= 1");
  if (eval_k < 1) fail("eval_k", "must be >= 1");
  if (out_dir.empty()) fail("out_dir", "must be a path");
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.n_experts = n_experts;
  t.hidden = hidden;
  t.latent = latent;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.lr = lr;
  t.beta_max = beta_max;
  t.beta_anneal_frac = beta_anneal_frac;
  t.dropout = dropout;
  t.gate_eps = gate_eps;
  t.adaptive_weights = weights_enabled;
  t.weight_mode = weight_mode == "raw_loss" ? WeightMode::kRawLoss
                                            : WeightMode::kLossChange;
  t.alpha = alpha;
  t.gap_epochs = gap_epochs;
  t.window = window;
  t.eval_k = eval_k;
  t.seed = seed;
  return t;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    if (!seen.insert(key).second) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    }
    if (key == "dataset") cfg.dataset = value;
    else if (key == "rating_threshold") {
      if (value == "none") cfg.rating_threshold.reset();
      else cfg.rating_threshold = to_double(origin, line_no, key, value);
    }
    else if (key == "min_interactions") cfg.min_interactions = static_cast<int>(to_int(origin, line_no, key, value));
    else if (key == "seed") cfg.seed = to_u64(origin, line_no, key, value);
    else if (key == "train_ratio") cfg.train_ratio = to_double(origin, line_no, key, value);
    else if (key == "val_ratio") cfg.val_ratio = to_double(origin, line_no, key, value);
    else if (key == "test_ratio") cfg.test_ratio = to_double(origin, line_no, key, value);
    else if (key == "preset") cfg.preset = value;
    else if (key == "n_experts") cfg.n_experts = static_cast<int>(to_int(origin, line_no, key, value));
    else if (key == "hidden") cfg.hidden = static_cast<int>(to_int(origin, line_no, key, value));
    else if (key == "latent") cfg.latent = static_cast<int>(to_int(origin, line_no, key, value));
    else if (key == "epochs") cfg.epochs = static_cast<int>(to_int(origin, line_no, key, value));
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(to_int(origin, line_no, key, value));
    else if (key == "lr") cfg.lr = to_double(origin, line_no, key, value);
    else if (key == "beta_max") cfg.beta_max = to_double(origin, line_no, key, value);
    else if (key == "beta_anneal_frac") cfg.beta_anneal_frac = to_double(origin, line_no, key, value);
    else if (key == "dropout") cfg.dropout = to_double(origin, line_no, key, value);
    else if (key == "gate_eps") cfg.gate_eps = to_double(origin, line_no, key, value);
    else if (key == "weights_enabled") cfg.weights_enabled = to_bool(origin, line_no, key, value);
    else if (key == "weight_mode") cfg.weight_mode = value;
    else if (key == "alpha") cfg.alpha = to_double(origin, line_no, key, value);
    else if (key == "gap_epochs") cfg.gap_epochs = static_cast<int>(to_int(origin, line_no, key, value));
    else if (key == "window") cfg.window = static_cast<int>(to_int(origin, line_no, key, value));
    else if (key == "eval_k") cfg.eval_k = static_cast<int>(to_int(origin, line_no, key, value));
    else if (key == "out_dir") cfg.out_dir = value;
    else {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "dataset = " << cfg.dataset << "\n";
  out << "rating_threshold = "
      << (cfg.rating_threshold ? fmt_double(*cfg.rating_threshold) : "none") << "\n";
  out << "min_interactions = " << cfg.min_interactions << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "train_ratio = " << fmt_double(cfg.train_ratio) << "\n";
  out << "val_ratio = " << fmt_double(cfg.val_ratio) << "\n";
  out << "test_ratio = " << fmt_double(cfg.test_ratio) << "\n";
  out << "preset = " << cfg.preset << "\n";
  out << "n_experts = " << cfg.n_experts << "\n";
  out << "hidden = " << cfg.hidden << "\n";
  out << "latent = " << cfg.latent << "\n";
  out << "epochs = " << cfg.epochs << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "lr = " << fmt_double(cfg.lr) << "\n";
  out << "beta_max = " << fmt_double(cfg.beta_max) << "\n";
  out << "beta_anneal_frac = " << fmt_double(cfg.beta_anneal_frac) << "\n";
  out << "dropout = " << fmt_double(cfg.dropout) << "\n";
  out << "gate_eps = " << fmt_double(cfg.gate_eps) << "\n";
  out << "weights_enabled = " << (cfg.weights_enabled ? "true" : "false") << "\n";
  out << "weight_mode = " << cfg.weight_mode << "\n";
  out << "alpha = " << fmt_double(cfg.alpha) << "\n";
  out << "gap_epochs = " << cfg.gap_epochs << "\n";
  out << "window = " << cfg.window << "\n";
  out << "eval_k = " << cfg.eval_k << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  return out.str();
}

std::string config_hash(const RunConfig& cfg) {
  std::ostringstream canon;
  canon << "dataset=" << cfg.dataset << "\n";
  canon << "rating_threshold="
        << (cfg.rating_threshold ? fmt_double(*cfg.rating_threshold) : "none") << "\n";
  canon << "min_interactions=" << cfg.min_interactions << "\n";
  canon << "seed=" << cfg.seed << "\n";
  canon << "ratios=" << fmt_double(cfg.train_ratio) << "," << fmt_double(cfg.val_ratio)
        << "," << fmt_double(cfg.test_ratio) << "\n";
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canon.str())));
  return buf;
}

}  // namespace tall
