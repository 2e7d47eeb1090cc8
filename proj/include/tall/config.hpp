#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tall/mixture.hpp"

namespace tall {

// Flat key = value run configuration. `#` lines are comments; unknown or
// duplicate keys are rejected. serialize_config -> parse_config_text is
// lossless (doubles printed with 17 significant digits).
struct RunConfig {
  // data
  std::string dataset;
  std::optional<double> rating_threshold;  // "none" in file form when absent
  int min_interactions = 5;
  std::uint64_t seed = 42;
  double train_ratio = 0.7;
  double val_ratio = 0.1;
  double test_ratio = 0.2;
  // model + training
  std::string preset = "tall";  // multvae | lmoe | lmoe_lc | lmoe_gap_raw | tall
  int n_experts = 4;
  int hidden = 100;
  int latent = 50;
  int epochs = 100;
  int batch_size = 64;
  double lr = 1e-3;
  double beta_max = 0.2;
  double beta_anneal_frac = 0.2;
  double dropout = 0.5;
  double gate_eps = 1e-3;
  // adaptive weights
  bool weights_enabled = true;
  std::string weight_mode = "loss_change";  // raw_loss | loss_change
  double alpha = 1.0;
  int gap_epochs = 40;
  int window = 5;
  // evaluation + artifacts
  int eval_k = 20;
  std::string out_dir = "runs/default";

  bool operator==(const RunConfig&) const = default;

  std::array<double, 3> ratios() const { return {train_ratio, val_ratio, test_ratio}; }
  void validate() const;          // throws ConfigError naming the offending key
  TrainConfig train_config() const;
};

const std::vector<std::string>& preset_names();

// Expands cfg.preset into the concrete toggles (deterministically):
//   multvae      -> n_experts = 1, weights off
//   lmoe         -> weights off
//   lmoe_lc      -> weights on, loss_change, no gap
//   lmoe_gap_raw -> weights on, raw_loss (gap as configured)
//   tall         -> weights on, loss_change (gap as configured)
void apply_preset(RunConfig& cfg);

RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

// 16-hex-digit digest of the keys that determine the split artifacts
// (dataset, rating_threshold, min_interactions, seed, ratios). Checkpoints and
// manifests embed it; stages refuse to mix artifacts with different digests.
std::string config_hash(const RunConfig& cfg);

}  // namespace tall
