#pragma once

#include <filesystem>
#include <string>

#include "tall/mixture.hpp"

namespace tall {

struct CheckpointMeta {
  int n_experts = 0;
  int n_items = 0;
  int hidden = 0;
  int latent = 0;
  int n_users = 0;
  int epoch = 0;        // epoch the snapshot was taken at
  double val_ndcg = 0.0;
  std::string config_hash;
};

// One directory per run: meta.json (dims, epoch, config hash, full training
// config, tensor index) plus one raw little-endian float64 file per tensor,
// named by parameter path (expert0.enc_w1.f64, ..., gate.values.f64).
// Writes into a temp directory and renames, so a crash never leaves a
// half-written checkpoint behind. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& dir, const EnsembleModel& model,
                     int epoch, double val_ndcg, const std::string& config_hash);

struct LoadedCheckpoint {
  EnsembleModel model;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace tall
