#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tall/corpus.hpp"
#include "tall/expert.hpp"
#include "tall/matrix.hpp"
#include "tall/sync.hpp"

namespace tall {

// Per-user convex combination over experts, driven by validation losses.
struct GateTable {
  Matrix values;         // N x n_e rows summing to 1
  Matrix source_losses;  // N x n_e validation CE (NaN where undefined)
  int epoch_computed = 0;
  std::vector<std::uint8_t> uniform_fallback;  // users with no validation items

  int n_experts() const { return values.cols; }
};

// G_k = exp(1 / max(L_k, eps)) / sum_t exp(1 / max(L_t, eps)), evaluated with
// max-subtraction so tiny losses cannot overflow the exponential.
std::vector<double> gate_from_losses(const std::vector<double>& losses, double eps);

struct TrainConfig {
  int n_experts = 4;
  int hidden = 100;
  int latent = 50;
  int epochs = 100;
  int batch_size = 64;
  double lr = 1e-3;
  double beta_max = 0.2;         // KL weight after annealing
  double beta_anneal_frac = 0.2; // fraction of epochs to ramp 0 -> beta_max
  double dropout = 0.5;
  double gate_eps = 1e-3;
  bool adaptive_weights = false;
  WeightMode weight_mode = WeightMode::kLossChange;
  double alpha = 1.0;
  int gap_epochs = 40;
  int window = 5;
  int eval_k = 20;
  std::uint64_t seed = 42;

  double beta_at(int epoch) const;  // linear ramp, then held
};

struct EnsembleModel {
  std::vector<ExpertParams> experts;
  GateTable gate;
  TrainConfig config;

  int n_experts() const { return static_cast<int>(experts.size()); }
};

// Experts initialized from per-expert seed streams (distinct seeds keep the
// mixture from starting degenerate); gate rows start uniform.
EnsembleModel init_ensemble(const TrainConfig& config, int n_items, int n_users);

// Recomputes per-user per-expert validation CE (eval composition: z = mu, no
// dropout, normalized train vector in, CE over validation items divided by
// |val|) and the gate rows.
GateTable refresh_gates(const std::vector<ExpertParams>& experts,
                        const SplitDataset& split, double gate_eps, int epoch);

// Mixture probability vector O_hat_u = sum_k G[u,k] * softmax_k(x).
std::vector<double> ensemble_predict(const EnsembleModel& model, int u,
                                     std::span<const double> x);

// -sum_i t_i log(O_hat_i + 1e-12) + beta * sum_k G[u,k] KL_k, gates constant.
double ensemble_loss(const EnsembleModel& model, int u,
                     const std::vector<std::uint8_t>& target, double beta);

// Forward + backward of the weighted mixture objective for one batch. Gates
// and row weights are constants. With a single expert the cross entropy runs
// through the expert's own stable log-softmax path (for gate 1 the mixture is
// that expert's distribution, so the epsilon guard is unnecessary); this keeps
// an n_e = 1 run bitwise identical to the plain expert trainer.
// `grads` may be null to evaluate the loss only.
struct MixtureBatchResult {
  double loss_sum = 0.0;
  std::vector<double> per_row_loss;
};
MixtureBatchResult mixture_batch_step(const std::vector<ExpertParams>& experts,
                                      const Matrix& x, const Matrix& target,
                                      const Matrix& gate_rows,
                                      const std::vector<double>& row_weights,
                                      double beta,
                                      const std::vector<ExpertNoise>& noise,
                                      std::vector<ExpertParams>* grads);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;   // unweighted mean over trained users
  double val_ndcg = 0.0;
  std::array<double, 5> group_ndcg{};
  std::array<double, 5> group_weight{};
  int users_trained = 0;
};

using EpochCallback =
    std::function<void(int epoch, const std::vector<ExpertParams>& experts)>;

struct TrainResult {
  EnsembleModel best;  // best-validation snapshot (experts + matching gates)
  int best_epoch = 0;
  double best_val_ndcg = 0.0;
  std::vector<EpochRecord> history;
  std::vector<std::vector<double>> weight_history;  // per epoch, per user
};

// The full training loop: per epoch refresh gates, push ensemble validation
// losses into the sync state, fetch weights (all ones during the gap or when
// adaptive weighting is off), run one pass of shuffled minibatches with Adam
// over all experts jointly, then evaluate and keep the best checkpoint by
// overall validation NDCG.
TrainResult train(const TrainConfig& config, const SplitDataset& split,
                  const MainstreamProfile& profile,
                  const EpochCallback& on_epoch = {});

// Reference trainer for a lone multinomial-VAE: same streams, same schedule,
// no gate or weight machinery. An n_e = 1 ensemble run with adaptive weights
// off reproduces this trajectory bit for bit.
struct SingleTrainResult {
  ExpertParams best;
  int best_epoch = 0;
  double best_val_ndcg = 0.0;
  std::vector<EpochRecord> history;
};
SingleTrainResult train_single_expert(const TrainConfig& config,
                                      const SplitDataset& split,
                                      const MainstreamProfile& profile,
                                      const EpochCallback& on_epoch = {});

}  // namespace tall
