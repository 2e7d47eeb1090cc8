#include "tall/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tall/errors.hpp"
#include "tall/metrics.hpp"
#include "tall/optim.hpp"

namespace tall {

namespace {

constexpr double kMixFloor = 1e-12;  // guard inside log(mixture probability)
constexpr int kEvalBlock = 128;

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

double TrainConfig::beta_at(int epoch) const {
  const int ramp = std::max(1, static_cast<int>(std::lround(beta_anneal_frac * epochs)));
  const double frac = std::min(1.0, static_cast<double>(epoch) / static_cast<double>(ramp));
  return beta_max * frac;
}

std::vector<double> gate_from_losses(const std::vector<double>& losses, double eps) {
  if (eps <= 0.0) throw ConfigError("gate_from_losses: eps must be > 0");
  if (losses.empty()) throw ConfigError("gate_from_losses: no losses");
  std::vector<double> exponent(losses.size());
  for (std::size_t k = 0; k < losses.size(); ++k) {
    if (!std::isfinite(losses[k]) || losses[k] < 0.0) {
      throw NumericError("gate_from_losses: losses must be finite and >= 0");
    }
    exponent[k] = 1.0 / std::max(losses[k], eps);
  }
  return softmax(exponent);
}

EnsembleModel init_ensemble(const TrainConfig& config, int n_items, int n_users) {
  if (config.n_experts < 1) throw ConfigError("need at least one expert");
  EnsembleModel model;
  model.config = config;
  ExpertDims dims{n_items, config.hidden, config.latent};
  model.experts.reserve(config.n_experts);
  for (int k = 0; k < config.n_experts; ++k) {
    model.experts.push_back(init_expert(dims, derive_seed(config.seed, "init", k)));
  }
  model.gate.values = Matrix(n_users, config.n_experts);
  model.gate.values.fill(1.0 / config.n_experts);
  model.gate.source_losses = Matrix(n_users, config.n_experts);
  model.gate.source_losses.fill(nan_value());
  model.gate.uniform_fallback.assign(n_users, 1);
  return model;
}

namespace {

struct SweepResult {
  GateTable gates;
  std::vector<double> ensemble_val_loss;  // NaN for users without val items
  std::vector<double> val_ndcg;           // NaN likewise (only if requested)
};

void kl_per_row(const ExpertActs& acts, std::vector<double>& kl) {
  kl.assign(acts.mu.rows, 0.0);
  for (int b = 0; b < acts.mu.rows; ++b) {
    const double* mu = acts.mu.row(b);
    const double* lv = acts.logvar.row(b);
    double acc = 0.0;
    for (int d = 0; d < acts.mu.cols; ++d) {
      acc += 1.0 + lv[d] - mu[d] * mu[d] - std::exp(lv[d]);
    }
    kl[b] = -0.5 * acc;
  }
}

// One pass over all users in the eval composition: per-expert validation CE,
// gate rows, mixture validation loss, and (optionally) validation NDCG with
// each user's training items masked out of the ranking.
SweepResult eval_sweep(const std::vector<ExpertParams>& experts,
                       const SplitDataset& split, double gate_eps, int epoch,
                       int k, bool want_ndcg) {
  const int n = split.n_users;
  const int m = split.n_items;
  const int ne = static_cast<int>(experts.size());

  SweepResult out;
  out.gates.values = Matrix(n, ne);
  out.gates.source_losses = Matrix(n, ne);
  out.gates.source_losses.fill(nan_value());
  out.gates.uniform_fallback.assign(n, 0);
  out.gates.epoch_computed = epoch;
  out.ensemble_val_loss.assign(n, nan_value());
  if (want_ndcg) out.val_ndcg.assign(n, nan_value());

  for (int block = 0; block < n; block += kEvalBlock) {
    const int bsz = std::min(kEvalBlock, n - block);
    Matrix x(bsz, m);
    for (int b = 0; b < bsz; ++b) {
      const std::vector<double> row = split.normalized_train_vector(block + b);
      std::copy(row.begin(), row.end(), x.row(b));
    }
    std::vector<Matrix> probs(ne), log_probs(ne);
    for (int e = 0; e < ne; ++e) {
      ExpertActs acts = forward_batch(experts[e], x, nullptr);
      log_probs[e] = acts.logits;
      log_softmax_rows(log_probs[e]);
      probs[e] = std::move(acts.probs);
    }
    for (int b = 0; b < bsz; ++b) {
      const int u = block + b;
      const auto& val = split.val_items[u];
      std::vector<double> gate_row(ne, 1.0 / ne);
      if (val.empty()) {
        out.gates.uniform_fallback[u] = 1;
      } else {
        std::vector<double> ce(ne, 0.0);
        for (int e = 0; e < ne; ++e) {
          const double* lp = log_probs[e].row(b);
          double acc = 0.0;
          for (int i : val) acc -= lp[i];
          ce[e] = acc / static_cast<double>(val.size());
          out.gates.source_losses(u, e) = ce[e];
        }
        gate_row = gate_from_losses(ce, gate_eps);
      }
      for (int e = 0; e < ne; ++e) out.gates.values(u, e) = gate_row[e];
      if (val.empty()) continue;

      std::vector<double> q(m, 0.0);
      for (int e = 0; e < ne; ++e) {
        const double g = gate_row[e];
        const double* p = probs[e].row(b);
        for (int i = 0; i < m; ++i) q[i] += g * p[i];
      }
      double acc = 0.0;
      for (int i : val) acc -= std::log(q[i] + kMixFloor);
      out.ensemble_val_loss[u] = acc / static_cast<double>(val.size());
      if (want_ndcg) {
        std::vector<std::uint8_t> mask(m, 0);
        for (int i : split.train_items[u]) mask[i] = 1;
        out.val_ndcg[u] = ndcg_at_k(rank_items(q, mask, k), val, k);
      }
    }
  }
  return out;
}

std::array<double, 5> group_means(const std::vector<double>& per_user,
                                  const MainstreamProfile& profile) {
  std::array<double, 5> sums{};
  std::array<int, 5> counts{};
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    if (std::isnan(per_user[u])) continue;
    const int g = static_cast<int>(profile.subgroup[u]);
    sums[g] += per_user[u];
    counts[g] += 1;
  }
  std::array<double, 5> means{};
  for (int g = 0; g < 5; ++g) means[g] = counts[g] > 0 ? sums[g] / counts[g] : nan_value();
  return means;
}

double overall_mean(const std::vector<double>& per_user) {
  double sum = 0.0;
  int count = 0;
  for (double v : per_user) {
    if (!std::isnan(v)) {
      sum += v;
      count += 1;
    }
  }
  return count > 0 ? sum / count : nan_value();
}

std::array<double, 5> group_weight_means(const std::vector<double>& w,
                                         const MainstreamProfile& profile) {
  std::array<double, 5> sums{};
  std::array<int, 5> counts{};
  for (std::size_t u = 0; u < w.size(); ++u) {
    const int g = static_cast<int>(profile.subgroup[u]);
    sums[g] += w[u];
    counts[g] += 1;
  }
  std::array<double, 5> means{};
  for (int g = 0; g < 5; ++g) means[g] = counts[g] > 0 ? sums[g] / counts[g] : 1.0;
  return means;
}

std::vector<int> trainable_users(const SplitDataset& split) {
  std::vector<int> users;
  for (int u = 0; u < split.n_users; ++u) {
    if (!split.train_items[u].empty()) users.push_back(u);
  }
  return users;
}

void fill_batch(const SplitDataset& split, const std::vector<int>& users,
                std::size_t begin, std::size_t end, Matrix& x, Matrix& t) {
  const int bsz = static_cast<int>(end - begin);
  x = Matrix(bsz, split.n_items);
  t = Matrix(bsz, split.n_items);
  for (int b = 0; b < bsz; ++b) {
    const int u = users[begin + b];
    const std::vector<double> xin = split.normalized_train_vector(u);
    std::copy(xin.begin(), xin.end(), x.row(b));
    for (int i : split.train_items[u]) t(b, i) = 1.0;
  }
}

// Optimizer slots in for_each_param order, one per tensor per expert.
std::vector<std::vector<AdamState>> make_adam(std::vector<ExpertParams>& experts,
                                              double lr) {
  AdamConfig acfg;
  acfg.lr = lr;
  std::vector<std::vector<AdamState>> adam(experts.size());
  for (std::size_t k = 0; k < experts.size(); ++k) {
    experts[k].for_each_param([&](const char*, Matrix& p) {
      adam[k].emplace_back(p.rows, p.cols, acfg);
    });
  }
  return adam;
}

void apply_adam_one(ExpertParams& expert, ExpertParams& grads,
                    std::vector<AdamState>& slots, int expert_index) {
  std::vector<Matrix*> gptr;
  grads.for_each_param([&](const char*, Matrix& g) { gptr.push_back(&g); });
  int slot = 0;
  expert.for_each_param([&](const char* name, Matrix& p) {
    adam_step(p, *gptr[slot], slots[slot],
              "expert" + std::to_string(expert_index) + "." + name);
    ++slot;
  });
}

}  // namespace

GateTable refresh_gates(const std::vector<ExpertParams>& experts,
                        const SplitDataset& split, double gate_eps, int epoch) {
  return eval_sweep(experts, split, gate_eps, epoch, 1, false).gates;
}

std::vector<double> ensemble_predict(const EnsembleModel& model, int u,
                                     std::span<const double> x) {
  if (model.gate.values.cols != model.n_experts()) {
    throw ConfigError("gate table has " + std::to_string(model.gate.values.cols) +
                      " columns for " + std::to_string(model.n_experts()) + " experts");
  }
  if (u < 0 || u >= model.gate.values.rows) {
    throw DataError("ensemble_predict: no gate row for user " + std::to_string(u));
  }
  const int m = static_cast<int>(x.size());
  std::vector<double> q(m, 0.0);
  Rng unused(0);
  for (int k = 0; k < model.n_experts(); ++k) {
    const ExpertOutput out = forward(model.experts[k], x, RunMode::kEval, unused);
    const double g = model.gate.values(u, k);
    for (int i = 0; i < m; ++i) q[i] += g * out.probs[i];
  }
  return q;
}

double ensemble_loss(const EnsembleModel& model, int u,
                     const std::vector<std::uint8_t>& target, double beta) {
  if (u < 0 || u >= model.gate.values.rows) {
    throw DataError("ensemble_loss: no gate row for user " + std::to_string(u));
  }
  const int m = static_cast<int>(target.size());
  std::vector<double> x(m, 0.0);
  double count = 0.0;
  for (int i = 0; i < m; ++i) count += target[i] ? 1.0 : 0.0;
  if (count > 0.0) {
    const double inv = 1.0 / std::sqrt(count);
    for (int i = 0; i < m; ++i) x[i] = target[i] ? inv : 0.0;
  }
  std::vector<double> q(m, 0.0);
  double kl_mix = 0.0;
  Rng unused(0);
  for (int k = 0; k < model.n_experts(); ++k) {
    const ExpertOutput out = forward(model.experts[k], x, RunMode::kEval, unused);
    const double g = model.gate.values(u, k);
    for (int i = 0; i < m; ++i) q[i] += g * out.probs[i];
    double acc = 0.0;
    for (std::size_t d = 0; d < out.mu.size(); ++d) {
      acc += 1.0 + out.logvar[d] - out.mu[d] * out.mu[d] - std::exp(out.logvar[d]);
    }
    kl_mix += g * (-0.5 * acc);
  }
  double ce = 0.0;
  for (int i = 0; i < m; ++i) {
    if (target[i]) ce -= std::log(q[i] + kMixFloor);
  }
  return ce + beta * kl_mix;
}

MixtureBatchResult mixture_batch_step(const std::vector<ExpertParams>& experts,
                                      const Matrix& x, const Matrix& target,
                                      const Matrix& gate_rows,
                                      const std::vector<double>& row_weights,
                                      double beta,
                                      const std::vector<ExpertNoise>& noise,
                                      std::vector<ExpertParams>* grads) {
  const int ne = static_cast<int>(experts.size());
  const int batch = x.rows;
  const int m = x.cols;
  if (ne < 1) throw ConfigError("mixture_batch_step: no experts");
  if (gate_rows.rows != batch || gate_rows.cols != ne) {
    throw DimensionError("mixture_batch_step: gate rows must be batch x n_experts");
  }
  if (static_cast<int>(row_weights.size()) != batch ||
      static_cast<int>(noise.size()) != ne) {
    throw DimensionError("mixture_batch_step: weight/noise arity mismatch");
  }
  if (grads != nullptr && static_cast<int>(grads->size()) != ne) {
    throw DimensionError("mixture_batch_step: gradient buffer arity mismatch");
  }

  std::vector<ExpertActs> acts(ne);
  for (int k = 0; k < ne; ++k) acts[k] = forward_batch(experts[k], x, &noise[k]);

  MixtureBatchResult res;
  res.per_row_loss.assign(batch, 0.0);

  if (ne == 1) {
    // Exact single-expert path (the gate is 1, so the mixture is the expert's
    // own distribution): stable log-softmax cross entropy and
    // dCE/dlogits = (sum_i t_i) p - t, no epsilon guard needed.
    std::vector<double> ce, kl;
    expert_ce_kl(acts[0], target, ce, kl);
    for (int b = 0; b < batch; ++b) {
      res.per_row_loss[b] = ce[b] + beta * kl[b];
      res.loss_sum += row_weights[b] * res.per_row_loss[b];
    }
    if (grads != nullptr) {
      Matrix dlogits(batch, m);
      std::vector<double> kl_scale(batch);
      for (int b = 0; b < batch; ++b) {
        const double* t = target.row(b);
        const double* p = acts[0].probs.row(b);
        double positives = 0.0;
        for (int i = 0; i < m; ++i) positives += t[i];
        double* dl = dlogits.row(b);
        const double w = row_weights[b];
        for (int i = 0; i < m; ++i) dl[i] = w * (positives * p[i] - t[i]);
        kl_scale[b] = w * beta;
      }
      expert_backward_batch(experts[0], acts[0], dlogits, kl_scale, (*grads)[0]);
    }
    return res;
  }

  Matrix q(batch, m);
  for (int k = 0; k < ne; ++k) {
    for (int b = 0; b < batch; ++b) {
      const double g = gate_rows(b, k);
      const double* p = acts[k].probs.row(b);
      double* qr = q.row(b);
      for (int i = 0; i < m; ++i) qr[i] += g * p[i];
    }
  }
  std::vector<std::vector<double>> kl(ne);
  for (int k = 0; k < ne; ++k) kl_per_row(acts[k], kl[k]);

  for (int b = 0; b < batch; ++b) {
    const double* t = target.row(b);
    const double* qr = q.row(b);
    double ce = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t[i] != 0.0) ce -= t[i] * std::log(qr[i] + kMixFloor);
    }
    double kl_mix = 0.0;
    for (int k = 0; k < ne; ++k) kl_mix += gate_rows(b, k) * kl[k][b];
    res.per_row_loss[b] = ce + beta * kl_mix;
    res.loss_sum += row_weights[b] * res.per_row_loss[b];
  }

  if (grads == nullptr) return res;

  // dL/dq_i = -t_i / (q_i + eps); through expert k's softmax that becomes
  // dlogits_k = w g_k p_k .* (r - <r, p_k>) with r the dL/dq row.
  std::vector<double> r(m);
  std::vector<Matrix> dlogits(ne);
  std::vector<std::vector<double>> kl_scale(ne);
  for (int k = 0; k < ne; ++k) {
    dlogits[k] = Matrix(batch, m);
    kl_scale[k].assign(batch, 0.0);
  }
  for (int b = 0; b < batch; ++b) {
    const double* t = target.row(b);
    const double* qr = q.row(b);
    for (int i = 0; i < m; ++i) {
      r[i] = t[i] != 0.0 ? -t[i] / (qr[i] + kMixFloor) : 0.0;
    }
    const double w = row_weights[b];
    for (int k = 0; k < ne; ++k) {
      const double g = gate_rows(b, k);
      const double* p = acts[k].probs.row(b);
      double dot = 0.0;
      for (int i = 0; i < m; ++i) dot += r[i] * p[i];
      double* dl = dlogits[k].row(b);
      const double wg = w * g;
      for (int i = 0; i < m; ++i) dl[i] = wg * p[i] * (r[i] - dot);
      kl_scale[k][b] = wg * beta;
    }
  }
  for (int k = 0; k < ne; ++k) {
    expert_backward_batch(experts[k], acts[k], dlogits[k], kl_scale[k], (*grads)[k]);
  }
  return res;
}

TrainResult train(const TrainConfig& config, const SplitDataset& split,
                  const MainstreamProfile& profile, const EpochCallback& on_epoch) {
  if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (static_cast<int>(profile.subgroup.size()) != split.n_users) {
    throw DataError("train: mainstream profile does not match split");
  }
  const int n = split.n_users;
  const int ne = config.n_experts;

  EnsembleModel model = init_ensemble(config, split.n_items, n);
  std::vector<std::vector<AdamState>> adam = make_adam(model.experts, config.lr);
  SyncState sync(n, config.alpha, config.gap_epochs, config.window);
  const std::vector<int> base_users = trainable_users(split);
  if (base_users.empty()) throw DataError("train: no users with training items");

  std::vector<ExpertParams> grads;
  grads.reserve(ne);
  for (int k = 0; k < ne; ++k) grads.push_back(ExpertParams::zeros(model.experts[k].dims));

  TrainResult out;
  bool has_best = false;

  SweepResult sweep =
      eval_sweep(model.experts, split, config.gate_eps, 0, config.eval_k, false);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    model.gate = sweep.gates;
    model.gate.epoch_computed = epoch;
    sync.push_loss(epoch, sweep.ensemble_val_loss);

    std::vector<double> weights(n, 1.0);
    if (config.adaptive_weights) {
      weights = sync.weights_for_epoch(epoch, config.weight_mode);
    }
    out.weight_history.push_back(weights);

    std::vector<int> order = base_users;
    {
      Rng rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order);
    }

    const double beta = config.beta_at(epoch);
    double loss_acc = 0.0;
    int touched = 0;
    int batch_index = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += config.batch_size, ++batch_index) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      Matrix x, t;
      fill_batch(split, order, begin, end, x, t);
      const int bsz = static_cast<int>(end - begin);

      Matrix gate_rows(bsz, ne);
      std::vector<double> row_w(bsz);
      for (int b = 0; b < bsz; ++b) {
        const int u = order[begin + b];
        for (int k = 0; k < ne; ++k) gate_rows(b, k) = model.gate.values(u, k);
        row_w[b] = weights[u];
      }
      std::vector<ExpertNoise> noise;
      noise.reserve(ne);
      const std::uint64_t batch_seed =
          derive_seed(config.seed, "noise", static_cast<std::uint64_t>(epoch),
                      static_cast<std::uint64_t>(batch_index));
      for (int k = 0; k < ne; ++k) {
        Rng rng(derive_seed(batch_seed, "expert", static_cast<std::uint64_t>(k)));
        noise.push_back(draw_noise(model.experts[k].dims, bsz, config.dropout, rng));
      }

      for (auto& g : grads) {
        g.for_each_param([](const char*, Matrix& mat) { mat.fill(0.0); });
      }
      try {
        MixtureBatchResult res = mixture_batch_step(model.experts, x, t, gate_rows,
                                                    row_w, beta, noise, &grads);
        for (double l : res.per_row_loss) loss_acc += l;
        touched += bsz;
        for (int k = 0; k < ne; ++k) {
          apply_adam_one(model.experts[k], grads[k], adam[k], k);
        }
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
    }

    sweep = eval_sweep(model.experts, split, config.gate_eps, epoch, config.eval_k, true);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_acc / static_cast<double>(touched);
    rec.val_ndcg = overall_mean(sweep.val_ndcg);
    rec.group_ndcg = group_means(sweep.val_ndcg, profile);
    rec.group_weight = group_weight_means(weights, profile);
    rec.users_trained = touched;
    out.history.push_back(rec);

    if (!has_best || rec.val_ndcg > out.best_val_ndcg) {
      has_best = true;
      out.best_val_ndcg = rec.val_ndcg;
      out.best_epoch = epoch;
      out.best.experts = model.experts;
      out.best.gate = sweep.gates;
      out.best.config = config;
    }
    if (on_epoch) on_epoch(epoch, model.experts);
  }
  return out;
}

// Deliberately a separate loop from train(): it shares the numeric kernels but
// none of the gate/weight plumbing, so the two trainers agreeing bit for bit
// at n_experts = 1 actually exercises the reduction.
SingleTrainResult train_single_expert(const TrainConfig& config,
                                      const SplitDataset& split,
                                      const MainstreamProfile& profile,
                                      const EpochCallback& on_epoch) {
  if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (static_cast<int>(profile.subgroup.size()) != split.n_users) {
    throw DataError("train: mainstream profile does not match split");
  }
  const int m = split.n_items;

  ExpertDims dims{m, config.hidden, config.latent};
  std::vector<ExpertParams> experts;
  experts.push_back(init_expert(dims, derive_seed(config.seed, "init", 0)));
  std::vector<std::vector<AdamState>> adam = make_adam(experts, config.lr);
  const std::vector<int> base_users = trainable_users(split);
  if (base_users.empty()) throw DataError("train: no users with training items");

  ExpertParams grads = ExpertParams::zeros(dims);

  SingleTrainResult out;
  bool has_best = false;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<int> order = base_users;
    {
      Rng rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order);
    }

    const double beta = config.beta_at(epoch);
    double loss_acc = 0.0;
    int touched = 0;
    int batch_index = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += config.batch_size, ++batch_index) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      Matrix x, t;
      fill_batch(split, order, begin, end, x, t);
      const int bsz = static_cast<int>(end - begin);

      const std::uint64_t batch_seed =
          derive_seed(config.seed, "noise", static_cast<std::uint64_t>(epoch),
                      static_cast<std::uint64_t>(batch_index));
      Rng rng(derive_seed(batch_seed, "expert", 0));
      const ExpertNoise noise = draw_noise(dims, bsz, config.dropout, rng);

      grads.for_each_param([](const char*, Matrix& mat) { mat.fill(0.0); });
      try {
        const ExpertActs acts = forward_batch(experts[0], x, &noise);
        std::vector<double> ce, kl;
        expert_ce_kl(acts, t, ce, kl);
        Matrix dlogits(bsz, m);
        std::vector<double> kl_scale(bsz, beta);
        for (int b = 0; b < bsz; ++b) {
          loss_acc += ce[b] + beta * kl[b];
          const double* tt = t.row(b);
          const double* p = acts.probs.row(b);
          double positives = 0.0;
          for (int i = 0; i < m; ++i) positives += tt[i];
          double* dl = dlogits.row(b);
          for (int i = 0; i < m; ++i) dl[i] = positives * p[i] - tt[i];
        }
        touched += bsz;
        expert_backward_batch(experts[0], acts, dlogits, kl_scale, grads);
        apply_adam_one(experts[0], grads, adam[0], 0);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
    }

    const SweepResult sweep =
        eval_sweep(experts, split, config.gate_eps, epoch, config.eval_k, true);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_acc / static_cast<double>(touched);
    rec.val_ndcg = overall_mean(sweep.val_ndcg);
    rec.group_ndcg = group_means(sweep.val_ndcg, profile);
    rec.group_weight.fill(1.0);
    rec.users_trained = touched;
    out.history.push_back(rec);

    if (!has_best || rec.val_ndcg > out.best_val_ndcg) {
      has_best = true;
      out.best_val_ndcg = rec.val_ndcg;
      out.best_epoch = epoch;
      out.best = experts[0];
    }
    if (on_epoch) on_epoch(epoch, experts);
  }
  return out;
}

}  // namespace tall
