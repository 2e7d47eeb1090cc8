#include <doctest.h>

#include <cmath>
#include <bit>
#include <cstdint>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "tall/corpus.hpp"
#include "tall/errors.hpp"
#include "tall/expert.hpp"
#include "tall/gradcheck.hpp"
#include "tall/mixture.hpp"
#include "tall/rng.hpp"

using namespace tall;

namespace {

// Small ready-made dataset: split + profile for trainer-level tests.
struct SmallData {
  SplitDataset split;
  MainstreamProfile profile;
};

SmallData small_data(std::uint64_t seed, int n_users = 25, int n_items = 30) {
  InteractionSet data = synth::random_corpus(seed, n_users, n_items, 8, 14);
  SmallData out;
  out.split = split(data, {0.7, 0.1, 0.2}, seed + 1);
  out.profile = mainstream_scores(out.split);
  return out;
}

std::vector<double> flatten_experts(const std::vector<ExpertParams>& experts) {
  std::vector<double> flat;
  for (const ExpertParams& p : experts) {
    p.for_each_param([&](const char*, const Matrix& m) {
      flat.insert(flat.end(), m.data.begin(), m.data.end());
    });
  }
  return flat;
}

void unflatten_experts(std::vector<ExpertParams>& experts,
                       const std::vector<double>& flat) {
  std::size_t off = 0;
  for (ExpertParams& p : experts) {
    p.for_each_param([&](const char*, Matrix& m) {
      std::copy(flat.begin() + static_cast<long>(off),
                flat.begin() + static_cast<long>(off + m.size()), m.data.begin());
      off += m.size();
    });
  }
}

}  // namespace

TEST_SUITE("mixture.gate") {
  TEST_CASE("equal losses split evenly") {
    std::vector<double> g = gate_from_losses({2.0, 2.0}, 1e-3);
    CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-12));
    std::vector<double> g4 = gate_from_losses({0.7, 0.7, 0.7, 0.7}, 1e-3);
    for (double v : g4) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }

  TEST_CASE("hand case losses (1, 2)") {
    std::vector<double> g = gate_from_losses({1.0, 2.0}, 1e-3);
    const double e1 = std::exp(1.0), e05 = std::exp(0.5);
    CHECK(g[0] == doctest::Approx(e1 / (e1 + e05)).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(e05 / (e1 + e05)).epsilon(1e-12));
    CHECK(g[0] == doctest::Approx(0.6225).epsilon(2e-4));
    CHECK(g[1] == doctest::Approx(0.3775).epsilon(2e-4));
  }

  TEST_CASE("an order of magnitude separation saturates the gate") {
    std::vector<double> g = gate_from_losses({0.1, 10.0}, 1e-3);
    CHECK(g[0] > 0.99);
    CHECK(g[0] + g[1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("rows sum to one and order matches inverse losses") {
    Rng rng(13);
    for (int rep = 0; rep < 100; ++rep) {
      const int ne = 2 + static_cast<int>(rng.below(5));
      std::vector<double> losses(ne);
      for (double& l : losses) l = 1e-3 + rng.uniform() * 5.0;
      std::vector<double> g = gate_from_losses(losses, 1e-3);
      double total = 0.0;
      for (double v : g) {
        total += v;
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      for (int a = 0; a < ne; ++a) {
        for (int b = 0; b < ne; ++b) {
          if (losses[a] < losses[b]) CHECK(g[a] > g[b]);
        }
      }
    }
  }

  TEST_CASE("tiny losses and zeros share the epsilon floor") {
    std::vector<double> a = gate_from_losses({0.0, 2.0}, 1e-3);
    std::vector<double> b = gate_from_losses({1e-3, 2.0}, 1e-3);
    std::vector<double> c = gate_from_losses({1e-4, 2.0}, 1e-3);
    CHECK(a[0] == b[0]);
    CHECK(a[0] == c[0]);
    for (double v : a) CHECK(std::isfinite(v));
  }

  TEST_CASE("bad inputs are rejected") {
    CHECK_THROWS_AS(gate_from_losses({1.0}, 0.0), ConfigError);
    CHECK_THROWS_AS(gate_from_losses({1.0}, -1.0), ConfigError);
    CHECK_THROWS_AS(gate_from_losses({}, 1e-3), ConfigError);
    CHECK_THROWS_AS(gate_from_losses({-0.5, 1.0}, 1e-3), NumericError);
    CHECK_THROWS_AS(gate_from_losses({std::numeric_limits<double>::quiet_NaN()}, 1e-3),
                    NumericError);
  }
}

TEST_SUITE("mixture.predict") {
  TEST_CASE("single expert mixture is that expert, bitwise") {
    SmallData d = small_data(21);
    TrainConfig cfg;
    cfg.n_experts = 1;
    cfg.hidden = 8;
    cfg.latent = 4;
    EnsembleModel model = init_ensemble(cfg, d.split.n_items, d.split.n_users);
    for (int u : {0, 3, 7}) {
      std::vector<double> x = d.split.normalized_train_vector(u);
      std::vector<double> mixed = ensemble_predict(model, u, x);
      Rng dummy(0);
      ExpertOutput single = forward(model.experts[0], x, RunMode::kEval, dummy);
      CHECK(mixed == single.probs);
    }
  }

  TEST_CASE("identical experts are a convexity fixed point") {
    SmallData d = small_data(22);
    TrainConfig cfg;
    cfg.n_experts = 3;
    cfg.hidden = 8;
    cfg.latent = 4;
    EnsembleModel model = init_ensemble(cfg, d.split.n_items, d.split.n_users);
    model.experts[1] = model.experts[0];
    model.experts[2] = model.experts[0];
    model.gate.values(0, 0) = 0.6;
    model.gate.values(0, 1) = 0.3;
    model.gate.values(0, 2) = 0.1;
    std::vector<double> x = d.split.normalized_train_vector(0);
    std::vector<double> mixed = ensemble_predict(model, 0, x);
    Rng dummy(0);
    ExpertOutput single = forward(model.experts[0], x, RunMode::kEval, dummy);
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      CHECK(mixed[i] == doctest::Approx(single.probs[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("three experts match the scalar loop oracle") {
    SmallData d = small_data(23);
    TrainConfig cfg;
    cfg.n_experts = 3;
    cfg.hidden = 8;
    cfg.latent = 4;
    EnsembleModel model = init_ensemble(cfg, d.split.n_items, d.split.n_users);
    Rng grng(24);
    for (int u = 0; u < 5; ++u) {
      std::vector<double> raw(3);
      double gsum = 0.0;
      for (double& v : raw) {
        v = 0.1 + grng.uniform();
        gsum += v;
      }
      for (int k = 0; k < 3; ++k) model.gate.values(u, k) = raw[k] / gsum;
      std::vector<double> x = d.split.normalized_train_vector(u);
      std::vector<double> mixed = ensemble_predict(model, u, x);
      Rng dummy(0);
      std::vector<ExpertOutput> outs;
      for (int k = 0; k < 3; ++k) {
        outs.push_back(forward(model.experts[k], x, RunMode::kEval, dummy));
      }
      double total = 0.0;
      for (int i = 0; i < d.split.n_items; ++i) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) {
          acc += model.gate.values(u, k) * outs[k].probs[static_cast<std::size_t>(i)];
        }
        CHECK(mixed[static_cast<std::size_t>(i)] == doctest::Approx(acc).epsilon(1e-12));
        total += mixed[static_cast<std::size_t>(i)];
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("shape and range violations throw") {
    SmallData d = small_data(25);
    TrainConfig cfg;
    cfg.n_experts = 2;
    cfg.hidden = 8;
    cfg.latent = 4;
    EnsembleModel model = init_ensemble(cfg, d.split.n_items, d.split.n_users);
    std::vector<double> x = d.split.normalized_train_vector(0);
    CHECK_THROWS_AS(ensemble_predict(model, -1, x), DataError);
    CHECK_THROWS_AS(ensemble_predict(model, d.split.n_users, x), DataError);
    model.gate.values = Matrix(d.split.n_users, 3);  // wrong expert count
    CHECK_THROWS_AS(ensemble_predict(model, 0, x), ConfigError);
  }
}

TEST_SUITE("mixture.loss") {
  TEST_CASE("single expert agrees with the standalone loss") {
    SmallData d = small_data(31);
    TrainConfig cfg;
    cfg.n_experts = 1;
    cfg.hidden = 8;
    cfg.latent = 4;
    EnsembleModel model = init_ensemble(cfg, d.split.n_items, d.split.n_users);
    for (int u : {1, 4, 9}) {
      std::vector<std::uint8_t> target(d.split.n_items, 0);
      for (int i : d.split.train_items[u]) target[i] = 1;
      if (d.split.train_items[u].empty()) continue;
      const double mixture = ensemble_loss(model, u, target, 0.4);
      Rng dummy(0);
      ExpertOutput out = forward(model.experts[0],
                                 d.split.normalized_train_vector(u), RunMode::kEval,
                                 dummy);
      const double single = expert_loss(out, target, 0.4);
      // the mixture CE guards log with +1e-12, shifting small probs slightly
      CHECK(std::abs(mixture - single) < 1e-8);
    }
  }

  TEST_CASE("a zero gate masks its expert entirely") {
    SmallData d = small_data(32);
    TrainConfig cfg;
    cfg.n_experts = 2;
    cfg.hidden = 8;
    cfg.latent = 4;
    EnsembleModel model = init_ensemble(cfg, d.split.n_items, d.split.n_users);
    model.gate.values(0, 0) = 1.0;
    model.gate.values(0, 1) = 0.0;
    std::vector<std::uint8_t> target(d.split.n_items, 0);
    for (int i : d.split.train_items[0]) target[i] = 1;
    const double before = ensemble_loss(model, 0, target, 0.7);
    // mangle the masked expert; the loss must not move
    for (double& v : model.experts[1].dec_w2.data) v = 3.0 - v;
    const double after = ensemble_loss(model, 0, target, 0.7);
    CHECK(before == after);
  }

  TEST_CASE("batch-step loss gradients pass finite differences") {
    const int m = 10, ne = 3, bsz = 2;
    std::vector<ExpertParams> experts;
    for (int k = 0; k < ne; ++k) {
      experts.push_back(init_expert({.n_items = m, .hidden = 8, .latent = 4}, 300 + k));
    }
    Rng rng(41);
    Matrix x(bsz, m), t(bsz, m);
    for (int b = 0; b < bsz; ++b) {
      for (int i = 0; i < m; ++i) {
        const bool on = rng.uniform() < 0.4;
        t(b, i) = on ? 1.0 : 0.0;
        x(b, i) = on ? 0.5 : 0.0;
      }
    }
    Matrix gates(bsz, ne);
    for (int b = 0; b < bsz; ++b) {
      double gsum = 0.0;
      for (int k = 0; k < ne; ++k) {
        gates(b, k) = 0.2 + rng.uniform();
        gsum += gates(b, k);
      }
      for (int k = 0; k < ne; ++k) gates(b, k) /= gsum;
    }
    std::vector<double> row_w{1.3, 0.7};
    const double beta = 0.5;
    std::vector<ExpertNoise> noise;
    for (int k = 0; k < ne; ++k) {
      Rng nrng(500 + k);
      noise.push_back(draw_noise(experts[k].dims, bsz, 0.5, nrng));
    }

    std::vector<ExpertParams> grads;
    for (int k = 0; k < ne; ++k) grads.push_back(ExpertParams::zeros(experts[k].dims));
    mixture_batch_step(experts, x, t, gates, row_w, beta, noise, &grads);

    auto f = [&](const std::vector<double>& flat) {
      std::vector<ExpertParams> probe;
      for (int k = 0; k < ne; ++k) probe.push_back(ExpertParams::zeros(experts[k].dims));
      unflatten_experts(probe, flat);
      return mixture_batch_step(probe, x, t, gates, row_w, beta, noise, nullptr)
          .loss_sum;
    };
    CHECK(grad_check(f, flatten_experts(experts), flatten_experts(grads), 1e-5) < 1e-4);
  }

  TEST_CASE("loss_sum is the weighted sum of per-row losses") {
    const int m = 8, ne = 2, bsz = 3;
    std::vector<ExpertParams> experts;
    for (int k = 0; k < ne; ++k) {
      experts.push_back(init_expert({.n_items = m, .hidden = 6, .latent = 3}, 600 + k));
    }
    Rng rng(43);
    Matrix x(bsz, m), t(bsz, m);
    for (int b = 0; b < bsz; ++b) {
      for (int i = 0; i < m; ++i) {
        const bool on = rng.uniform() < 0.5;
        t(b, i) = on ? 1.0 : 0.0;
        x(b, i) = on ? 0.6 : 0.0;
      }
    }
    Matrix gates(bsz, ne);
    for (int b = 0; b < bsz; ++b) {
      gates(b, 0) = 0.4;
      gates(b, 1) = 0.6;
    }
    std::vector<double> row_w{2.0, 0.5, 1.0};
    std::vector<ExpertNoise> noise;
    for (int k = 0; k < ne; ++k) {
      Rng nrng(700 + k);
      noise.push_back(draw_noise(experts[k].dims, bsz, 0.5, nrng));
    }
    MixtureBatchResult res =
        mixture_batch_step(experts, x, t, gates, row_w, 0.2, noise, nullptr);
    REQUIRE(res.per_row_loss.size() == static_cast<std::size_t>(bsz));
    double weighted = 0.0;
    for (int b = 0; b < bsz; ++b) weighted += row_w[b] * res.per_row_loss[b];
    CHECK(res.loss_sum == doctest::Approx(weighted).epsilon(1e-12));
  }

  TEST_CASE("batch-step arity mismatches throw") {
    std::vector<ExpertParams> experts{init_expert({.n_items = 6, .hidden = 4, .latent = 2}, 1)};
    Matrix x(2, 6), t(2, 6), gates(2, 1);
    std::vector<ExpertNoise> noise;
    Rng nrng(1);
    noise.push_back(draw_noise(experts[0].dims, 2, 0.5, nrng));
    std::vector<double> short_w{1.0};
    CHECK_THROWS_AS(
        mixture_batch_step(experts, x, t, gates, short_w, 0.1, noise, nullptr),
        DataError);
    Matrix bad_gates(2, 2);
    std::vector<double> w{1.0, 1.0};
    CHECK_THROWS_AS(
        mixture_batch_step(experts, x, t, bad_gates, w, 0.1, noise, nullptr),
        DataError);
  }
}

TEST_SUITE("mixture.gates_refresh") {
  TEST_CASE("identical expert seeds give uniform rows") {
    SmallData d = small_data(51);
    ExpertDims dims{.n_items = d.split.n_items, .hidden = 8, .latent = 4};
    std::vector<ExpertParams> experts{init_expert(dims, 9), init_expert(dims, 9)};
    GateTable gates = refresh_gates(experts, d.split, 1e-3, 3);
    CHECK(gates.epoch_computed == 3);
    for (int u = 0; u < d.split.n_users; ++u) {
      CHECK(gates.values(u, 0) == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(gates.values(u, 1) == doctest::Approx(0.5).epsilon(1e-12));
    }
  }

  TEST_CASE("users without validation items fall back to uniform and are flagged") {
    // craft a split where user 1 has no validation items
    InteractionSet data = synth::random_corpus(52, 8, 16, 5, 9);
    SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 3);
    int bare = -1;
    for (int u = 0; u < sd.n_users; ++u) {
      if (sd.val_items[u].empty()) bare = u;
    }
    if (bare < 0) {
      sd.val_items[1].clear();  // force the situation if the seed filled everyone
      bare = 1;
    }
    ExpertDims dims{.n_items = sd.n_items, .hidden = 6, .latent = 3};
    std::vector<ExpertParams> experts{init_expert(dims, 1), init_expert(dims, 2)};
    GateTable gates = refresh_gates(experts, sd, 1e-3, 1);
    CHECK(gates.uniform_fallback[bare] == 1);
    CHECK(gates.values(bare, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::isnan(gates.source_losses(bare, 0)));
  }

  TEST_CASE("rows recompose from per-user validation losses") {
    SmallData d = small_data(53, 5, 20);
    ExpertDims dims{.n_items = d.split.n_items, .hidden = 8, .latent = 4};
    std::vector<ExpertParams> experts{init_expert(dims, 11), init_expert(dims, 12)};
    GateTable gates = refresh_gates(experts, d.split, 1e-3, 1);
    for (int u = 0; u < d.split.n_users; ++u) {
      if (d.split.val_items[u].empty()) continue;
      std::vector<double> losses(2);
      for (int k = 0; k < 2; ++k) {
        Rng dummy(0);
        ExpertOutput out = forward(experts[k], d.split.normalized_train_vector(u),
                                   RunMode::kEval, dummy);
        std::vector<double> lp = log_softmax(out.logits);
        double ce = 0.0;
        for (int i : d.split.val_items[u]) ce -= lp[static_cast<std::size_t>(i)];
        losses[k] = ce / static_cast<double>(d.split.val_items[u].size());
        CHECK(gates.source_losses(u, k) == doctest::Approx(losses[k]).epsilon(1e-12));
      }
      std::vector<double> expect = gate_from_losses(losses, 1e-3);
      CHECK(gates.values(u, 0) == doctest::Approx(expect[0]).epsilon(1e-12));
      CHECK(gates.values(u, 1) == doctest::Approx(expect[1]).epsilon(1e-12));
      CHECK(gates.uniform_fallback[u] == 0);
    }
  }
}

TEST_SUITE("mixture.schedule") {
  TEST_CASE("beta ramps linearly then holds") {
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.beta_max = 0.2;
    cfg.beta_anneal_frac = 0.2;  // ramp over 20 epochs
    CHECK(cfg.beta_at(1) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(cfg.beta_at(10) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(cfg.beta_at(20) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(cfg.beta_at(100) == doctest::Approx(0.2).epsilon(1e-12));
  }

  TEST_CASE("zero anneal fraction applies beta_max immediately") {
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.beta_max = 0.3;
    cfg.beta_anneal_frac = 0.0;
    CHECK(cfg.beta_at(1) == doctest::Approx(0.3).epsilon(1e-12));
  }
}

TEST_SUITE("mixture.train") {
  TEST_CASE("short run records consistent history") {
    SmallData d = small_data(61);
    TrainConfig cfg;
    cfg.n_experts = 2;
    cfg.hidden = 8;
    cfg.latent = 4;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.adaptive_weights = false;
    cfg.eval_k = 5;
    cfg.seed = 62;
    TrainResult r = train(cfg, d.split, d.profile);

    REQUIRE(r.history.size() == 3);
    REQUIRE(r.weight_history.size() == 3);
    int with_train = 0;
    for (int u = 0; u < d.split.n_users; ++u) {
      if (!d.split.train_items[u].empty()) ++with_train;
    }
    double best = -1.0;
    for (const EpochRecord& rec : r.history) {
      CHECK(rec.users_trained == with_train);
      CHECK(std::isfinite(rec.train_loss));
      CHECK(rec.val_ndcg >= 0.0);
      CHECK(rec.val_ndcg <= 1.0);
      best = std::max(best, rec.val_ndcg);
      for (double w : rec.group_weight) CHECK(w == 1.0);
    }
    CHECK(r.best_val_ndcg == best);
    REQUIRE(r.best_epoch >= 1);
    REQUIRE(r.best_epoch <= 3);
    CHECK(r.history[static_cast<std::size_t>(r.best_epoch - 1)].val_ndcg ==
          r.best_val_ndcg);
    for (const std::vector<double>& w : r.weight_history) {
      for (double v : w) CHECK(v == 1.0);  // adaptive weighting off
    }
    CHECK(r.best.n_experts() == 2);
    CHECK(r.best.gate.values.rows == d.split.n_users);
  }

  TEST_CASE("training twice with one seed is bit-identical") {
    SmallData d = small_data(63);
    TrainConfig cfg;
    cfg.n_experts = 2;
    cfg.hidden = 8;
    cfg.latent = 4;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.eval_k = 5;
    cfg.seed = 64;
    TrainResult a = train(cfg, d.split, d.profile);
    TrainResult b = train(cfg, d.split, d.profile);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
      CHECK(a.history[e].train_loss == b.history[e].train_loss);
      CHECK(a.history[e].val_ndcg == b.history[e].val_ndcg);
    }
    CHECK(flatten_experts(a.best.experts) == flatten_experts(b.best.experts));
  }

  TEST_CASE("gap keeps weights at one, then they move") {
    SmallData d = small_data(65);
    TrainConfig cfg;
    cfg.n_experts = 2;
    cfg.hidden = 8;
    cfg.latent = 4;
    cfg.epochs = 6;
    cfg.batch_size = 8;
    cfg.adaptive_weights = true;
    cfg.weight_mode = WeightMode::kLossChange;
    cfg.gap_epochs = 3;
    cfg.window = 2;
    cfg.alpha = 0.05;  // small alpha so tiny loss-pace differences show up
    cfg.eval_k = 5;
    cfg.seed = 66;
    TrainResult r = train(cfg, d.split, d.profile);
    REQUIRE(r.weight_history.size() == 6);
    for (std::size_t e = 0; e < 3; ++e) {
      for (double v : r.weight_history[e]) CHECK(v == 1.0);
    }
    bool moved = false;
    for (std::size_t e = 3; e < 6; ++e) {
      for (double v : r.weight_history[e]) {
        CHECK(v >= 0.0);
        if (v != 1.0) moved = true;
      }
    }
    CHECK(moved);
  }

  TEST_CASE("invalid training configs are rejected up front") {
    SmallData d = small_data(67);
    TrainConfig cfg;
    cfg.n_experts = 1;
    cfg.hidden = 4;
    cfg.latent = 2;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(cfg, d.split, d.profile), ConfigError);
    cfg.epochs = 1;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(cfg, d.split, d.profile), ConfigError);
    cfg.batch_size = 4;
    MainstreamProfile wrong = d.profile;
    wrong.subgroup.pop_back();
    CHECK_THROWS_AS(train(cfg, d.split, wrong), DataError);
  }
}

TEST_SUITE("mixture.reduction") {
  TEST_CASE("one-expert ensemble reproduces the standalone trainer bitwise") {
    SmallData d = small_data(71);
    TrainConfig cfg;
    cfg.n_experts = 1;
    cfg.hidden = 8;
    cfg.latent = 4;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.adaptive_weights = false;
    cfg.eval_k = 5;
    cfg.seed = 72;

    TrainResult moe = train(cfg, d.split, d.profile);
    SingleTrainResult solo = train_single_expert(cfg, d.split, d.profile);

    REQUIRE(moe.history.size() == solo.history.size());
    for (std::size_t e = 0; e < moe.history.size(); ++e) {
      CHECK(moe.history[e].train_loss == solo.history[e].train_loss);
      CHECK(moe.history[e].val_ndcg == solo.history[e].val_ndcg);
      for (int g = 0; g < 5; ++g) {
        // bitwise: a subgroup with no evaluable users is NaN in both runs
        CHECK(std::bit_cast<std::uint64_t>(moe.history[e].group_ndcg[g]) ==
              std::bit_cast<std::uint64_t>(solo.history[e].group_ndcg[g]));
      }
    }
    CHECK(moe.best_epoch == solo.best_epoch);
    CHECK(moe.best_val_ndcg == solo.best_val_ndcg);
    CHECK(flatten_experts(moe.best.experts) == flatten_experts({solo.best}));
  }
}
