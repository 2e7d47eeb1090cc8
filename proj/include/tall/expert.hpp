#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tall/matrix.hpp"
#include "tall/rng.hpp"

namespace tall {

// M items, H hidden units, D latent dimensions.
struct ExpertDims {
  int n_items = 0;
  int hidden = 100;
  int latent = 50;

  bool operator==(const ExpertDims&) const = default;
};

// One multinomial-VAE expert: tanh encoder to a Gaussian latent, tanh decoder
// back to item logits.
struct ExpertParams {
  ExpertDims dims;
  Matrix enc_w1, enc_b1;    // M -> H
  Matrix enc_wmu, enc_bmu;  // H -> D
  Matrix enc_wlv, enc_blv;  // H -> D
  Matrix dec_w1, dec_b1;    // D -> H
  Matrix dec_w2, dec_b2;    // H -> M

  static ExpertParams zeros(const ExpertDims& dims);

  // Visits tensors in a fixed order; the order defines init draws, optimizer
  // slot layout, and checkpoint file naming.
  template <typename F>
  void for_each_param(F&& f) {
    f("enc_w1", enc_w1); f("enc_b1", enc_b1);
    f("enc_wmu", enc_wmu); f("enc_bmu", enc_bmu);
    f("enc_wlv", enc_wlv); f("enc_blv", enc_blv);
    f("dec_w1", dec_w1); f("dec_b1", dec_b1);
    f("dec_w2", dec_w2); f("dec_b2", dec_b2);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    const_cast<ExpertParams*>(this)->for_each_param(
        [&](const char* name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }
};

// Scaled-uniform (Xavier) weights, zero biases; bit-reproducible per seed.
ExpertParams init_expert(const ExpertDims& dims, std::uint64_t seed);

enum class RunMode { kTrain, kEval };

// Pre-drawn stochastic inputs for one batch: inverted dropout mask over the
// input (entries 0 or 1/(1-p)) and the reparameterization normals.
struct ExpertNoise {
  Matrix dropout;  // B x M
  Matrix eps;      // B x D
};
ExpertNoise draw_noise(const ExpertDims& dims, int batch, double dropout_p, Rng& rng);

// Batched activations cached for the backward pass.
struct ExpertActs {
  Matrix x_in;    // input after dropout (train) or as given (eval)
  Matrix h1;      // tanh encoder hidden
  Matrix mu, logvar;
  Matrix eps;     // empty in eval mode (z = mu)
  Matrix z;
  Matrix h2;      // tanh decoder hidden
  Matrix logits;
  Matrix probs;   // softmax(logits)
};

// noise == nullptr selects the eval composition: no dropout, z = mu.
ExpertActs forward_batch(const ExpertParams& params, const Matrix& x,
                         const ExpertNoise* noise);

// Per-row multinomial cross entropy -sum_i t_i log_softmax(logits)_i and the
// Gaussian KL  -1/2 sum_d (1 + lv - mu^2 - e^lv).
void expert_ce_kl(const ExpertActs& acts, const Matrix& target,
                  std::vector<double>& ce, std::vector<double>& kl);

// Backward from per-row logit gradients; kl_row_scale[b] multiplies row b's
// KL gradient (beta and any loss weighting folded in by the caller).
// Accumulates into `grads` (an ExpertParams used as a gradient buffer).
void expert_backward_batch(const ExpertParams& params, const ExpertActs& acts,
                           const Matrix& dlogits,
                           const std::vector<double>& kl_row_scale,
                           ExpertParams& grads);

// --- single-user convenience surface ---

struct ExpertOutput {
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> mu;
  std::vector<double> logvar;
};

ExpertOutput forward(const ExpertParams& params, std::span<const double> x,
                     RunMode mode, Rng& rng, double dropout_p = 0.5);

double expert_loss(const ExpertOutput& out, const std::vector<std::uint8_t>& target,
                   double beta);

// Exact gradient of expert_loss for one sample; draws dropout and epsilon
// from `rng` and shares them between the internal forward and the backward.
ExpertParams expert_backward(const ExpertParams& params, std::span<const double> x,
                             const std::vector<std::uint8_t>& target, double beta,
                             Rng& rng, double dropout_p = 0.5);

}  // namespace tall
