#include "tall/expert.hpp"

#include <cmath>

#include "tall/errors.hpp"

namespace tall {

ExpertParams ExpertParams::zeros(const ExpertDims& dims) {
  ExpertParams p;
  p.dims = dims;
  const int m = dims.n_items, h = dims.hidden, d = dims.latent;
  p.enc_w1 = Matrix(m, h);
  p.enc_b1 = Matrix(1, h);
  p.enc_wmu = Matrix(h, d);
  p.enc_bmu = Matrix(1, d);
  p.enc_wlv = Matrix(h, d);
  p.enc_blv = Matrix(1, d);
  p.dec_w1 = Matrix(d, h);
  p.dec_b1 = Matrix(1, h);
  p.dec_w2 = Matrix(h, m);
  p.dec_b2 = Matrix(1, m);
  return p;
}

ExpertParams init_expert(const ExpertDims& dims, std::uint64_t seed) {
  if (dims.n_items < 1 || dims.hidden < 1 || dims.latent < 1) {
    throw ConfigError("expert dims must be positive");
  }
  ExpertParams p = ExpertParams::zeros(dims);
  Rng rng(seed);
  p.for_each_param([&](const char* name, Matrix& w) {
    (void)name;
    if (w.rows == 1) return;  // biases stay zero
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (double& v : w.data) v = rng.uniform(-bound, bound);
  });
  return p;
}

ExpertNoise draw_noise(const ExpertDims& dims, int batch, double dropout_p, Rng& rng) {
  ExpertNoise noise;
  noise.dropout = Matrix(batch, dims.n_items);
  const double keep_scale = 1.0 / (1.0 - dropout_p);
  for (double& v : noise.dropout.data) {
    v = rng.uniform() >= dropout_p ? keep_scale : 0.0;
  }
  noise.eps = Matrix(batch, dims.latent);
  for (double& v : noise.eps.data) v = rng.normal();
  return noise;
}

ExpertActs forward_batch(const ExpertParams& params, const Matrix& x,
                         const ExpertNoise* noise) {
  if (x.cols != params.dims.n_items) {
    throw DimensionError("expert forward: input width " + std::to_string(x.cols) +
                         " != n_items " + std::to_string(params.dims.n_items));
  }
  ExpertActs a;
  if (noise != nullptr) {
    if (noise->dropout.rows != x.rows || noise->eps.rows != x.rows) {
      throw DimensionError("expert forward: noise batch mismatch");
    }
    a.x_in = x;
    for (std::size_t i = 0; i < a.x_in.size(); ++i) a.x_in.data[i] *= noise->dropout.data[i];
  } else {
    a.x_in = x;
  }
  a.h1 = affine_forward(a.x_in, params.enc_w1, params.enc_b1);
  tanh_inplace(a.h1);
  a.mu = affine_forward(a.h1, params.enc_wmu, params.enc_bmu);
  a.logvar = affine_forward(a.h1, params.enc_wlv, params.enc_blv);
  a.z = a.mu;
  if (noise != nullptr) {
    a.eps = noise->eps;
    for (std::size_t i = 0; i < a.z.size(); ++i) {
      a.z.data[i] += std::exp(0.5 * a.logvar.data[i]) * a.eps.data[i];
    }
  }
  a.h2 = affine_forward(a.z, params.dec_w1, params.dec_b1);
  tanh_inplace(a.h2);
  a.logits = affine_forward(a.h2, params.dec_w2, params.dec_b2);
  if (!a.logits.all_finite()) {
    throw NumericError("expert forward produced non-finite activations");
  }
  a.probs = a.logits;
  softmax_rows(a.probs);
  return a;
}

void expert_ce_kl(const ExpertActs& acts, const Matrix& target,
                  std::vector<double>& ce, std::vector<double>& kl) {
  if (!target.same_shape(acts.logits)) {
    throw DimensionError("expert_ce_kl: target shape mismatch");
  }
  const int batch = acts.logits.rows;
  ce.assign(batch, 0.0);
  kl.assign(batch, 0.0);
  Matrix log_probs = acts.logits;
  log_softmax_rows(log_probs);
  for (int b = 0; b < batch; ++b) {
    const double* t = target.row(b);
    const double* lp = log_probs.row(b);
    double acc = 0.0;
    for (int i = 0; i < target.cols; ++i) {
      if (t[i] != 0.0) acc -= t[i] * lp[i];
    }
    ce[b] = acc;
    const double* mu = acts.mu.row(b);
    const double* lv = acts.logvar.row(b);
    double k = 0.0;
    for (int d = 0; d < acts.mu.cols; ++d) {
      k += 1.0 + lv[d] - mu[d] * mu[d] - std::exp(lv[d]);
    }
    kl[b] = -0.5 * k;
  }
}

void expert_backward_batch(const ExpertParams& params, const ExpertActs& acts,
                           const Matrix& dlogits,
                           const std::vector<double>& kl_row_scale,
                           ExpertParams& grads) {
  // decoder
  Matrix dh2 = affine_backward(acts.h2, params.dec_w2, dlogits, grads.dec_w2, grads.dec_b2);
  Matrix da2 = tanh_backward(acts.h2, dh2);
  Matrix dz = affine_backward(acts.z, params.dec_w1, da2, grads.dec_w1, grads.dec_b1);

  // through z = mu + e^{lv/2} * eps, plus the KL term's own mu/lv gradients
  Matrix dmu = dz;
  Matrix dlv(acts.logvar.rows, acts.logvar.cols);
  const bool sampled = acts.eps.size() > 0;
  for (int b = 0; b < dz.rows; ++b) {
    const double scale = kl_row_scale[b];
    double* dlvr = dlv.row(b);
    double* dmur = dmu.row(b);
    const double* dzr = dz.row(b);
    const double* lvr = acts.logvar.row(b);
    const double* mur = acts.mu.row(b);
    const double* epsr = sampled ? acts.eps.row(b) : nullptr;
    for (int d = 0; d < dz.cols; ++d) {
      dlvr[d] = sampled ? 0.5 * dzr[d] * epsr[d] * std::exp(0.5 * lvr[d]) : 0.0;
      if (scale != 0.0) {
        dmur[d] += scale * mur[d];
        dlvr[d] += scale * 0.5 * (std::exp(lvr[d]) - 1.0);
      }
    }
  }

  // encoder heads share h1
  Matrix dh1 = affine_backward(acts.h1, params.enc_wmu, dmu, grads.enc_wmu, grads.enc_bmu);
  Matrix dh1_lv = affine_backward(acts.h1, params.enc_wlv, dlv, grads.enc_wlv, grads.enc_blv);
  add_scaled(dh1, dh1_lv, 1.0);
  Matrix da1 = tanh_backward(acts.h1, dh1);
  affine_backward(acts.x_in, params.enc_w1, da1, grads.enc_w1, grads.enc_b1);
}

// --- single-user wrappers ---

ExpertOutput forward(const ExpertParams& params, std::span<const double> x,
                     RunMode mode, Rng& rng, double dropout_p) {
  Matrix xb(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), xb.data.begin());
  ExpertActs acts;
  if (mode == RunMode::kTrain) {
    ExpertNoise noise = draw_noise(params.dims, 1, dropout_p, rng);
    acts = forward_batch(params, xb, &noise);
  } else {
    acts = forward_batch(params, xb, nullptr);
  }
  ExpertOutput out;
  out.logits.assign(acts.logits.data.begin(), acts.logits.data.end());
  out.probs.assign(acts.probs.data.begin(), acts.probs.data.end());
  out.mu.assign(acts.mu.data.begin(), acts.mu.data.end());
  out.logvar.assign(acts.logvar.data.begin(), acts.logvar.data.end());
  return out;
}

double expert_loss(const ExpertOutput& out, const std::vector<std::uint8_t>& target,
                   double beta) {
  if (target.size() != out.logits.size()) {
    throw DimensionError("expert_loss: target length mismatch");
  }
  const std::vector<double> lp = log_softmax(out.logits);
  double ce = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i]) ce -= lp[i];
  }
  double kl = 0.0;
  for (std::size_t d = 0; d < out.mu.size(); ++d) {
    kl += 1.0 + out.logvar[d] - out.mu[d] * out.mu[d] - std::exp(out.logvar[d]);
  }
  return ce + beta * (-0.5 * kl);
}

ExpertParams expert_backward(const ExpertParams& params, std::span<const double> x,
                             const std::vector<std::uint8_t>& target, double beta,
                             Rng& rng, double dropout_p) {
  Matrix xb(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), xb.data.begin());
  ExpertNoise noise = draw_noise(params.dims, 1, dropout_p, rng);
  ExpertActs acts = forward_batch(params, xb, &noise);

  // dCE/dlogits = (sum_i t_i) * softmax - t
  double positives = 0.0;
  for (std::uint8_t t : target) positives += t ? 1.0 : 0.0;
  Matrix dlogits(1, params.dims.n_items);
  for (int i = 0; i < params.dims.n_items; ++i) {
    dlogits(0, i) = positives * acts.probs(0, i) - (target[i] ? 1.0 : 0.0);
  }
  ExpertParams grads = ExpertParams::zeros(params.dims);
  expert_backward_batch(params, acts, dlogits, {beta}, grads);
  return grads;
}

}  // namespace tall
