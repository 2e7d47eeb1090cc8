#pragma once

#include <optional>
#include <vector>

namespace tall {

struct WeightSolution {
  std::vector<double> weights;
  double lambda = 0.0;
  int clipped = 0;  // coordinates floored at zero
};

// One-shot KKT solution of  max_w  sum_u w_u s_u - alpha ||w||^2
//                           s.t.   sum_u w_u = N, w >= 0:
//   lambda = (sum_v s_v - 2 alpha N) / N,  w_u = max((s_u - lambda) / 2 alpha, 0).
// When the max() clips, the formula is kept as-is (no re-solve); the clipped
// count is reported so callers can see when sum(w) drifts from N.
WeightSolution solve_weights(const std::vector<double>& signal, double alpha);

enum class WeightMode { kRawLoss, kLossChange };

// Per-user validation-loss history, smoothed loss changes, and the epoch
// schedule: all-ones weights through the first gap_epochs, then weights from
// the solver. Users without a usable signal keep weight 1 and stay out of
// the solve.
class SyncState {
 public:
  SyncState(int n_users, double alpha, int gap_epochs, int window);

  // losses[u] may be NaN for users without validation items; those users are
  // carried as sentinels. Epochs must be pushed in strictly increasing order.
  void push_loss(int epoch, const std::vector<double>& losses);

  // Mean of the most recent min(window, available) consecutive loss drops
  // L^{t-1} - L^t; empty until a user has two recorded losses.
  std::optional<double> smoothed_change(int u) const;

  // Latest recorded loss, if any (the raw-loss weight signal).
  std::optional<double> latest_loss(int u) const;

  const std::vector<double>& weights_for_epoch(int epoch, WeightMode mode);

  const std::vector<double>& weights() const { return weights_; }
  double alpha() const { return alpha_; }
  int gap_epochs() const { return gap_epochs_; }
  int window() const { return window_; }
  int n_users() const { return n_users_; }
  int last_epoch() const { return last_epoch_; }

 private:
  int n_users_;
  double alpha_;
  int gap_epochs_;
  int window_;
  int capacity_;  // window + 1 losses per user
  int last_epoch_ = 0;
  std::vector<double> buffer_;  // n_users x capacity ring
  std::vector<int> head_;
  std::vector<int> count_;
  std::vector<double> weights_;

  double at_from_newest(int u, int back) const;  // back=0 newest
};

}  // namespace tall
