#include "tall/sync.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tall/errors.hpp"

namespace tall {

WeightSolution solve_weights(const std::vector<double>& signal, double alpha) {
  if (alpha <= 0.0) throw ConfigError("solve_weights: alpha must be > 0");
  if (signal.empty()) throw ConfigError("solve_weights: empty signal");
  for (double s : signal) {
    if (!std::isfinite(s)) throw NumericError("solve_weights: non-finite signal");
  }
  const double n = static_cast<double>(signal.size());
  double sum = 0.0;
  for (double s : signal) sum += s;

  WeightSolution sol;
  sol.lambda = (sum - 2.0 * alpha * n) / n;
  sol.weights.resize(signal.size());
  for (std::size_t u = 0; u < signal.size(); ++u) {
    const double w = (signal[u] - sol.lambda) / (2.0 * alpha);
    if (w < 0.0) {
      sol.weights[u] = 0.0;
      sol.clipped += 1;
    } else {
      sol.weights[u] = w;
    }
  }
  return sol;
}

SyncState::SyncState(int n_users, double alpha, int gap_epochs, int window)
    : n_users_(n_users),
      alpha_(alpha),
      gap_epochs_(gap_epochs),
      window_(window),
      capacity_(window + 1),
      buffer_(static_cast<std::size_t>(n_users) * (window + 1),
              std::numeric_limits<double>::quiet_NaN()),
      head_(n_users, 0),
      count_(n_users, 0),
      weights_(n_users, 1.0) {
  if (n_users < 1) throw ConfigError("SyncState: need at least one user");
  if (alpha <= 0.0) throw ConfigError("SyncState: alpha must be > 0");
  if (gap_epochs < 0 || window < 1) {
    throw ConfigError("SyncState: gap must be >= 0 and window >= 1");
  }
}

void SyncState::push_loss(int epoch, const std::vector<double>& losses) {
  if (static_cast<int>(losses.size()) != n_users_) {
    throw DimensionError("push_loss: expected " + std::to_string(n_users_) + " losses");
  }
  if (epoch <= last_epoch_) {
    throw DataError("push_loss: epoch " + std::to_string(epoch) +
                    " not after last pushed epoch " + std::to_string(last_epoch_));
  }
  last_epoch_ = epoch;
  for (int u = 0; u < n_users_; ++u) {
    double* ring = buffer_.data() + static_cast<std::size_t>(u) * capacity_;
    ring[head_[u]] = losses[u];
    head_[u] = (head_[u] + 1) % capacity_;
    if (count_[u] < capacity_) count_[u] += 1;
  }
}

double SyncState::at_from_newest(int u, int back) const {
  const double* ring = buffer_.data() + static_cast<std::size_t>(u) * capacity_;
  const int idx = ((head_[u] - 1 - back) % capacity_ + capacity_) % capacity_;
  return ring[idx];
}

std::optional<double> SyncState::smoothed_change(int u) const {
  const int avail = count_[u];
  if (avail < 2) return std::nullopt;
  const int n_changes = std::min(window_, avail - 1);
  double acc = 0.0;
  for (int j = 0; j < n_changes; ++j) {
    const double newer = at_from_newest(u, j);
    const double older = at_from_newest(u, j + 1);
    if (std::isnan(newer) || std::isnan(older)) return std::nullopt;
    acc += older - newer;
  }
  return acc / static_cast<double>(n_changes);
}

std::optional<double> SyncState::latest_loss(int u) const {
  if (count_[u] < 1) return std::nullopt;
  const double v = at_from_newest(u, 0);
  if (std::isnan(v)) return std::nullopt;
  return v;
}

const std::vector<double>& SyncState::weights_for_epoch(int epoch, WeightMode mode) {
  if (epoch <= gap_epochs_) {
    std::fill(weights_.begin(), weights_.end(), 1.0);
    return weights_;
  }
  std::vector<int> users;
  std::vector<double> signal;
  users.reserve(n_users_);
  signal.reserve(n_users_);
  for (int u = 0; u < n_users_; ++u) {
    std::optional<double> s = mode == WeightMode::kRawLoss ? latest_loss(u)
                                                           : smoothed_change(u);
    if (s.has_value()) {
      users.push_back(u);
      signal.push_back(*s);
    }
  }
  std::fill(weights_.begin(), weights_.end(), 1.0);
  if (!users.empty()) {
    WeightSolution sol = solve_weights(signal, alpha_);
    for (std::size_t j = 0; j < users.size(); ++j) {
      weights_[users[j]] = sol.weights[j];
    }
  }
  return weights_;
}

}  // namespace tall
