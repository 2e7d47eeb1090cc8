#pragma once

// Independent reference implementations the library is tested against.
// Everything here deliberately takes the dumbest correct route: triple loops,
// full sorts, dense set arithmetic, bisection instead of closed forms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

// C = A (ar x ac) * B (ac x bc), scalar triple loop.
inline std::vector<double> matmul(const std::vector<double>& a, int ar, int ac,
                                  const std::vector<double>& b, int bc) {
  std::vector<double> c(static_cast<std::size_t>(ar) * bc, 0.0);
  for (int i = 0; i < ar; ++i) {
    for (int j = 0; j < bc; ++j) {
      double acc = 0.0;
      for (int k = 0; k < ac; ++k) acc += a[i * ac + k] * b[k * bc + j];
      c[i * bc + j] = acc;
    }
  }
  return c;
}

inline double jaccard(const std::vector<std::uint8_t>& a,
                      const std::vector<std::uint8_t>& b) {
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) ++inter;
    if (a[i] || b[i]) ++uni;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

// O(N^2 M) mainstream scores over dense binary vectors.
inline std::vector<double> mainstream(const std::vector<std::vector<std::uint8_t>>& v) {
  const std::size_t n = v.size();
  std::vector<double> ms(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    double acc = 0.0;
    for (std::size_t w = 0; w < n; ++w) {
      if (w != u) acc += jaccard(v[u], v[w]);
    }
    ms[u] = acc / static_cast<double>(n - 1);
  }
  return ms;
}

// Full stable sort by (score descending, index ascending) over the unmasked
// items, then truncate.
inline std::vector<int> rank(const std::vector<double>& scores,
                             const std::vector<std::uint8_t>& exclude, int k) {
  std::vector<int> items;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (!exclude[i]) items.push_back(i);
  }
  std::stable_sort(items.begin(), items.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  if (static_cast<int>(items.size()) > k) items.resize(k);
  return items;
}

inline bool contains(const std::vector<int>& set, int item) {
  return std::find(set.begin(), set.end(), item) != set.end();
}

inline double ndcg(const std::vector<int>& ranked, const std::vector<int>& relevant,
                   int k) {
  double dcg = 0.0;
  const int upto = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int r = 0; r < upto; ++r) {
    if (contains(relevant, ranked[r])) dcg += 1.0 / std::log2(r + 2.0);
  }
  double idcg = 0.0;
  const int ideal = std::min<int>(k, static_cast<int>(relevant.size()));
  for (int r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(r + 2.0);
  return dcg / idcg;
}

inline double recall(const std::vector<int>& ranked, const std::vector<int>& relevant,
                     int k) {
  int hits = 0;
  const int upto = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int r = 0; r < upto; ++r) {
    if (contains(relevant, ranked[r])) ++hits;
  }
  return static_cast<double>(hits) /
         std::min<double>(k, static_cast<double>(relevant.size()));
}

// Exact solution of  max_w (sum_u w_u s_u) - alpha ||w||^2  subject to
// sum_u w_u = N and w >= 0, found by bisection on the KKT multiplier:
// w_u(lam) = max((s_u - lam) / (2 alpha), 0) with sum_u w_u(lam) = N.
inline std::vector<double> qp_weights(const std::vector<double>& s, double alpha) {
  const double n = static_cast<double>(s.size());
  auto total = [&](double lam) {
    double acc = 0.0;
    for (double v : s) acc += std::max((v - lam) / (2.0 * alpha), 0.0);
    return acc;
  };
  double lo = *std::min_element(s.begin(), s.end()) - 2.0 * alpha * n - 1.0;
  double hi = *std::max_element(s.begin(), s.end());
  if (total(lo) < n) throw std::logic_error("qp oracle: bad lower bracket");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total(mid) >= n) lo = mid;
    else hi = mid;
  }
  const double lam = 0.5 * (lo + hi);
  std::vector<double> w(s.size());
  for (std::size_t u = 0; u < s.size(); ++u) {
    w[u] = std::max((s[u] - lam) / (2.0 * alpha), 0.0);
  }
  return w;
}

}  // namespace oracle
