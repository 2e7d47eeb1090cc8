#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tall/corpus.hpp"

namespace tall {

// Top-k item indices by descending score, ties broken by ascending index.
// Items with a nonzero exclude mask never appear; when fewer than k items
// remain the list is simply shorter.
std::vector<int> rank_items(const std::vector<double>& scores,
                            const std::vector<std::uint8_t>& exclude, int k);

// Binary-relevance NDCG with IDCG truncated at min(k, |relevant|).
// `relevant` must be sorted ascending and non-empty.
double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant,
                 int k);

// |hits| / min(k, |relevant|); `relevant` sorted ascending and non-empty.
double recall_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant,
                   int k);

struct BiasReport {
  std::string name;
  int k = 20;
  double overall = 0.0;
  std::array<double, 5> group{};         // low .. high means
  std::array<int, 5> counts{};           // evaluable users per subgroup
  int evaluated_users = 0;
  int skipped_users = 0;                 // empty test sets
  std::optional<std::array<double, 6>> delta_pct;  // overall, low..high vs baseline
  std::string baseline_name;
};

// Scores every user with `scorer` (a length-M vector), masks train+val items
// from the ranking, and averages test-set NDCG@k overall and per subgroup.
// Users with empty test sets are skipped and counted.
BiasReport bias_report(const std::function<std::vector<double>(int)>& scorer,
                       const SplitDataset& split, const MainstreamProfile& profile,
                       int k = 20, const BiasReport* baseline = nullptr);

// 100 * (a - b) / b rows against the baseline, attached to `report`.
void attach_deltas(BiasReport& report, const BiasReport& baseline);

// report.csv: one row per variant (overall, L, ML, M, MH, H), a delta row
// under each variant that carries one.
void write_report_csv(const std::string& path, const std::vector<BiasReport>& reports);
void write_report_json(const std::string& path, const BiasReport& report,
                       const std::string& config_hash);
BiasReport load_report_json(const std::string& path);

}  // namespace tall
