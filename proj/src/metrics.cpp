#include "tall/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tall/errors.hpp"
#include "tall/parallel.hpp"

namespace tall {

std::vector<int> rank_items(const std::vector<double>& scores,
                            const std::vector<std::uint8_t>& exclude, int k) {
  if (k < 1) throw ConfigError("rank_items: k must be >= 1");
  if (!exclude.empty() && exclude.size() != scores.size()) {
    throw DimensionError("rank_items: exclude mask length mismatch");
  }
  std::vector<int> idx;
  idx.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (exclude.empty() || !exclude[i]) idx.push_back(static_cast<int>(i));
  }
  const auto better = [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  const std::size_t take = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(k));
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), better);
  idx.resize(take);
  return idx;
}

namespace {

bool contains_sorted(const std::vector<int>& sorted, int v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

}  // namespace

double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant,
                 int k) {
  if (relevant.empty()) {
    throw DataError("ndcg_at_k: empty relevant set (user should be excluded)");
  }
  const int depth = std::min<int>(k, static_cast<int>(ranked.size()));
  double dcg = 0.0;
  for (int r = 0; r < depth; ++r) {
    if (contains_sorted(relevant, ranked[r])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  const int ideal = std::min<int>(k, static_cast<int>(relevant.size()));
  double idcg = 0.0;
  for (int r = 0; r < ideal; ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  return dcg / idcg;
}

double recall_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant,
                   int k) {
  if (relevant.empty()) {
    throw DataError("recall_at_k: empty relevant set (user should be excluded)");
  }
  const int depth = std::min<int>(k, static_cast<int>(ranked.size()));
  int hits = 0;
  for (int r = 0; r < depth; ++r) {
    hits += contains_sorted(relevant, ranked[r]) ? 1 : 0;
  }
  return static_cast<double>(hits) /
         static_cast<double>(std::min<int>(k, static_cast<int>(relevant.size())));
}

BiasReport bias_report(const std::function<std::vector<double>(int)>& scorer,
                       const SplitDataset& split, const MainstreamProfile& profile,
                       int k, const BiasReport* baseline) {
  if (static_cast<int>(profile.subgroup.size()) != split.n_users) {
    throw DimensionError("bias_report: profile and split disagree on user count");
  }
  const int n = split.n_users;
  for (int u = 0; u < n; ++u) {
    if (!split.test_items[u].empty()) {
      if (static_cast<int>(scorer(u).size()) != split.n_items) {
        throw DimensionError("bias_report: scorer returned wrong length");
      }
      break;
    }
  }
  std::vector<double> per_user(n, std::nan(""));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t u = lo; u < hi; ++u) {
      const int uu = static_cast<int>(u);
      if (split.test_items[uu].empty()) continue;
      std::vector<double> scores = scorer(uu);
      std::vector<std::uint8_t> mask(split.n_items, 0);
      for (int i : split.train_items[uu]) mask[i] = 1;
      for (int i : split.val_items[uu]) mask[i] = 1;
      per_user[u] = ndcg_at_k(rank_items(scores, mask, k), split.test_items[uu], k);
    }
  }, 4);

  BiasReport rep;
  rep.k = k;
  std::array<double, 5> sums{};
  for (int u = 0; u < n; ++u) {
    if (std::isnan(per_user[u])) {
      rep.skipped_users += 1;
      continue;
    }
    const int g = static_cast<int>(profile.subgroup[u]);
    sums[g] += per_user[u];
    rep.counts[g] += 1;
    rep.evaluated_users += 1;
  }
  double total = 0.0;
  for (int g = 0; g < 5; ++g) {
    rep.group[g] = rep.counts[g] > 0 ? sums[g] / rep.counts[g] : std::nan("");
    total += sums[g];
  }
  rep.overall = rep.evaluated_users > 0 ? total / rep.evaluated_users : std::nan("");
  if (baseline != nullptr) attach_deltas(rep, *baseline);
  return rep;
}

void attach_deltas(BiasReport& report, const BiasReport& baseline) {
  std::array<double, 6> d{};
  d[0] = 100.0 * (report.overall - baseline.overall) / baseline.overall;
  for (int g = 0; g < 5; ++g) {
    d[g + 1] = 100.0 * (report.group[g] - baseline.group[g]) / baseline.group[g];
  }
  report.delta_pct = d;
  report.baseline_name = baseline.name;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "absent";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_report_csv(const std::string& path, const std::vector<BiasReport>& reports) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "variant,overall,low,med_low,medium,med_high,high\n";
  for (const auto& r : reports) {
    out << r.name << ',' << fmt(r.overall);
    for (int g = 0; g < 5; ++g) out << ',' << fmt(r.group[g]);
    out << '\n';
    if (r.delta_pct.has_value()) {
      out << "delta_pct_vs_" << r.baseline_name;
      for (double d : *r.delta_pct) out << ',' << fmt(d);
      out << '\n';
    }
  }
}

void write_report_json(const std::string& path, const BiasReport& report,
                       const std::string& config_hash) {
  nlohmann::json j;
  j["kind"] = "bias_report";
  j["name"] = report.name;
  j["k"] = report.k;
  j["config_hash"] = config_hash;
  j["overall"] = report.overall;
  j["group"] = report.group;
  j["counts"] = report.counts;
  j["evaluated_users"] = report.evaluated_users;
  j["skipped_users"] = report.skipped_users;
  if (report.delta_pct.has_value()) {
    j["delta_pct"] = *report.delta_pct;
    j["baseline_name"] = report.baseline_name;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

BiasReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("kind", "") != "bias_report") {
    throw DataError(path + " is not a bias report");
  }
  const auto as_double = [](const nlohmann::json& v) {
    return v.is_number() ? v.get<double>() : std::nan("");
  };
  BiasReport r;
  r.name = j.at("name").get<std::string>();
  r.k = j.at("k").get<int>();
  r.overall = as_double(j.at("overall"));
  for (int g = 0; g < 5; ++g) r.group[g] = as_double(j.at("group").at(g));
  r.counts = j.at("counts").get<std::array<int, 5>>();
  r.evaluated_users = j.at("evaluated_users").get<int>();
  r.skipped_users = j.at("skipped_users").get<int>();
  if (j.contains("delta_pct")) {
    r.delta_pct = j.at("delta_pct").get<std::array<double, 6>>();
    r.baseline_name = j.value("baseline_name", "");
  }
  return r;
}

}  // namespace tall
