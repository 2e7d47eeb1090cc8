#include "tall/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tall/errors.hpp"
#include "tall/parallel.hpp"
#include "tall/rng.hpp"

namespace fs = std::filesystem;

namespace tall {

const std::array<const char*, 5> kSubgroupNames = {"low", "med-low", "medium",
                                                   "med-high", "high"};

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": bad number '" + s + "'");
  }
}

}  // namespace

InteractionSet load_interactions(const std::string& path,
                                 std::optional<double> rating_threshold) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction file: " + path);

  InteractionSet out;
  std::unordered_map<std::string, int> user_index, item_index;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line);
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected `user<TAB>item[<TAB>rating[<TAB>timestamp]]`");
    }
    if (fields.size() > 2 && rating_threshold.has_value()) {
      double rating = parse_double(fields[2], path + ":" + std::to_string(lineno));
      if (rating < *rating_threshold) continue;
    }
    auto uit = user_index.try_emplace(fields[0], static_cast<int>(out.user_ids.size()));
    if (uit.second) out.user_ids.push_back(fields[0]);
    auto iit = item_index.try_emplace(fields[1], static_cast<int>(out.item_ids.size()));
    if (iit.second) out.item_ids.push_back(fields[1]);
    const int u = uit.first->second;
    const int i = iit.first->second;
    const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) |
                              static_cast<std::uint32_t>(i);
    if (seen.insert(key).second) out.pairs.emplace_back(u, i);
  }
  if (out.pairs.empty()) {
    throw DataError("no interactions left after parsing/filtering: " + path);
  }
  out.n_users = static_cast<int>(out.user_ids.size());
  out.n_items = static_cast<int>(out.item_ids.size());
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

InteractionSet apply_min_interactions(const InteractionSet& data, int min_count) {
  if (min_count <= 1) return data;
  std::vector<int> user_count(data.n_users, 0);
  for (const auto& [u, i] : data.pairs) user_count[u]++;

  std::vector<int> user_map(data.n_users, -1), item_map(data.n_items, -1);
  InteractionSet out;
  for (const auto& [u, i] : data.pairs) {
    if (user_count[u] < min_count) continue;
    if (user_map[u] < 0) {
      user_map[u] = static_cast<int>(out.user_ids.size());
      out.user_ids.push_back(data.user_ids[u]);
    }
    if (item_map[i] < 0) {
      item_map[i] = static_cast<int>(out.item_ids.size());
      out.item_ids.push_back(data.item_ids[i]);
    }
    out.pairs.emplace_back(user_map[u], item_map[i]);
  }
  if (out.pairs.empty()) {
    throw DataError("min_interactions=" + std::to_string(min_count) +
                    " removed every interaction");
  }
  out.n_users = static_cast<int>(out.user_ids.size());
  out.n_items = static_cast<int>(out.item_ids.size());
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

std::vector<double> SplitDataset::train_vector(int u) const {
  std::vector<double> v(static_cast<std::size_t>(n_items), 0.0);
  for (int i : train_items[u]) v[i] = 1.0;
  return v;
}

std::vector<double> SplitDataset::normalized_train_vector(int u) const {
  std::vector<double> v = train_vector(u);
  const double norm = std::sqrt(static_cast<double>(train_items[u].size()));
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

int SplitDataset::users_without_train() const {
  int n = 0;
  for (const auto& t : train_items) {
    if (t.empty()) ++n;
  }
  return n;
}

SplitDataset split(const InteractionSet& data, std::array<double, 3> ratios,
                   std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1, got " + std::to_string(sum));
  }
  if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0) {
    throw ConfigError("split ratios must be positive");
  }
  if (data.pairs.empty()) throw DataError("split: empty interaction set");

  std::vector<std::size_t> perm(data.pairs.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(perm);

  const auto n = static_cast<long long>(perm.size());
  const long long c1 = std::llround(static_cast<double>(n) * ratios[0]);
  const long long c2 = std::llround(static_cast<double>(n) * (ratios[0] + ratios[1]));

  SplitDataset out;
  out.n_users = data.n_users;
  out.n_items = data.n_items;
  out.split_seed = seed;
  out.train_items.resize(data.n_users);
  out.val_items.resize(data.n_users);
  out.test_items.resize(data.n_users);
  for (long long p = 0; p < n; ++p) {
    const auto& [u, i] = data.pairs[perm[p]];
    if (p < c1) {
      out.train_items[u].push_back(i);
    } else if (p < c2) {
      out.val_items[u].push_back(i);
    } else {
      out.test_items[u].push_back(i);
    }
  }
  for (int u = 0; u < data.n_users; ++u) {
    std::sort(out.train_items[u].begin(), out.train_items[u].end());
    std::sort(out.val_items[u].begin(), out.val_items[u].end());
    std::sort(out.test_items[u].begin(), out.test_items[u].end());
  }
  return out;
}

double jaccard(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("jaccard: vectors of length " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ai = a[i] != 0, bi = b[i] != 0;
    inter += (ai && bi);
    uni += (ai || bi);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Jaccard on sorted index sets; counts shared entries with a two-pointer scan.
double jaccard_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t i = 0, j = 0;
  long inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (a[i] > b[j]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const long uni = static_cast<long>(a.size() + b.size()) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

MainstreamProfile mainstream_scores(const SplitDataset& split) {
  const int n = split.n_users;
  if (n < 2) throw DataError("mainstream scores undefined for fewer than 2 users");

  MainstreamProfile prof;
  prof.scores.assign(n, 0.0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t u = lo; u < hi; ++u) {
      double acc = 0.0;
      for (int v = 0; v < n; ++v) {
        if (static_cast<int>(u) == v) continue;
        acc += jaccard_sorted(split.train_items[u], split.train_items[v]);
      }
      prof.scores[u] = acc / static_cast<double>(n - 1);
    }
  }, 4);

  prof.order.resize(n);
  std::iota(prof.order.begin(), prof.order.end(), 0);
  std::stable_sort(prof.order.begin(), prof.order.end(), [&](int a, int b) {
    if (prof.scores[a] != prof.scores[b]) return prof.scores[a] < prof.scores[b];
    return a < b;
  });

  // Equal quintiles; when N % 5 = r, the r lowest groups take one extra user.
  const int base = n / 5;
  const int rem = n % 5;
  prof.subgroup.assign(n, Subgroup::kLow);
  int begin = 0;
  for (int g = 0; g < 5; ++g) {
    const int size = base + (g < rem ? 1 : 0);
    prof.group_ranges[g] = {begin, begin + size};
    for (int p = begin; p < begin + size; ++p) {
      prof.subgroup[prof.order[p]] = static_cast<Subgroup>(g);
    }
    begin += size;
  }
  return prof;
}

std::array<int, 5> MainstreamProfile::group_sizes() const {
  std::array<int, 5> sizes{};
  for (int g = 0; g < 5; ++g) {
    sizes[g] = group_ranges[g].second - group_ranges[g].first;
  }
  return sizes;
}

// --- manifest io ---

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* fold_name(int f) { return f == 0 ? "train" : (f == 1 ? "val" : "test"); }

}  // namespace

void write_manifest(const std::string& dir, const InteractionSet& data,
                    const SplitDataset& split, const MainstreamProfile& profile,
                    const std::string& config_hash) {
  fs::create_directories(dir);

  {
    std::ofstream out(fs::path(dir) / "vocab.tsv");
    out << "kind\traw_id\tindex\n";
    for (int u = 0; u < data.n_users; ++u) out << "user\t" << data.user_ids[u] << '\t' << u << '\n';
    for (int i = 0; i < data.n_items; ++i) out << "item\t" << data.item_ids[i] << '\t' << i << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "folds.tsv");
    out << "user\titem\tfold\n";
    for (int u = 0; u < split.n_users; ++u) {
      for (int f = 0; f < 3; ++f) {
        const auto& items = f == 0 ? split.train_items[u]
                          : f == 1 ? split.val_items[u]
                                   : split.test_items[u];
        for (int i : items) out << u << '\t' << i << '\t' << fold_name(f) << '\n';
      }
    }
  }
  {
    std::ofstream out(fs::path(dir) / "mainstream.tsv");
    out << "user\tscore\tsubgroup\n";
    for (int u = 0; u < split.n_users; ++u) {
      out << u << '\t' << fmt_double(profile.scores[u]) << '\t'
          << kSubgroupNames[static_cast<int>(profile.subgroup[u])] << '\n';
    }
  }
  {
    nlohmann::json meta;
    meta["kind"] = "split_manifest";
    meta["config_hash"] = config_hash;
    meta["seed"] = split.split_seed;
    meta["n_users"] = data.n_users;
    meta["n_items"] = data.n_items;
    meta["n_interactions"] = data.pairs.size();
    std::ofstream out(fs::path(dir) / "meta.json");
    out << meta.dump(2) << '\n';
  }
}

SplitManifest load_manifest(const std::string& dir) {
  SplitManifest m;
  {
    std::ifstream in(fs::path(dir) / "meta.json");
    if (!in) throw DataError("missing manifest meta.json in " + dir);
    nlohmann::json meta = nlohmann::json::parse(in);
    if (meta.value("kind", "") != "split_manifest") {
      throw DataError(dir + "/meta.json is not a split manifest");
    }
    m.config_hash = meta.at("config_hash").get<std::string>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.interactions.n_users = meta.at("n_users").get<int>();
    m.interactions.n_items = meta.at("n_items").get<int>();
  }
  const int n_users = m.interactions.n_users;
  const int n_items = m.interactions.n_items;
  m.interactions.user_ids.resize(n_users);
  m.interactions.item_ids.resize(n_items);
  {
    std::ifstream in(fs::path(dir) / "vocab.tsv");
    if (!in) throw DataError("missing vocab.tsv in " + dir);
    std::string line;
    std::getline(in, line);  // header
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = split_fields(line);
      if (f.size() != 3) throw DataError(dir + "/vocab.tsv:" + std::to_string(lineno) + ": bad row");
      const int idx = static_cast<int>(parse_double(f[2], "vocab.tsv"));
      if (f[0] == "user") {
        m.interactions.user_ids.at(idx) = f[1];
      } else {
        m.interactions.item_ids.at(idx) = f[1];
      }
    }
  }
  m.split.n_users = n_users;
  m.split.n_items = n_items;
  m.split.split_seed = m.seed;
  m.split.train_items.resize(n_users);
  m.split.val_items.resize(n_users);
  m.split.test_items.resize(n_users);
  {
    std::ifstream in(fs::path(dir) / "folds.tsv");
    if (!in) throw DataError("missing folds.tsv in " + dir);
    std::string line;
    std::getline(in, line);
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = split_fields(line);
      if (f.size() != 3) throw DataError(dir + "/folds.tsv:" + std::to_string(lineno) + ": bad row");
      const int u = static_cast<int>(parse_double(f[0], "folds.tsv"));
      const int i = static_cast<int>(parse_double(f[1], "folds.tsv"));
      m.interactions.pairs.emplace_back(u, i);
      if (f[2] == "train") {
        m.split.train_items.at(u).push_back(i);
      } else if (f[2] == "val") {
        m.split.val_items.at(u).push_back(i);
      } else if (f[2] == "test") {
        m.split.test_items.at(u).push_back(i);
      } else {
        throw DataError(dir + "/folds.tsv:" + std::to_string(lineno) + ": unknown fold " + f[2]);
      }
    }
  }
  std::sort(m.interactions.pairs.begin(), m.interactions.pairs.end());
  for (int u = 0; u < n_users; ++u) {
    std::sort(m.split.train_items[u].begin(), m.split.train_items[u].end());
    std::sort(m.split.val_items[u].begin(), m.split.val_items[u].end());
    std::sort(m.split.test_items[u].begin(), m.split.test_items[u].end());
  }
  {
    std::ifstream in(fs::path(dir) / "mainstream.tsv");
    if (!in) throw DataError("missing mainstream.tsv in " + dir);
    m.profile.scores.assign(n_users, 0.0);
    m.profile.subgroup.assign(n_users, Subgroup::kLow);
    std::string line;
    std::getline(in, line);
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = split_fields(line);
      if (f.size() != 3) {
        throw DataError(dir + "/mainstream.tsv:" + std::to_string(lineno) + ": bad row");
      }
      const int u = static_cast<int>(parse_double(f[0], "mainstream.tsv"));
      m.profile.scores.at(u) = parse_double(f[1], "mainstream.tsv");
      bool known = false;
      for (int g = 0; g < 5; ++g) {
        if (f[2] == kSubgroupNames[g]) {
          m.profile.subgroup.at(u) = static_cast<Subgroup>(g);
          known = true;
        }
      }
      if (!known) {
        throw DataError(dir + "/mainstream.tsv:" + std::to_string(lineno) +
                        ": unknown subgroup " + f[2]);
      }
    }
  }
  // Re-derive the ordering and ranges from the stored scores/labels.
  m.profile.order.resize(n_users);
  std::iota(m.profile.order.begin(), m.profile.order.end(), 0);
  std::stable_sort(m.profile.order.begin(), m.profile.order.end(), [&](int a, int b) {
    if (m.profile.scores[a] != m.profile.scores[b]) {
      return m.profile.scores[a] < m.profile.scores[b];
    }
    return a < b;
  });
  const int base = n_users / 5;
  const int rem = n_users % 5;
  int begin = 0;
  for (int g = 0; g < 5; ++g) {
    const int size = base + (g < rem ? 1 : 0);
    m.profile.group_ranges[g] = {begin, begin + size};
    begin += size;
  }
  return m;
}

}  // namespace tall
