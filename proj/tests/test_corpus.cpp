#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "tall/corpus.hpp"
#include "tall/errors.hpp"

using namespace tall;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "tallrec-corpus-tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
  fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

InteractionSet make_set(std::vector<std::pair<int, int>> pairs) {
  InteractionSet out;
  for (auto [u, i] : pairs) {
    out.n_users = std::max(out.n_users, u + 1);
    out.n_items = std::max(out.n_items, i + 1);
  }
  std::sort(pairs.begin(), pairs.end());
  out.pairs = std::move(pairs);
  for (int u = 0; u < out.n_users; ++u) out.user_ids.push_back(std::to_string(u));
  for (int i = 0; i < out.n_items; ++i) out.item_ids.push_back(std::to_string(i));
  return out;
}

std::vector<std::uint8_t> train_mask(const SplitDataset& sd, int u) {
  std::vector<std::uint8_t> v(sd.n_items, 0);
  for (int i : sd.train_items[u]) v[i] = 1;
  return v;
}

}  // namespace

TEST_SUITE("corpus.load") {
  TEST_CASE("single line file") {
    auto p = write_file("single.tsv", "a\tx\n");
    InteractionSet data = load_interactions(p.string());
    CHECK(data.n_users == 1);
    CHECK(data.n_items == 1);
    REQUIRE(data.pairs.size() == 1);
    CHECK(data.pairs[0] == std::pair<int, int>{0, 0});
    CHECK(data.user_ids[0] == "a");
    CHECK(data.item_ids[0] == "x");
  }

  TEST_CASE("exact duplicates collapse") {
    auto p = write_file("dups.tsv", "a\tx\nb\ty\na\tx\n");
    InteractionSet data = load_interactions(p.string());
    CHECK(data.pairs.size() == 2);
    CHECK(data.n_users == 2);
    CHECK(data.n_items == 2);
  }

  TEST_CASE("ids map in first-seen order; comma separation accepted") {
    auto p = write_file("order.csv", "beta,i9\nalpha,i1\nbeta,i1\n");
    InteractionSet data = load_interactions(p.string());
    CHECK(data.user_ids == std::vector<std::string>{"beta", "alpha"});
    CHECK(data.item_ids == std::vector<std::string>{"i9", "i1"});
  }

  TEST_CASE("comment and blank lines are skipped") {
    auto p = write_file("comments.tsv", "# header\n\na\tx\n# trailing\nb\ty\n");
    CHECK(load_interactions(p.string()).pairs.size() == 2);
  }

  TEST_CASE("rating threshold keeps only rows at or above it") {
    auto p = write_file("rated.tsv", "a\tx\t5\nb\ty\t2\nc\tz\t4\n");
    InteractionSet all = load_interactions(p.string());
    CHECK(all.pairs.size() == 3);
    InteractionSet filtered = load_interactions(p.string(), 4.0);
    CHECK(filtered.pairs.size() == 2);
    CHECK(filtered.user_ids == std::vector<std::string>{"a", "c"});
  }

  TEST_CASE("malformed line names the line number") {
    auto p = write_file("broken.tsv", "a\tx\njust-one-field\n");
    CHECK_THROWS_WITH_AS(load_interactions(p.string()), doctest::Contains(":2"),
                         DataError);
  }

  TEST_CASE("bad rating names the line number") {
    auto p = write_file("badnum.tsv", "a\tx\tmany\n");
    CHECK_THROWS_WITH_AS(load_interactions(p.string(), 3.0), doctest::Contains(":1"),
                         DataError);
  }

  TEST_CASE("missing file names the path") {
    CHECK_THROWS_WITH_AS(load_interactions("/nonexistent/file.tsv"),
                         doctest::Contains("/nonexistent/file.tsv"), DataError);
  }

  TEST_CASE("empty result after filtering is an error") {
    auto p = write_file("allbelow.tsv", "a\tx\t1\nb\ty\t2\n");
    CHECK_THROWS_AS(load_interactions(p.string(), 3.0), DataError);
  }

  TEST_CASE("min-interactions filter drops light users and reindexes") {
    InteractionSet data = make_set({{0, 0}, {0, 1}, {0, 2}, {1, 3}, {2, 2}, {2, 4}});
    InteractionSet kept = apply_min_interactions(data, 2);
    CHECK(kept.n_users == 2);  // user 1 dropped
    CHECK(kept.user_ids == std::vector<std::string>{"0", "2"});
    CHECK(kept.n_items == 4);  // item "3" gone, rest reindexed densely
    for (const auto& [u, i] : kept.pairs) {
      CHECK(u < kept.n_users);
      CHECK(i < kept.n_items);
    }
    CHECK(apply_min_interactions(data, 1).pairs.size() == data.pairs.size());
    CHECK_THROWS_AS(apply_min_interactions(data, 10), DataError);
  }
}

TEST_SUITE("corpus.split") {
  TEST_CASE("ten interactions cut to (7,1,2)") {
    InteractionSet data = make_set(
        {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6}, {0, 7}, {0, 8}, {0, 9}});
    SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 1);
    CHECK(sd.train_items[0].size() == 7);
    CHECK(sd.val_items[0].size() == 1);
    CHECK(sd.test_items[0].size() == 2);
  }

  TEST_CASE("same seed reproduces identical folds") {
    InteractionSet data = synth::random_corpus(5, 12, 20, 4, 9);
    SplitDataset a = split(data, {0.7, 0.1, 0.2}, 99);
    SplitDataset b = split(data, {0.7, 0.1, 0.2}, 99);
    CHECK(a.train_items == b.train_items);
    CHECK(a.val_items == b.val_items);
    CHECK(a.test_items == b.test_items);
    SplitDataset c = split(data, {0.7, 0.1, 0.2}, 100);
    CHECK(a.train_items != c.train_items);
  }

  TEST_CASE("folds partition every user's interactions") {
    InteractionSet data = synth::random_corpus(6, 15, 25, 3, 10);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      SplitDataset sd = split(data, {0.7, 0.1, 0.2}, seed);
      std::vector<std::set<int>> per_user(data.n_users);
      for (const auto& [u, i] : data.pairs) per_user[u].insert(i);
      for (int u = 0; u < data.n_users; ++u) {
        std::set<int> merged;
        std::size_t total = 0;
        for (const auto* fold : {&sd.train_items[u], &sd.val_items[u], &sd.test_items[u]}) {
          merged.insert(fold->begin(), fold->end());
          total += fold->size();
        }
        REQUIRE(merged == per_user[u]);   // union restores the source pairs
        REQUIRE(merged.size() == total);  // and the folds are disjoint
      }
    }
  }

  TEST_CASE("Monte-Carlo fold fractions over 50 seeds") {
    InteractionSet data = synth::random_corpus(7, 50, 40, 15, 25);
    REQUIRE(data.pairs.size() > 900);
    double train_sum = 0.0, val_sum = 0.0, test_sum = 0.0;
    double per_user_train = 0.0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
      SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 1000 + s);
      std::size_t tr = 0, va = 0, te = 0;
      double user_frac = 0.0;
      for (int u = 0; u < data.n_users; ++u) {
        std::size_t n = sd.train_items[u].size() + sd.val_items[u].size() +
                        sd.test_items[u].size();
        tr += sd.train_items[u].size();
        va += sd.val_items[u].size();
        te += sd.test_items[u].size();
        user_frac += static_cast<double>(sd.train_items[u].size()) / n;
      }
      const double total = static_cast<double>(tr + va + te);
      train_sum += tr / total;
      val_sum += va / total;
      test_sum += te / total;
      per_user_train += user_frac / data.n_users;
    }
    CHECK(std::abs(train_sum / seeds - 0.7) < 0.02);
    CHECK(std::abs(val_sum / seeds - 0.1) < 0.02);
    CHECK(std::abs(test_sum / seeds - 0.2) < 0.02);
    // per-user train share averages to the global ratio as well
    CHECK(std::abs(per_user_train / seeds - 0.7) < 0.02);
  }

  TEST_CASE("bad ratios are rejected") {
    InteractionSet data = make_set({{0, 0}, {1, 1}});
    CHECK_THROWS_AS(split(data, {0.7, 0.2, 0.2}, 1), ConfigError);
    CHECK_THROWS_AS(split(data, {0.9, 0.2, -0.1}, 1), ConfigError);
    CHECK_THROWS_AS(split(InteractionSet{}, {0.7, 0.1, 0.2}, 1), DataError);
  }

  TEST_CASE("users can end up with an empty train fold and are flagged") {
    // user 1 has a single interaction; some seed sends it to val or test
    InteractionSet data = make_set(
        {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6}, {0, 7}, {0, 8}, {1, 9}});
    bool found = false;
    for (std::uint64_t seed = 0; seed < 64 && !found; ++seed) {
      SplitDataset sd = split(data, {0.7, 0.1, 0.2}, seed);
      if (sd.train_items[1].empty()) {
        found = true;
        CHECK(sd.users_without_train() == 1);
        CHECK(sd.train_vector(1) == std::vector<double>(sd.n_items, 0.0));
        CHECK(sd.normalized_train_vector(1) == std::vector<double>(sd.n_items, 0.0));
      }
    }
    CHECK(found);
  }

  TEST_CASE("normalized train vector has unit L2 norm") {
    InteractionSet data = synth::random_corpus(8, 10, 16, 4, 8);
    SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 3);
    for (int u = 0; u < sd.n_users; ++u) {
      if (sd.train_items[u].empty()) continue;
      double norm = 0.0;
      for (double v : sd.normalized_train_vector(u)) norm += v * v;
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_SUITE("corpus.jaccard") {
  TEST_CASE("identical nonzero vectors") {
    std::vector<std::uint8_t> a{1, 0, 1, 1};
    CHECK(jaccard(a, a) == 1.0);
  }

  TEST_CASE("disjoint supports") {
    CHECK(jaccard({1, 1, 0, 0}, {0, 0, 1, 1}) == 0.0);
  }

  TEST_CASE("hand case 1/4") {
    std::vector<std::uint8_t> a{0, 1, 1, 0, 0};
    std::vector<std::uint8_t> b{0, 0, 1, 1, 1};
    CHECK(jaccard(a, b) == 0.25);
    CHECK(jaccard(b, a) == jaccard(a, b));
  }

  TEST_CASE("both empty gives zero") {
    CHECK(jaccard({0, 0, 0}, {0, 0, 0}) == 0.0);
  }

  TEST_CASE("length mismatch throws") {
    CHECK_THROWS_AS(jaccard({1, 0}, {1, 0, 1}), DimensionError);
  }

  TEST_CASE("random vectors match the set oracle") {
    Rng rng(17);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<std::uint8_t> a(20), b(20);
      for (int i = 0; i < 20; ++i) {
        a[i] = rng.uniform() < 0.4;
        b[i] = rng.uniform() < 0.4;
      }
      CHECK(jaccard(a, b) == oracle::jaccard(a, b));
    }
  }
}

TEST_SUITE("corpus.mainstream") {
  TEST_CASE("identical users all score 1 with stable-order grouping") {
    InteractionSet data = make_set({{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4},
                                    {1, 0}, {1, 1}, {1, 2}, {1, 3}, {1, 4},
                                    {2, 0}, {2, 1}, {2, 2}, {2, 3}, {2, 4}});
    // all interactions to train so the vectors stay identical
    SplitDataset sd = split(data, {0.999999999, 0.0000000005, 0.0000000005}, 1);
    REQUIRE(sd.train_items[0].size() == 5);
    MainstreamProfile prof = mainstream_scores(sd);
    for (double s : prof.scores) CHECK(s == 1.0);
    CHECK(prof.order == std::vector<int>{0, 1, 2});
    CHECK(prof.group_sizes() == std::array<int, 5>{1, 1, 1, 0, 0});
    CHECK(prof.subgroup[0] == Subgroup::kLow);
    CHECK(prof.subgroup[1] == Subgroup::kMedLow);
    CHECK(prof.subgroup[2] == Subgroup::kMedium);
  }

  TEST_CASE("two users with disjoint vectors both score 0") {
    InteractionSet data = make_set({{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4},
                                    {1, 5}, {1, 6}, {1, 7}, {1, 8}, {1, 9}});
    SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 2);
    MainstreamProfile prof = mainstream_scores(sd);
    CHECK(prof.scores[0] == 0.0);
    CHECK(prof.scores[1] == 0.0);
  }

  TEST_CASE("20 random users match the brute-force oracle") {
    InteractionSet data = synth::random_corpus(9, 20, 30, 5, 15);
    SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 4);
    MainstreamProfile prof = mainstream_scores(sd);
    std::vector<std::vector<std::uint8_t>> vecs;
    for (int u = 0; u < 20; ++u) vecs.push_back(train_mask(sd, u));
    std::vector<double> ref = oracle::mainstream(vecs);
    for (int u = 0; u < 20; ++u) {
      CHECK(prof.scores[u] == doctest::Approx(ref[u]).epsilon(1e-12));
      CHECK(prof.scores[u] >= 0.0);
      CHECK(prof.scores[u] <= 1.0);
    }
  }

  TEST_CASE("consistent item permutation leaves scores unchanged") {
    InteractionSet data = synth::random_corpus(10, 12, 18, 4, 9);
    SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 5);
    MainstreamProfile before = mainstream_scores(sd);

    // permute item indices by reversal inside the split dataset
    SplitDataset permuted = sd;
    auto remap = [&](std::vector<std::vector<int>>& folds) {
      for (auto& items : folds) {
        for (int& i : items) i = sd.n_items - 1 - i;
        std::sort(items.begin(), items.end());
      }
    };
    remap(permuted.train_items);
    remap(permuted.val_items);
    remap(permuted.test_items);
    MainstreamProfile after = mainstream_scores(permuted);
    for (int u = 0; u < sd.n_users; ++u) {
      CHECK(before.scores[u] == after.scores[u]);
      CHECK(before.subgroup[u] == after.subgroup[u]);
    }
  }

  TEST_CASE("labels follow the score order; N=7 sizes are (2,2,1,1,1)") {
    InteractionSet data = synth::random_corpus(11, 7, 14, 4, 8);
    SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 6);
    MainstreamProfile prof = mainstream_scores(sd);
    CHECK(prof.group_sizes() == std::array<int, 5>{2, 2, 1, 1, 1});
    // order is sorted non-descending by (score, index)
    for (std::size_t r = 1; r < prof.order.size(); ++r) {
      const int a = prof.order[r - 1], b = prof.order[r];
      CHECK((prof.scores[a] < prof.scores[b] ||
             (prof.scores[a] == prof.scores[b] && a < b)));
    }
    // walking the order low -> high never decreases the label
    int prev = 0;
    for (int u : prof.order) {
      const int g = static_cast<int>(prof.subgroup[u]);
      CHECK(g >= prev);
      prev = g;
    }
  }

  TEST_CASE("fewer than two users is an error") {
    InteractionSet data = make_set({{0, 0}, {0, 1}});
    SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 1);
    CHECK_THROWS_AS(mainstream_scores(sd), DataError);
  }
}

TEST_SUITE("corpus.manifest") {
  TEST_CASE("write and load round-trip exactly") {
    InteractionSet data = synth::random_corpus(12, 15, 24, 5, 10);
    SplitDataset sd = split(data, {0.7, 0.1, 0.2}, 77);
    MainstreamProfile prof = mainstream_scores(sd);
    fs::path dir = scratch_dir() / "manifest-roundtrip";
    fs::remove_all(dir);
    write_manifest(dir.string(), data, sd, prof, "00ff00ff00ff00ff");

    SplitManifest m = load_manifest(dir.string());
    CHECK(m.config_hash == "00ff00ff00ff00ff");
    CHECK(m.seed == 77);
    CHECK(m.interactions.n_users == data.n_users);
    CHECK(m.interactions.n_items == data.n_items);
    CHECK(m.interactions.pairs == data.pairs);
    CHECK(m.interactions.user_ids == data.user_ids);
    CHECK(m.interactions.item_ids == data.item_ids);
    CHECK(m.split.train_items == sd.train_items);
    CHECK(m.split.val_items == sd.val_items);
    CHECK(m.split.test_items == sd.test_items);
    CHECK(m.split.split_seed == sd.split_seed);
    for (int u = 0; u < data.n_users; ++u) {
      CHECK(m.profile.scores[u] == prof.scores[u]);  // bitwise via %.17g
      CHECK(m.profile.subgroup[u] == prof.subgroup[u]);
    }
    CHECK(m.profile.order == prof.order);
  }

  TEST_CASE("missing manifest directory raises a data error") {
    CHECK_THROWS_AS(load_manifest((scratch_dir() / "no-such-manifest").string()),
                    DataError);
  }
}
