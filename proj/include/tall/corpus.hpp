#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tall {

// Deduplicated implicit feedback with dense 0-based ids.
struct InteractionSet {
  int n_users = 0;
  int n_items = 0;
  std::vector<std::pair<int, int>> pairs;  // sorted by (user, item)
  std::vector<std::string> user_ids;       // index -> raw token
  std::vector<std::string> item_ids;
};

// Parses `user<TAB>item[<TAB>rating[<TAB>timestamp]]` lines (comma also
// accepted); `#` lines are skipped. When the file has a rating column and a
// threshold is given, only rows with rating >= threshold count as feedback.
// Raw ids are mapped to dense indices in first-seen order.
InteractionSet load_interactions(const std::string& path,
                                 std::optional<double> rating_threshold = {});

// Drops users with fewer than min_count interactions, then re-indexes both
// vocabularies so every remaining index still occurs. One pass, not a k-core.
InteractionSet apply_min_interactions(const InteractionSet& data, int min_count);

struct SplitDataset {
  int n_users = 0;
  int n_items = 0;
  std::vector<std::vector<int>> train_items;  // sorted per user
  std::vector<std::vector<int>> val_items;
  std::vector<std::vector<int>> test_items;
  std::uint64_t split_seed = 0;

  // Binary training vector O_u of length n_items.
  std::vector<double> train_vector(int u) const;
  // Same vector L2-normalized, the expert input composition.
  std::vector<double> normalized_train_vector(int u) const;
  int users_without_train() const;
};

// Seeded uniform split over a random permutation of all pairs, cut at
// proportional boundaries (cumulative rounding, so fold sizes are within
// one interaction of exact proportions).
SplitDataset split(const InteractionSet& data, std::array<double, 3> ratios,
                   std::uint64_t seed);

// |a & b| / |a | b| over {0,1} vectors; 0 when both are empty.
double jaccard(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

enum class Subgroup : int { kLow = 0, kMedLow = 1, kMedium = 2, kMedHigh = 3, kHigh = 4 };

extern const std::array<const char*, 5> kSubgroupNames;  // low .. high

struct MainstreamProfile {
  std::vector<double> scores;          // MS_u in [0, 1]
  std::vector<Subgroup> subgroup;      // per user
  std::vector<int> order;              // users sorted by (score, index) ascending
  std::array<std::pair<int, int>, 5> group_ranges;  // [begin, end) into `order`

  std::array<int, 5> group_sizes() const;
};

// Mean Jaccard similarity of each user's training vector against all other
// users' training vectors, then an equal-size five-way cut by score order.
MainstreamProfile mainstream_scores(const SplitDataset& split);

// --- split manifest directory (vocab.tsv / folds.tsv / mainstream.tsv) ---

struct SplitManifest {
  InteractionSet interactions;
  SplitDataset split;
  MainstreamProfile profile;
  std::string config_hash;
  std::uint64_t seed = 0;
};

void write_manifest(const std::string& dir, const InteractionSet& data,
                    const SplitDataset& split, const MainstreamProfile& profile,
                    const std::string& config_hash);
SplitManifest load_manifest(const std::string& dir);

}  // namespace tall
