#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xlkb/kb.hpp"
#include "xlkb/label_sim.hpp"
#include "xlkb/rng.hpp"

namespace xlkb {

enum class Polarity { positive, negative };

enum class PairSource { same_label, weighted_hard, random, synthetic_pos, synthetic_neg };

std::string to_string(Polarity p);
std::string to_string(PairSource s);
Polarity parse_polarity(const std::string& s);
PairSource parse_pair_source(const std::string& s);

// One anchor/candidate pair. All pairs sharing a group_id form one
// contrastive group: a single positive plus its negatives.
struct ContrastivePair {
  std::string group_id;
  std::string anchor_id;
  std::string anchor_text;
  std::string candidate_id;
  std::string candidate_text;
  Polarity polarity = Polarity::positive;
  PairSource source = PairSource::same_label;
};

enum class MiningStrategy { hybrid, random_only, hard_only, hardest_only };

std::string to_string(MiningStrategy s);
MiningStrategy parse_mining_strategy(const std::string& s);

struct MiningConfig {
  MiningStrategy strategy = MiningStrategy::hybrid;
  // Hard-negative count per anchor; -1 derives it from the strategy.
  // The strategy fixes the value: hybrid uses negatives_per_anchor - 1
  // (plus 1 random draw), random_only uses 0, hard_only and hardest_only
  // use negatives_per_anchor. An explicit k that disagrees is an error.
  int k = -1;
  int negatives_per_anchor = 3;
  int hardest_pool_m = 3;
  std::uint64_t seed = 0;

  int hard_k() const;
  void validate() const;
};

struct MiningReport {
  std::size_t anchors_total = 0;
  std::size_t anchors_skipped_no_positive = 0;
  std::size_t groups_emitted = 0;
  std::size_t groups_truncated = 0;  // groups with fewer negatives than requested
  std::size_t pairs_total = 0;
  std::map<std::string, std::size_t> per_source;

  nlohmann::ordered_json to_json() const;
};

// Read-only view of the index set (N1) with per-label buckets.
class IndexView {
 public:
  explicit IndexView(std::span<const LabeledQuery> entries);

  std::span<const LabeledQuery* const> with_label(const std::string& label) const;
  // Entries whose label differs from `label`, in index order.
  std::vector<const LabeledQuery*> negatives_pool(const std::string& label) const;
  std::span<const LabeledQuery* const> all() const { return entries_; }

 private:
  std::vector<const LabeledQuery*> entries_;
  std::map<std::string, std::vector<const LabeledQuery*>> by_label_;
};

// Uniformly picks an index-set query sharing the anchor's label; nullopt if
// the label is absent from the index set (a normal, counted outcome).
std::optional<ContrastivePair> mine_positive(const LabeledQuery& anchor,
                                             const std::string& anchor_translated,
                                             const IndexView& index, Rng& rng);

// Draws up to k distinct different-label queries, weighted by the label
// similarity to the anchor's label. With hardest=true the pool is first
// restricted to the hardest_pool_m most similar labels.
std::vector<const LabeledQuery*> sample_hard_negatives(const LabeledQuery& anchor,
                                                       const IndexView& index,
                                                       const LabelSimilarityMatrix& sim, int k,
                                                       bool hardest, int hardest_pool_m, Rng& rng);

// Uniform draw over different-label queries not in `exclude`; nullptr when
// the pool is exhausted (the group is truncated and reported).
const LabeledQuery* sample_random_negative(const LabeledQuery& anchor, const IndexView& index,
                                           const std::vector<std::string>& exclude_ids, Rng& rng);

struct MiningResult {
  std::vector<ContrastivePair> pairs;
  MiningReport report;
};

// Runs positive + negative mining over every training-set anchor, in
// ascending anchor id order. Draws come from per-anchor substreams keyed by
// anchor id, so adding or removing one anchor does not perturb the others.
MiningResult mine_dataset(const KnowledgeBaseSplit& split,
                          const std::map<std::string, std::string>& translations,
                          const LabelSimilarityMatrix& sim, const MiningConfig& config);

void save_pairs(std::span<const ContrastivePair> pairs, const std::filesystem::path& path);
std::vector<ContrastivePair> load_pairs(const std::filesystem::path& path);

}  // namespace xlkb
