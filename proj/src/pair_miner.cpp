#include "xlkb/pair_miner.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "xlkb/common.hpp"

namespace xlkb {

std::string to_string(Polarity p) {
  return p == Polarity::positive ? "positive" : "negative";
}

std::string to_string(PairSource s) {
  switch (s) {
    case PairSource::same_label:
      return "same_label";
    case PairSource::weighted_hard:
      return "weighted_hard";
    case PairSource::random:
      return "random";
    case PairSource::synthetic_pos:
      return "synthetic_pos";
    case PairSource::synthetic_neg:
      return "synthetic_neg";
  }
  throw DataError("unknown pair source");
}

Polarity parse_polarity(const std::string& s) {
  if (s == "positive") return Polarity::positive;
  if (s == "negative") return Polarity::negative;
  throw DataError("unknown polarity \"" + s + "\"");
}

PairSource parse_pair_source(const std::string& s) {
  if (s == "same_label") return PairSource::same_label;
  if (s == "weighted_hard") return PairSource::weighted_hard;
  if (s == "random") return PairSource::random;
  if (s == "synthetic_pos") return PairSource::synthetic_pos;
  if (s == "synthetic_neg") return PairSource::synthetic_neg;
  throw DataError("unknown pair source \"" + s + "\"");
}

std::string to_string(MiningStrategy s) {
  switch (s) {
    case MiningStrategy::hybrid:
      return "hybrid";
    case MiningStrategy::random_only:
      return "random_only";
    case MiningStrategy::hard_only:
      return "hard_only";
    case MiningStrategy::hardest_only:
      return "hardest_only";
  }
  throw DataError("unknown mining strategy");
}

MiningStrategy parse_mining_strategy(const std::string& s) {
  if (s == "hybrid") return MiningStrategy::hybrid;
  if (s == "random_only") return MiningStrategy::random_only;
  if (s == "hard_only") return MiningStrategy::hard_only;
  if (s == "hardest_only") return MiningStrategy::hardest_only;
  throw DataError("unknown mining strategy \"" + s + "\"");
}

int MiningConfig::hard_k() const {
  switch (strategy) {
    case MiningStrategy::hybrid:
      return negatives_per_anchor - 1;
    case MiningStrategy::random_only:
      return 0;
    case MiningStrategy::hard_only:
    case MiningStrategy::hardest_only:
      return negatives_per_anchor;
  }
  throw DataError("unknown mining strategy");
}

void MiningConfig::validate() const {
  if (negatives_per_anchor < 1) {
    throw DataError("negatives_per_anchor must be >= 1");
  }
  if (hardest_pool_m < 1) {
    throw DataError("hardest_pool_m must be >= 1");
  }
  if (strategy == MiningStrategy::hybrid && negatives_per_anchor < 2) {
    throw DataError("hybrid strategy needs negatives_per_anchor >= 2 (k hard + 1 random)");
  }
  if (k >= 0 && k != hard_k()) {
    throw DataError("k=" + std::to_string(k) + " conflicts with strategy " + to_string(strategy) +
                    " and negatives_per_anchor=" + std::to_string(negatives_per_anchor) +
                    " (expected k=" + std::to_string(hard_k()) + ")");
  }
}

nlohmann::ordered_json MiningReport::to_json() const {
  nlohmann::ordered_json j;
  j["anchors_total"] = anchors_total;
  j["anchors_skipped_no_positive"] = anchors_skipped_no_positive;
  j["groups_emitted"] = groups_emitted;
  j["groups_truncated"] = groups_truncated;
  j["pairs_total"] = pairs_total;
  j["per_source"] = per_source;
  return j;
}

IndexView::IndexView(std::span<const LabeledQuery> entries) {
  entries_.reserve(entries.size());
  for (const auto& e : entries) {
    entries_.push_back(&e);
    by_label_[e.label].push_back(&e);
  }
}

std::span<const LabeledQuery* const> IndexView::with_label(const std::string& label) const {
  auto it = by_label_.find(label);
  if (it == by_label_.end()) return {};
  return it->second;
}

std::vector<const LabeledQuery*> IndexView::negatives_pool(const std::string& label) const {
  std::vector<const LabeledQuery*> pool;
  pool.reserve(entries_.size());
  for (const auto* e : entries_) {
    if (e->label != label) pool.push_back(e);
  }
  return pool;
}

std::optional<ContrastivePair> mine_positive(const LabeledQuery& anchor,
                                             const std::string& anchor_translated,
                                             const IndexView& index, Rng& rng) {
  if (anchor_translated.empty()) {
    throw DataError("anchor " + anchor.id + " has an empty translation");
  }
  auto candidates = index.with_label(anchor.label);
  if (candidates.empty()) return std::nullopt;
  const LabeledQuery* pick = candidates[rng.next_index(candidates.size())];
  ContrastivePair pair;
  pair.group_id = "g:" + anchor.id;
  pair.anchor_id = anchor.id;
  pair.anchor_text = anchor_translated;
  pair.candidate_id = pick->id;
  pair.candidate_text = pick->text;
  pair.polarity = Polarity::positive;
  pair.source = PairSource::same_label;
  return pair;
}

std::vector<const LabeledQuery*> sample_hard_negatives(const LabeledQuery& anchor,
                                                       const IndexView& index,
                                                       const LabelSimilarityMatrix& sim, int k,
                                                       bool hardest, int hardest_pool_m, Rng& rng) {
  if (k < 0) throw DataError("hard-negative count must be >= 0");
  if (k == 0) return {};

  std::vector<const LabeledQuery*> pool = index.negatives_pool(anchor.label);
  if (hardest) {
    auto top = top_similar_labels(sim, anchor.label, static_cast<std::size_t>(hardest_pool_m));
    std::set<std::string> keep(top.begin(), top.end());
    std::erase_if(pool, [&](const LabeledQuery* q) { return !keep.contains(q->label); });
  }
  if (pool.empty()) return {};

  std::vector<double> weights;
  weights.reserve(pool.size());
  for (const auto* q : pool) {
    weights.push_back(sim.at(anchor.label, q->label));
  }

  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), pool.size());
  std::vector<std::size_t> picked = weighted_sample_without_replacement(weights, want, rng);

  std::vector<const LabeledQuery*> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) out.push_back(pool[i]);
  return out;
}

const LabeledQuery* sample_random_negative(const LabeledQuery& anchor, const IndexView& index,
                                           const std::vector<std::string>& exclude_ids, Rng& rng) {
  std::unordered_set<std::string> excluded(exclude_ids.begin(), exclude_ids.end());
  std::vector<const LabeledQuery*> pool = index.negatives_pool(anchor.label);
  std::erase_if(pool, [&](const LabeledQuery* q) { return excluded.contains(q->id); });
  if (pool.empty()) return nullptr;
  return pool[rng.next_index(pool.size())];
}

MiningResult mine_dataset(const KnowledgeBaseSplit& split,
                          const std::map<std::string, std::string>& translations,
                          const LabelSimilarityMatrix& sim, const MiningConfig& config) {
  config.validate();

  IndexView index(split.index_set);
  Rng base(config.seed);

  // Anchors are visited in ascending id order; each gets its own substream,
  // so one anchor's draws never depend on which other anchors are present.
  std::vector<const LabeledQuery*> anchors;
  anchors.reserve(split.training_set.size());
  for (const auto& q : split.training_set) anchors.push_back(&q);
  std::sort(anchors.begin(), anchors.end(),
            [](const LabeledQuery* a, const LabeledQuery* b) { return a->id < b->id; });

  const int hard_k = config.hard_k();
  const bool hardest = config.strategy == MiningStrategy::hardest_only;
  const bool wants_random =
      config.strategy == MiningStrategy::hybrid || config.strategy == MiningStrategy::random_only;
  const int random_k =
      config.strategy == MiningStrategy::random_only ? config.negatives_per_anchor : 1;

  MiningResult result;
  result.report.anchors_total = anchors.size();

  for (const auto* anchor : anchors) {
    Rng rng = base.substream(anchor->id);

    // Positives are mined against the index set; anchors whose label has no
    // index-set representative are skipped whole so every group keeps its
    // positive.
    auto candidates = index.with_label(anchor->label);
    if (candidates.empty()) {
      result.report.anchors_skipped_no_positive += 1;
      continue;
    }

    auto trans_it = translations.find(anchor->id);
    if (trans_it == translations.end()) {
      throw DataError("no translation for anchor \"" + anchor->id + "\"");
    }

    auto positive = mine_positive(*anchor, trans_it->second, index, rng);
    if (!positive) {
      result.report.anchors_skipped_no_positive += 1;
      continue;
    }

    std::vector<ContrastivePair> group;
    group.push_back(*positive);
    result.report.per_source[to_string(PairSource::same_label)] += 1;

    std::vector<std::string> taken_ids;
    auto hard = sample_hard_negatives(*anchor, index, sim, hard_k, hardest,
                                      config.hardest_pool_m, rng);
    for (const auto* q : hard) {
      ContrastivePair pair = *positive;
      pair.candidate_id = q->id;
      pair.candidate_text = q->text;
      pair.polarity = Polarity::negative;
      pair.source = PairSource::weighted_hard;
      group.push_back(pair);
      taken_ids.push_back(q->id);
      result.report.per_source[to_string(PairSource::weighted_hard)] += 1;
    }

    if (wants_random) {
      for (int i = 0; i < random_k; ++i) {
        const LabeledQuery* q = sample_random_negative(*anchor, index, taken_ids, rng);
        if (q == nullptr) break;
        ContrastivePair pair = *positive;
        pair.candidate_id = q->id;
        pair.candidate_text = q->text;
        pair.polarity = Polarity::negative;
        pair.source = PairSource::random;
        group.push_back(pair);
        taken_ids.push_back(q->id);
        result.report.per_source[to_string(PairSource::random)] += 1;
      }
    }

    if (group.size() < 1 + static_cast<std::size_t>(config.negatives_per_anchor)) {
      result.report.groups_truncated += 1;
    }
    result.report.groups_emitted += 1;
    result.report.pairs_total += group.size();
    for (auto& p : group) result.pairs.push_back(std::move(p));
  }

  return result;
}

void save_pairs(std::span<const ContrastivePair> pairs, const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["group_id"] = p.group_id;
    j["anchor_id"] = p.anchor_id;
    j["anchor_text"] = p.anchor_text;
    j["candidate_id"] = p.candidate_id;
    j["candidate_text"] = p.candidate_text;
    j["polarity"] = to_string(p.polarity);
    j["source"] = to_string(p.source);
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<ContrastivePair> load_pairs(const std::filesystem::path& path) {
  std::vector<ContrastivePair> pairs;
  for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line_no) {
    ContrastivePair p;
    try {
      p.group_id = j.at("group_id").get<std::string>();
      p.anchor_id = j.at("anchor_id").get<std::string>();
      p.anchor_text = j.at("anchor_text").get<std::string>();
      p.candidate_id = j.at("candidate_id").get<std::string>();
      p.candidate_text = j.at("candidate_text").get<std::string>();
      p.polarity = parse_polarity(j.at("polarity").get<std::string>());
      p.source = parse_pair_source(j.at("source").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad pair record: " +
                      e.what());
    }
    pairs.push_back(std::move(p));
  });
  return pairs;
}

}  // namespace xlkb
