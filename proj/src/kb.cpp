#include "xlkb/kb.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "xlkb/common.hpp"
#include "xlkb/rng.hpp"

namespace xlkb {

namespace {

std::string require_string_field(const nlohmann::json& record, const char* key,
                                 const std::filesystem::path& path, std::size_t line_no) {
  if (!record.contains(key) || !record.at(key).is_string()) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing string field \"" +
                    key + "\"");
  }
  std::string value = record.at(key).get<std::string>();
  if (value.empty()) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty field \"" + key +
                    "\"");
  }
  return value;
}

std::string jsonl_line(const nlohmann::ordered_json& record) { return record.dump() + "\n"; }

}  // namespace

KnowledgeBase load_kb(const std::filesystem::path& path, std::string language) {
  KnowledgeBase kb;
  kb.language = std::move(language);
  std::unordered_set<std::string> seen_ids;
  for_each_jsonl(path, [&](const nlohmann::json& record, std::size_t line_no) {
    LabeledQuery entry;
    entry.id = require_string_field(record, "id", path, line_no);
    entry.text = require_string_field(record, "text", path, line_no);
    entry.label = require_string_field(record, "label", path, line_no);
    if (!seen_ids.insert(entry.id).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate id \"" +
                      entry.id + "\"");
    }
    kb.entries.push_back(std::move(entry));
  });
  if (kb.entries.empty()) {
    throw DataError(path.string() + ": empty knowledge base");
  }
  return kb;
}

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
  std::string out;
  for (const LabeledQuery& entry : kb.entries) {
    out += jsonl_line({{"id", entry.id}, {"text", entry.text}, {"label", entry.label}});
  }
  write_file_atomic(path, out);
}

UnlabeledQuerySet load_unlabeled(const std::filesystem::path& path, std::string language) {
  UnlabeledQuerySet set;
  set.language = std::move(language);
  std::unordered_set<std::string> seen_ids;
  for_each_jsonl(path, [&](const nlohmann::json& record, std::size_t line_no) {
    UnlabeledQuery q;
    q.id = require_string_field(record, "id", path, line_no);
    q.text = require_string_field(record, "text", path, line_no);
    if (!seen_ids.insert(q.id).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate id \"" + q.id +
                      "\"");
    }
    set.queries.push_back(std::move(q));
  });
  return set;
}

void save_unlabeled(const UnlabeledQuerySet& set, const std::filesystem::path& path) {
  std::string out;
  for (const UnlabeledQuery& q : set.queries) {
    out += jsonl_line({{"id", q.id}, {"text", q.text}});
  }
  write_file_atomic(path, out);
}

namespace {

// Largest-remainder apportionment of `target` index slots across labels,
// honoring per-label [1, count-1] bounds so every multi-entry label lands
// on both sides of the split.
std::map<std::string, std::size_t> apportion_index_counts(
    const std::map<std::string, std::size_t>& label_counts, std::size_t target) {
  std::size_t total = 0;
  for (const auto& [label, count] : label_counts) {
    total += count;
  }
  const std::size_t min_total = label_counts.size();  // one per label
  std::size_t max_total = 0;
  for (const auto& [label, count] : label_counts) {
    max_total += count - 1;  // leave one per label for training
  }
  target = std::clamp(target, min_total, max_total);

  struct Quota {
    std::string label;
    std::size_t base;
    double remainder;
    std::size_t cap;
  };
  std::vector<Quota> quotas;
  quotas.reserve(label_counts.size());
  std::size_t assigned = 0;
  for (const auto& [label, count] : label_counts) {
    const double exact =
        static_cast<double>(target) * static_cast<double>(count) / static_cast<double>(total);
    const std::size_t cap = count - 1;
    std::size_t base = std::clamp<std::size_t>(static_cast<std::size_t>(exact), 1, cap);
    quotas.push_back(Quota{label, base, exact - std::floor(exact), cap});
    assigned += base;
  }
  // Distribute the leftover by descending fractional remainder (label name
  // breaks ties), respecting caps; shave overshoot in the reverse order.
  std::stable_sort(quotas.begin(), quotas.end(), [](const Quota& a, const Quota& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    return a.label < b.label;
  });
  std::size_t guard = 0;
  while (assigned < target && guard++ < 2 * quotas.size()) {
    for (Quota& q : quotas) {
      if (assigned == target) break;
      if (q.base < q.cap) {
        ++q.base;
        ++assigned;
      }
    }
  }
  guard = 0;
  while (assigned > target && guard++ < 2 * quotas.size()) {
    for (auto it = quotas.rbegin(); it != quotas.rend(); ++it) {
      if (assigned == target) break;
      if (it->base > 1) {
        --it->base;
        --assigned;
      }
    }
  }
  std::map<std::string, std::size_t> out;
  for (const Quota& q : quotas) {
    out[q.label] = q.base;
  }
  return out;
}

}  // namespace

SplitResult split_kb(const KnowledgeBase& kb, const SplitOptions& options) {
  if (!(options.index_fraction > 0.0 && options.index_fraction < 1.0)) {
    throw DataError("index_fraction must lie in (0, 1), got " +
                    format_double(options.index_fraction));
  }
  const std::size_t n = kb.entries.size();
  if (n < 2) {
    throw DataError("knowledge base too small to split: need at least 2 entries");
  }
  if (options.index_fraction * static_cast<double>(n) < 1.0) {
    throw DataError("knowledge base too small: index_fraction * size < 1");
  }
  const auto target_raw =
      static_cast<std::size_t>(std::llround(options.index_fraction * static_cast<double>(n)));
  const std::size_t target = std::clamp<std::size_t>(target_raw, 1, n - 1);

  const Rng root(options.seed);
  const Rng split_rng = root.substream("split");

  std::vector<char> to_index(n, 0);
  SplitResult result;

  if (!options.stratified) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = split_rng;
    rng.shuffle(order);
    for (std::size_t i = 0; i < target; ++i) {
      to_index[order[i]] = 1;
    }
  } else {
    // Group entry positions by label; std::map keeps label iteration stable.
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < n; ++i) {
      by_label[kb.entries[i].label].push_back(i);
    }
    std::map<std::string, std::size_t> multi_counts;
    std::size_t singles = 0;
    for (const auto& [label, positions] : by_label) {
      if (positions.size() == 1) {
        to_index[positions.front()] = 1;
        result.singleton_labels.push_back(label);
        ++singles;
      } else {
        multi_counts[label] = positions.size();
      }
    }
    if (!multi_counts.empty()) {
      const std::size_t remaining = target > singles ? target - singles : 0;
      const auto per_label = apportion_index_counts(multi_counts, remaining);
      for (const auto& [label, index_count] : per_label) {
        auto& positions = by_label[label];
        // Per-label substream: a label's draw does not depend on how many
        // other labels exist or on KB-wide entry order.
        Rng rng = split_rng.substream(label);
        rng.shuffle(positions);
        for (std::size_t i = 0; i < index_count; ++i) {
          to_index[positions[i]] = 1;
        }
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    (to_index[i] ? result.split.index_set : result.split.training_set).push_back(kb.entries[i]);
  }
  if (result.split.index_set.empty() || result.split.training_set.empty()) {
    throw DataError("degenerate split: one side is empty");
  }
  return result;
}

ValidationReport validate_kb(const KnowledgeBase& kb) {
  ValidationReport report;
  report.n_entries = kb.entries.size();
  for (const LabeledQuery& entry : kb.entries) {
    ++report.label_histogram[entry.label];
  }
  for (const auto& [label, count] : report.label_histogram) {
    if (count == 1) {
      report.singleton_labels.push_back(label);
    }
  }
  std::map<std::string, std::vector<const LabeledQuery*>> by_text;
  for (const LabeledQuery& entry : kb.entries) {
    by_text[entry.text].push_back(&entry);
  }
  for (const auto& [text, entries] : by_text) {
    if (entries.size() < 2) continue;
    ValidationReport::DuplicateText dup;
    dup.text = text;
    std::set<std::string> labels;
    for (const LabeledQuery* e : entries) {
      dup.ids.push_back(e->id);
      labels.insert(e->label);
    }
    dup.labels.assign(labels.begin(), labels.end());
    dup.cross_label = labels.size() > 1;
    report.duplicate_texts.push_back(std::move(dup));
  }
  return report;
}

nlohmann::ordered_json ValidationReport::to_json() const {
  nlohmann::ordered_json j;
  j["n_entries"] = n_entries;
  j["n_labels"] = label_histogram.size();
  j["label_histogram"] = label_histogram;
  j["singleton_labels"] = singleton_labels;
  nlohmann::ordered_json dups = nlohmann::ordered_json::array();
  for (const DuplicateText& d : duplicate_texts) {
    dups.push_back({{"text", d.text},
                    {"ids", d.ids},
                    {"labels", d.labels},
                    {"cross_label", d.cross_label}});
  }
  j["duplicate_texts"] = dups;
  return j;
}

void save_split(const KnowledgeBaseSplit& split, const std::filesystem::path& out_dir,
                std::uint64_t seed, double index_fraction) {
  std::filesystem::create_directories(out_dir);
  save_kb(KnowledgeBase{split.index_set}, out_dir / "index.jsonl");
  save_kb(KnowledgeBase{split.training_set}, out_dir / "train.jsonl");
  nlohmann::ordered_json manifest;
  manifest["seed"] = seed;
  manifest["index_fraction"] = index_fraction;
  auto ids = nlohmann::ordered_json::array();
  for (const LabeledQuery& entry : split.index_set) {
    ids.push_back(entry.id);
  }
  manifest["index_ids"] = std::move(ids);
  write_file_atomic(out_dir / "split.json", manifest.dump(2) + "\n");
}

KnowledgeBaseSplit load_split(const std::filesystem::path& index_path,
                              const std::filesystem::path& train_path,
                              const std::string& language) {
  KnowledgeBaseSplit split;
  split.index_set = load_kb(index_path, language).entries;
  split.training_set = load_kb(train_path, language).entries;
  std::unordered_set<std::string> index_ids;
  for (const LabeledQuery& e : split.index_set) {
    index_ids.insert(e.id);
  }
  for (const LabeledQuery& e : split.training_set) {
    if (index_ids.count(e.id)) {
      throw DataError("split halves overlap on id \"" + e.id + "\"");
    }
  }
  return split;
}

}  // namespace xlkb
