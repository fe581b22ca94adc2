#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace xlkb {

// One knowledge-base entry: an example query and its intent label.
struct LabeledQuery {
  std::string id;
  std::string text;
  std::string label;
};

struct KnowledgeBase {
  std::vector<LabeledQuery> entries;
  std::string language = "und";
};

struct UnlabeledQuery {
  std::string id;
  std::string text;
};

// Target-language queries without labels, used for synthetic augmentation.
struct UnlabeledQuerySet {
  std::vector<UnlabeledQuery> queries;
  std::string language = "und";
};

// Disjoint index (retrieval) and training halves of a knowledge base.
// Both preserve the original KB entry order.
struct KnowledgeBaseSplit {
  std::vector<LabeledQuery> index_set;
  std::vector<LabeledQuery> training_set;
};

struct SplitOptions {
  double index_fraction = 0.1;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitResult {
  KnowledgeBaseSplit split;
  // Labels with a single entry; under stratification their entry went to
  // the index set because they can never anchor a positive pair.
  std::vector<std::string> singleton_labels;
};

struct ValidationReport {
  std::size_t n_entries = 0;
  std::map<std::string, std::size_t> label_histogram;
  std::vector<std::string> singleton_labels;
  struct DuplicateText {
    std::string text;
    std::vector<std::string> ids;
    std::vector<std::string> labels;  // distinct labels among the duplicates
    bool cross_label = false;
  };
  std::vector<DuplicateText> duplicate_texts;

  nlohmann::ordered_json to_json() const;
};

KnowledgeBase load_kb(const std::filesystem::path& path, std::string language = "und");
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path);

UnlabeledQuerySet load_unlabeled(const std::filesystem::path& path, std::string language = "und");
void save_unlabeled(const UnlabeledQuerySet& set, const std::filesystem::path& path);

SplitResult split_kb(const KnowledgeBase& kb, const SplitOptions& options);

ValidationReport validate_kb(const KnowledgeBase& kb);

// Writes index.jsonl, train.jsonl and split.json ({"seed", "index_fraction",
// "index_ids"}) into out_dir.
void save_split(const KnowledgeBaseSplit& split, const std::filesystem::path& out_dir,
                std::uint64_t seed, double index_fraction);

KnowledgeBaseSplit load_split(const std::filesystem::path& index_path,
                              const std::filesystem::path& train_path,
                              const std::string& language = "und");

}  // namespace xlkb
