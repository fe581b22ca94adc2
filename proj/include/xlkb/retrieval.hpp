#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xlkb/adapter.hpp"
#include "xlkb/embedder.hpp"
#include "xlkb/kb.hpp"

namespace xlkb {

// Whether a retrieved entry counts as relevant by matching the truth label
// or the exact example id.
enum class Relevance { label, example };

struct RetrievalIndex {
  struct Entry {
    std::string id;
    std::string label;
    std::vector<double> vector;  // unit-norm
  };
  std::vector<Entry> entries;
  std::size_t dimension = 0;
};

struct RankedHit {
  std::string id;
  std::string label;
  double score = 0.0;
};

struct RankedResult {
  std::vector<RankedHit> hits;  // descending score, ties by ascending id
};

struct EvalReport {
  std::size_t n_queries = 0;
  std::map<int, double> recall_at;
  double mrr = 0.0;

  nlohmann::ordered_json to_json() const;
};

// Builds the exact cosine index over the N1 entries. Vectors are widened to
// double and L2-normalized once; a real (non-identity) adapter is applied
// before normalization. An identity adapter takes the no-adapter path so an
// untrained model reproduces baseline metrics exactly.
RetrievalIndex build_index(std::span<const LabeledQuery> entries, const TextEmbedFn& embed,
                           const AdapterModel* adapter = nullptr);

// Exact top-k by cosine over the whole index; k past the index size returns
// the full sorted index.
RankedResult query_topk(const RetrievalIndex& index, std::span<const double> query, std::size_t k);

double recall_at_k(std::span<const RankedResult> results, std::span<const std::string> truth,
                   std::size_t k, Relevance relevance = Relevance::label);

double mrr(std::span<const RankedResult> results, std::span<const std::string> truth,
           std::size_t depth, Relevance relevance = Relevance::label);

struct EvalCase {
  std::string query_id;
  std::vector<float> vector;
  std::string truth;  // label, or example id under Relevance::example
};

struct EvalOutcome {
  EvalReport report;
  // 1-based rank of the first relevant hit within depth, 0 when absent;
  // aligned with the input cases.
  std::vector<std::size_t> first_match_rank;
};

// Single pass over the queries producing Recall@k for every k in ks and MRR
// at depth max(ks). The adapter, when given, is applied to each query.
EvalOutcome evaluate(const RetrievalIndex& index, std::span<const EvalCase> cases,
                     std::span<const int> ks, const AdapterModel* adapter = nullptr,
                     Relevance relevance = Relevance::label);

// CSV `query_id,first_match_rank` with an empty cell for misses.
void write_detail_csv(const std::filesystem::path& path, std::span<const EvalCase> cases,
                      std::span<const std::size_t> first_match_rank);

}  // namespace xlkb
