#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xlkb/embedder.hpp"
#include "xlkb/kb.hpp"

namespace xlkb {

// Synthetic clustered retrieval benchmark. Labels sit on a two-level
// similarity tree (branch direction + scaled leaf direction), so sibling
// labels are geometrically close and "hard" negatives mean something; a flat
// layout would make similarity-weighted sampling indistinguishable from
// uniform.
//
// The per-query noise has two parts: an isotropic component and a structured
// component confined to a fixed low-dimensional "nuisance" subspace shared by
// every sample (think style or phrasing variation). The structured part is
// what gives a linear adapter something to learn — it can be projected out,
// while purely isotropic noise cannot be reduced by any linear map.
struct BenchmarkSpec {
  int n_labels = 20;
  int queries_per_label = 50;
  int dimension = 32;
  double sigma = 0.6;          // intra-label noise scale
  int branches = 4;            // top-level clusters
  double leaf_scale = 0.7;     // leaf-direction weight within a branch
  int eval_per_label = 10;     // target-side evaluation queries per label
  int nuisance_dims = 6;       // size of the shared nuisance subspace
  double nuisance_scale = 2.0; // nuisance amplitude relative to the isotropic part
  std::uint64_t seed = 0;

  void validate() const;
};

struct Benchmark {
  // Source-language ("E") knowledge base and its embeddings, keyed by id.
  KnowledgeBase kb;
  EmbeddingTable kb_embeddings;
  // Simulated translations: one independently re-noised vector per KB entry,
  // standing in for q^T. Keyed by the same KB ids.
  EmbeddingTable translated_embeddings;
  // Target-side evaluation queries with their embeddings and truth labels
  // (aligned with target_queries.queries).
  UnlabeledQuerySet target_queries;
  EmbeddingTable target_embeddings;
  std::vector<std::string> target_truth;

  std::vector<std::string> labels;
  std::vector<Eigen::VectorXd> prototypes;  // per label, unit-norm
};

// Labels are named "c<branch>_q<leaf>" so their lexical similarity mirrors
// the prototype geometry: siblings share the branch token, everything shares
// the naming scheme. Fully deterministic given the seed.
Benchmark gen_benchmark(const BenchmarkSpec& spec);

// Writes kb.jsonl, targets.jsonl ({"id","text","label"}), kb_emb.emb,
// translated_emb.emb, target_emb.emb and bench.json (spec echo + labels).
void save_benchmark(const Benchmark& bench, const BenchmarkSpec& spec,
                    const std::filesystem::path& out_dir);

// Reads back {"id","label"} pairs from a targets.jsonl-style file.
std::vector<std::pair<std::string, std::string>> load_truth(const std::filesystem::path& path);

}  // namespace xlkb
