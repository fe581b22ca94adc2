#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "xlkb/embedder.hpp"

namespace xlkb {

// Lowercase, map '_' and '-' to spaces, collapse runs of whitespace.
std::string normalize_label(std::string_view label);

// Scores similarity between two labels in [0, 1], symmetric, with
// s(l, l) = 1. Lexical mode is Jaccard over the union of word tokens and
// character trigrams of the normalized label. Embedding mode is the cosine
// of the labels' embeddings mapped to [0, 1] via (x + 1) / 2.
class SimilarityScorer {
 public:
  enum class Mode { lexical, embedding };

  static SimilarityScorer lexical();
  static SimilarityScorer embedding(std::shared_ptr<const EmbeddingProvider> provider);

  Mode mode() const { return mode_; }
  double score(const std::string& a, const std::string& b) const;

 private:
  SimilarityScorer(Mode mode, std::shared_ptr<const EmbeddingProvider> provider)
      : mode_(mode), provider_(std::move(provider)) {}

  Mode mode_;
  std::shared_ptr<const EmbeddingProvider> provider_;
};

struct LabelSimilarityMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;

  std::size_t index_of(const std::string& label) const;  // throws on unknown label
  double at(const std::string& a, const std::string& b) const;

  void dump_json(const std::filesystem::path& path) const;
};

// values[i][j] = scorer.score(labels[i], labels[j]), computed once per
// unordered pair and mirrored.
LabelSimilarityMatrix similarity_matrix(const SimilarityScorer& scorer,
                                        const std::vector<std::string>& labels);

// The m most similar labels to anchor (anchor itself excluded), ties broken
// by ascending label order. Returns fewer than m only if fewer labels exist.
std::vector<std::string> top_similar_labels(const LabelSimilarityMatrix& matrix,
                                            const std::string& anchor, std::size_t m);

}  // namespace xlkb
