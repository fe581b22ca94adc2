#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace xlkb {

// Maps a pair record's (id, text) to an embedding; callers wire in either a
// text embedder (keyed by text) or a precomputed table (keyed by id).
using TextEmbedFn =
    std::function<std::vector<float>(const std::string& id, const std::string& text)>;

struct EmbeddingVector {
  std::string id;
  std::vector<float> values;
};

// Divides by the L2 norm (computed in double). Zero vectors are a data
// error: a text with no extractable signal should surface, not silently
// pass through unnormalizable.
void l2_normalize(std::vector<float>& values);
double l2_norm(std::span<const float> values);
double dot(std::span<const float> a, std::span<const float> b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  // The key is the text for hashing providers and the record id for
  // table-backed providers.
  virtual std::vector<float> embed(const std::string& key) const = 0;
};

// Deterministic text embedder: character trigrams and word tokens hashed
// into `dimension` buckets with +/-1 signs, then L2-normalized. Exists so
// every test and benchmark runs without model downloads.
class HashedNgramEmbedder : public EmbeddingProvider {
 public:
  HashedNgramEmbedder(std::size_t dimension, std::uint64_t seed);

  std::size_t dimension() const override { return dimension_; }
  std::vector<float> embed(const std::string& text) const override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

// In-memory id -> vector table with JSONL and binary serialization.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  void insert(EmbeddingVector row);
  bool contains(const std::string& id) const { return by_id_.count(id) > 0; }
  // Throws DataError on unknown id.
  const std::vector<float>& at(const std::string& id) const;
  const std::vector<EmbeddingVector>& rows() const { return rows_; }

  void save_jsonl(const std::filesystem::path& path) const;
  void save_binary(const std::filesystem::path& path) const;
  // Dispatches on the EMB1 magic, falling back to JSONL.
  static EmbeddingTable load(const std::filesystem::path& path);
  static EmbeddingTable load_jsonl(const std::filesystem::path& path);
  static EmbeddingTable load_binary(const std::filesystem::path& path);

 private:
  std::size_t dimension_ = 0;
  std::vector<EmbeddingVector> rows_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Adapts an EmbeddingTable to the provider interface (lookup by id).
class TableEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit TableEmbeddingProvider(std::shared_ptr<const EmbeddingTable> table)
      : table_(std::move(table)) {}

  std::size_t dimension() const override { return table_->dimension(); }
  std::vector<float> embed(const std::string& id) const override { return table_->at(id); }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
};

}  // namespace xlkb
