#include "xlkb/embedder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "xlkb/common.hpp"

namespace xlkb {

double l2_norm(std::span<const float> values) {
  double sum = 0.0;
  for (const float v : values) {
    sum += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(sum);
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw DataError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

void l2_normalize(std::vector<float>& values) {
  const double norm = l2_norm(values);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DataError("cannot normalize zero or non-finite vector");
  }
  for (float& v : values) {
    v = static_cast<float>(static_cast<double>(v) / norm);
  }
}

namespace {

std::uint64_t seeded_fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ull ^ (seed * 0x9E3779B97F4A7C15ull);
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  // Final avalanche so low bits depend on every byte.
  h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ull;
  h = (h ^ (h >> 27)) * 0x94D049BB133111EBull;
  return h ^ (h >> 31);
}

}  // namespace

HashedNgramEmbedder::HashedNgramEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ == 0) {
    throw DataError("embedding dimension must be positive");
  }
}

std::vector<float> HashedNgramEmbedder::embed(const std::string& text) const {
  if (text.empty()) {
    throw DataError("cannot embed empty text");
  }
  const std::string lowered = ascii_lower(text);
  std::vector<float> values(dimension_, 0.0f);
  auto add_feature = [&](std::string_view feature) {
    const std::uint64_t h = seeded_fnv1a(feature, seed_);
    const std::size_t bucket = static_cast<std::size_t>(h % dimension_);
    const float sign = (h >> 63) ? -1.0f : 1.0f;
    values[bucket] += sign;
  };
  for (const std::string& token : split_whitespace(lowered)) {
    add_feature(token);
  }
  const auto cps = utf8_codepoints(lowered);
  for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
    std::string trigram;
    trigram.append(cps[i]);
    trigram.append(cps[i + 1]);
    trigram.append(cps[i + 2]);
    add_feature(trigram);
  }
  l2_normalize(values);
  return values;
}

void EmbeddingTable::insert(EmbeddingVector row) {
  if (rows_.empty() && dimension_ == 0) {
    dimension_ = row.values.size();
  }
  if (row.values.size() != dimension_) {
    throw DataError("dimension mismatch for id \"" + row.id + "\": expected " +
                    std::to_string(dimension_) + ", got " + std::to_string(row.values.size()));
  }
  if (!by_id_.emplace(row.id, rows_.size()).second) {
    throw DataError("duplicate embedding id \"" + row.id + "\"");
  }
  rows_.push_back(std::move(row));
}

const std::vector<float>& EmbeddingTable::at(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw DataError("unknown embedding id \"" + id + "\"");
  }
  return rows_[it->second].values;
}

void EmbeddingTable::save_jsonl(const std::filesystem::path& path) const {
  std::string out;
  for (const EmbeddingVector& row : rows_) {
    nlohmann::ordered_json j;
    j["id"] = row.id;
    j["vector"] = row.values;
    out += j.dump() + "\n";
  }
  write_file_atomic(path, out);
}

EmbeddingTable EmbeddingTable::load_jsonl(const std::filesystem::path& path) {
  EmbeddingTable table;
  for_each_jsonl(path, [&](const nlohmann::json& record, std::size_t line_no) {
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (!record.contains("id") || !record.at("id").is_string() || !record.contains("vector") ||
        !record.at("vector").is_array()) {
      throw DataError(where + ": expected {\"id\": ..., \"vector\": [...]}");
    }
    EmbeddingVector row;
    row.id = record.at("id").get<std::string>();
    row.values = record.at("vector").get<std::vector<float>>();
    if (!table.rows_.empty() && row.values.size() != table.dimension_) {
      throw DataError(where + ": dimension mismatch: expected " +
                      std::to_string(table.dimension_) + ", got " +
                      std::to_string(row.values.size()));
    }
    try {
      table.insert(std::move(row));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  });
  return table;
}

namespace {

constexpr char kBinaryMagic[4] = {'E', 'M', 'B', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32(const std::string& data, std::size_t& offset,
                      const std::filesystem::path& path) {
  if (offset + 4 > data.size()) {
    throw DataError(path.string() + ": truncated binary embedding file");
  }
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(data[offset + static_cast<std::size_t>(i)]);
  }
  offset += 4;
  return v;
}

}  // namespace

void EmbeddingTable::save_binary(const std::filesystem::path& path) const {
  std::string out;
  out.append(kBinaryMagic, sizeof(kBinaryMagic));
  put_u32(out, static_cast<std::uint32_t>(rows_.size()));
  put_u32(out, static_cast<std::uint32_t>(dimension_));
  for (const EmbeddingVector& row : rows_) {
    for (const float v : row.values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_u32(out, bits);
    }
  }
  for (const EmbeddingVector& row : rows_) {
    put_u32(out, static_cast<std::uint32_t>(row.id.size()));
    out.append(row.id);
  }
  write_file_atomic(path, out);
}

EmbeddingTable EmbeddingTable::load_binary(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() < 4 || std::memcmp(data.data(), kBinaryMagic, 4) != 0) {
    throw DataError(path.string() + ": missing EMB1 magic");
  }
  std::size_t offset = 4;
  const std::uint32_t count = get_u32(data, offset, path);
  const std::uint32_t dim = get_u32(data, offset, path);
  std::vector<std::vector<float>> vectors(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    vectors[i].resize(dim);
    for (std::uint32_t j = 0; j < dim; ++j) {
      const std::uint32_t bits = get_u32(data, offset, path);
      std::memcpy(&vectors[i][j], &bits, sizeof(float));
    }
  }
  EmbeddingTable table(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32(data, offset, path);
    if (offset + len > data.size()) {
      throw DataError(path.string() + ": truncated id block");
    }
    EmbeddingVector row;
    row.id = data.substr(offset, len);
    offset += len;
    row.values = std::move(vectors[i]);
    table.insert(std::move(row));
  }
  if (offset != data.size()) {
    throw DataError(path.string() + ": trailing bytes after id block");
  }
  return table;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file: " + path.string());
  }
  char magic[4] = {};
  in.read(magic, 4);
  in.close();
  if (std::memcmp(magic, kBinaryMagic, 4) == 0) {
    return load_binary(path);
  }
  return load_jsonl(path);
}

}  // namespace xlkb
