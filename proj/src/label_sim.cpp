#include "xlkb/label_sim.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "xlkb/common.hpp"

namespace xlkb {

std::string normalize_label(std::string_view label) {
  std::string s = ascii_lower(label);
  for (char& c : s) {
    if (c == '_' || c == '-') {
      c = ' ';
    }
  }
  return join(split_whitespace(s), " ");
}

namespace {

// Word tokens and codepoint trigrams of the normalized label, as one set.
std::set<std::string> lexical_features(const std::string& label) {
  const std::string norm = normalize_label(label);
  std::set<std::string> features;
  for (std::string& token : split_whitespace(norm)) {
    features.insert(std::move(token));
  }
  const auto cps = utf8_codepoints(norm);
  for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
    std::string trigram;
    trigram.append(cps[i]);
    trigram.append(cps[i + 1]);
    trigram.append(cps[i + 2]);
    features.insert(std::move(trigram));
  }
  return features;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) {
    return 0.0;
  }
  std::size_t intersection = 0;
  for (const std::string& f : a) {
    intersection += b.count(f);
  }
  const std::size_t unions = a.size() + b.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(unions);
}

}  // namespace

SimilarityScorer SimilarityScorer::lexical() { return SimilarityScorer(Mode::lexical, nullptr); }

SimilarityScorer SimilarityScorer::embedding(std::shared_ptr<const EmbeddingProvider> provider) {
  if (!provider) {
    throw DataError("embedding similarity mode requires a provider");
  }
  return SimilarityScorer(Mode::embedding, std::move(provider));
}

double SimilarityScorer::score(const std::string& a, const std::string& b) const {
  if (a.empty() || b.empty()) {
    throw DataError("label similarity of an empty label");
  }
  if (mode_ == Mode::lexical) {
    if (normalize_label(a) == normalize_label(b)) {
      return 1.0;
    }
    return jaccard(lexical_features(a), lexical_features(b));
  }
  if (a == b) {
    return 1.0;
  }
  const std::vector<float> va = provider_->embed(a);
  const std::vector<float> vb = provider_->embed(b);
  const double na = l2_norm(va);
  const double nb = l2_norm(vb);
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw DataError("zero-norm label embedding");
  }
  const double cosine = std::clamp(dot(va, vb) / (na * nb), -1.0, 1.0);
  return (cosine + 1.0) / 2.0;
}

std::size_t LabelSimilarityMatrix::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) {
    throw DataError("unknown label \"" + label + "\"");
  }
  return static_cast<std::size_t>(it - labels.begin());
}

double LabelSimilarityMatrix::at(const std::string& a, const std::string& b) const {
  return values[index_of(a)][index_of(b)];
}

void LabelSimilarityMatrix::dump_json(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["labels"] = labels;
  j["values"] = values;
  write_file_atomic(path, j.dump() + "\n");
}

LabelSimilarityMatrix similarity_matrix(const SimilarityScorer& scorer,
                                        const std::vector<std::string>& labels) {
  std::unordered_set<std::string> seen;
  for (const std::string& label : labels) {
    if (!seen.insert(label).second) {
      throw DataError("duplicate label \"" + label + "\" in similarity matrix input");
    }
  }
  LabelSimilarityMatrix matrix;
  matrix.labels = labels;
  const std::size_t n = labels.size();
  matrix.values.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    matrix.values[i][i] = scorer.score(labels[i], labels[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = scorer.score(labels[i], labels[j]);
      matrix.values[i][j] = s;
      matrix.values[j][i] = s;
    }
  }
  return matrix;
}

std::vector<std::string> top_similar_labels(const LabelSimilarityMatrix& matrix,
                                            const std::string& anchor, std::size_t m) {
  if (m == 0) {
    throw DataError("top_similar_labels requires m >= 1");
  }
  const std::size_t anchor_idx = matrix.index_of(anchor);
  std::vector<std::size_t> order;
  order.reserve(matrix.labels.size());
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
    if (i != anchor_idx) {
      order.push_back(i);
    }
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = matrix.values[anchor_idx][a];
    const double sb = matrix.values[anchor_idx][b];
    if (sa != sb) return sa > sb;
    return matrix.labels[a] < matrix.labels[b];
  });
  if (order.size() > m) {
    order.resize(m);
  }
  std::vector<std::string> out;
  out.reserve(order.size());
  for (const std::size_t i : order) {
    out.push_back(matrix.labels[i]);
  }
  return out;
}

}  // namespace xlkb
