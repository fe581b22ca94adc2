#include "xlkb/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "xlkb/common.hpp"

namespace xlkb {

namespace {

// Plain sequential dot product; kept free of SIMD reassociation so results
// are reproducible across build configurations.
double dot_d(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

std::vector<double> unit_double(std::span<const float> values) {
  std::vector<double> v(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[i] = static_cast<double>(values[i]);
    sum += v[i] * v[i];
  }
  const double norm = std::sqrt(sum);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DataError("embedding vector has zero or non-finite norm");
  }
  for (double& x : v) x /= norm;
  return v;
}

std::vector<double> project_query(std::span<const float> raw, const AdapterModel* adapter) {
  if (adapter != nullptr && !adapter->is_identity()) {
    return from_eigen(adapter->apply(to_eigen(raw)));
  }
  return unit_double(raw);
}

bool relevant(const RankedHit& hit, const std::string& truth, Relevance relevance) {
  return relevance == Relevance::label ? hit.label == truth : hit.id == truth;
}

// 1-based rank of the first relevant hit within depth; 0 when absent.
std::size_t first_rank(const RankedResult& result, const std::string& truth, std::size_t depth,
                       Relevance relevance) {
  const std::size_t limit = std::min(depth, result.hits.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (relevant(result.hits[i], truth, relevance)) return i + 1;
  }
  return 0;
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["n_queries"] = n_queries;
  nlohmann::ordered_json recall;
  for (const auto& [k, value] : recall_at) recall[std::to_string(k)] = value;
  j["recall"] = recall;
  j["mrr"] = mrr;
  return j;
}

RetrievalIndex build_index(std::span<const LabeledQuery> entries, const TextEmbedFn& embed,
                           const AdapterModel* adapter) {
  if (entries.empty()) throw DataError("cannot build a retrieval index from zero entries");

  RetrievalIndex index;
  index.entries.reserve(entries.size());
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.id).second) {
      throw DataError("duplicate id \"" + e.id + "\" in retrieval index");
    }
    RetrievalIndex::Entry entry;
    entry.id = e.id;
    entry.label = e.label;
    entry.vector = project_query(embed(e.id, e.text), adapter);
    if (index.dimension == 0) {
      index.dimension = entry.vector.size();
    } else if (entry.vector.size() != index.dimension) {
      throw DataError("embedding for \"" + e.id + "\" has dimension " +
                      std::to_string(entry.vector.size()) + ", expected " +
                      std::to_string(index.dimension));
    }
    index.entries.push_back(std::move(entry));
  }
  return index;
}

RankedResult query_topk(const RetrievalIndex& index, std::span<const double> query,
                        std::size_t k) {
  if (k < 1) throw DataError("k must be >= 1");
  if (query.size() != index.dimension) {
    throw DataError("query has dimension " + std::to_string(query.size()) + ", index has " +
                    std::to_string(index.dimension));
  }

  std::vector<std::size_t> order(index.entries.size());
  std::vector<double> scores(index.entries.size());
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    order[i] = i;
    scores[i] = dot_d(index.entries[i].vector, query);
  }
  const std::size_t take = std::min(k, order.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return index.entries[a].id < index.entries[b].id;
  };
  std::partial_sort(order.begin(), order.begin() + take, order.end(), better);

  RankedResult result;
  result.hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto& e = index.entries[order[i]];
    result.hits.push_back({e.id, e.label, scores[order[i]]});
  }
  return result;
}

double recall_at_k(std::span<const RankedResult> results, std::span<const std::string> truth,
                   std::size_t k, Relevance relevance) {
  if (results.size() != truth.size()) {
    throw DataError("got " + std::to_string(results.size()) + " results for " +
                    std::to_string(truth.size()) + " truth labels");
  }
  if (results.empty()) throw DataError("cannot compute recall over zero queries");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (first_rank(results[i], truth[i], k, relevance) != 0) hits += 1;
  }
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double mrr(std::span<const RankedResult> results, std::span<const std::string> truth,
           std::size_t depth, Relevance relevance) {
  if (results.size() != truth.size()) {
    throw DataError("got " + std::to_string(results.size()) + " results for " +
                    std::to_string(truth.size()) + " truth labels");
  }
  if (results.empty()) throw DataError("cannot compute MRR over zero queries");
  if (depth < 1) throw DataError("MRR depth must be >= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::size_t rank = first_rank(results[i], truth[i], depth, relevance);
    if (rank != 0) sum += 1.0 / static_cast<double>(rank);
  }
  return sum / static_cast<double>(results.size());
}

EvalOutcome evaluate(const RetrievalIndex& index, std::span<const EvalCase> cases,
                     std::span<const int> ks, const AdapterModel* adapter, Relevance relevance) {
  if (ks.empty()) throw DataError("evaluate needs at least one k");
  if (cases.empty()) throw DataError("evaluate needs at least one query");
  for (int k : ks) {
    if (k < 1) throw DataError("every k must be >= 1");
  }
  const std::size_t depth = static_cast<std::size_t>(*std::max_element(ks.begin(), ks.end()));

  EvalOutcome outcome;
  outcome.report.n_queries = cases.size();
  outcome.first_match_rank.reserve(cases.size());

  std::vector<RankedResult> results;
  results.reserve(cases.size());
  std::vector<std::string> truth;
  truth.reserve(cases.size());
  for (const auto& c : cases) {
    std::vector<double> q = project_query(c.vector, adapter);
    results.push_back(query_topk(index, q, depth));
    truth.push_back(c.truth);
    outcome.first_match_rank.push_back(first_rank(results.back(), c.truth, depth, relevance));
  }

  for (int k : ks) {
    outcome.report.recall_at[k] =
        recall_at_k(results, truth, static_cast<std::size_t>(k), relevance);
  }
  outcome.report.mrr = mrr(results, truth, depth, relevance);
  return outcome;
}

void write_detail_csv(const std::filesystem::path& path, std::span<const EvalCase> cases,
                      std::span<const std::size_t> first_match_rank) {
  if (cases.size() != first_match_rank.size()) {
    throw DataError("detail CSV needs one rank per query");
  }
  std::string out = "query_id,first_match_rank\n";
  for (std::size_t i = 0; i < cases.size(); ++i) {
    out += cases[i].query_id;
    out += ',';
    if (first_match_rank[i] != 0) out += std::to_string(first_match_rank[i]);
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace xlkb
