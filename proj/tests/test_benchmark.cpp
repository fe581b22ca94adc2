#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "xlkb/benchmark.hpp"
#include "xlkb/common.hpp"
#include "xlkb/retrieval.hpp"

using namespace xlkb;

namespace {

BenchmarkSpec small_spec() {
  BenchmarkSpec spec;
  spec.n_labels = 8;
  spec.queries_per_label = 6;
  spec.dimension = 16;
  spec.sigma = 0.4;
  spec.branches = 4;
  spec.eval_per_label = 3;
  spec.nuisance_dims = 3;
  spec.seed = 5;
  return spec;
}

double cos_d(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("spec validation bounds every knob") {
  CHECK_NOTHROW(BenchmarkSpec{}.validate());
  auto invalid = [](auto mutate) {
    BenchmarkSpec s;
    mutate(s);
    CHECK_THROWS_AS(s.validate(), DataError);
  };
  invalid([](BenchmarkSpec& s) { s.n_labels = 0; });
  invalid([](BenchmarkSpec& s) { s.queries_per_label = 0; });
  invalid([](BenchmarkSpec& s) { s.dimension = 0; });
  invalid([](BenchmarkSpec& s) { s.sigma = -0.1; });
  invalid([](BenchmarkSpec& s) { s.branches = 0; });
  invalid([](BenchmarkSpec& s) { s.branches = s.n_labels + 1; });
  invalid([](BenchmarkSpec& s) { s.leaf_scale = 0.0; });
  invalid([](BenchmarkSpec& s) { s.eval_per_label = 0; });
  invalid([](BenchmarkSpec& s) { s.nuisance_dims = -1; });
  invalid([](BenchmarkSpec& s) { s.nuisance_dims = s.dimension; });
  invalid([](BenchmarkSpec& s) { s.nuisance_scale = -1.0; });
}

TEST_CASE("generated benchmark has the promised shape") {
  const auto spec = small_spec();
  const Benchmark bench = gen_benchmark(spec);

  CHECK(bench.labels.size() == 8);
  CHECK(bench.prototypes.size() == 8);
  CHECK(bench.kb.entries.size() == 8 * 6);
  CHECK(bench.kb_embeddings.size() == 8 * 6);
  CHECK(bench.translated_embeddings.size() == 8 * 6);
  CHECK(bench.target_queries.queries.size() == 8 * 3);
  CHECK(bench.target_embeddings.size() == 8 * 3);
  CHECK(bench.target_truth.size() == 8 * 3);
  CHECK(bench.kb_embeddings.dimension() == 16);

  // Label scheme: c<branch>_q<zero-padded index>, two leaves per branch here.
  CHECK(bench.labels[0] == "c0_q00");
  CHECK(bench.labels[1] == "c0_q01");
  CHECK(bench.labels[2] == "c1_q02");
  CHECK(bench.labels[7] == "c3_q07");

  for (const auto& e : bench.kb.entries) {
    CHECK(e.id == "e:" + e.label + ":" + e.id.substr(e.id.rfind(':') + 1));
    CHECK(e.text.find(e.label + " example ") == 0);
    CHECK(bench.kb_embeddings.contains(e.id));
    CHECK(bench.translated_embeddings.contains(e.id));
  }
  for (std::size_t i = 0; i < bench.target_queries.queries.size(); ++i) {
    const auto& q = bench.target_queries.queries[i];
    CHECK(q.id == "t:" + bench.target_truth[i] + ":" + q.id.substr(q.id.rfind(':') + 1));
    CHECK(bench.target_embeddings.contains(q.id));
  }

  // All vectors are unit-norm within float rounding.
  for (const auto& row : bench.kb_embeddings.rows()) {
    CHECK(l2_norm(row.values) == doctest::Approx(1.0).epsilon(1e-5));
  }
  for (const auto& p : bench.prototypes) {
    CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const auto spec = small_spec();
  const Benchmark a = gen_benchmark(spec);
  const Benchmark b = gen_benchmark(spec);
  REQUIRE(a.kb_embeddings.size() == b.kb_embeddings.size());
  for (const auto& row : a.kb_embeddings.rows()) {
    CHECK(b.kb_embeddings.at(row.id) == row.values);
  }
  for (const auto& row : a.target_embeddings.rows()) {
    CHECK(b.target_embeddings.at(row.id) == row.values);
  }

  auto other = spec;
  other.seed = 6;
  const Benchmark c = gen_benchmark(other);
  CHECK(c.kb_embeddings.at(a.kb_embeddings.rows()[0].id) != a.kb_embeddings.rows()[0].values);

  // Translated and KB embeddings of one entry come from different substreams.
  const auto& id0 = a.kb_embeddings.rows()[0].id;
  CHECK(a.kb_embeddings.at(id0) != a.translated_embeddings.at(id0));
}

TEST_CASE("sigma zero reproduces the prototypes exactly") {
  auto spec = small_spec();
  spec.sigma = 0.0;
  const Benchmark bench = gen_benchmark(spec);

  for (std::size_t l = 0; l < bench.labels.size(); ++l) {
    const auto& proto = bench.prototypes[l];
    const auto& emb = bench.kb_embeddings.at("e:" + bench.labels[l] + ":0");
    for (int i = 0; i < spec.dimension; ++i) {
      CHECK(emb[static_cast<std::size_t>(i)] == static_cast<float>(proto[i]));
    }
  }

  // Noise-free retrieval against label prototypes is perfect: every target
  // embedding equals its own label's prototype.
  const TextEmbedFn embed = [&](const std::string& id, const std::string&) {
    return bench.kb_embeddings.at(id);
  };
  std::vector<LabeledQuery> index_entries;
  for (std::size_t l = 0; l < bench.labels.size(); ++l) {
    index_entries.push_back(
        {"e:" + bench.labels[l] + ":0", "proto", bench.labels[l]});
  }
  const RetrievalIndex index = build_index(index_entries, embed);
  std::vector<EvalCase> cases;
  for (std::size_t i = 0; i < bench.target_queries.queries.size(); ++i) {
    cases.push_back({bench.target_queries.queries[i].id,
                     bench.target_embeddings.at(bench.target_queries.queries[i].id),
                     bench.target_truth[i]});
  }
  const auto outcome = evaluate(index, cases, std::vector<int>{1});
  CHECK(outcome.report.recall_at.at(1) == 1.0);
  CHECK(outcome.report.mrr == 1.0);
}

TEST_CASE("sibling labels are geometrically closer than cross-branch labels") {
  auto spec = small_spec();
  spec.n_labels = 12;
  spec.branches = 3;  // 4 leaves per branch
  const Benchmark bench = gen_benchmark(spec);

  double sibling_sum = 0.0, cross_sum = 0.0;
  int sibling_n = 0, cross_n = 0;
  for (std::size_t i = 0; i < bench.labels.size(); ++i) {
    for (std::size_t j = i + 1; j < bench.labels.size(); ++j) {
      const bool same_branch = bench.labels[i].substr(0, 2) == bench.labels[j].substr(0, 2);
      const double c = cos_d(bench.prototypes[i], bench.prototypes[j]);
      if (same_branch) {
        sibling_sum += c;
        sibling_n += 1;
      } else {
        cross_sum += c;
        cross_n += 1;
      }
    }
  }
  REQUIRE(sibling_n > 0);
  REQUIRE(cross_n > 0);
  CHECK(sibling_sum / sibling_n > cross_sum / cross_n + 0.2);
}

TEST_CASE("same-label noisy copies stay closer than cross-branch ones") {
  const Benchmark bench = gen_benchmark(small_spec());
  const auto v = [&](const std::string& id) {
    return to_unit_eigen(bench.kb_embeddings.at(id));
  };
  // Averages over a handful of entries; the margin is generous because the
  // per-sample noise is substantial by design.
  double same = 0.0, cross = 0.0;
  for (int i = 0; i < 5; ++i) {
    const auto a = v("e:" + bench.labels[0] + ":" + std::to_string(i));
    same += a.dot(v("e:" + bench.labels[0] + ":" + std::to_string(i + 1)));
    cross += a.dot(v("e:" + bench.labels[7] + ":" + std::to_string(i)));
  }
  CHECK(same / 5.0 > cross / 5.0 + 0.1);
}

TEST_CASE("save_benchmark writes the full artifact set") {
  oracles::TempDir dir;
  const auto spec = small_spec();
  const Benchmark bench = gen_benchmark(spec);
  const auto out = dir / "bench";
  save_benchmark(bench, spec, out);

  const KnowledgeBase kb = load_kb(out / "kb.jsonl");
  CHECK(kb.entries.size() == bench.kb.entries.size());
  CHECK(kb.entries[0].id == bench.kb.entries[0].id);

  const EmbeddingTable kb_emb = EmbeddingTable::load(out / "kb_emb.emb");
  CHECK(kb_emb.size() == bench.kb_embeddings.size());
  CHECK(kb_emb.at(kb.entries[0].id) == bench.kb_embeddings.at(kb.entries[0].id));
  CHECK(EmbeddingTable::load(out / "translated_emb.emb").size() == bench.kb.entries.size());
  CHECK(EmbeddingTable::load(out / "target_emb.emb").size() ==
        bench.target_queries.queries.size());

  const auto truth = load_truth(out / "targets.jsonl");
  REQUIRE(truth.size() == bench.target_truth.size());
  CHECK(truth[0].first == bench.target_queries.queries[0].id);
  CHECK(truth[0].second == bench.target_truth[0]);

  const auto j = nlohmann::json::parse(read_file(out / "bench.json"));
  CHECK(j.at("n_labels") == spec.n_labels);
  CHECK(j.at("sigma") == spec.sigma);
  CHECK(j.at("nuisance_dims") == spec.nuisance_dims);
  CHECK(j.at("nuisance_scale") == spec.nuisance_scale);
  CHECK(j.at("seed") == spec.seed);
  CHECK(j.at("labels").size() == bench.labels.size());

  SUBCASE("truth loader rejects empty and malformed files") {
    write_file_atomic(dir / "empty.jsonl", "");
    CHECK_THROWS_WITH_AS(load_truth(dir / "empty.jsonl"), doctest::Contains("no truth records"),
                         DataError);
    write_file_atomic(dir / "bad.jsonl", "{\"id\": \"x\"}\n");
    CHECK_THROWS_WITH_AS(load_truth(dir / "bad.jsonl"), doctest::Contains("bad truth record"),
                         DataError);
  }
}

TEST_CASE("nuisance_dims zero turns the structured noise off") {
  auto with = small_spec();
  auto without = small_spec();
  without.nuisance_dims = 0;
  const Benchmark a = gen_benchmark(with);
  const Benchmark b = gen_benchmark(without);
  const auto& id0 = a.kb_embeddings.rows()[0].id;
  CHECK(a.kb_embeddings.at(id0) != b.kb_embeddings.at(id0));

  // Equivalent spellings of "no structured noise" agree bitwise, because the
  // per-sample isotropic draws come first in each sample's substream.
  auto scale_zero = small_spec();
  scale_zero.nuisance_scale = 0.0;
  const Benchmark c = gen_benchmark(scale_zero);
  CHECK(c.kb_embeddings.at(id0) == b.kb_embeddings.at(id0));
}
