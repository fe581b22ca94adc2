#include "xlkb/benchmark.hpp"

#include <cmath>

#include <json.hpp>

#include "xlkb/common.hpp"
#include "xlkb/rng.hpp"

namespace xlkb {

void BenchmarkSpec::validate() const {
  if (n_labels < 1) throw DataError("n_labels must be >= 1");
  if (queries_per_label < 1) throw DataError("queries_per_label must be >= 1");
  if (dimension < 1) throw DataError("dimension must be >= 1");
  if (sigma < 0.0) throw DataError("sigma must be >= 0");
  if (branches < 1 || branches > n_labels) {
    throw DataError("branches must lie in [1, n_labels]");
  }
  if (leaf_scale <= 0.0) throw DataError("leaf_scale must be positive");
  if (eval_per_label < 1) throw DataError("eval_per_label must be >= 1");
  if (nuisance_dims < 0 || nuisance_dims >= dimension) {
    throw DataError("nuisance_dims must lie in [0, dimension)");
  }
  if (nuisance_scale < 0.0) throw DataError("nuisance_scale must be >= 0");
}

namespace {

Eigen::VectorXd random_unit(Rng& rng, int dimension) {
  Eigen::VectorXd v(dimension);
  for (int i = 0; i < dimension; ++i) v[i] = rng.next_normal();
  const double norm = v.norm();
  if (!(norm > 0.0)) throw DataError("degenerate random direction");
  return v / norm;
}

// prototype + sigma-scaled noise, re-normalized. The isotropic part is
// divided by sqrt(d) so its expected length is sigma regardless of d; the
// structured part adds sigma * nuisance_scale worth of variation inside the
// shared nuisance subspace.
std::vector<float> noisy_copy(const Eigen::VectorXd& prototype, double sigma,
                              const std::vector<Eigen::VectorXd>& nuisance_dirs,
                              double nuisance_scale, Rng& rng) {
  const int d = static_cast<int>(prototype.size());
  Eigen::VectorXd v = prototype;
  const double iso = sigma / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < d; ++i) v[i] += iso * rng.next_normal();
  if (!nuisance_dirs.empty() && nuisance_scale > 0.0) {
    const double scale =
        sigma * nuisance_scale / std::sqrt(static_cast<double>(nuisance_dirs.size()));
    for (const Eigen::VectorXd& dir : nuisance_dirs) v += scale * rng.next_normal() * dir;
  }
  const double norm = v.norm();
  if (!(norm > 0.0)) throw DataError("degenerate noisy sample");
  v /= norm;
  std::vector<float> out(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  return out;
}

std::string zero_pad(int value, std::size_t width) {
  std::string s = std::to_string(value);
  while (s.size() < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

Benchmark gen_benchmark(const BenchmarkSpec& spec) {
  spec.validate();

  Benchmark bench;
  bench.kb.language = "en";
  bench.target_queries.language = "xx";
  bench.kb_embeddings = EmbeddingTable(static_cast<std::size_t>(spec.dimension));
  bench.translated_embeddings = EmbeddingTable(static_cast<std::size_t>(spec.dimension));
  bench.target_embeddings = EmbeddingTable(static_cast<std::size_t>(spec.dimension));

  Rng root(spec.seed);
  Rng branch_rng = root.substream("branch-dirs");
  Rng leaf_rng = root.substream("leaf-dirs");
  Rng nuisance_rng = root.substream("nuisance-dirs");

  std::vector<Eigen::VectorXd> branch_dirs;
  branch_dirs.reserve(static_cast<std::size_t>(spec.branches));
  for (int b = 0; b < spec.branches; ++b) {
    branch_dirs.push_back(random_unit(branch_rng, spec.dimension));
  }

  std::vector<Eigen::VectorXd> nuisance_dirs;
  nuisance_dirs.reserve(static_cast<std::size_t>(spec.nuisance_dims));
  for (int i = 0; i < spec.nuisance_dims; ++i) {
    nuisance_dirs.push_back(random_unit(nuisance_rng, spec.dimension));
  }

  const int leaves_per_branch = (spec.n_labels + spec.branches - 1) / spec.branches;
  const std::size_t pad = std::max<std::size_t>(2, std::to_string(spec.n_labels - 1).size());

  for (int l = 0; l < spec.n_labels; ++l) {
    const int b = l / leaves_per_branch;
    bench.labels.push_back("c" + std::to_string(b) + "_q" + zero_pad(l, pad));
    Eigen::VectorXd proto = branch_dirs[static_cast<std::size_t>(b)] +
                            spec.leaf_scale * random_unit(leaf_rng, spec.dimension);
    bench.prototypes.push_back(proto / proto.norm());
  }

  for (int l = 0; l < spec.n_labels; ++l) {
    const std::string& label = bench.labels[static_cast<std::size_t>(l)];
    const Eigen::VectorXd& proto = bench.prototypes[static_cast<std::size_t>(l)];

    for (int i = 0; i < spec.queries_per_label; ++i) {
      const std::string id = "e:" + label + ":" + std::to_string(i);
      bench.kb.entries.push_back({id, label + " example " + std::to_string(i), label});
      Rng kb_rng = root.substream("kb:" + id);
      bench.kb_embeddings.insert(
          {id, noisy_copy(proto, spec.sigma, nuisance_dirs, spec.nuisance_scale, kb_rng)});
      Rng trans_rng = root.substream("trans:" + id);
      bench.translated_embeddings.insert(
          {id, noisy_copy(proto, spec.sigma, nuisance_dirs, spec.nuisance_scale, trans_rng)});
    }

    for (int j = 0; j < spec.eval_per_label; ++j) {
      const std::string id = "t:" + label + ":" + std::to_string(j);
      bench.target_queries.queries.push_back({id, label + " target " + std::to_string(j)});
      bench.target_truth.push_back(label);
      Rng target_rng = root.substream("target:" + id);
      bench.target_embeddings.insert(
          {id, noisy_copy(proto, spec.sigma, nuisance_dirs, spec.nuisance_scale, target_rng)});
    }
  }
  return bench;
}

void save_benchmark(const Benchmark& bench, const BenchmarkSpec& spec,
                    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_kb(bench.kb, out_dir / "kb.jsonl");

  std::string targets;
  for (std::size_t i = 0; i < bench.target_queries.queries.size(); ++i) {
    nlohmann::ordered_json j;
    j["id"] = bench.target_queries.queries[i].id;
    j["text"] = bench.target_queries.queries[i].text;
    j["label"] = bench.target_truth[i];
    targets += j.dump();
    targets += '\n';
  }
  write_file_atomic(out_dir / "targets.jsonl", targets);

  bench.kb_embeddings.save_binary(out_dir / "kb_emb.emb");
  bench.translated_embeddings.save_binary(out_dir / "translated_emb.emb");
  bench.target_embeddings.save_binary(out_dir / "target_emb.emb");

  nlohmann::ordered_json j;
  j["n_labels"] = spec.n_labels;
  j["queries_per_label"] = spec.queries_per_label;
  j["dimension"] = spec.dimension;
  j["sigma"] = spec.sigma;
  j["branches"] = spec.branches;
  j["leaf_scale"] = spec.leaf_scale;
  j["eval_per_label"] = spec.eval_per_label;
  j["nuisance_dims"] = spec.nuisance_dims;
  j["nuisance_scale"] = spec.nuisance_scale;
  j["seed"] = spec.seed;
  j["labels"] = bench.labels;
  write_file_atomic(out_dir / "bench.json", j.dump(2) + "\n");
}

std::vector<std::pair<std::string, std::string>> load_truth(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> truth;
  for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line_no) {
    try {
      truth.emplace_back(j.at("id").get<std::string>(), j.at("label").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad truth record: " +
                      e.what());
    }
  });
  if (truth.empty()) throw DataError(path.string() + ": no truth records");
  return truth;
}

}  // namespace xlkb
