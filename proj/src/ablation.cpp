#include "xlkb/ablation.hpp"

#include <algorithm>
#include <cmath>

#include "xlkb/common.hpp"
#include "xlkb/label_sim.hpp"
#include "xlkb/retrieval.hpp"

namespace xlkb {

void AblationConfig::validate() const {
  bench.validate();
  train.validate();
  if (strategies.empty()) throw DataError("ablation needs at least one strategy");
  if (n_seeds < 1) throw DataError("n_seeds must be >= 1");
  if (ks.empty()) throw DataError("ablation needs at least one k");
  if (!(index_fraction > 0.0 && index_fraction < 1.0)) {
    throw DataError("index_fraction must lie in (0, 1)");
  }
}

namespace {

AblationCell aggregate(const std::vector<double>& values) {
  AblationCell cell;
  const double n = static_cast<double>(values.size());
  for (double v : values) cell.mean += v;
  cell.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
    cell.stddev = std::sqrt(ss / (n - 1.0));
  }
  return cell;
}

std::string format_cell(const AblationCell& cell) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4f \xc2\xb1 %.4f", cell.mean, cell.stddev);
  return buf;
}

}  // namespace

AblationTable run_ablation(const AblationConfig& config) {
  config.validate();

  AblationTable table;
  table.ks = config.ks;
  table.n_seeds = config.n_seeds;
  const int depth = *std::max_element(config.ks.begin(), config.ks.end());

  // metric samples: strategy index -> k -> per-seed values
  std::vector<std::map<int, std::vector<double>>> recall_samples(config.strategies.size());
  std::vector<std::vector<double>> mrr_samples(config.strategies.size());

  for (int run = 0; run < config.n_seeds; ++run) {
    const std::uint64_t run_seed = config.bench.seed + static_cast<std::uint64_t>(run);

    BenchmarkSpec bench_spec = config.bench;
    bench_spec.seed = run_seed;
    Benchmark bench = gen_benchmark(bench_spec);

    SplitOptions split_options;
    split_options.index_fraction = config.index_fraction;
    split_options.seed = run_seed;
    SplitResult split = split_kb(bench.kb, split_options);

    SimilarityScorer scorer = SimilarityScorer::lexical();
    LabelSimilarityMatrix sim = similarity_matrix(scorer, bench.labels);

    // Anchor rows keep their source text; the simulated translation lives in
    // the embedding table keyed by the same ids.
    std::map<std::string, std::string> translations;
    for (const auto& e : split.split.training_set) translations[e.id] = e.text;

    TextEmbedFn anchor_embed = [&bench](const std::string& id, const std::string&) {
      return bench.translated_embeddings.at(id);
    };
    TextEmbedFn kb_embed = [&bench](const std::string& id, const std::string&) {
      return bench.kb_embeddings.at(id);
    };

    std::vector<EvalCase> cases;
    cases.reserve(bench.target_queries.queries.size());
    for (std::size_t i = 0; i < bench.target_queries.queries.size(); ++i) {
      EvalCase c;
      c.query_id = bench.target_queries.queries[i].id;
      c.vector = bench.target_embeddings.at(c.query_id);
      c.truth = bench.target_truth[i];
      cases.push_back(std::move(c));
    }

    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      MiningConfig mining = config.mining;
      mining.strategy = config.strategies[s];
      mining.k = -1;
      mining.seed = run_seed;
      MiningResult mined = mine_dataset(split.split, translations, sim, mining);

      GroupBuildResult groups = build_groups(mined.pairs, anchor_embed, kb_embed);
      if (groups.groups.empty()) {
        throw DataError("strategy " + to_string(config.strategies[s]) +
                        " produced no trainable groups");
      }

      TrainConfig train_config = config.train;
      train_config.seed = run_seed;
      TrainResult trained = train(groups.groups, train_config);

      RetrievalIndex index = build_index(split.split.index_set, kb_embed, &trained.adapter);
      EvalOutcome outcome =
          evaluate(index, cases, config.ks, &trained.adapter, Relevance::label);

      for (int k : config.ks) recall_samples[s][k].push_back(outcome.report.recall_at.at(k));
      mrr_samples[s].push_back(outcome.report.mrr);
    }
  }

  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    AblationRow row;
    row.strategy = config.strategies[s];
    for (int k : config.ks) row.recall[k] = aggregate(recall_samples[s].at(k));
    row.mrr = aggregate(mrr_samples[s]);
    row.per_seed_mrr = mrr_samples[s];
    table.rows.push_back(std::move(row));
  }

  auto find_row = [&table](MiningStrategy strategy) -> const AblationRow* {
    for (const auto& row : table.rows) {
      if (row.strategy == strategy) return &row;
    }
    return nullptr;
  };
  const AblationRow* hybrid = find_row(MiningStrategy::hybrid);
  const AblationRow* hardest = find_row(MiningStrategy::hardest_only);
  if (hybrid != nullptr && hardest != nullptr) {
    table.trend_checked = true;
    char note[160];
    if (hybrid->mrr.mean >= hardest->mrr.mean) {
      std::snprintf(note, sizeof(note),
                    "trend holds: mean MRR hybrid %.4f >= hardest_only %.4f (depth %d)",
                    hybrid->mrr.mean, hardest->mrr.mean, depth);
    } else {
      table.trend_violated = true;
      std::snprintf(note, sizeof(note),
                    "TREND VIOLATED: mean MRR hybrid %.4f < hardest_only %.4f (depth %d)",
                    hybrid->mrr.mean, hardest->mrr.mean, depth);
    }
    table.trend_note = note;
  }
  return table;
}

nlohmann::ordered_json AblationTable::to_json() const {
  nlohmann::ordered_json j;
  j["n_seeds"] = n_seeds;
  j["ks"] = ks;
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["strategy"] = to_string(row.strategy);
    for (const auto& [k, cell] : row.recall) {
      r["recall@" + std::to_string(k)] = {{"mean", cell.mean}, {"stddev", cell.stddev}};
    }
    r["mrr"] = {{"mean", row.mrr.mean}, {"stddev", row.mrr.stddev}};
    r["per_seed_mrr"] = row.per_seed_mrr;
    rows_json.push_back(std::move(r));
  }
  j["rows"] = rows_json;
  j["trend_checked"] = trend_checked;
  j["trend_violated"] = trend_violated;
  j["trend_note"] = trend_note;
  j["reference_reported"] = {{"recall@1", 0.5450}, {"recall@3", 0.7410}, {"recall@10", 0.8842},
                             {"mrr", 0.6653}};
  return j;
}

std::string AblationTable::render_text() const {
  std::string out;
  out += "strategy        ";
  for (int k : ks) {
    std::string head = "recall@" + std::to_string(k);
    head.resize(18, ' ');
    out += head;
  }
  out += "mrr\n";
  for (const auto& row : rows) {
    std::string name = to_string(row.strategy);
    name.resize(16, ' ');
    out += name;
    for (int k : ks) {
      std::string cell = format_cell(row.recall.at(k));
      // The +/- sign is two bytes of UTF-8; pad by display width.
      cell.append(18 - (cell.size() - 1), ' ');
      out += cell;
    }
    out += format_cell(row.mrr);
    out += '\n';
  }
  if (trend_checked) {
    out += trend_note;
    out += '\n';
  }
  out += "reference (reported): Top-1 0.5450, Top-3 0.7410, Top-10 0.8842, MRR 0.6653\n";
  return out;
}

}  // namespace xlkb
