#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "xlkb/benchmark.hpp"
#include "xlkb/pair_miner.hpp"
#include "xlkb/trainer.hpp"

namespace xlkb {

struct AblationConfig {
  BenchmarkSpec bench;
  MiningConfig mining;  // strategy field is overridden per row
  TrainConfig train;
  double index_fraction = 0.3;
  std::vector<MiningStrategy> strategies = {MiningStrategy::hybrid, MiningStrategy::random_only,
                                            MiningStrategy::hard_only,
                                            MiningStrategy::hardest_only};
  int n_seeds = 5;
  // Table columns: Top-1 / Top-3 / Top-10 and MRR at depth max(ks).
  std::vector<int> ks = {1, 3, 10};

  void validate() const;
};

struct AblationCell {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over seeds
};

struct AblationRow {
  MiningStrategy strategy = MiningStrategy::hybrid;
  std::map<int, AblationCell> recall;  // k -> cell
  AblationCell mrr;
  std::vector<double> per_seed_mrr;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<int> ks;
  int n_seeds = 0;
  // Expected ordering is mean MRR(hybrid) >= mean MRR(hardest_only); when a
  // parameterization violates it the table says so with the measured means
  // instead of failing.
  bool trend_checked = false;
  bool trend_violated = false;
  std::string trend_note;

  nlohmann::ordered_json to_json() const;
  std::string render_text() const;
};

// Runs the full pipeline (generate benchmark, split, mine, train, evaluate)
// for every strategy x seed and aggregates mean +/- stddev per metric. Run
// r uses benchmark/split/mine/train seed bench.seed + r, so strategies are
// compared on identical data within a run.
AblationTable run_ablation(const AblationConfig& config);

}  // namespace xlkb
