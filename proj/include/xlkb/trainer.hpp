#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xlkb/adapter.hpp"
#include "xlkb/embedder.hpp"
#include "xlkb/pair_miner.hpp"

namespace xlkb {

// One InfoNCE group: an anchor, its positive and m >= 1 explicit negatives,
// all unit-norm in the frozen embedding space.
struct PairGroup {
  Eigen::VectorXd anchor;
  Eigen::VectorXd positive;
  std::vector<Eigen::VectorXd> negatives;
};

enum class Optimizer { sgd_momentum, adamw_lite };

std::string to_string(Optimizer o);
Optimizer parse_optimizer(const std::string& s);

struct TrainConfig {
  int epochs = 15;
  int batch_size = 32;  // in groups
  double learning_rate = 2e-5;
  double warmup_fraction = 0.1;  // of total steps, linear ramp
  double temperature = 0.05;
  // Output dimension; 0 means same as the input dimension (identity init,
  // so an untrained adapter is exactly the frozen baseline).
  int d_out = 0;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::sgd_momentum;
  double momentum = 0.9;
  double weight_decay = 0.01;  // adamw_lite only

  void validate() const;
};

double infonce_group_loss(const AdapterModel& adapter, const PairGroup& group);
double batch_loss(const AdapterModel& adapter, std::span<const PairGroup> groups);

// Exact gradient of the mean group loss with respect to W, including the
// Jacobian of the output normalization. Fixed summation order.
Eigen::MatrixXd loss_gradient(const AdapterModel& adapter, std::span<const PairGroup> groups);

// Retrieval metrics observed after an epoch, supplied by an external hook so
// training stays independent of the retrieval machinery.
struct EvalSnapshot {
  std::map<int, double> recall;  // k -> recall@k
  double mrr = 0.0;
};

using EpochEvalHook = std::function<EvalSnapshot(const AdapterModel&)>;

struct EpochLogEntry {
  int epoch = 0;  // 0 is the pre-training baseline row
  double mean_loss = 0.0;
  bool has_metrics = false;
  EvalSnapshot metrics;
};

struct TrainResult {
  AdapterModel adapter;
  std::vector<EpochLogEntry> log;
};

TrainResult train(std::span<const PairGroup> groups, const TrainConfig& config,
                  const EpochEvalHook& hook = nullptr);

struct GroupBuildResult {
  std::vector<PairGroup> groups;
  std::size_t skipped_no_negatives = 0;
};

// Regroups pair records by group_id (first-appearance order). A group
// without a positive is an error; a group without negatives is skipped and
// counted. Vectors are L2-normalized on the way in.
GroupBuildResult build_groups(std::span<const ContrastivePair> pairs,
                              const TextEmbedFn& anchor_embed,
                              const TextEmbedFn& candidate_embed);

// CSV: epoch,mean_loss,recall@1,recall@3,recall@5,recall@10,mrr with metric
// cells left empty for rows without an eval snapshot.
void write_epoch_log(const std::filesystem::path& path, std::span<const EpochLogEntry> log,
                     std::span<const int> ks);

}  // namespace xlkb
