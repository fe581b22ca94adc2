#include "xlkb/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "xlkb/common.hpp"
#include "xlkb/embedder.hpp"
#include "xlkb/rng.hpp"

namespace xlkb {

std::string to_string(Optimizer o) {
  return o == Optimizer::sgd_momentum ? "sgd_momentum" : "adamw_lite";
}

Optimizer parse_optimizer(const std::string& s) {
  if (s == "sgd_momentum") return Optimizer::sgd_momentum;
  if (s == "adamw_lite") return Optimizer::adamw_lite;
  throw DataError("unknown optimizer \"" + s + "\"");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw DataError("epochs must be >= 0");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw DataError("learning_rate must be positive");
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) {
    throw DataError("warmup_fraction must lie in [0, 1)");
  }
  if (!(temperature > 0.0)) throw DataError("temperature must be positive");
  if (d_out < 0) throw DataError("d_out must be >= 0 (0 = input dimension)");
  if (momentum < 0.0 || momentum >= 1.0) throw DataError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw DataError("weight_decay must be >= 0");
}

namespace {

void check_group(const AdapterModel& adapter, const PairGroup& group) {
  if (group.negatives.empty()) throw DataError("pair group has no negatives");
  const Eigen::Index d = adapter.W.cols();
  if (group.anchor.size() != d || group.positive.size() != d) {
    throw DataError("pair group dimension does not match the adapter");
  }
  for (const auto& n : group.negatives) {
    if (n.size() != d) throw DataError("pair group dimension does not match the adapter");
  }
}

struct Projected {
  Eigen::VectorXd y;  // normalize(Wx)
  double norm = 0.0;  // ||Wx||
};

Projected project(const AdapterModel& adapter, const Eigen::VectorXd& x) {
  Projected p;
  Eigen::VectorXd z = adapter.W * x;
  p.norm = z.norm();
  if (!(p.norm > 0.0) || !std::isfinite(p.norm)) {
    throw DataError("adapter output has zero or non-finite norm");
  }
  p.y = z / p.norm;
  return p;
}

// Numerically stable -log softmax_p over {positive, negatives}: logits are
// cosine similarities divided by the temperature.
double group_loss_from_logits(std::span<const double> logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - max_logit);
  // logits[0] is the positive's.
  return -(logits[0] - max_logit) + std::log(sum);
}

}  // namespace

double infonce_group_loss(const AdapterModel& adapter, const PairGroup& group) {
  if (!(adapter.temperature > 0.0)) throw DataError("temperature must be positive");
  check_group(adapter, group);

  Projected a = project(adapter, group.anchor);
  std::vector<double> logits;
  logits.reserve(1 + group.negatives.size());
  logits.push_back(a.y.dot(project(adapter, group.positive).y) / adapter.temperature);
  for (const auto& n : group.negatives) {
    logits.push_back(a.y.dot(project(adapter, n).y) / adapter.temperature);
  }
  return group_loss_from_logits(logits);
}

double batch_loss(const AdapterModel& adapter, std::span<const PairGroup> groups) {
  if (groups.empty()) throw DataError("batch of pair groups is empty");
  double sum = 0.0;
  for (const auto& g : groups) sum += infonce_group_loss(adapter, g);
  return sum / static_cast<double>(groups.size());
}

Eigen::MatrixXd loss_gradient(const AdapterModel& adapter, std::span<const PairGroup> groups) {
  if (groups.empty()) throw DataError("batch of pair groups is empty");
  if (!(adapter.temperature > 0.0)) throw DataError("temperature must be positive");

  const double tau = adapter.temperature;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(adapter.W.rows(), adapter.W.cols());

  for (const auto& group : groups) {
    check_group(adapter, group);

    Projected a = project(adapter, group.anchor);
    std::vector<const Eigen::VectorXd*> inputs;  // positive first
    inputs.push_back(&group.positive);
    for (const auto& n : group.negatives) inputs.push_back(&n);

    std::vector<Projected> cand(inputs.size());
    std::vector<double> logits(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      cand[i] = project(adapter, *inputs[i]);
      logits[i] = a.y.dot(cand[i].y) / tau;
    }

    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - max_logit);

    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const double softmax_i = std::exp(logits[i] - max_logit) / denom;
      const double g = (softmax_i - (i == 0 ? 1.0 : 0.0)) / tau;
      // d s_i / dW through the anchor side and the candidate side; each
      // carries the Jacobian of the L2 normalization.
      Eigen::VectorXd through_anchor = (cand[i].y - a.y * a.y.dot(cand[i].y)) / a.norm;
      Eigen::VectorXd through_cand = (a.y - cand[i].y * cand[i].y.dot(a.y)) / cand[i].norm;
      grad.noalias() += g * (through_anchor * group.anchor.transpose() +
                             through_cand * inputs[i]->transpose());
    }
  }
  grad /= static_cast<double>(groups.size());
  return grad;
}

namespace {

class OptimizerState {
 public:
  OptimizerState(const TrainConfig& config, Eigen::Index rows, Eigen::Index cols)
      : config_(config),
        velocity_(Eigen::MatrixXd::Zero(rows, cols)),
        m_(Eigen::MatrixXd::Zero(rows, cols)),
        v_(Eigen::MatrixXd::Zero(rows, cols)) {}

  void step(Eigen::MatrixXd& W, const Eigen::MatrixXd& grad, double lr) {
    if (config_.optimizer == Optimizer::sgd_momentum) {
      velocity_ = config_.momentum * velocity_ + grad;
      W.noalias() -= lr * velocity_;
      return;
    }
    // adamw_lite: bias-corrected moments, decoupled weight decay.
    t_ += 1;
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
    v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    const double mc = 1.0 - std::pow(kBeta1, t_);
    const double vc = 1.0 - std::pow(kBeta2, t_);
    Eigen::MatrixXd m_hat = m_ / mc;
    Eigen::MatrixXd v_hat = v_ / vc;
    W -= lr * (m_hat.array() / (v_hat.array().sqrt() + kEps)).matrix();
    W -= lr * config_.weight_decay * W;
  }

 private:
  const TrainConfig& config_;
  Eigen::MatrixXd velocity_;
  Eigen::MatrixXd m_;
  Eigen::MatrixXd v_;
  int t_ = 0;
};

double scheduled_lr(const TrainConfig& config, std::size_t step, std::size_t total_steps) {
  const auto warmup_steps =
      static_cast<std::size_t>(config.warmup_fraction * static_cast<double>(total_steps));
  if (warmup_steps == 0 || step >= warmup_steps) return config.learning_rate;
  return config.learning_rate * static_cast<double>(step + 1) /
         static_cast<double>(warmup_steps);
}

}  // namespace

TrainResult train(std::span<const PairGroup> groups, const TrainConfig& config,
                  const EpochEvalHook& hook) {
  config.validate();
  if (groups.empty()) throw DataError("no pair groups to train on");

  const Eigen::Index d_in = groups.front().anchor.size();
  const int d_out = config.d_out == 0 ? static_cast<int>(d_in) : config.d_out;

  TrainResult result;
  result.adapter =
      AdapterModel::init(static_cast<int>(d_in), d_out, config.temperature, config.seed);

  // Baseline row: loss and (optionally) metrics of the untouched adapter.
  {
    EpochLogEntry entry;
    entry.epoch = 0;
    entry.mean_loss = batch_loss(result.adapter, groups);
    if (hook) {
      entry.metrics = hook(result.adapter);
      entry.has_metrics = true;
    }
    result.log.push_back(std::move(entry));
  }
  if (config.epochs == 0) return result;

  const std::size_t n = groups.size();
  const std::size_t batches_per_epoch =
      (n + static_cast<std::size_t>(config.batch_size) - 1) /
      static_cast<std::size_t>(config.batch_size);
  const std::size_t total_steps = batches_per_epoch * static_cast<std::size_t>(config.epochs);

  OptimizerState optimizer(config, result.adapter.W.rows(), result.adapter.W.cols());
  Rng root(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::size_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng epoch_rng = root.substream(static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      std::vector<PairGroup> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(groups[order[i]]);

      loss_sum += batch_loss(result.adapter, batch) * static_cast<double>(batch.size());
      Eigen::MatrixXd grad = loss_gradient(result.adapter, batch);
      optimizer.step(result.adapter.W, grad, scheduled_lr(config, step, total_steps));
      step += 1;
    }

    EpochLogEntry entry;
    entry.epoch = epoch;
    entry.mean_loss = loss_sum / static_cast<double>(n);
    if (hook) {
      entry.metrics = hook(result.adapter);
      entry.has_metrics = true;
    }
    result.log.push_back(std::move(entry));
  }
  return result;
}

GroupBuildResult build_groups(std::span<const ContrastivePair> pairs,
                              const TextEmbedFn& anchor_embed,
                              const TextEmbedFn& candidate_embed) {
  struct RawGroup {
    const ContrastivePair* positive = nullptr;
    std::vector<const ContrastivePair*> negatives;
  };
  std::vector<std::string> group_order;
  std::unordered_map<std::string, RawGroup> raw;
  for (const auto& p : pairs) {
    auto [it, inserted] = raw.try_emplace(p.group_id);
    if (inserted) group_order.push_back(p.group_id);
    if (p.polarity == Polarity::positive) {
      if (it->second.positive != nullptr) {
        throw DataError("group \"" + p.group_id + "\" has more than one positive pair");
      }
      it->second.positive = &p;
    } else {
      it->second.negatives.push_back(&p);
    }
  }

  GroupBuildResult result;
  for (const auto& gid : group_order) {
    const RawGroup& rg = raw.at(gid);
    if (rg.positive == nullptr) {
      throw DataError("group \"" + gid + "\" has no positive pair");
    }
    if (rg.negatives.empty()) {
      result.skipped_no_negatives += 1;
      continue;
    }
    PairGroup g;
    g.anchor = to_unit_eigen(anchor_embed(rg.positive->anchor_id, rg.positive->anchor_text));
    g.positive =
        to_unit_eigen(candidate_embed(rg.positive->candidate_id, rg.positive->candidate_text));
    if (g.positive.size() != g.anchor.size()) {
      throw DataError("group \"" + gid + "\" mixes embedding dimensions");
    }
    for (const auto* neg : rg.negatives) {
      g.negatives.push_back(to_unit_eigen(candidate_embed(neg->candidate_id, neg->candidate_text)));
      if (g.negatives.back().size() != g.anchor.size()) {
        throw DataError("group \"" + gid + "\" mixes embedding dimensions");
      }
    }
    result.groups.push_back(std::move(g));
  }
  return result;
}

void write_epoch_log(const std::filesystem::path& path, std::span<const EpochLogEntry> log,
                     std::span<const int> ks) {
  std::string out = "epoch,mean_loss";
  for (int k : ks) out += ",recall@" + std::to_string(k);
  out += ",mrr\n";
  for (const auto& entry : log) {
    out += std::to_string(entry.epoch);
    out += ',';
    out += format_double(entry.mean_loss);
    for (int k : ks) {
      out += ',';
      if (entry.has_metrics) {
        auto it = entry.metrics.recall.find(k);
        if (it != entry.metrics.recall.end()) out += format_double(it->second);
      }
    }
    out += ',';
    if (entry.has_metrics) out += format_double(entry.metrics.mrr);
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace xlkb
