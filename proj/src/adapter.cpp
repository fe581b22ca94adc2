#include "xlkb/adapter.hpp"

#include <cmath>

#include <json.hpp>

#include "xlkb/common.hpp"
#include "xlkb/rng.hpp"

namespace xlkb {

bool AdapterModel::is_identity() const {
  return W.rows() == W.cols() && W.isIdentity(0.0);
}

Eigen::VectorXd AdapterModel::apply(const Eigen::VectorXd& x) const {
  if (x.size() != W.cols()) {
    throw DataError("adapter expects dimension " + std::to_string(W.cols()) + ", got " +
                    std::to_string(x.size()));
  }
  Eigen::VectorXd z = W * x;
  const double norm = z.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DataError("adapter output has zero or non-finite norm");
  }
  return z / norm;
}

std::vector<double> AdapterModel::apply(std::span<const double> x) const {
  return from_eigen(apply(to_eigen(x)));
}

void AdapterModel::save(const std::filesystem::path& path) const {
  if (!(temperature > 0.0)) throw DataError("adapter temperature must be positive");
  nlohmann::ordered_json j;
  j["d_in"] = d_in();
  j["d_out"] = d_out();
  j["temperature"] = temperature;
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(W.size()));
  for (int r = 0; r < W.rows(); ++r) {
    for (int c = 0; c < W.cols(); ++c) weights.push_back(W(r, c));
  }
  j["weights"] = weights;
  write_file_atomic(path, j.dump() + "\n");
}

AdapterModel AdapterModel::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad adapter file: " + e.what());
  }
  AdapterModel model;
  try {
    const int d_in = j.at("d_in").get<int>();
    const int d_out = j.at("d_out").get<int>();
    model.temperature = j.at("temperature").get<double>();
    const auto weights = j.at("weights").get<std::vector<double>>();
    if (d_in < 1 || d_out < 1) throw DataError("adapter dimensions must be positive");
    if (weights.size() != static_cast<std::size_t>(d_in) * static_cast<std::size_t>(d_out)) {
      throw DataError("adapter has " + std::to_string(weights.size()) + " weights, expected " +
                      std::to_string(d_in * d_out));
    }
    model.W.resize(d_out, d_in);
    for (int r = 0; r < d_out; ++r) {
      for (int c = 0; c < d_in; ++c) {
        const double w = weights[static_cast<std::size_t>(r) * d_in + c];
        if (!std::isfinite(w)) throw DataError("adapter weight is not finite");
        model.W(r, c) = w;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad adapter file: " + e.what());
  }
  if (!(model.temperature > 0.0)) {
    throw DataError(path.string() + ": adapter temperature must be positive");
  }
  return model;
}

AdapterModel AdapterModel::init(int d_in, int d_out, double temperature, std::uint64_t seed) {
  if (d_in < 1 || d_out < 1) throw DataError("adapter dimensions must be positive");
  if (!(temperature > 0.0)) throw DataError("adapter temperature must be positive");
  AdapterModel model;
  model.temperature = temperature;
  if (d_in == d_out) {
    model.W = Eigen::MatrixXd::Identity(d_out, d_in);
  } else {
    Rng rng = Rng(seed).substream("adapter-init");
    const double stddev = 1.0 / std::sqrt(static_cast<double>(d_in));
    model.W.resize(d_out, d_in);
    for (int r = 0; r < d_out; ++r) {
      for (int c = 0; c < d_in; ++c) model.W(r, c) = rng.next_normal() * stddev;
    }
  }
  return model;
}

Eigen::VectorXd to_eigen(std::span<const double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

Eigen::VectorXd to_eigen(std::span<const float> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = static_cast<double>(values[i]);
  }
  return v;
}

std::vector<double> from_eigen(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_unit_eigen(std::span<const float> values) {
  Eigen::VectorXd v = to_eigen(values);
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DataError("embedding vector has zero or non-finite norm");
  }
  return v / norm;
}

}  // namespace xlkb
