#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace xlkb {

// Linear embedding adapter: applying it means L2-normalize(W·x).
// Temperature is carried with the model because the loss it was trained
// under is part of what the weights mean.
struct AdapterModel {
  Eigen::MatrixXd W;  // d_out × d_in
  double temperature = 0.05;

  int d_in() const { return static_cast<int>(W.cols()); }
  int d_out() const { return static_cast<int>(W.rows()); }
  bool is_identity() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  std::vector<double> apply(std::span<const double> x) const;

  void save(const std::filesystem::path& path) const;
  static AdapterModel load(const std::filesystem::path& path);

  // Identity when square (untrained adapter = frozen baseline), otherwise
  // Gaussian entries with variance 1/d_in.
  static AdapterModel init(int d_in, int d_out, double temperature, std::uint64_t seed);
};

Eigen::VectorXd to_eigen(std::span<const double> values);
Eigen::VectorXd to_eigen(std::span<const float> values);
std::vector<double> from_eigen(const Eigen::VectorXd& v);

// Widens to double and L2-normalizes; throws on zero or non-finite norm.
Eigen::VectorXd to_unit_eigen(std::span<const float> values);

}  // namespace xlkb
