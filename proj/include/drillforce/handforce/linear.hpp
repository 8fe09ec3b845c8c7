#pragma once

#include <span>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "drillforce/handforce/common.hpp"
#include "drillforce/linalg.hpp"

namespace drillforce::handforce {

/// leak = M * delta + bias
struct LinearHandModel {
  Mat6 M = Mat6::Zero();
  Wrench bias = Wrench::Zero();

  Wrench predict(const Wrench& delta) const { return M * delta + bias; }
  std::size_t parameter_count() const { return 42; }
};

/// Ordinary least squares over all six output channels at once.
inline LinearHandModel fit_linear(std::span<const HandPair> pairs) {
  if (pairs.size() < 7) {
    throw DataError("fit_linear: need at least 7 pairs, got " + std::to_string(pairs.size()));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd design(n, 7);
  Eigen::MatrixXd rhs(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    design.row(i).head<6>() = p.delta.transpose();
    design(i, 6) = 1.0;
    rhs.row(i) = p.target.transpose();
  }
  // Column scaling keeps N and Nmm inputs comparable for the rank test.
  Eigen::VectorXd col_scale = design.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < 7; ++c)
    if (col_scale(c) == 0.0) col_scale(c) = 1.0;
  const Eigen::MatrixXd scaled = design * col_scale.cwiseInverse().asDiagonal();
  const auto ls = linalg::solve_least_squares(scaled, rhs, 1e-10);
  if (!ls.full_rank) {
    Eigen::MatrixXd centered(n, 6);
    Wrench mean = Wrench::Zero();
    for (const auto& p : pairs) mean += p.delta;
    mean /= static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) centered.row(i) = (pairs[static_cast<std::size_t>(i)].delta - mean).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    std::ostringstream os;
    os << "fit_linear: rank-deficient wrist deltas (rank " << ls.rank << " of 7 incl. bias); "
       << "unexcited directions:";
    os.precision(3);
    for (Eigen::Index k = 0; k < 6; ++k) {
      if (sv(k) <= 1e-9 * std::max(sv(0), 1e-300)) {
        os << " [";
        for (int c = 0; c < 6; ++c) os << (c ? " " : "") << kChannelNames[c] << "=" << svd.matrixV()(c, k);
        os << "]";
      }
    }
    throw DataError(os.str());
  }
  const Eigen::MatrixXd sol = col_scale.cwiseInverse().asDiagonal() * ls.solution;  // 7 x 6
  LinearHandModel m;
  m.M = sol.topRows(6).transpose();
  m.bias = sol.row(6).transpose();
  return m;
}

}  // namespace drillforce::handforce
