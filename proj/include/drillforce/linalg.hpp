#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace drillforce::linalg {

struct LeastSquaresResult {
  Eigen::MatrixXd solution;  // cols x rhs
  Eigen::Index rank = 0;
  bool full_rank = false;
};

/// Solves min ||A X - B||_F column by column with a column-pivoted Householder
/// QR of A. Rank is judged relative to the largest pivot.
inline LeastSquaresResult solve_least_squares(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                              double rank_tolerance = 1e-10) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(rank_tolerance);
  LeastSquaresResult r;
  r.rank = qr.rank();
  r.full_rank = r.rank == a.cols();
  if (r.full_rank) r.solution = qr.solve(b);
  return r;
}

}  // namespace drillforce::linalg
