#pragma once

#include <string>

#include "knc/core.hpp"

namespace knc {

/// Real symmetric positive-semidefinite D x D form acting on winding vectors.
class MetricMatrix {
 public:
  explicit MetricMatrix(const RealMatrix& q) {
    require(q.rows() >= 1 && q.rows() == q.cols(), ErrorKind::invalid_dimension, "metric must be square, D >= 1");
    require(q.allFinite(), ErrorKind::invalid_input, "metric has non-finite entries");
    const double asym = max_abs(RealMatrix(q - q.transpose()));
    require(asym <= 1e-12 * (1.0 + max_abs(q)), ErrorKind::invalid_input,
            "metric is not symmetric (residual " + std::to_string(asym) + ")");
    q_ = (q + q.transpose()) * 0.5;
    const double lo = min_eigenvalue();
    require(lo >= -1e-10 * (1.0 + std::abs(trace())), ErrorKind::not_psd,
            "metric has negative eigenvalue " + std::to_string(lo));
  }

  static MetricMatrix identity(Eigen::Index dim) { return MetricMatrix(RealMatrix::Identity(dim, dim)); }

  Eigen::Index dim() const { return q_.rows(); }
  const RealMatrix& matrix() const { return q_; }
  double trace() const { return q_.trace(); }

  RealVector eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<RealMatrix>(q_, Eigen::EigenvaluesOnly).eigenvalues();
  }
  double min_eigenvalue() const { return eigenvalues()(0); }

  /// (y, Q y)
  double quadratic_form(const RealVector& y) const { return y.dot(q_ * y); }

 private:
  RealMatrix q_;
};

}  // namespace knc
