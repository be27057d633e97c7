#pragma once

// Closest-vector machinery for integer lattices under a positive-definite
// quadratic form G = L^T L: the form is embedded as the Euclidean lattice
// {L k : k in Z^D}, LLL-reduced, and searched with Babai's nearest-plane
// rounding or Schnorr-Euchner enumeration. A brute-force box search over the
// form itself serves as the independent oracle.
//
// Ties between equally distant lattice points resolve to the lexicographically
// smallest k in original coordinates.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "knc/core.hpp"

namespace knc {

enum class CvpMethod { exact, babai, bruteforce };

constexpr std::string_view to_string(CvpMethod m) {
  switch (m) {
    case CvpMethod::exact: return "exact";
    case CvpMethod::babai: return "babai";
    case CvpMethod::bruteforce: return "bruteforce";
  }
  return "unknown";
}

struct CvpSolution {
  IntVector k;  // original coordinates
  double distance = 0.0;
  CvpMethod method = CvpMethod::exact;
};

/// LLL-reduced basis of the lattice spanned by the columns of `original`.
/// columns = original * transform, so reduced coordinates x map back to
/// original coordinates k = transform * x.
struct LatticeBasis {
  Eigen::Index dim = 0;
  RealMatrix original;
  RealMatrix columns;
  IntMatrix transform;
  double delta = 0.75;
  double condition = 1.0;  // 2-norm condition number of `original`
  // columns = ortho * upper, upper has a positive diagonal.
  RealMatrix ortho;
  RealMatrix upper;
};

inline constexpr double kDefaultLllDelta = 0.75;
inline constexpr int kDefaultEnumerationCap = 16;

inline std::string babai_caveat(Eigen::Index dim) {
  return "babai solver is approximate: distances are upper bounds within a factor 2^(D/2) = 2^" +
         std::to_string(dim) + "/2 of the exact minimum";
}

/// L with L^T L = q + ridge I, via the symmetric eigendecomposition
/// (L = sqrt(Lambda) V^T). Eigenvalues down to -1e-8 trace are clamped to 0.
inline RealMatrix psd_factor(const RealMatrix& q, double ridge) {
  require(q.rows() >= 1 && q.rows() == q.cols(), ErrorKind::invalid_dimension, "psd_factor needs a square matrix");
  require(q.allFinite() && ridge >= 0.0 && std::isfinite(ridge), ErrorKind::invalid_input,
          "psd_factor needs finite input and ridge >= 0");
  const Eigen::Index d = q.rows();
  const RealMatrix sym = (q + q.transpose()) * 0.5;
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(sym);
  require(es.info() == Eigen::Success, ErrorKind::numerical_failure, "psd_factor eigensolver failed");
  const double tr = sym.trace();
  const double lo = es.eigenvalues()(0);
  require(lo >= -1e-8 * std::abs(tr), ErrorKind::not_psd,
          "matrix is not positive semidefinite (min eigenvalue " + std::to_string(lo) + ")");
  const RealVector root = (es.eigenvalues().array().max(0.0) + ridge).sqrt();
  RealMatrix l = root.asDiagonal() * es.eigenvectors().transpose();

  const double residual = max_abs(RealMatrix(l.transpose() * l - sym - ridge * RealMatrix::Identity(d, d)));
  require(residual <= 1e-10 * (std::abs(tr) + ridge * static_cast<double>(d)) + 1e-300, ErrorKind::numerical_failure,
          "psd_factor residual " + std::to_string(residual));
  return l;
}

namespace detail {

struct GramSchmidt {
  RealMatrix mu;     // mu(i, j) = <b_i, b*_j> / |b*_j|^2 for j < i
  RealVector norm2;  // |b*_i|^2
};

inline GramSchmidt gram_schmidt(const RealMatrix& b) {
  const Eigen::Index n = b.cols();
  GramSchmidt gs{RealMatrix::Identity(n, n), RealVector(n)};
  RealMatrix star = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      gs.mu(i, j) = b.col(i).dot(star.col(j)) / gs.norm2(j);
      star.col(i) -= gs.mu(i, j) * star.col(j);
    }
    gs.norm2(i) = star.col(i).squaredNorm();
  }
  return gs;
}

}  // namespace detail

struct LllReport {
  double max_size_reduction = 0.0;  // max |mu_ij|, j < i
  double worst_lovasz = 0.0;        // min over k of |b*_k|^2 / ((delta - mu^2) |b*_{k-1}|^2)
  bool ok = true;
};

/// Post-hoc check of size reduction (|mu| <= 1/2) and the Lovasz condition.
inline LllReport verify_lll(const RealMatrix& columns, double delta) {
  const auto gs = detail::gram_schmidt(columns);
  LllReport rep;
  rep.worst_lovasz = std::numeric_limits<double>::infinity();
  const Eigen::Index n = columns.cols();
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) rep.max_size_reduction = std::max(rep.max_size_reduction, std::abs(gs.mu(i, j)));
    const double rhs = (delta - gs.mu(i, i - 1) * gs.mu(i, i - 1)) * gs.norm2(i - 1);
    rep.worst_lovasz = std::min(rep.worst_lovasz, gs.norm2(i) / rhs);
  }
  rep.ok = rep.max_size_reduction <= 0.5 + 1e-9 && rep.worst_lovasz >= 1.0 - 1e-9;
  return rep;
}

/// Floating-point LLL with the Gram-Schmidt data recomputed every iteration.
inline LatticeBasis lll_reduce(const RealMatrix& b, double delta = kDefaultLllDelta) {
  require(b.rows() >= 1 && b.rows() == b.cols(), ErrorKind::invalid_dimension, "lattice basis must be square");
  require(b.allFinite(), ErrorKind::invalid_input, "lattice basis has non-finite entries");
  require(delta > 0.25 && delta < 1.0, ErrorKind::invalid_input, "LLL delta must lie in (1/4, 1)");
  const Eigen::Index n = b.cols();

  const Eigen::JacobiSVD<RealMatrix> svd(b);
  const RealVector& sv = svd.singularValues();
  const double condition = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
  require(condition <= 1e12, ErrorKind::conditioning,
          "lattice basis is singular or ill-conditioned (condition " + std::to_string(condition) + ")");

  LatticeBasis lb;
  lb.dim = n;
  lb.original = b;
  lb.columns = b;
  lb.transform = IntMatrix::Identity(n, n);
  lb.delta = delta;
  lb.condition = condition;

  RealMatrix& basis = lb.columns;
  IntMatrix& u = lb.transform;
  Eigen::Index k = 1;
  for (long iter = 0; k < n; ++iter) {
    require(iter < 1'000'000, ErrorKind::numerical_failure, "LLL did not terminate");
    auto gs = detail::gram_schmidt(basis);
    for (Eigen::Index j = k - 1; j >= 0; --j) {
      const double r = std::round(gs.mu(k, j));
      if (r == 0.0) continue;
      const auto ri = static_cast<long long>(r);
      basis.col(k) -= r * basis.col(j);
      u.col(k) -= ri * u.col(j);
      for (Eigen::Index l = 0; l < j; ++l) gs.mu(k, l) -= r * gs.mu(j, l);
      gs.mu(k, j) -= r;
    }
    const double mu = gs.mu(k, k - 1);
    if (gs.norm2(k) >= (delta - mu * mu) * gs.norm2(k - 1)) {
      ++k;
    } else {
      basis.col(k).swap(basis.col(k - 1));
      u.col(k).swap(u.col(k - 1));
      k = std::max<Eigen::Index>(1, k - 1);
    }
  }

  const auto check = verify_lll(basis, delta);
  require(check.ok, ErrorKind::numerical_failure,
          "LLL post-check failed: max|mu| " + std::to_string(check.max_size_reduction) + ", Lovasz ratio " +
              std::to_string(check.worst_lovasz));
  const double det_ratio = std::abs(basis.determinant()) / std::abs(b.determinant());
  require(std::abs(det_ratio - 1.0) <= 1e-9, ErrorKind::numerical_failure,
          "LLL changed the lattice determinant (ratio " + std::to_string(det_ratio) + ")");

  const Eigen::HouseholderQR<RealMatrix> qr(basis);
  lb.upper = qr.matrixQR().triangularView<Eigen::Upper>();
  lb.ortho = qr.householderQ();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lb.upper(i, i) < 0.0) {
      lb.upper.row(i) *= -1.0;
      lb.ortho.col(i) *= -1.0;
    }
  }
  return lb;
}

namespace detail {

inline bool lex_less(const IntVector& a, const IntVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != b(i)) return a(i) < b(i);
  }
  return false;
}

/// Running minimum with the lexicographic tie-break. Squared distances
/// within `rel * best + abs` of each other count as ties.
struct BestPoint {
  double rel_tol;
  double abs_tol;
  double d2 = std::numeric_limits<double>::infinity();
  IntVector k;

  double tol(double other) const { return rel_tol * std::min(d2, other) + abs_tol; }

  bool offer(double cand_d2, const IntVector& cand_k) {
    if (k.size() == 0 || cand_d2 < d2 - tol(cand_d2)) {
      d2 = cand_d2;
      k = cand_k;
      return true;
    }
    if (std::abs(cand_d2 - d2) <= tol(cand_d2) && lex_less(cand_k, k)) {
      d2 = std::min(d2, cand_d2);
      k = cand_k;
      return true;
    }
    return false;
  }
};

inline void check_target(const LatticeBasis& lb, const RealVector& target) {
  require(target.size() == lb.dim, ErrorKind::invalid_input, "target dimension does not match lattice");
  require(target.allFinite(), ErrorKind::invalid_input, "target has non-finite entries");
}

inline double embedded_distance(const LatticeBasis& lb, const RealVector& target, const IntVector& k) {
  return (target - lb.original * k.cast<double>()).norm();
}

}  // namespace detail

/// Babai nearest-plane rounding on the reduced basis. Always a lattice point;
/// within 2^{D/2} of the optimum for an LLL-reduced basis with delta = 3/4.
inline CvpSolution babai_nearest_plane(const LatticeBasis& lb, const RealVector& target) {
  detail::check_target(lb, target);
  const Eigen::Index n = lb.dim;
  const RealVector z = lb.ortho.transpose() * target;
  IntVector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double c = z(i);
    for (Eigen::Index j = i + 1; j < n; ++j) c -= lb.upper(i, j) * static_cast<double>(x(j));
    x(i) = std::llround(c / lb.upper(i, i));
  }
  CvpSolution sol;
  sol.k = lb.transform * x;
  sol.distance = detail::embedded_distance(lb, target, sol.k);
  sol.method = CvpMethod::babai;
  return sol;
}

/// Exact CVP by depth-first Schnorr-Euchner enumeration. The search radius
/// starts at radius_hint (Babai's distance when the hint is not positive and
/// finite) and shrinks as closer points appear.
inline CvpSolution cvp_enumerate(const LatticeBasis& lb, const RealVector& target, double radius_hint = -1.0,
                                 int dim_cap = kDefaultEnumerationCap) {
  detail::check_target(lb, target);
  const Eigen::Index n = lb.dim;
  require(n <= dim_cap, ErrorKind::solver_cap,
          "exact enumeration capped at D=" + std::to_string(dim_cap) + " (got " + std::to_string(n) +
              "); use the babai solver");
  if (!(radius_hint > 0.0) || !std::isfinite(radius_hint)) radius_hint = babai_nearest_plane(lb, target).distance;

  const RealVector z = lb.ortho.transpose() * target;
  const RealMatrix& r = lb.upper;
  const double scale = r.diagonal().cwiseAbs2().maxCoeff();
  detail::BestPoint best{1e-10, 1e-24 * scale, std::numeric_limits<double>::infinity(), {}};
  const double start_bound = radius_hint * radius_hint * (1.0 + 1e-9) + 1e-24 * scale;

  IntVector x = IntVector::Zero(n);
  auto bound = [&] { return best.k.size() == 0 ? start_bound : best.d2 + best.tol(best.d2); };

  auto descend = [&](auto&& self, Eigen::Index i, double above) -> void {
    double c = z(i);
    for (Eigen::Index j = i + 1; j < n; ++j) c -= r(i, j) * static_cast<double>(x(j));
    c /= r(i, i);
    const long long x0 = std::llround(c);
    const long long dir = (c >= static_cast<double>(x0)) ? 1 : -1;
    for (long long step = 0;; ++step) {
      // x0, x0+dir, x0-dir, x0+2dir, ...: nondecreasing distance from c
      const long long offset = (step % 2 == 1) ? dir * ((step + 1) / 2) : -dir * (step / 2);
      const long long xi = x0 + offset;
      const double diff = static_cast<double>(xi) - c;
      const double d = above + r(i, i) * r(i, i) * diff * diff;
      if (d > bound()) break;
      x(i) = xi;
      if (i == 0) {
        best.offer(d, lb.transform * x);
      } else {
        self(self, i - 1, d);
      }
    }
  };
  descend(descend, n - 1, 0.0);
  require(best.k.size() == n, ErrorKind::numerical_failure, "enumeration found no lattice point inside the radius");

  CvpSolution sol;
  sol.k = best.k;
  sol.distance = detail::embedded_distance(lb, target, sol.k);
  sol.method = CvpMethod::exact;
  return sol;
}

/// Exhaustive minimum of (x-k)^T q (x-k) over k in round(x) + [-box, box]^D.
inline CvpSolution cvp_bruteforce(const RealMatrix& q, const RealVector& target, int box) {
  const Eigen::Index n = q.rows();
  require(n >= 1 && q.cols() == n && target.size() == n, ErrorKind::invalid_input, "bruteforce dimension mismatch");
  require(box >= 0, ErrorKind::invalid_input, "box radius must be >= 0");
  const double count = std::pow(2.0 * box + 1.0, static_cast<double>(n));
  require(count <= 1e8, ErrorKind::resource, "bruteforce box holds more than 1e8 points");

  IntVector center(n);
  for (Eigen::Index i = 0; i < n; ++i) center(i) = std::llround(target(i));
  IntVector k = center.array() - box;
  detail::BestPoint best{1e-10, 1e-24 * max_abs(q), std::numeric_limits<double>::infinity(), {}};
  for (;;) {
    const RealVector y = target - k.cast<double>();
    best.offer(y.dot(q * y), k);
    Eigen::Index i = n - 1;
    while (i >= 0 && k(i) == center(i) + box) {
      k(i) = center(i) - box;
      --i;
    }
    if (i < 0) break;
    ++k(i);
  }
  return CvpSolution{best.k, std::sqrt(std::max(0.0, best.d2)), CvpMethod::bruteforce};
}

}  // namespace knc
