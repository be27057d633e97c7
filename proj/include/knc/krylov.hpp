#pragma once

// Lanczos construction of the Krylov basis of a seed state, evolution of the
// seed in that basis, spread complexity C_K(t) = sum_j w_j |phi_j(t)|^2, its
// all-time average, and the q-matrix whose trace is that average.

#include <cmath>
#include <string>
#include <vector>

#include "knc/core.hpp"
#include "knc/metric.hpp"
#include "knc/models.hpp"
#include "knc/parallel.hpp"

namespace knc {

/// Nonnegative, nondecreasing weights w_0 <= w_1 <= ...
class WeightSchedule {
 public:
  explicit WeightSchedule(std::vector<double> weights) : w_(std::move(weights)) {
    require(!w_.empty(), ErrorKind::invalid_input, "weight schedule is empty");
    for (std::size_t j = 0; j < w_.size(); ++j) {
      require(std::isfinite(w_[j]) && w_[j] >= 0.0, ErrorKind::invalid_input,
              "weight w_" + std::to_string(j) + " must be finite and >= 0");
      require(j == 0 || w_[j] >= w_[j - 1], ErrorKind::invalid_input, "weights must be nondecreasing");
    }
  }

  /// w_j = j for j < length.
  static WeightSchedule linear(Eigen::Index length) {
    std::vector<double> w(static_cast<std::size_t>(length));
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = static_cast<double>(j);
    return WeightSchedule(std::move(w));
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(w_.size()); }
  double operator[](Eigen::Index j) const { return w_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& values() const { return w_; }

  /// First k weights; throws if the schedule is shorter than k.
  RealVector head(Eigen::Index k) const {
    require(size() >= k, ErrorKind::invalid_input,
            "weight schedule has " + std::to_string(size()) + " entries, need " + std::to_string(k));
    return Eigen::Map<const RealVector>(w_.data(), k);
  }

 private:
  std::vector<double> w_;
};

struct KrylovBasis {
  Eigen::Index kdim = 0;
  RealVector a;            // a_j = <v_j|H|v_j>
  RealVector b;            // b_0 = 0, b_j > 0 for 1 <= j < K
  ComplexMatrix basis;     // D x K, column j is |v_j>
  ComplexMatrix overlaps;  // K x D, S_jn = <v_j|n>

  /// Tridiagonal matrix with diagonal a and off-diagonals b_1..b_{K-1}.
  RealMatrix tridiagonal() const {
    RealMatrix t = RealMatrix::Zero(kdim, kdim);
    for (Eigen::Index j = 0; j < kdim; ++j) {
      t(j, j) = a(j);
      if (j > 0) t(j, j - 1) = t(j - 1, j) = b(j);
    }
    return t;
  }
};

struct ComplexityTrace {
  RealVector times;
  RealVector values;
};

inline constexpr double kDefaultBreakdownTol = 1e-10;

/// Lanczos with two full Gram-Schmidt passes per step. Stops when the next
/// b_j falls below breakdown_tol * max|E| (invariant subspace reached) or
/// when K = D.
inline KrylovBasis lanczos(const HermitianOperator& h, const SpectralDecomposition& spec, const ComplexVector& v0,
                           double breakdown_tol = kDefaultBreakdownTol) {
  const Eigen::Index d = h.dim();
  require(spec.dim() == d, ErrorKind::invalid_input, "spectral decomposition does not match hamiltonian");
  require(v0.size() == d, ErrorKind::invalid_input, "seed vector has wrong dimension");
  require(v0.allFinite() && std::abs(v0.norm() - 1.0) <= 1e-12, ErrorKind::invalid_input,
          "seed vector must be normalized to 1e-12");

  const ComplexMatrix& hm = h.matrix();
  const double cutoff = breakdown_tol * spec.max_abs_energy();

  ComplexMatrix basis(d, d);
  std::vector<double> a, b{0.0};
  basis.col(0) = v0;
  Eigen::Index k = 1;
  for (Eigen::Index j = 0;; ++j) {
    ComplexVector w = hm * basis.col(j);
    a.push_back(basis.col(j).dot(w).real());
    w -= a.back() * basis.col(j);
    if (j > 0) w -= b[static_cast<std::size_t>(j)] * basis.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) {
      const auto prev = basis.leftCols(j + 1);
      w -= prev * (prev.adjoint() * w);
    }
    const double next_b = w.norm();
    if (j + 1 == d || next_b <= cutoff) break;
    b.push_back(next_b);
    basis.col(j + 1) = w / next_b;
    k = j + 2;
  }

  KrylovBasis kb;
  kb.kdim = k;
  kb.a = Eigen::Map<RealVector>(a.data(), k);
  kb.b = Eigen::Map<RealVector>(b.data(), k);
  kb.basis = basis.leftCols(k);
  kb.overlaps = kb.basis.adjoint() * spec.eigenvectors;

  const double ortho = max_abs(ComplexMatrix(kb.basis.adjoint() * kb.basis - ComplexMatrix::Identity(k, k)));
  require(ortho <= 1e-8, ErrorKind::numerical_failure,
          "Krylov basis lost orthogonality (residual " + std::to_string(ortho) + ")");
  return kb;
}

inline KrylovBasis lanczos(const HermitianOperator& h, const ComplexVector& v0,
                           double breakdown_tol = kDefaultBreakdownTol) {
  return lanczos(h, diagonalize(h), v0, breakdown_tol);
}

/// <n|v0> for every eigenstate.
inline ComplexVector seed_overlaps(const SpectralDecomposition& spec, const ComplexVector& v0) {
  require(v0.size() == spec.dim(), ErrorKind::invalid_input, "seed vector has wrong dimension");
  return spec.eigenvectors.adjoint() * v0;
}

inline ComplexVector basis_state(Eigen::Index dim, Eigen::Index index) {
  require(index >= 0 && index < dim, ErrorKind::invalid_input,
          "basis index " + std::to_string(index) + " out of range for D=" + std::to_string(dim));
  ComplexVector v = ComplexVector::Zero(dim);
  v(index) = 1.0;
  return v;
}

namespace detail {
inline void check_krylov_inputs(const SpectralDecomposition& spec, const KrylovBasis& kb,
                                const ComplexVector& v0_overlaps) {
  require(kb.overlaps.rows() == kb.kdim && kb.overlaps.cols() == spec.dim() && v0_overlaps.size() == spec.dim(),
          ErrorKind::invalid_input, "spectral data, Krylov basis and seed overlaps have mismatched dimensions");
}
}  // namespace detail

/// phi_j(t) = sum_n exp(-i E_n t) <v_j|n> <n|v0>.
inline ComplexVector krylov_wavefunction(const SpectralDecomposition& spec, const KrylovBasis& kb,
                                         const ComplexVector& v0_overlaps, double t) {
  detail::check_krylov_inputs(spec, kb, v0_overlaps);
  require(std::isfinite(t), ErrorKind::invalid_input, "time must be finite");
  ComplexVector evolved(spec.dim());
  for (Eigen::Index n = 0; n < spec.dim(); ++n) evolved(n) = std::polar(1.0, -spec.energies(n) * t) * v0_overlaps(n);
  return kb.overlaps * evolved;
}

inline double krylov_complexity(const ComplexVector& phi, const RealVector& weights) {
  require(phi.size() == weights.size(), ErrorKind::invalid_input,
          "wavefunction length " + std::to_string(phi.size()) + " != weight count " + std::to_string(weights.size()));
  return weights.dot(phi.cwiseAbs2());
}

inline double krylov_complexity(const ComplexVector& phi, const WeightSchedule& ws) {
  require(phi.size() == ws.size(), ErrorKind::invalid_input, "wavefunction and weight schedule lengths differ");
  return krylov_complexity(phi, ws.head(ws.size()));
}

inline void require_increasing(const RealVector& grid) {
  require(grid.size() >= 1 && grid.allFinite(), ErrorKind::invalid_input, "time grid must be non-empty and finite");
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    require(grid(i) > grid(i - 1), ErrorKind::invalid_input, "time grid must be strictly increasing");
  }
}

/// C_K on a grid. Schedules longer than K are truncated to their first K weights.
inline ComplexityTrace krylov_complexity_trace(const SpectralDecomposition& spec, const KrylovBasis& kb,
                                               const ComplexVector& v0_overlaps, const WeightSchedule& ws,
                                               const RealVector& time_grid, int threads = 1) {
  require_increasing(time_grid);
  detail::check_krylov_inputs(spec, kb, v0_overlaps);
  const RealVector w = ws.head(kb.kdim);
  ComplexityTrace trace{time_grid, RealVector(time_grid.size())};
  parallel_for(static_cast<std::size_t>(time_grid.size()), threads, [&](std::size_t i) {
    const auto idx = static_cast<Eigen::Index>(i);
    trace.values(idx) = krylov_complexity(krylov_wavefunction(spec, kb, v0_overlaps, time_grid(idx)), w);
  });
  return trace;
}

/// Long-time average sum_{n,j} w_j |<v_j|n>|^2 |<n|v0>|^2. Valid only for a
/// nondegenerate spectrum; degenerate input is rejected.
inline double time_averaged_ck(const SpectralDecomposition& spec, const KrylovBasis& kb,
                               const ComplexVector& v0_overlaps, const WeightSchedule& ws) {
  detail::check_krylov_inputs(spec, kb, v0_overlaps);
  require_nondegenerate(spec);
  const RealVector w = ws.head(kb.kdim);
  double total = 0.0;
  for (Eigen::Index j = 0; j < kb.kdim; ++j) {
    double site = 0.0;
    for (Eigen::Index n = 0; n < spec.dim(); ++n) site += std::norm(kb.overlaps(j, n)) * std::norm(v0_overlaps(n));
    total += w(j) * site;
  }
  return total;
}

/// q_nm = sum_j (w_j/2) (<n|v0><v_j|n><m|v_j><v0|m> + c.c.), i.e.
/// q = Re sum_j w_j a_j a_j^+ with a_j(n) = <v_j|n><n|v0>.
inline MetricMatrix q_matrix(const SpectralDecomposition& spec, const KrylovBasis& kb,
                             const ComplexVector& v0_overlaps, const WeightSchedule& ws) {
  detail::check_krylov_inputs(spec, kb, v0_overlaps);
  require_nondegenerate(spec);
  const RealVector w = ws.head(kb.kdim);
  const ComplexMatrix amp = kb.overlaps * v0_overlaps.asDiagonal();  // row j is a_j^T
  const ComplexMatrix weighted = w.cast<Complex>().asDiagonal() * amp;
  const RealMatrix q = (amp.transpose() * weighted.conjugate()).real();
  return MetricMatrix((q + q.transpose()) * 0.5);
}

/// Trapezoid average (1/T) int_0^T C_K dt on a uniform grid with step <= dt.
/// Blocks of fixed size are summed in order, so the result is independent of
/// the thread count.
inline double trapezoid_time_average(const SpectralDecomposition& spec, const KrylovBasis& kb,
                                     const ComplexVector& v0_overlaps, const WeightSchedule& ws, double horizon,
                                     double max_step, int threads = 1) {
  detail::check_krylov_inputs(spec, kb, v0_overlaps);
  require(horizon > 0.0 && max_step > 0.0 && std::isfinite(horizon), ErrorKind::invalid_input,
          "time-average horizon and step must be positive");
  const double steps_real = std::ceil(horizon / max_step);
  require(steps_real <= 1e8, ErrorKind::resource, "time average needs more than 1e8 grid steps");
  const auto steps = static_cast<std::size_t>(std::max(1.0, steps_real));
  const double dt = horizon / static_cast<double>(steps);
  const RealVector w = ws.head(kb.kdim);

  constexpr std::size_t block = 4096;
  const std::size_t n_points = steps + 1;
  const std::size_t n_blocks = (n_points + block - 1) / block;
  std::vector<double> partial(n_blocks, 0.0);
  parallel_for(n_blocks, threads, [&](std::size_t blk) {
    double s = 0.0;
    const std::size_t end = std::min(n_points, (blk + 1) * block);
    for (std::size_t i = blk * block; i < end; ++i) {
      const double f = krylov_complexity(krylov_wavefunction(spec, kb, v0_overlaps, dt * static_cast<double>(i)), w);
      s += (i == 0 || i == steps) ? 0.5 * f : f;
    }
    partial[blk] = s;
  });
  double sum = 0.0;
  for (double p : partial) sum += p;
  return sum * dt / horizon;
}

}  // namespace knc
