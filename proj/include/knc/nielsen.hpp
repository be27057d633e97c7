#pragma once

// Penalty-metric side: generator bases with penalty factors, the induced form
// Q on energy-diagonal velocities, constant-velocity windings, the lattice
// bound C_b(t) = 2 pi min_k sqrt((y, Q y)) with y = E t / 2pi - k, and the
// Monte-Carlo plateau estimate C_p.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "knc/core.hpp"
#include "knc/krylov.hpp"
#include "knc/lattice.hpp"
#include "knc/metric.hpp"
#include "knc/models.hpp"
#include "knc/parallel.hpp"

namespace knc {

/// Rank-one generator |ket><bra|.
struct Dyad {
  ComplexVector ket;
  ComplexVector bra;
};

struct Generator {
  std::string label;
  std::variant<Dyad, ComplexMatrix> op;

  Eigen::Index dim() const {
    return std::holds_alternative<Dyad>(op) ? std::get<Dyad>(op).ket.size() : std::get<ComplexMatrix>(op).rows();
  }

  ComplexMatrix matrix() const {
    if (const auto* d = std::get_if<Dyad>(&op)) return d->ket * d->bra.adjoint();
    return std::get<ComplexMatrix>(op);
  }

  /// <n|T|n> for each column |n> of u.
  ComplexVector diagonal_in(const ComplexMatrix& u) const {
    if (const auto* d = std::get_if<Dyad>(&op)) {
      return (u.adjoint() * d->ket).cwiseProduct((u.adjoint() * d->bra).conjugate());
    }
    return (u.adjoint() * std::get<ComplexMatrix>(op) * u).diagonal();
  }

  /// Tr(T^+ V)
  Complex trace_inner(const ComplexMatrix& v) const {
    if (const auto* d = std::get_if<Dyad>(&op)) return d->ket.dot(v * d->bra);
    return (std::get<ComplexMatrix>(op).adjoint() * v).trace();
  }
};

/// Generators orthonormal under Tr(A^+ B). Completeness is not required.
class GeneratorBasis {
 public:
  GeneratorBasis() = default;

  /// Dense generators are checked for trace-orthonormality to 1e-10.
  static GeneratorBasis from_matrices(const std::vector<ComplexMatrix>& mats, std::vector<std::string> labels = {}) {
    require(!mats.empty(), ErrorKind::invalid_input, "generator basis is empty");
    if (labels.empty()) {
      for (std::size_t i = 0; i < mats.size(); ++i) labels.push_back("T" + std::to_string(i));
    }
    require(labels.size() == mats.size(), ErrorKind::invalid_input, "one label per generator required");
    GeneratorBasis gb;
    for (std::size_t i = 0; i < mats.size(); ++i) {
      require(mats[i].rows() == mats[0].rows() && mats[i].cols() == mats[0].rows(), ErrorKind::invalid_input,
              "generators must be square and share one dimension");
      gb.gens_.push_back(Generator{labels[i], mats[i]});
    }
    const double err = max_abs(ComplexMatrix(gb.gram_matrix() - ComplexMatrix::Identity(gb.size(), gb.size())));
    require(err <= 1e-10, ErrorKind::invalid_input,
            "generators are not trace-orthonormal (residual " + std::to_string(err) + ")");
    return gb;
  }

  static GeneratorBasis from_generators(std::vector<Generator> gens) {
    GeneratorBasis gb;
    gb.gens_ = std::move(gens);
    return gb;
  }

  /// Matrix units |n><m| built from the columns of an orthonormal frame u.
  static GeneratorBasis matrix_units(const ComplexMatrix& u) {
    std::vector<Generator> gens;
    for (Eigen::Index n = 0; n < u.cols(); ++n) {
      for (Eigen::Index m = 0; m < u.cols(); ++m) {
        gens.push_back(Generator{"unit(" + std::to_string(n) + "," + std::to_string(m) + ")", Dyad{u.col(n), u.col(m)}});
      }
    }
    return from_generators(std::move(gens));
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(gens_.size()); }
  Eigen::Index dim() const { return gens_.empty() ? 0 : gens_.front().dim(); }
  const Generator& operator[](Eigen::Index i) const { return gens_[static_cast<std::size_t>(i)]; }
  const std::vector<Generator>& generators() const { return gens_; }

  /// G_ab = Tr(T_a^+ T_b)
  ComplexMatrix gram_matrix() const {
    const Eigen::Index n = size();
    ComplexMatrix g(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) g(a, b) = (*this)[a].trace_inner((*this)[b].matrix());
    }
    return g;
  }

 private:
  std::vector<Generator> gens_;
};

class PenaltySchedule {
 public:
  explicit PenaltySchedule(std::vector<double> mu) : mu_(std::move(mu)) {
    for (double m : mu_) require(std::isfinite(m) && m >= 0.0, ErrorKind::invalid_input, "penalties must be finite and >= 0");
  }
  Eigen::Index size() const { return static_cast<Eigen::Index>(mu_.size()); }
  double operator[](Eigen::Index i) const { return mu_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return mu_; }

 private:
  std::vector<double> mu_;
};

namespace detail {
inline void check_aligned(const GeneratorBasis& gens, const PenaltySchedule& ps, Eigen::Index dim) {
  require(gens.size() == ps.size(), ErrorKind::invalid_input,
          "penalty schedule has " + std::to_string(ps.size()) + " entries for " + std::to_string(gens.size()) +
              " generators");
  require(gens.size() == 0 || gens.dim() == dim, ErrorKind::invalid_input, "generator dimension mismatch");
}
}  // namespace detail

/// Q_nm = Re sum_a mu_a <n|T_a|n> <m|T_a^+|m>. Zero-penalty generators are skipped.
inline MetricMatrix metric_from_penalties(const SpectralDecomposition& spec, const GeneratorBasis& gens,
                                          const PenaltySchedule& ps) {
  detail::check_aligned(gens, ps, spec.dim());
  const Eigen::Index d = spec.dim();
  ComplexMatrix acc = ComplexMatrix::Zero(d, d);
  for (Eigen::Index a = 0; a < gens.size(); ++a) {
    if (ps[a] == 0.0) continue;
    const ComplexVector diag = gens[a].diagonal_in(spec.eigenvectors);
    acc.noalias() += ps[a] * (diag * diag.adjoint());
  }
  const RealMatrix q = acc.real();
  return MetricMatrix((q + q.transpose()) * 0.5);
}

/// Krylov-adapted generators in fixed order: |v0><v0|; then |v0><vj|, |vj><v0|
/// for j = 1..K-1; then |vi><vj| for i, j >= 1 (row-major).
inline GeneratorBasis krylov_generator_basis(const KrylovBasis& kb) {
  const Eigen::Index k = kb.kdim;
  require(k >= 1 && kb.basis.cols() == k, ErrorKind::invalid_input, "invalid Krylov basis");
  std::vector<Generator> gens;
  gens.reserve(static_cast<std::size_t>(k * k));
  const auto v = [&](Eigen::Index j) -> ComplexVector { return kb.basis.col(j); };
  gens.push_back(Generator{"seed-diag", Dyad{v(0), v(0)}});
  for (Eigen::Index j = 1; j < k; ++j) {
    gens.push_back(Generator{"seed-row", Dyad{v(0), v(j)}});
    gens.push_back(Generator{"seed-col", Dyad{v(j), v(0)}});
  }
  for (Eigen::Index i = 1; i < k; ++i) {
    for (Eigen::Index j = 1; j < k; ++j) gens.push_back(Generator{"interior", Dyad{v(i), v(j)}});
  }
  return GeneratorBasis::from_generators(std::move(gens));
}

/// Penalties aligned with krylov_generator_basis: w_0 on the seed projector,
/// w_j / 2 on each seed row/column pair, 0 on interior generators.
inline PenaltySchedule krylov_penalty_schedule(const WeightSchedule& ws, Eigen::Index k) {
  require(k >= 1, ErrorKind::invalid_input, "Krylov dimension must be >= 1");
  const RealVector w = ws.head(k);
  std::vector<double> mu;
  mu.reserve(static_cast<std::size_t>(k * k));
  mu.push_back(w(0));
  for (Eigen::Index j = 1; j < k; ++j) {
    mu.push_back(w(j) / 2.0);
    mu.push_back(w(j) / 2.0);
  }
  mu.resize(static_cast<std::size_t>(k * k), 0.0);
  return PenaltySchedule(std::move(mu));
}

/// Constant velocity V = sum_n (E_n - 2 pi k_n / t) |n><n| whose flow reaches
/// exp(-iHt) at time t. Throws if the two exponentials differ by more than 1e-8.
inline HermitianOperator velocity_from_winding(const SpectralDecomposition& spec, const IntVector& k, double t) {
  require(t > 0.0 && std::isfinite(t), ErrorKind::invalid_input, "winding time must be positive");
  require(k.size() == spec.dim(), ErrorKind::invalid_input, "winding vector has wrong dimension");
  const ComplexMatrix& u = spec.eigenvectors;
  const RealVector rates = spec.energies - (kTwoPi / t) * k.cast<double>();
  ComplexVector phase_h(spec.dim()), phase_v(spec.dim());
  for (Eigen::Index n = 0; n < spec.dim(); ++n) {
    phase_h(n) = std::polar(1.0, -spec.energies(n) * t);
    phase_v(n) = std::polar(1.0, -rates(n) * t);
  }
  const double mismatch = max_abs(ComplexMatrix(u * (phase_h - phase_v).asDiagonal() * u.adjoint()));
  require(mismatch <= 1e-8, ErrorKind::numerical_failure,
          "exp(-iVt) deviates from exp(-iHt) by " + std::to_string(mismatch));
  return HermitianOperator(u * rates.cast<Complex>().asDiagonal() * u.adjoint());
}

/// sqrt(sum_a mu_a |Tr(T_a^+ V)|^2)
inline double metric_speed(const HermitianOperator& v, const GeneratorBasis& gens, const PenaltySchedule& ps) {
  detail::check_aligned(gens, ps, v.dim());
  double s = 0.0;
  for (Eigen::Index a = 0; a < gens.size(); ++a) {
    if (ps[a] == 0.0) continue;
    s += ps[a] * std::norm(gens[a].trace_inner(v.matrix()));
  }
  return std::sqrt(s);
}

enum class SolverKind { exact, babai, automatic };

struct SolverOptions {
  SolverKind solver = SolverKind::automatic;
  double delta = kDefaultLllDelta;
  int enumeration_cap = kDefaultEnumerationCap;
  int auto_exact_max_dim = 12;   // `automatic` enumerates up to this D
  std::optional<double> ridge;   // default: 1e-10 (trace/D + 1)
  int threads = 1;
};

inline double default_ridge(const MetricMatrix& q) {
  return 1e-10 * (q.trace() / static_cast<double>(q.dim()) + 1.0);
}

/// The integer lattice under Q + eps I, factored and LLL-reduced once so many
/// targets can be solved against it.
class WindingLattice {
 public:
  WindingLattice(const MetricMatrix& q, const SolverOptions& opts)
      : q_(q), ridge_(opts.ridge.value_or(default_ridge(q))), cap_(opts.enumeration_cap) {
    require(ridge_ >= 0.0 && std::isfinite(ridge_), ErrorKind::invalid_input, "ridge must be finite and >= 0");
    switch (opts.solver) {
      case SolverKind::exact: method_ = CvpMethod::exact; break;
      case SolverKind::babai: method_ = CvpMethod::babai; break;
      case SolverKind::automatic:
        method_ = q.dim() <= std::min(opts.auto_exact_max_dim, cap_) ? CvpMethod::exact : CvpMethod::babai;
        break;
    }
    require(method_ != CvpMethod::exact || q.dim() <= cap_, ErrorKind::solver_cap,
            "exact enumeration capped at D=" + std::to_string(cap_) + " (got " + std::to_string(q.dim()) +
                "); use the babai solver");
    lattice_ = lll_reduce(psd_factor(q.matrix(), ridge_), opts.delta);
  }

  const MetricMatrix& metric() const { return q_; }
  double ridge() const { return ridge_; }
  CvpMethod method() const { return method_; }
  const LatticeBasis& lattice() const { return lattice_; }

  /// Nearest k to the coordinate point x under Q + eps I.
  CvpSolution nearest(const RealVector& x) const {
    const RealVector target = lattice_.original * x;
    const CvpSolution babai = babai_nearest_plane(lattice_, target);
    if (method_ == CvpMethod::babai) return babai;
    return cvp_enumerate(lattice_, target, babai.distance, cap_);
  }

 private:
  MetricMatrix q_;
  double ridge_;
  int cap_;
  CvpMethod method_ = CvpMethod::exact;
  LatticeBasis lattice_;
};

struct NielsenBound {
  double value = 0.0;  // 2 pi sqrt((y, Q y)) against the un-ridged Q
  IntVector k;
  CvpMethod method = CvpMethod::exact;
  double ridge_epsilon = 0.0;
  double ridge_contribution = 0.0;  // eps |y|^2, excluded from `value`
};

inline NielsenBound nielsen_bound(const SpectralDecomposition& spec, const WindingLattice& lattice, double t) {
  require(t >= 0.0 && std::isfinite(t), ErrorKind::invalid_input, "time must be finite and >= 0");
  require(lattice.metric().dim() == spec.dim(), ErrorKind::invalid_input, "metric and spectrum dimensions differ");
  const RealVector x = spec.energies * (t / kTwoPi);
  const CvpSolution sol = lattice.nearest(x);
  const RealVector y = x - sol.k.cast<double>();
  NielsenBound nb;
  nb.value = kTwoPi * std::sqrt(std::max(0.0, lattice.metric().quadratic_form(y)));
  nb.k = sol.k;
  nb.method = sol.method;
  nb.ridge_epsilon = lattice.ridge();
  nb.ridge_contribution = lattice.ridge() * y.squaredNorm();
  return nb;
}

inline NielsenBound nielsen_bound(const SpectralDecomposition& spec, const MetricMatrix& q, double t,
                                  const SolverOptions& opts = {}) {
  return nielsen_bound(spec, WindingLattice(q, opts), t);
}

struct NielsenTrace {
  ComplexityTrace trace;
  std::vector<CvpMethod> methods;
  double ridge_epsilon = 0.0;
};

inline NielsenTrace nielsen_bound_trace(const SpectralDecomposition& spec, const MetricMatrix& q,
                                        const RealVector& time_grid, const SolverOptions& opts = {}) {
  require_increasing(time_grid);
  require(time_grid(0) >= 0.0, ErrorKind::invalid_input, "time grid must start at t >= 0");
  const WindingLattice lattice(q, opts);
  NielsenTrace out{{time_grid, RealVector(time_grid.size())},
                   std::vector<CvpMethod>(static_cast<std::size_t>(time_grid.size())),
                   lattice.ridge()};
  parallel_for(static_cast<std::size_t>(time_grid.size()), opts.threads, [&](std::size_t i) {
    const auto nb = nielsen_bound(spec, lattice, time_grid(static_cast<Eigen::Index>(i)));
    out.trace.values(static_cast<Eigen::Index>(i)) = nb.value;
    out.methods[i] = nb.method;
  });
  return out;
}

/// 0, then roughly a quarter of the points geometric on [tmax/1000, tmax/10),
/// then linear on [tmax/10, tmax]. Fewer than 8 points: linear on [0, tmax].
inline RealVector default_time_grid(Eigen::Index points, double tmax) {
  require(points >= 1, ErrorKind::invalid_input, "time grid needs at least one point");
  require(points == 1 || (tmax > 0.0 && std::isfinite(tmax)), ErrorKind::invalid_input, "tmax must be positive");
  if (points == 1) return RealVector::Zero(1);
  if (points < 8) return RealVector::LinSpaced(points, 0.0, tmax);
  const Eigen::Index n_geo = points / 4;
  const Eigen::Index n_lin = points - 1 - n_geo;
  const double lo = tmax * 1e-3, sw = tmax * 0.1;
  RealVector grid(points);
  grid(0) = 0.0;
  for (Eigen::Index i = 0; i < n_geo; ++i) {
    grid(1 + i) = lo * std::pow(sw / lo, static_cast<double>(i) / static_cast<double>(n_geo));
  }
  grid.tail(n_lin) = RealVector::LinSpaced(n_lin, sw, tmax);
  return grid;
}

/// 50 D / (spectral range); falls back to max(|E|, 1) as the scale when the
/// range is zero.
inline double default_tmax(const SpectralDecomposition& spec) {
  double scale = spec.spectral_range();
  if (!(scale > 0.0)) scale = std::max(spec.max_abs_energy(), 1.0);
  return 50.0 * static_cast<double>(spec.dim()) / scale;
}

struct PlateauEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  long long n_samples = 0;
  CvpMethod solver = CvpMethod::exact;
  double ridge_epsilon = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Sample i draws x uniform in [0,1)^D from the counter stream (rng_seed, i)
/// and records 2 pi sqrt((x-k, Q(x-k))) at the nearest lattice point.
inline PlateauEstimate plateau_estimate(const MetricMatrix& q, long long n_samples, std::uint64_t rng_seed,
                                        const SolverOptions& opts = {}) {
  require(n_samples >= 1, ErrorKind::invalid_input, "plateau estimate needs at least one sample");
  const WindingLattice lattice(q, opts);
  const Eigen::Index d = q.dim();
  std::vector<double> dist(static_cast<std::size_t>(n_samples));
  parallel_for(dist.size(), opts.threads, [&](std::size_t i) {
    CounterRng rng(rng_seed, i);
    RealVector x(d);
    for (Eigen::Index n = 0; n < d; ++n) x(n) = rng.uniform();
    const RealVector y = x - lattice.nearest(x).k.cast<double>();
    dist[i] = kTwoPi * std::sqrt(std::max(0.0, q.quadratic_form(y)));
  });
  double sum = 0.0;
  for (double v : dist) sum += v;
  const double mean = sum / static_cast<double>(n_samples);
  double ss = 0.0;
  for (double v : dist) ss += (v - mean) * (v - mean);
  PlateauEstimate est;
  est.mean = mean;
  est.standard_error = n_samples > 1 ? std::sqrt(ss / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples)) : 0.0;
  est.n_samples = n_samples;
  est.solver = lattice.method();
  est.ridge_epsilon = lattice.ridge();
  est.rng_seed = rng_seed;
  return est;
}

}  // namespace knc
