#pragma once

// End-to-end check that the Krylov-adapted penalty schedule reproduces the
// q-matrix, that trace(q) is the long-time average of C_K, and how the lattice
// plateau of C_b(t) compares with the Monte-Carlo estimate under that metric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "knc/core.hpp"
#include "knc/io.hpp"
#include "knc/krylov.hpp"
#include "knc/metric.hpp"
#include "knc/models.hpp"
#include "knc/nielsen.hpp"

namespace knc {

struct ModelConfig {
  std::string family = "gue";  // gue | goe | ising | file
  int dim = 8;
  std::uint64_t seed = 1;
  int sites = 3;
  double gx = 0.9;
  double gz = 0.4;
  Boundary boundary = Boundary::open;
  std::string path;
};

inline HermitianOperator build_model(const ModelConfig& cfg) {
  if (cfg.family == "gue") return build_random_hermitian(cfg.dim, Ensemble::complex_hermitian, cfg.seed);
  if (cfg.family == "goe") return build_random_hermitian(cfg.dim, Ensemble::real_symmetric, cfg.seed);
  if (cfg.family == "ising") return build_spin_chain(cfg.sites, cfg.gx, cfg.gz, cfg.boundary);
  if (cfg.family == "file") {
    require(!cfg.path.empty(), ErrorKind::invalid_input, "model 'file' needs a path");
    return load_hamiltonian(cfg.path);
  }
  fail(ErrorKind::invalid_input, "unknown model family '" + cfg.family + "'");
}

/// Seed state: computational basis vector, or a JSON file {"re": [...], "im": [...]}.
struct SeedSpec {
  Eigen::Index basis_index = 0;
  std::string path;
};

inline ComplexVector build_seed(const SeedSpec& seed, Eigen::Index dim) {
  if (seed.path.empty()) return basis_state(dim, seed.basis_index);
  std::ifstream in(seed.path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open seed file '" + seed.path + "'");
  try {
    nlohmann::json j;
    in >> j;
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.contains("im") ? j.at("im").get<std::vector<double>>() : std::vector<double>(re.size(), 0.0);
    require(static_cast<Eigen::Index>(re.size()) == dim && im.size() == re.size(), ErrorKind::invalid_input,
            "seed file must hold " + std::to_string(dim) + " components");
    ComplexVector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(re[static_cast<std::size_t>(i)], im[static_cast<std::size_t>(i)]);
    return v;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, "seed file '" + seed.path + "': " + e.what());
  }
}

/// max |Q(schedule) - q|, Q assembled from the Krylov generators and their
/// table penalties, q from the direct overlap formula.
inline double verify_q_equals_metric(const SpectralDecomposition& spec, const KrylovBasis& kb,
                                     const WeightSchedule& ws) {
  const ComplexVector c = seed_overlaps(spec, kb.basis.col(0));
  const MetricMatrix q = q_matrix(spec, kb, c, ws);
  const MetricMatrix big_q = metric_from_penalties(spec, krylov_generator_basis(kb), krylov_penalty_schedule(ws, kb.kdim));
  return max_abs(RealMatrix(big_q.matrix() - q.matrix()));
}

struct TraceIdentity {
  double trace_q = 0.0;
  double ck_bar = 0.0;
  double relative_difference = 0.0;
};

inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline TraceIdentity verify_trace_identity(const SpectralDecomposition& spec, const KrylovBasis& kb,
                                           const WeightSchedule& ws) {
  const ComplexVector c = seed_overlaps(spec, kb.basis.col(0));
  TraceIdentity ti;
  ti.trace_q = q_matrix(spec, kb, c, ws).trace();
  ti.ck_bar = time_averaged_ck(spec, kb, c, ws);
  ti.relative_difference = relative_difference(ti.trace_q, ti.ck_bar);
  return ti;
}

struct Tolerances {
  double trace_identity_rel = 1e-12;
  double schedule_identity = 1e-10;  // scaled by (1 + trace q)
  double ergodic_rel = 0.01;
  double plateau_soft_rel = 0.15;
};

struct ReportOptions {
  std::optional<std::vector<double>> weights;  // default w_j = j
  SeedSpec seed;
  Eigen::Index time_points = 256;
  std::optional<double> tmax;  // default 50 D / spectral range
  SolverOptions solver;
  long long samples = 0;  // 0: 1e4 with exact enumeration, 1e5 with Babai
  std::uint64_t mc_seed = 1;
  double breakdown_tol = kDefaultBreakdownTol;
  Tolerances tol;
};

struct CorrespondenceReport {
  Eigen::Index dim = 0;
  Eigen::Index kdim = 0;
  double ck_bar_analytic = 0.0;
  double ck_bar_numeric = 0.0;
  double averaging_horizon = 0.0;
  double trace_q = 0.0;
  double max_q_vs_Q_diff = 0.0;
  PlateauEstimate cp_estimate;
  double cb_plateau_median = 0.0;
  double ridge_epsilon = 0.0;
  RealVector q_eigenvalues;
  Tolerances tol;
  bool trace_identity_ok = false;
  bool schedule_identity_ok = false;
  bool ergodic_average_ok = false;
  bool plateau_soft_ok = false;
  std::vector<std::string> warnings;

  bool hard_checks_passed() const { return trace_identity_ok && schedule_identity_ok && ergodic_average_ok; }
};

inline double median(std::vector<double> v) {
  require(!v.empty(), ErrorKind::invalid_input, "median of empty range");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {
template <typename Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("[") + stage + "] " + e.what());
  }
}
}  // namespace detail

inline CorrespondenceReport full_report(const ModelConfig& model, const ReportOptions& opts) {
  CorrespondenceReport rep;
  rep.tol = opts.tol;

  const HermitianOperator h = detail::staged("model", [&] { return build_model(model); });
  const SpectralDecomposition spec = detail::staged("spectrum", [&] {
    auto s = diagonalize(h);
    require_nondegenerate(s);
    return s;
  });
  rep.dim = spec.dim();

  const ComplexVector v0 = detail::staged("seed", [&] { return build_seed(opts.seed, spec.dim()); });
  const KrylovBasis kb = detail::staged("lanczos", [&] { return lanczos(h, spec, v0, opts.breakdown_tol); });
  rep.kdim = kb.kdim;
  const WeightSchedule ws = opts.weights ? WeightSchedule(*opts.weights) : WeightSchedule::linear(kb.kdim);
  const ComplexVector c = seed_overlaps(spec, v0);

  const MetricMatrix q = detail::staged("krylov", [&] {
    rep.ck_bar_analytic = time_averaged_ck(spec, kb, c, ws);
    const double horizon = spec.dim() > 1 ? 200.0 / spec.min_gap : 200.0;
    const double max_e = spec.max_abs_energy();
    const double step = max_e > 0.0 ? 3.14159265358979323846 / (4.0 * max_e) : horizon;
    rep.averaging_horizon = horizon;
    rep.ck_bar_numeric = trapezoid_time_average(spec, kb, c, ws, horizon, step, opts.solver.threads);
    return q_matrix(spec, kb, c, ws);
  });
  rep.trace_q = q.trace();
  rep.q_eigenvalues = q.eigenvalues();

  rep.max_q_vs_Q_diff = detail::staged("schedule", [&] {
    const MetricMatrix big_q =
        metric_from_penalties(spec, krylov_generator_basis(kb), krylov_penalty_schedule(ws, kb.kdim));
    return max_abs(RealMatrix(big_q.matrix() - q.matrix()));
  });

  SolverOptions solver = opts.solver;
  solver.ridge = solver.ridge.value_or(default_ridge(q));
  rep.ridge_epsilon = *solver.ridge;

  const NielsenTrace cb = detail::staged("nielsen", [&] {
    const RealVector grid = default_time_grid(opts.time_points, opts.tmax.value_or(default_tmax(spec)));
    return nielsen_bound_trace(spec, q, grid, solver);
  });
  const auto n_points = static_cast<std::size_t>(cb.trace.values.size());
  const std::size_t tail_start = (2 * n_points) / 3;
  rep.cb_plateau_median = median(std::vector<double>(cb.trace.values.data() + tail_start,
                                                     cb.trace.values.data() + n_points));

  rep.cp_estimate = detail::staged("plateau", [&] {
    long long samples = opts.samples;
    if (samples <= 0) samples = WindingLattice(q, solver).method() == CvpMethod::exact ? 10'000 : 100'000;
    return plateau_estimate(q, samples, opts.mc_seed, solver);
  });

  const double tr_rel = relative_difference(rep.trace_q, rep.ck_bar_analytic);
  rep.trace_identity_ok = tr_rel <= rep.tol.trace_identity_rel;
  rep.schedule_identity_ok = rep.max_q_vs_Q_diff <= rep.tol.schedule_identity * (1.0 + rep.trace_q);
  rep.ergodic_average_ok = relative_difference(rep.ck_bar_numeric, rep.ck_bar_analytic) <= rep.tol.ergodic_rel;
  const double plateau_rel = rep.cp_estimate.mean > 0.0
                                 ? std::abs(rep.cb_plateau_median - rep.cp_estimate.mean) / rep.cp_estimate.mean
                                 : relative_difference(rep.cb_plateau_median, rep.cp_estimate.mean);
  rep.plateau_soft_ok = plateau_rel <= rep.tol.plateau_soft_rel;

  if (rep.kdim < rep.dim) {
    rep.warnings.push_back("Krylov space has dimension " + std::to_string(rep.kdim) + " < D = " +
                           std::to_string(rep.dim));
  }
  if (rep.cp_estimate.solver == CvpMethod::babai) rep.warnings.push_back(babai_caveat(rep.dim));
  if (!rep.plateau_soft_ok) {
    rep.warnings.push_back("C_b plateau median " + format_double(rep.cb_plateau_median) + " differs from C_p " +
                           format_double(rep.cp_estimate.mean) + " by more than " +
                           format_double(100.0 * rep.tol.plateau_soft_rel) + "%");
  }
  return rep;
}

inline nlohmann::ordered_json to_json(const CorrespondenceReport& rep) {
  nlohmann::ordered_json j;
  j["dim"] = rep.dim;
  j["kdim"] = rep.kdim;
  j["ck_bar_analytic"] = rep.ck_bar_analytic;
  j["ck_bar_numeric"] = rep.ck_bar_numeric;
  j["averaging_horizon"] = finite_or_null(rep.averaging_horizon);
  j["trace_q"] = rep.trace_q;
  j["max_q_vs_Q_diff"] = rep.max_q_vs_Q_diff;
  j["cp_estimate"] = plateau_to_json(rep.cp_estimate, rep.dim);
  j["cb_plateau_median"] = rep.cb_plateau_median;
  j["ridge_epsilon"] = rep.ridge_epsilon;
  j["q_eigenvalues"] = std::vector<double>(rep.q_eigenvalues.data(), rep.q_eigenvalues.data() + rep.q_eigenvalues.size());
  j["tolerances"] = {{"trace_identity_rel", rep.tol.trace_identity_rel},
                     {"schedule_identity", rep.tol.schedule_identity},
                     {"ergodic_rel", rep.tol.ergodic_rel},
                     {"plateau_soft_rel", rep.tol.plateau_soft_rel}};
  j["checks"] = {{"trace_identity", rep.trace_identity_ok},
                 {"schedule_identity", rep.schedule_identity_ok},
                 {"ergodic_average", rep.ergodic_average_ok},
                 {"plateau_soft", rep.plateau_soft_ok ? "pass" : "warn"}};
  j["warnings"] = rep.warnings;
  return j;
}

}  // namespace knc
