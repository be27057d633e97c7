// Acceptance suite: one PASS/FAIL/WARN line per criterion, nonzero exit if
// any hard criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "knc/knc.hpp"
#include "oracles.hpp"

using namespace knc;

namespace {

enum class Verdict { pass, fail, warn };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

struct Instance {
  HermitianOperator h;
  SpectralDecomposition spec;
  KrylovBasis kb;
  ComplexVector c;
};

Instance make_instance(const HermitianOperator& h, const ComplexVector& v0) {
  auto spec = diagonalize(h);
  auto kb = lanczos(h, spec, v0);
  auto c = seed_overlaps(spec, v0);
  return {h, std::move(spec), std::move(kb), std::move(c)};
}

std::vector<Instance> random_instances() {
  std::vector<Instance> out;
  const int dims[] = {8, 32, 64};
  for (int i = 0; i < 20; ++i) {
    const int d = dims[i % 3];
    const auto ens = (i / 3) % 2 == 0 ? Ensemble::complex_hermitian : Ensemble::real_symmetric;
    const std::uint64_t seed = 1000 + 17 * static_cast<std::uint64_t>(i);
    out.push_back(make_instance(build_random_hermitian(d, ens, seed), basis_state(d, i % d)));
  }
  return out;
}

/// Seeds confined to an invariant subspace, so the Krylov space is smaller than D.
std::vector<Instance> small_krylov_instances() {
  std::vector<Instance> out;
  for (int i = 0; i < 5; ++i) {
    const int d = 8 + 6 * i;
    const auto h = build_random_hermitian(d, Ensemble::complex_hermitian, 2000 + static_cast<std::uint64_t>(i));
    const auto spec = diagonalize(h);
    ComplexVector v0 = ComplexVector::Zero(d);
    for (int j = 0; j <= i; ++j) v0 += spec.eigenvectors.col(2 * j) * Complex(1.0 + j, 0.5 * j);
    v0.normalize();
    out.push_back(make_instance(h, v0));
  }
  return out;
}

HermitianOperator pauli_x() {
  ComplexMatrix x(2, 2);
  x << 0, 1, 1, 0;
  return HermitianOperator(x);
}

Outcome lanczos_validity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_ortho = 0.0, worst_tri = 0.0;
  for (const auto& in : random_instances()) {
    const Eigen::Index k = in.kb.kdim;
    worst_ortho = std::max(worst_ortho, max_abs(ComplexMatrix(in.kb.basis.adjoint() * in.kb.basis -
                                                              ComplexMatrix::Identity(k, k))));
    const ComplexMatrix proj = in.kb.basis.adjoint() * in.h.matrix() * in.kb.basis;
    const double tri = max_abs(ComplexMatrix(proj - in.kb.tridiagonal().cast<Complex>()));
    worst_tri = std::max(worst_tri, tri / in.spec.max_abs_energy());
  }
  const double secs = seconds_since(t0);
  return verdict(worst_ortho <= 1e-10 && worst_tri <= 1e-8 && secs < 10.0,
                 "20 instances, orthonormality " + fmt(worst_ortho) + ", tridiagonal/max|E| " + fmt(worst_tri) +
                     ", " + fmt(secs) + " s");
}

Outcome trace_identity() {
  auto all = random_instances();
  const auto small = small_krylov_instances();
  all.insert(all.end(), small.begin(), small.end());
  all.push_back(make_instance(pauli_x(), basis_state(2, 0)));
  all.push_back(make_instance(build_spin_chain(3, 0.9, 0.4, Boundary::open), basis_state(8, 1)));
  all.push_back(make_instance(build_spin_chain(4, 0.7, 0.3, Boundary::open), basis_state(16, 5)));
  double worst = 0.0;
  int below_full = 0;
  for (const auto& in : all) {
    if (in.kb.kdim < in.spec.dim()) ++below_full;
    const auto ws = WeightSchedule::linear(in.kb.kdim);
    const double tr = q_matrix(in.spec, in.kb, in.c, ws).trace();
    const double ck = time_averaged_ck(in.spec, in.kb, in.c, ws);
    worst = std::max(worst, relative_difference(tr, ck));
  }
  return verdict(worst <= 1e-12 && below_full >= 5, std::to_string(all.size()) + " instances (" +
                                                          std::to_string(below_full) + " with K<D), max rel diff " +
                                                          fmt(worst));
}

Outcome schedule_identity() {
  double worst = 0.0;
  int n = 0;
  for (int d : {2, 8, 16, 32, 64}) {
    for (auto ens : {Ensemble::complex_hermitian, Ensemble::real_symmetric}) {
      const auto in = make_instance(build_random_hermitian(d, ens, 3000 + static_cast<std::uint64_t>(d)), basis_state(d, 0));
      const auto ws = WeightSchedule::linear(in.kb.kdim);
      const double tr = q_matrix(in.spec, in.kb, in.c, ws).trace();
      worst = std::max(worst, verify_q_equals_metric(in.spec, in.kb, ws) / (1.0 + tr));
      ++n;
    }
  }
  for (const auto& in : small_krylov_instances()) {
    const auto ws = WeightSchedule::linear(in.kb.kdim);
    const double tr = q_matrix(in.spec, in.kb, in.c, ws).trace();
    worst = std::max(worst, verify_q_equals_metric(in.spec, in.kb, ws) / (1.0 + tr));
    ++n;
  }
  return verdict(worst <= 1e-10, std::to_string(n) + " instances up to D=64, max |Q-q|/(1+tr q) " + fmt(worst));
}

Outcome two_level_benchmark() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto in = make_instance(pauli_x(), basis_state(2, 0));
  const WeightSchedule ws({0.0, 1.0});
  const RealVector grid = RealVector::LinSpaced(100, 0.0, 10.0);
  const auto tr = krylov_complexity_trace(in.spec, in.kb, in.c, ws, grid);
  double worst_ck = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    worst_ck = std::max(worst_ck, std::abs(tr.values(i) - std::pow(std::sin(grid(i)), 2)));
  }
  const double bar_err = std::abs(time_averaged_ck(in.spec, in.kb, in.c, ws) - 0.5);
  RealMatrix expect(2, 2);
  expect << 0.25, -0.25, -0.25, 0.25;
  const double q_err = max_abs(RealMatrix(q_matrix(in.spec, in.kb, in.c, ws).matrix() - expect));
  const double secs = seconds_since(t0);
  return verdict(worst_ck <= 1e-10 && bar_err <= 1e-12 && q_err <= 1e-12 && secs < 1.0,
                 "C_K-sin^2 " + fmt(worst_ck) + ", C_K bar-1/2 " + fmt(bar_err) + ", q " + fmt(q_err) + ", " +
                     fmt(secs) + " s");
}

// The finite-T error carries terms oscillating like sin(wT)/(wT), so the 1/T
// law is checked on the RMS error over the horizons T(1 + i/16), i < 16,
// against the same band at 2T.
Outcome ergodic_average() {
  const auto in = make_instance(build_random_hermitian(32, Ensemble::complex_hermitian, 5), basis_state(32, 0));
  const auto ws = WeightSchedule::linear(in.kb.kdim);
  const double analytic = time_averaged_ck(in.spec, in.kb, in.c, ws);
  const double horizon = 200.0 / in.spec.min_gap;
  const double step = M_PI / (4.0 * in.spec.max_abs_energy());
  const double rel = std::abs(trapezoid_time_average(in.spec, in.kb, in.c, ws, horizon, step) - analytic) / analytic;
  const double rel2 =
      std::abs(trapezoid_time_average(in.spec, in.kb, in.c, ws, 2 * horizon, step) - analytic) / analytic;
  auto band_rms = [&](double base) {
    double s = 0.0;
    for (int i = 0; i < 16; ++i) {
      const double e = trapezoid_time_average(in.spec, in.kb, in.c, ws, base * (1.0 + i / 16.0), step) - analytic;
      s += e * e;
    }
    return std::sqrt(s / 16.0);
  };
  const double ratio = band_rms(horizon) / band_rms(2.0 * horizon);
  return verdict(rel <= 0.01 && ratio >= 2.0 / 3.0 && ratio <= 6.0,
                 "GUE D=32 rel err " + fmt(rel) + " at T=" + fmt(horizon) + ", RMS err ratio T/2T " + fmt(ratio) +
                     " (single-point ratio " + fmt(rel / rel2) + ")");
}

Outcome isotropy() {
  double worst = 0.0;
  for (int d : {2, 5, 8, 16}) {
    for (auto ens : {Ensemble::complex_hermitian, Ensemble::real_symmetric}) {
      const auto spec = diagonalize(build_random_hermitian(d, ens, 4000 + static_cast<std::uint64_t>(d)));
      const auto gens = GeneratorBasis::matrix_units(spec.eigenvectors);
      const auto q = metric_from_penalties(spec, gens, PenaltySchedule(std::vector<double>(static_cast<std::size_t>(d * d), 1.0)));
      worst = std::max(worst, max_abs(RealMatrix(q.matrix() - RealMatrix::Identity(d, d))));
    }
  }
  return verdict(worst <= 1e-10, "D in {2,5,8,16}, max |Q-I| " + fmt(worst));
}

Outcome curve_length() {
  const auto in = make_instance(build_random_hermitian(8, Ensemble::complex_hermitian, 6000), basis_state(8, 0));
  const auto ws = WeightSchedule::linear(in.kb.kdim);
  const auto gens = krylov_generator_basis(in.kb);
  const auto ps = krylov_penalty_schedule(ws, in.kb.kdim);
  const auto q = metric_from_penalties(in.spec, gens, ps);
  std::mt19937_64 gen(6001);
  std::uniform_int_distribution<int> kd(-6, 6);
  std::uniform_real_distribution<double> td(0.05, 60.0);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    IntVector k(8);
    for (int i = 0; i < 8; ++i) k(i) = kd(gen);
    const double t = td(gen);
    const RealVector y = in.spec.energies * (t / kTwoPi) - k.cast<double>();
    const double bound = kTwoPi * std::sqrt(q.quadratic_form(y));
    const double length = t * metric_speed(velocity_from_winding(in.spec, k, t), gens, ps);
    worst = std::max(worst, std::abs(length - bound) / std::max(1.0, bound));
  }
  return verdict(worst <= 1e-9, "100 (k,t) draws, GUE D=8, max |t*speed - 2pi sqrt(yQy)|/max(1,bound) " + fmt(worst));
}

Outcome cvp_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(7000);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(-4.0, 4.0);
  double worst = 0.0;
  int babai_below = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + rep % 6;
    RealMatrix b = RealMatrix::Identity(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) b(i, j) += 0.35 * nd(gen);
    RealVector x(d);
    for (int i = 0; i < d; ++i) x(i) = ud(gen);
    const auto lb = lll_reduce(b);
    const RealVector target = b * x;
    const auto exact = cvp_enumerate(lb, target);
    const auto babai = babai_nearest_plane(lb, target);
    const auto brute = cvp_bruteforce(b.transpose() * b, x, 5);
    worst = std::max(worst, std::abs(exact.distance - brute.distance));
    if (babai.distance < exact.distance - 1e-12) ++babai_below;
  }
  const double secs = seconds_since(t0);
  return verdict(worst <= 1e-9 && babai_below == 0 && secs < 30.0,
                 "100 instances D<=6, max |enum - brute| " + fmt(worst) + ", Babai below exact " +
                     std::to_string(babai_below) + ", " + fmt(secs) + " s");
}

Outcome plateau_analytics() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto one = plateau_estimate(MetricMatrix::identity(1), 100000, 8001);
  const double z = std::abs(one.mean - M_PI / 2.0) / one.standard_error;
  SolverOptions exact;
  exact.solver = SolverKind::exact;
  const auto sixteen = plateau_estimate(MetricMatrix::identity(16), 10000, 8002, exact);
  const double oracle_mean = oracle::rounding_plateau(16, 200000, 8003);
  const double rel_oracle = std::abs(sixteen.mean - oracle_mean) / oracle_mean;
  const double large_d = kTwoPi * std::sqrt(16.0 / 12.0);
  const double rel_large_d = std::abs(sixteen.mean - large_d) / large_d;
  const double secs = seconds_since(t0);
  return verdict(z <= 3.0 && rel_oracle <= 0.01 && rel_large_d <= 0.05 && secs < 60.0,
                 "D=1 |C_p-pi/2|/stderr " + fmt(z) + ", D=16 vs rounding oracle " + fmt(rel_oracle) +
                     ", vs 2pi sqrt(D/12) " + fmt(rel_large_d) + ", " + fmt(secs) + " s");
}

Outcome plateau_soft() {
  ModelConfig m;
  m.family = "gue";
  m.dim = 8;
  m.seed = 9000;
  const auto rep = full_report(m, ReportOptions{});
  const double rel = std::abs(rep.cb_plateau_median - rep.cp_estimate.mean) / rep.cp_estimate.mean;
  return {rep.plateau_soft_ok ? Verdict::pass : Verdict::warn,
          "GUE D=8 median C_b " + fmt(rep.cb_plateau_median) + " vs C_p " + fmt(rep.cp_estimate.mean) + " +- " +
              fmt(rep.cp_estimate.standard_error) + " (rel " + fmt(rel) + ", ridge " + fmt(rep.ridge_epsilon) + ")"};
}

Outcome degeneracy_guard() {
  const auto h = build_spin_chain(2, 0.0, 0.0, Boundary::open);
  const auto in = make_instance(h, basis_state(4, 0));
  const auto ws = WeightSchedule::linear(in.kb.kdim);
  auto raises_degenerate = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::degenerate_spectrum;
    }
    return false;
  };
  const bool avg = raises_degenerate([&] { time_averaged_ck(in.spec, in.kb, in.c, ws); });
  const bool q = raises_degenerate([&] { q_matrix(in.spec, in.kb, in.c, ws); });
  return verdict(avg && q, std::string("time_averaged_ck ") + (avg ? "raises" : "does not raise") +
                               ", q_matrix " + (q ? "raises" : "does not raise") + " degenerate_spectrum");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const std::string dir = std::filesystem::temp_directory_path().string();
  const std::string base = std::string("\"") + KNC_CLI_PATH + "\" verify --model gue --dim 8 --seed 12 --mc-seed 3";
  std::vector<std::string> reports;
  int status = 0;
  int run = 0;
  for (int threads : {1, 1, 8, 8}) {
    const std::string out = dir + "/knc_accept_" + std::to_string(run++) + ".json";
    status |= std::system((base + " --threads " + std::to_string(threads) + " --out \"" + out + "\"").c_str());
    reports.push_back(slurp(out));
    std::filesystem::remove(out);
  }
  const bool same = !reports[0].empty() && reports[0] == reports[1] && reports[0] == reports[2] &&
                    reports[0] == reports[3];
  return verdict(status == 0 && same, "verify x2 at 1 and 8 threads: " +
                                          std::string(same ? "byte-identical" : "outputs differ") + " (" +
                                          std::to_string(reports[0].size()) + " bytes)");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Lanczos validity", lanczos_validity},
      {"Trace identity", trace_identity},
      {"Schedule identity", schedule_identity},
      {"Two-level benchmark", two_level_benchmark},
      {"Ergodic-average cross-check", ergodic_average},
      {"Isotropy reduction", isotropy},
      {"Curve-length identity", curve_length},
      {"CVP exactness", cvp_exactness},
      {"Plateau analytics", plateau_analytics},
      {"Plateau vs trace (soft)", plateau_soft},
      {"Degeneracy guard", degeneracy_guard},
      {"Determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::warn ? "WARN" : "FAIL";
    if (o.verdict == Verdict::fail) ++failures;
    std::cout << "[" << tag << "] " << (i + 1) << ". " << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all hard criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
