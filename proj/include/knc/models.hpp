#pragma once

// Finite-dimensional Hamiltonians and their validated spectral decompositions.
//
// Conventions:
//  * Random ensembles: real-symmetric (GOE-like) draws H_ii ~ N(0, 2) and
//    H_ij ~ N(0, 1) for i < j; complex-hermitian (GUE-like) draws H_ii ~ N(0, 1)
//    and Re H_ij, Im H_ij ~ N(0, 1/2). In both cases E|H_ij|^2 = 1 off the
//    diagonal and the diagonal variance is twice that of each independent
//    off-diagonal component. No 1/sqrt(D) scaling: the semicircle has radius
//    2 sqrt(D).
//  * Spin chains: site i is bit i of the basis index (little-endian), and
//    sigma^z |0> = +|0>.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "knc/core.hpp"

namespace knc {

class HermitianOperator {
 public:
  /// Validates hermiticity (max|H - H^+| <= 1e-12 max|H|) and finiteness, then
  /// stores the exactly hermitian part.
  explicit HermitianOperator(const ComplexMatrix& m) {
    require(m.rows() >= 1 && m.rows() == m.cols(), ErrorKind::invalid_dimension,
            "hamiltonian must be square with dimension >= 1");
    require(m.allFinite(), ErrorKind::invalid_input, "hamiltonian has non-finite entries");
    const double scale = max_abs(m);
    const double residual = max_abs(ComplexMatrix(m - m.adjoint()));
    require(residual <= 1e-12 * scale, ErrorKind::invalid_input,
            "hamiltonian is not hermitian (residual " + std::to_string(residual) + ")");
    m_ = (m + m.adjoint()) * 0.5;
  }

  Eigen::Index dim() const { return m_.rows(); }
  const ComplexMatrix& matrix() const { return m_; }

 private:
  ComplexMatrix m_;
};

enum class Ensemble { real_symmetric, complex_hermitian };
enum class Boundary { open, periodic };

inline HermitianOperator build_random_hermitian(int dim, Ensemble ensemble, std::uint64_t rng_seed) {
  require(dim >= 1, ErrorKind::invalid_dimension, "random hamiltonian needs D >= 1");
  std::mt19937_64 gen(rng_seed);
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  if (ensemble == Ensemble::real_symmetric) {
    std::normal_distribution<double> diag(0.0, std::sqrt(2.0));
    std::normal_distribution<double> off(0.0, 1.0);
    for (int i = 0; i < dim; ++i) {
      h(i, i) = diag(gen);
      for (int j = i + 1; j < dim; ++j) {
        const double x = off(gen);
        h(i, j) = x;
        h(j, i) = x;
      }
    }
  } else {
    std::normal_distribution<double> diag(0.0, 1.0);
    std::normal_distribution<double> off(0.0, std::sqrt(0.5));
    for (int i = 0; i < dim; ++i) {
      h(i, i) = diag(gen);
      for (int j = i + 1; j < dim; ++j) {
        const double re = off(gen);
        const double im = off(gen);
        h(i, j) = Complex(re, im);
        h(j, i) = Complex(re, -im);
      }
    }
  }
  return HermitianOperator(h);
}

/// H = sum_i Z_i Z_{i+1} + gx sum_i X_i + gz sum_i Z_i. A periodic chain adds
/// the (n-1, 0) bond only for n >= 3, so no bond is ever counted twice.
inline HermitianOperator build_spin_chain(int n_sites, double gx, double gz, Boundary boundary) {
  require(n_sites >= 1 && n_sites <= 14, ErrorKind::invalid_dimension, "spin chain needs 1 <= n_sites <= 14");
  const std::size_t dim = std::size_t{1} << n_sites;
  ComplexMatrix h = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));

  std::vector<std::pair<int, int>> bonds;
  for (int i = 0; i + 1 < n_sites; ++i) bonds.emplace_back(i, i + 1);
  if (boundary == Boundary::periodic && n_sites >= 3) bonds.emplace_back(n_sites - 1, 0);

  auto z = [](std::size_t s, int site) { return ((s >> site) & 1U) ? -1.0 : 1.0; };
  for (std::size_t s = 0; s < dim; ++s) {
    const auto is = static_cast<Eigen::Index>(s);
    double diag = 0.0;
    for (auto [a, b] : bonds) diag += z(s, a) * z(s, b);
    for (int i = 0; i < n_sites; ++i) {
      diag += gz * z(s, i);
      h(static_cast<Eigen::Index>(s ^ (std::size_t{1} << i)), is) += gx;
    }
    h(is, is) += diag;
  }
  return HermitianOperator(h);
}

struct SpectralDecomposition {
  RealVector energies;         // ascending
  ComplexMatrix eigenvectors;  // column n is |n>
  double min_gap = std::numeric_limits<double>::infinity();

  Eigen::Index dim() const { return energies.size(); }
  double max_abs_energy() const { return energies.cwiseAbs().maxCoeff(); }
  double spectral_range() const { return energies(energies.size() - 1) - energies(0); }
};

/// Dense Hermitian eigensolve. Each eigenvector is rephased so that its
/// largest-magnitude component (first one on ties) is real and positive.
inline SpectralDecomposition diagonalize(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix());
  auto condition_report = [&] {
    std::ostringstream os;
    os << "D=" << h.dim() << " max|H|=" << max_abs(h.matrix()) << " ||H||_F=" << h.matrix().norm();
    return os.str();
  };
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::numerical_failure, "eigensolver did not converge (" + condition_report() + ")");
  }

  SpectralDecomposition spec;
  spec.energies = solver.eigenvalues();
  spec.eigenvectors = solver.eigenvectors();
  const Eigen::Index d = spec.dim();
  for (Eigen::Index n = 0; n < d; ++n) {
    Eigen::Index arg = 0;
    spec.eigenvectors.col(n).cwiseAbs().maxCoeff(&arg);
    const Complex pivot = spec.eigenvectors(arg, n);
    spec.eigenvectors.col(n) *= std::conj(pivot) / std::abs(pivot);
    spec.eigenvectors(arg, n) = std::abs(pivot);
  }
  for (Eigen::Index n = 0; n + 1 < d; ++n) {
    spec.min_gap = std::min(spec.min_gap, spec.energies(n + 1) - spec.energies(n));
  }

  const ComplexMatrix& u = spec.eigenvectors;
  const double unitarity = max_abs(ComplexMatrix(u.adjoint() * u - ComplexMatrix::Identity(d, d)));
  const double recon = max_abs(ComplexMatrix(u * spec.energies.cast<Complex>().asDiagonal() * u.adjoint() - h.matrix()));
  if (unitarity > 1e-10 || recon > 1e-8 * spec.max_abs_energy()) {
    fail(ErrorKind::numerical_failure, "eigendecomposition residuals too large: unitarity " +
                                           std::to_string(unitarity) + ", reconstruction " +
                                           std::to_string(recon) + " (" + condition_report() + ")");
  }
  return spec;
}

/// Gap tolerance used when none is given: 1e-9 times the spectral range.
inline double default_gap_tol(const SpectralDecomposition& spec) { return 1e-9 * spec.spectral_range(); }

/// All pairs (n, m), n < m, with |E_n - E_m| < gap_tol.
inline std::vector<std::pair<int, int>> check_nondegenerate(const SpectralDecomposition& spec, double gap_tol) {
  std::vector<std::pair<int, int>> pairs;
  const auto d = static_cast<int>(spec.dim());
  for (int n = 0; n < d; ++n) {
    for (int m = n + 1; m < d && spec.energies(m) - spec.energies(n) < gap_tol; ++m) pairs.emplace_back(n, m);
  }
  return pairs;
}

inline void require_nondegenerate(const SpectralDecomposition& spec) {
  const auto pairs = check_nondegenerate(spec, default_gap_tol(spec));
  if (!pairs.empty()) {
    fail(ErrorKind::degenerate_spectrum, std::to_string(pairs.size()) + " near-degenerate level pair(s), first (" +
                                             std::to_string(pairs.front().first) + ", " +
                                             std::to_string(pairs.front().second) + ")");
  }
}

// File format: {"dim": D, "re": [D*D row-major], "im": [D*D row-major]}.

inline nlohmann::json hamiltonian_to_json(const HermitianOperator& h) {
  const Eigen::Index d = h.dim();
  std::vector<double> re, im;
  re.reserve(static_cast<std::size_t>(d * d));
  im.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      re.push_back(h.matrix()(i, j).real());
      im.push_back(h.matrix()(i, j).imag());
    }
  }
  return {{"dim", d}, {"re", re}, {"im", im}};
}

inline HermitianOperator hamiltonian_from_json(const nlohmann::json& j) {
  try {
    const auto d = j.at("dim").get<long long>();
    require(d >= 1, ErrorKind::invalid_dimension, "hamiltonian file: dim must be >= 1");
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.contains("im") ? j.at("im").get<std::vector<double>>() : std::vector<double>(re.size(), 0.0);
    require(re.size() == static_cast<std::size_t>(d * d) && im.size() == re.size(), ErrorKind::invalid_input,
            "hamiltonian file: re/im must hold dim^2 row-major entries");
    ComplexMatrix m(d, d);
    for (long long i = 0; i < d; ++i) {
      for (long long k = 0; k < d; ++k) {
        const auto idx = static_cast<std::size_t>(i * d + k);
        m(i, k) = Complex(re[idx], im[idx]);
      }
    }
    return HermitianOperator(m);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("hamiltonian file: ") + e.what());
  }
}

inline HermitianOperator load_hamiltonian(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open hamiltonian file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, "hamiltonian file '" + path + "': " + e.what());
  }
  return hamiltonian_from_json(j);
}

inline void save_hamiltonian(const HermitianOperator& h, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write hamiltonian file '" + path + "'");
  out << hamiltonian_to_json(h).dump() << '\n';
}

}  // namespace knc
