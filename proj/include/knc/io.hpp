#pragma once

// CSV and JSON emission. CSV floats use 17 significant digits, '.' as the
// decimal point regardless of locale, and LF line endings.

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "knc/core.hpp"
#include "knc/krylov.hpp"
#include "knc/lattice.hpp"
#include "knc/models.hpp"
#include "knc/nielsen.hpp"

namespace knc {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_spectrum_csv(const SpectralDecomposition& spec, std::ostream& os) {
  os << "n,E_n\n";
  for (Eigen::Index n = 0; n < spec.dim(); ++n) os << n << ',' << format_double(spec.energies(n)) << '\n';
}

inline void write_trace_csv(const ComplexityTrace& trace, std::ostream& os) {
  os << "t,value\n";
  for (Eigen::Index i = 0; i < trace.times.size(); ++i) {
    os << format_double(trace.times(i)) << ',' << format_double(trace.values(i)) << '\n';
  }
}

inline void write_nielsen_csv(const NielsenTrace& nt, std::ostream& os) {
  os << "t,value,method\n";
  for (Eigen::Index i = 0; i < nt.trace.times.size(); ++i) {
    os << format_double(nt.trace.times(i)) << ',' << format_double(nt.trace.values(i)) << ','
       << to_string(nt.methods[static_cast<std::size_t>(i)]) << '\n';
  }
}

/// One row per reduced basis vector.
inline void write_basis_csv(const LatticeBasis& lb, std::ostream& os) {
  os << "vector";
  for (Eigen::Index i = 0; i < lb.dim; ++i) os << ",x" << i;
  os << '\n';
  for (Eigen::Index c = 0; c < lb.dim; ++c) {
    os << c;
    for (Eigen::Index i = 0; i < lb.dim; ++i) os << ',' << format_double(lb.columns(i, c));
    os << '\n';
  }
}

inline nlohmann::ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json plateau_to_json(const PlateauEstimate& est, Eigen::Index dim) {
  return {{"dim", dim},
          {"mean", est.mean},
          {"stderr", est.standard_error},
          {"n_samples", est.n_samples},
          {"solver", std::string(to_string(est.solver))},
          {"ridge_epsilon", est.ridge_epsilon},
          {"rng_seed", est.rng_seed}};
}

inline nlohmann::ordered_json krylov_to_json(const KrylovBasis& kb, double ck_bar, double trace_q) {
  return {{"kdim", kb.kdim},
          {"a", std::vector<double>(kb.a.data(), kb.a.data() + kb.a.size())},
          {"b", std::vector<double>(kb.b.data(), kb.b.data() + kb.b.size())},
          {"ck_bar", ck_bar},
          {"trace_q", trace_q}};
}

/// Writes `text` to `path`, or to `fallback` when path is empty.
inline void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path + "' for writing");
  out << text;
  require(static_cast<bool>(out), ErrorKind::io, "write to '" + path + "' failed");
}

}  // namespace knc
