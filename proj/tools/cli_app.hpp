#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage/config error,
// 2 numerical hard-check failure, 3 resource or solver-cap error.

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "knc/knc.hpp"

namespace knc::cli {

/// Everything a run needs. JSON config keys use the flag names with '-'
/// replaced by '_'; flags given on the command line override config keys.
struct RunConfig {
  ModelConfig model;
  std::string boundary = "open";
  Eigen::Index v0 = 0;
  std::string v0_path;
  std::string weights = "linear";
  double tmax = 0.0;  // <= 0: default 50 D / spectral range
  Eigen::Index tpoints = 256;
  std::string solver = "auto";
  long long samples = 0;
  std::uint64_t mc_seed = 1;
  double ridge = -1.0;  // < 0: default 1e-10 (trace/D + 1)
  double delta = kDefaultLllDelta;
  int enum_cap = kDefaultEnumerationCap;
  std::string metric = "krylov";
  std::string out;
  std::string csv;
  std::string json;
  int threads = 1;
  std::string dump_basis;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_dimension:
    case ErrorKind::invalid_input:
    case ErrorKind::io: return 1;
    case ErrorKind::numerical_failure:
    case ErrorKind::degenerate_spectrum:
    case ErrorKind::not_psd:
    case ErrorKind::conditioning: return 2;
    case ErrorKind::solver_cap:
    case ErrorKind::resource: return 3;
  }
  return 1;
}

inline std::vector<double> parse_weight_list(const std::string& text) {
  std::vector<double> w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      w.push_back(std::stod(item, &used));
      require(used == item.size(), ErrorKind::invalid_input, "bad weight '" + item + "'");
    } catch (const std::logic_error&) {
      fail(ErrorKind::invalid_input, "bad weight '" + item + "'");
    }
  }
  require(!w.empty(), ErrorKind::invalid_input, "empty weight list");
  return w;
}

inline WeightSchedule make_weights(const RunConfig& cfg, Eigen::Index kdim) {
  if (cfg.weights == "linear") return WeightSchedule::linear(kdim);
  return WeightSchedule(parse_weight_list(cfg.weights));
}

inline SolverOptions make_solver(const RunConfig& cfg) {
  SolverOptions s;
  if (cfg.solver == "exact") {
    s.solver = SolverKind::exact;
  } else if (cfg.solver == "babai") {
    s.solver = SolverKind::babai;
  } else if (cfg.solver == "auto") {
    s.solver = SolverKind::automatic;
  } else {
    fail(ErrorKind::invalid_input, "unknown solver '" + cfg.solver + "'");
  }
  s.delta = cfg.delta;
  s.enumeration_cap = cfg.enum_cap;
  if (cfg.ridge >= 0.0) s.ridge = cfg.ridge;
  s.threads = cfg.threads;
  return s;
}

inline ModelConfig make_model(const RunConfig& cfg) {
  ModelConfig m = cfg.model;
  require(cfg.boundary == "open" || cfg.boundary == "periodic", ErrorKind::invalid_input,
          "boundary must be open or periodic");
  m.boundary = cfg.boundary == "open" ? Boundary::open : Boundary::periodic;
  return m;
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("model", cfg.model.family);
    take("dim", cfg.model.dim);
    take("seed", cfg.model.seed);
    take("sites", cfg.model.sites);
    take("gx", cfg.model.gx);
    take("gz", cfg.model.gz);
    take("path", cfg.model.path);
    take("boundary", cfg.boundary);
    take("v0", cfg.v0);
    take("v0_path", cfg.v0_path);
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      if (w.is_array()) {
        std::string joined;
        for (const auto& x : w) joined += (joined.empty() ? "" : ",") + format_double(x.get<double>());
        cfg.weights = joined;
      } else {
        cfg.weights = w.get<std::string>();
      }
    }
    take("tmax", cfg.tmax);
    take("tpoints", cfg.tpoints);
    take("solver", cfg.solver);
    take("samples", cfg.samples);
    take("mc_seed", cfg.mc_seed);
    take("ridge", cfg.ridge);
    take("delta", cfg.delta);
    take("enum_cap", cfg.enum_cap);
    take("metric", cfg.metric);
    take("out", cfg.out);
    take("csv", cfg.csv);
    take("json", cfg.json);
    take("threads", cfg.threads);
    take("dump_basis", cfg.dump_basis);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, "config '" + path + "': " + e.what());
  }
}

struct Context {
  HermitianOperator h;
  SpectralDecomposition spec;
};

inline Context load_context(const RunConfig& cfg) {
  HermitianOperator h = build_model(make_model(cfg));
  SpectralDecomposition spec = diagonalize(h);
  return {std::move(h), std::move(spec)};
}

inline RealVector time_grid(const RunConfig& cfg, const SpectralDecomposition& spec) {
  return default_time_grid(cfg.tpoints, cfg.tmax > 0.0 ? cfg.tmax : default_tmax(spec));
}

inline KrylovBasis seeded_lanczos(const RunConfig& cfg, const Context& ctx, ComplexVector& v0, std::ostream& err) {
  v0 = build_seed(SeedSpec{cfg.v0, cfg.v0_path}, ctx.spec.dim());
  KrylovBasis kb = lanczos(ctx.h, ctx.spec, v0);
  if (kb.kdim < ctx.spec.dim()) {
    err << "warning: Krylov space has dimension K=" << kb.kdim << " < D=" << ctx.spec.dim() << '\n';
  }
  return kb;
}

inline MetricMatrix metric_for(const RunConfig& cfg, const Context& ctx, std::ostream& err) {
  if (cfg.metric == "identity") return MetricMatrix::identity(ctx.spec.dim());
  require(cfg.metric == "krylov", ErrorKind::invalid_input, "metric must be krylov or identity");
  ComplexVector v0;
  const KrylovBasis kb = seeded_lanczos(cfg, ctx, v0, err);
  return q_matrix(ctx.spec, kb, seed_overlaps(ctx.spec, v0), make_weights(cfg, kb.kdim));
}

inline void note_solver(CvpMethod method, Eigen::Index dim, std::ostream& err) {
  if (method == CvpMethod::babai) err << "note: " << babai_caveat(dim) << '\n';
}

inline void dump_basis(const RunConfig& cfg, const MetricMatrix& q) {
  if (cfg.dump_basis.empty()) return;
  const WindingLattice lattice(q, make_solver(cfg));
  std::ostringstream os;
  write_basis_csv(lattice.lattice(), os);
  emit(cfg.dump_basis, os.str(), std::cout);
}

inline int cmd_spectrum(const RunConfig& cfg, std::ostream& out) {
  const Context ctx = load_context(cfg);
  std::ostringstream os;
  write_spectrum_csv(ctx.spec, os);
  emit(cfg.out, os.str(), out);
  return 0;
}

inline int cmd_krylov(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Context ctx = load_context(cfg);
  ComplexVector v0;
  const KrylovBasis kb = seeded_lanczos(cfg, ctx, v0, err);
  const WeightSchedule ws = make_weights(cfg, kb.kdim);
  const ComplexVector c = seed_overlaps(ctx.spec, v0);
  const ComplexityTrace trace = krylov_complexity_trace(ctx.spec, kb, c, ws, time_grid(cfg, ctx.spec), cfg.threads);
  const double ck_bar = time_averaged_ck(ctx.spec, kb, c, ws);
  const double trace_q = q_matrix(ctx.spec, kb, c, ws).trace();
  if (!cfg.csv.empty()) {
    std::ostringstream os;
    write_trace_csv(trace, os);
    emit(cfg.csv, os.str(), out);
  }
  emit(cfg.out, krylov_to_json(kb, ck_bar, trace_q).dump(2) + "\n", out);
  return 0;
}

inline int cmd_nielsen(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Context ctx = load_context(cfg);
  const MetricMatrix q = metric_for(cfg, ctx, err);
  const SolverOptions solver = make_solver(cfg);
  const NielsenTrace nt = nielsen_bound_trace(ctx.spec, q, time_grid(cfg, ctx.spec), solver);
  if (!nt.methods.empty()) note_solver(nt.methods.front(), q.dim(), err);
  std::ostringstream os;
  write_nielsen_csv(nt, os);
  emit(cfg.out, os.str(), out);
  if (!cfg.json.empty()) {
    const PlateauEstimate est = plateau_estimate(q, cfg.samples > 0 ? cfg.samples : 10'000, cfg.mc_seed, solver);
    emit(cfg.json, plateau_to_json(est, q.dim()).dump(2) + "\n", out);
  }
  dump_basis(cfg, q);
  return 0;
}

inline int cmd_plateau(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Context ctx = load_context(cfg);
  const MetricMatrix q = metric_for(cfg, ctx, err);
  const SolverOptions solver = make_solver(cfg);
  long long samples = cfg.samples;
  if (samples <= 0) samples = WindingLattice(q, solver).method() == CvpMethod::exact ? 10'000 : 100'000;
  const PlateauEstimate est = plateau_estimate(q, samples, cfg.mc_seed, solver);
  note_solver(est.solver, q.dim(), err);
  emit(cfg.out, plateau_to_json(est, q.dim()).dump(2) + "\n", out);
  dump_basis(cfg, q);
  return 0;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  ReportOptions opts;
  if (cfg.weights != "linear") opts.weights = parse_weight_list(cfg.weights);
  opts.seed = SeedSpec{cfg.v0, cfg.v0_path};
  opts.time_points = cfg.tpoints;
  if (cfg.tmax > 0.0) opts.tmax = cfg.tmax;
  opts.solver = make_solver(cfg);
  opts.samples = cfg.samples;
  opts.mc_seed = cfg.mc_seed;
  const CorrespondenceReport rep = full_report(make_model(cfg), opts);
  emit(cfg.out, to_json(rep).dump(2) + "\n", out);
  return rep.hard_checks_passed() ? 0 : 2;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Krylov spread complexity and lattice bounds on Nielsen complexity"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig flags;
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
  auto add = [&](const std::string& name, auto RunConfig::*field, const std::string& help) {
    auto* opt = app.add_option(name, flags.*field, help);
    overrides.emplace_back(opt, [&flags, field](RunConfig& c) { c.*field = flags.*field; });
    return opt;
  };
  auto add_model = [&](const std::string& name, auto ModelConfig::*field, const std::string& help) {
    auto* opt = app.add_option(name, flags.model.*field, help);
    overrides.emplace_back(opt, [&flags, field](RunConfig& c) { c.model.*field = flags.model.*field; });
    return opt;
  };

  app.add_option("--config", config_path, "JSON config file; flags override its keys");
  add_model("--model", &ModelConfig::family, "gue | goe | ising | file")
      ->check(CLI::IsMember({"gue", "goe", "ising", "file"}));
  add_model("--dim", &ModelConfig::dim, "dimension for gue/goe");
  add_model("--seed", &ModelConfig::seed, "model RNG seed");
  add_model("--sites", &ModelConfig::sites, "spin-chain length");
  add_model("--gx", &ModelConfig::gx, "transverse field");
  add_model("--gz", &ModelConfig::gz, "longitudinal field");
  add_model("--path", &ModelConfig::path, "hamiltonian JSON file for --model file");
  add("--boundary", &RunConfig::boundary, "open | periodic")->check(CLI::IsMember({"open", "periodic"}));
  add("--v0", &RunConfig::v0, "seed state: computational basis index");
  add("--v0-path", &RunConfig::v0_path, "seed state JSON file {re, im}");
  add("--weights", &RunConfig::weights, "linear | w0,w1,...");
  add("--tmax", &RunConfig::tmax, "time-grid end (default 50 D / spectral range)");
  add("--tpoints", &RunConfig::tpoints, "time-grid size");
  add("--solver", &RunConfig::solver, "exact | babai | auto")->check(CLI::IsMember({"exact", "babai", "auto"}));
  add("--samples", &RunConfig::samples, "Monte-Carlo samples for the plateau estimate");
  add("--mc-seed", &RunConfig::mc_seed, "Monte-Carlo seed");
  add("--ridge", &RunConfig::ridge, "ridge added to Q before lattice reduction");
  add("--delta", &RunConfig::delta, "LLL delta");
  add("--enum-cap", &RunConfig::enum_cap, "largest D solved by exact enumeration");
  add("--metric", &RunConfig::metric, "krylov | identity")->check(CLI::IsMember({"krylov", "identity"}));
  add("--out", &RunConfig::out, "primary output path (default stdout)");
  add("--csv", &RunConfig::csv, "krylov: C_K(t) CSV path");
  add("--json", &RunConfig::json, "nielsen: plateau JSON path");
  add("--threads", &RunConfig::threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  add("--dump-basis", &RunConfig::dump_basis, "write the reduced lattice basis as CSV");

  auto* spectrum = app.add_subcommand("spectrum", "energies as CSV n,E_n");
  auto* krylov = app.add_subcommand("krylov", "Lanczos coefficients, C_K(t) and its time average");
  auto* nielsen = app.add_subcommand("nielsen", "lattice bound C_b(t) as CSV t,value,method");
  auto* plateau = app.add_subcommand("plateau", "Monte-Carlo plateau estimate C_p as JSON");
  auto* verify = app.add_subcommand("verify", "full correspondence report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (auto& [opt, copy] : overrides) {
      if (opt->count() > 0) copy(cfg);
    }
    if (*spectrum) return cmd_spectrum(cfg, out);
    if (*krylov) return cmd_krylov(cfg, out, err);
    if (*nielsen) return cmd_nielsen(cfg, out, err);
    if (*plateau) return cmd_plateau(cfg, out, err);
    if (*verify) return cmd_verify(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace knc::cli
