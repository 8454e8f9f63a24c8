#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "obseq/catalog.hpp"
#include "obseq/docsmap.hpp"
#include "obseq/equivalence.hpp"
#include "obseq/error.hpp"
#include "obseq/growth.hpp"
#include "obseq/identification.hpp"
#include "obseq/io.hpp"
#include "obseq/montecarlo.hpp"
#include "obseq/remodel.hpp"

namespace obseq::cli {

using io::fmt;
using io::Json;

// ---------------------------------------------------------------- figure 1

/// Colour annotations carried as metadata for the standard curves.
inline std::string fig1_color(double beta) {
  if (beta == 0.6) return "red";
  if (beta == 0.5) return "purple";
  if (beta == 0.9) return "darkgreen";
  if (beta == 0.0) return "lightgreen";
  return "";
}

struct Fig1Row {
  double beta;
  double b;
  double mu;
};

/// Observed first-order autocorrelation mu1(beta, b) along b in (0, 1 - beta).
/// Nodes are cosine-clustered toward both ends of the interval so that the
/// steep approach to mu = 1 near b = 1 - beta is resolved.
inline std::vector<Fig1Row> fig1_curve(double beta, int steps) {
  if (!(beta >= 0.0 && beta < 1.0)) fail(ErrorCode::ParamOutOfRange, "beta must lie in [0, 1)");
  if (steps < 1) fail(ErrorCode::InvalidGrid, "steps must be positive");
  std::vector<Fig1Row> rows;
  const double width = 1.0 - beta;
  for (int i = 1; i <= steps; ++i) {
    const double b = width * 0.5 * (1.0 - std::cos(std::numbers::pi * i / (steps + 1)));
    const double mu = beta == 0.0 ? b : hybrid_roots(beta, b).mu1;
    rows.push_back({beta, b, mu});
  }
  return rows;
}

// ---------------------------------------------------------------- helpers

namespace detail {

struct Output {
  std::ofstream file;
  std::ostream* stream;

  Output(const std::string& path, std::ostream& fallback) : stream(&fallback) {
    if (!path.empty()) {
      file.open(path, std::ios::binary);
      if (!file) fail(ErrorCode::ParseError, "cannot write " + path);
      stream = &file;
    }
  }
  std::ostream& operator*() { return *stream; }
};

inline bool looks_like_catalog(const std::string& spec) {
  return spec.find('?') != std::string::npos || parse_model_id(spec).has_value();
}

struct Resolved {
  std::string label;
  StructuralREModel model;
};

inline Resolved resolve(const std::string& spec) {
  if (looks_like_catalog(spec)) {
    const CatalogEntry e = parse_catalog_spec(spec);
    return {e.describe(), encode(e)};
  }
  StructuralREModel m = io::load_model(spec);
  return {m.name, m};
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) fail(ErrorCode::ParseError, "bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// "lo:hi:step" or a comma list.
inline std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_list(text);
  std::string spec = text;
  std::replace(spec.begin(), spec.end(), ':', ',');
  const auto parts = parse_list(spec);
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
    fail(ErrorCode::InvalidGrid, "grid must be lo:hi:step with step > 0");
  }
  std::vector<double> out;
  const int count = static_cast<int>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (int i = 0; i <= count; ++i) out.push_back(parts[0] + i * parts[2]);
  return out;
}

inline Json solved_to_json(const std::string& label, const SolvedModel& s) {
  Json doc;
  doc["model"] = label;
  Json det;
  det["kind"] = to_string(s.determinacy.kind);
  det["degree"] = s.determinacy.degree;
  det["unstable_roots"] = s.determinacy.unstable_count;
  det["forward_variables"] = s.determinacy.forward_count;
  det["boundary"] = s.determinacy.boundary;
  det["roots"] = io::to_json(s.determinacy.roots);
  doc["determinacy"] = det;
  doc["C"] = io::to_json(s.C);
  doc["G1"] = io::to_json(s.G1);
  doc["G2"] = io::to_json(s.G2);
  if (s.sunspot_loading.size() > 0) {
    doc["sunspot_loading"] = io::to_json(s.sunspot_loading);
    doc["sunspot_variance"] = io::to_json(s.sunspot_variance.value_or(0.0));
  }
  doc["residual"] = io::to_json(s.residual);
  doc["multiple_solvents"] = s.multiple_solvents;
  doc["unit_root_boundary"] = s.boundary;
  return doc;
}

inline Json report_to_json(const IdentificationReport& r) {
  Json doc;
  doc["model"] = r.label;
  doc["parameters"] = r.param_names;
  doc["at"] = io::to_json(r.theta0);
  doc["rank"] = r.rank;
  doc["parameter_count"] = r.param_names.size();
  doc["identified"] = r.identified;
  doc["weak_identification"] = r.weak_identification;
  doc["singular_values"] = io::to_json(r.singular_values);
  Json nulls = Json::array();
  for (Eigen::Index j = 0; j < r.null_basis.cols(); ++j) nulls.push_back(io::to_json(Vector(r.null_basis.col(j))));
  doc["null_basis"] = nulls;
  doc["jacobian"] = io::to_json(r.jacobian);
  doc["warnings"] = r.warnings;
  return doc;
}

}  // namespace detail

// ---------------------------------------------------------------- commands

struct SolveArgs {
  std::string model_file;
  std::string catalog;
  std::string out;
};

inline int cmd_solve(const SolveArgs& a, std::ostream& out) {
  if (a.model_file.empty() == a.catalog.empty()) fail(ErrorCode::ParseError, "give exactly one of --model or --catalog");
  const auto r = detail::resolve(a.catalog.empty() ? a.model_file : a.catalog);
  const SolvedModel s = solve(r.model);
  detail::Output o(a.out, out);
  *o << detail::solved_to_json(r.label, s).dump(2) << '\n';
  return 0;
}

struct EquivArgs {
  std::string a;
  std::string b;
  int lags = kDefaultLags;
  double tol = kDefaultEquivTol;
};

inline int cmd_equiv(const EquivArgs& args, std::ostream& out) {
  const auto ra = detail::resolve(args.a);
  const auto rb = detail::resolve(args.b);
  const auto sa = to_state_space(solve(ra.model), ra.model);
  const auto sb = to_state_space(solve(rb.model), rb.model);
  const EquivalenceVerdict v = check(sa, sb, args.lags, args.tol);
  Json doc;
  doc["a"] = ra.label;
  doc["b"] = rb.label;
  doc["equivalent"] = v.equivalent;
  doc["max_discrepancy"] = io::to_json(v.max_discrepancy);
  doc["lag_horizon"] = v.lag_horizon;
  doc["tolerance"] = v.tolerance;
  doc["witness_lag"] = v.witness_lag ? Json(*v.witness_lag) : Json(nullptr);
  out << doc.dump(2) << '\n';
  return v.equivalent ? 0 : 1;
}

struct IdentifyArgs {
  std::string catalog;  // catalog spec or "toy?a=..&b=.."
  std::string model_file;
  std::string at;
  std::optional<double> restrict_b;
  std::string out;
};

inline int cmd_identify(const IdentifyArgs& a, std::ostream& out) {
  if (a.model_file.empty() == a.catalog.empty()) fail(ErrorCode::ParseError, "give exactly one of --model or --catalog");
  std::optional<Vector> theta;
  if (!a.at.empty()) {
    const auto values = detail::parse_list(a.at);
    theta = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  IdentificationReport report;
  if (!a.model_file.empty()) {
    report = rank_report(user_model_map(io::load_model(a.model_file)), theta);
  } else if (a.catalog.rfind("toy", 0) == 0) {
    double ta = 1.0, tb = 1.0;
    const auto q = a.catalog.find('?');
    if (q != std::string::npos) {
      std::stringstream rest(a.catalog.substr(q + 1));
      std::string item;
      while (std::getline(rest, item, '&')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) fail(ErrorCode::ParseError, "expected key=value in '" + item + "'");
        const double v = detail::parse_list(item.substr(eq + 1)).at(0);
        const std::string key = item.substr(0, eq);
        if (key == "a") ta = v;
        else if (key == "b") tb = v;
        else fail(ErrorCode::ParseError, "toy has no parameter '" + key + "'");
      }
    }
    report = rank_report(toy_map(ta, a.restrict_b.value_or(tb), a.restrict_b), theta);
  } else {
    const CatalogEntry e = parse_catalog_spec(a.catalog);
    check_ranges(e);
    report = rank_report(e, theta);
  }
  detail::Output o(a.out, out);
  *o << detail::report_to_json(report).dump(2) << '\n';
  return 0;
}

struct GrowthArgs {
  double alpha = 0.0, x = 0.0, n = 0.0, delta = 0.0;
  std::optional<double> rho, theta;
  std::optional<double> invert;
  std::string grid = "0.05:0.95:0.05";
  std::string mode = "rck";
  std::string out;
};

inline int cmd_growth(const GrowthArgs& a, std::ostream& out) {
  if (a.invert) {
    const bool solow = a.mode == "solow";
    if (!solow && a.mode != "rck") fail(ErrorCode::ParseError, "--mode must be solow or rck");
    if (!solow && !a.rho) fail(ErrorCode::ParseError, "rck inversion needs --rho");
    const auto points = growth::equivalence_locus(*a.invert, {a.x, a.n, a.delta, a.rho.value_or(0.0)},
                                                  solow ? std::vector<double>{} : detail::parse_grid(a.grid),
                                                  solow ? growth::LocusMode::Solow : growth::LocusMode::RckTheta);
    detail::Output o(a.out, out);
    io::CsvWriter csv(*o);
    csv.header({"alpha", "theta", "beta_check", "note"});
    for (const auto& p : points) {
      csv.row({fmt(p.alpha), p.theta ? fmt(*p.theta) : "", p.beta_check ? fmt(*p.beta_check) : "", p.note});
    }
    return 0;
  }
  growth::GrowthParams p{a.alpha, a.x, a.n, a.delta, a.rho.value_or(0.0), a.theta.value_or(1.0)};
  Json doc;
  doc["beta_solow"] = io::to_json(growth::beta_solow(p));
  if (a.rho && a.theta) {
    doc["zeta"] = io::to_json(p.zeta());
    doc["beta_rck"] = io::to_json(growth::beta_rck(p));
    doc["coincidence"] = growth::coincidence_holds(p, 1e-12);
  }
  detail::Output o(a.out, out);
  *o << doc.dump(2) << '\n';
  return 0;
}

struct Fig1Args {
  std::string betas = "0,0.5,0.6,0.9";
  int steps = 1000;
  std::string out;
};

inline int cmd_fig1(const Fig1Args& a, std::ostream& out) {
  const auto betas = detail::parse_list(a.betas);
  std::vector<std::vector<Fig1Row>> curves;
  for (double beta : betas) curves.push_back(fig1_curve(beta, a.steps));
  detail::Output o(a.out, out);
  io::CsvWriter csv(*o);
  csv.header({"beta", "b", "mu", "color"});
  for (const auto& curve : curves) {
    for (const auto& r : curve) csv.row({fmt(r.beta), fmt(r.b), fmt(r.mu), fig1_color(r.beta)});
  }
  return 0;
}

struct SimulateArgs {
  std::string catalog;
  int T = 1000;
  int burn_in = 500;
  std::uint64_t seed = 1;
  int fit = 1;
  int reps = 1;
  std::string out;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto r = detail::resolve(a.catalog);
  SimSpec spec{to_state_space(solve(r.model), r.model), a.T, a.burn_in, a.seed, a.reps};
  std::vector<FitResult> fits;
  for (int rep = 0; rep < a.reps; ++rep) fits.push_back(fit_ar(simulate_replication(spec, rep), a.fit));

  detail::Output o(a.out, out);
  io::CsvWriter csv(*o);
  std::vector<std::string> head{"replication"};
  for (int i = 1; i <= a.fit; ++i) head.push_back("phi" + std::to_string(i));
  for (int i = 1; i <= a.fit; ++i) head.push_back("se" + std::to_string(i));
  head.push_back("innovation_variance");
  head.push_back("loglik");
  csv.header(head);
  const auto values = [&](const FitResult& f) {
    std::vector<double> v = f.coefficients;
    v.insert(v.end(), f.standard_errors.begin(), f.standard_errors.end());
    v.push_back(f.innovation_variance_hat);
    v.push_back(f.loglik);
    return v;
  };
  const std::size_t width = head.size() - 1;
  std::vector<double> mean(width, 0.0), sq(width, 0.0);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto v = values(fits[i]);
    std::vector<std::string> row{std::to_string(i)};
    for (std::size_t j = 0; j < width; ++j) {
      row.push_back(fmt(v[j]));
      mean[j] += v[j] / static_cast<double>(fits.size());
    }
    csv.row(row);
  }
  for (const auto& f : fits) {
    const auto v = values(f);
    for (std::size_t j = 0; j < width; ++j) sq[j] += (v[j] - mean[j]) * (v[j] - mean[j]);
  }
  std::vector<std::string> mrow{"mean"}, srow{"sd"};
  for (std::size_t j = 0; j < width; ++j) {
    mrow.push_back(fmt(mean[j]));
    srow.push_back(fits.size() > 1 ? fmt(std::sqrt(sq[j] / static_cast<double>(fits.size() - 1))) : "");
  }
  csv.row(mrow);
  csv.row(srow);
  return 0;
}

struct TraceArgs {
  std::string manifest = "trace.json";
  std::string test_list;  // file holding --gtest_list_tests output
};

inline int cmd_trace(const TraceArgs& a, std::ostream& out) {
  std::ifstream in(a.test_list);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + a.test_list);
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto manifest = docsmap::load_manifest(a.manifest);
  docsmap::require_complete(manifest, docsmap::parse_gtest_listing(buf.str()));
  out << "manifest complete: " << manifest.entries.size() << " entries\n";
  return 0;
}

// ---------------------------------------------------------------- entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Linear rational-expectations models and observational equivalence"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a model and report its decision rule");
  solve_cmd->add_option("--model", solve_args.model_file, "model JSON file");
  solve_cmd->add_option("--catalog", solve_args.catalog, "catalog spec, e.g. MR2?beta=0.5&b=0.3");
  solve_cmd->add_option("--out", solve_args.out, "output file (default stdout)");

  EquivArgs equiv_args;
  auto* equiv_cmd = app.add_subcommand("equiv", "Compare the second moments of two models");
  equiv_cmd->add_option("--a", equiv_args.a, "first catalog spec or model file")->required();
  equiv_cmd->add_option("--b", equiv_args.b, "second catalog spec or model file")->required();
  equiv_cmd->add_option("--lags", equiv_args.lags, "autocovariance horizon");
  equiv_cmd->add_option("--tol", equiv_args.tol, "relative tolerance");

  IdentifyArgs id_args;
  auto* id_cmd = app.add_subcommand("identify", "Local identification rank at a point");
  id_cmd->add_option("--catalog", id_args.catalog, "catalog spec or toy?a=..&b=..");
  id_cmd->add_option("--model", id_args.model_file, "model JSON file");
  id_cmd->add_option("--at", id_args.at, "comma-separated evaluation point");
  id_cmd->add_option("--restrict-b", id_args.restrict_b, "toy model: fix b at this value");
  id_cmd->add_option("--out", id_args.out, "output file (default stdout)");

  GrowthArgs growth_args;
  auto* growth_cmd = app.add_subcommand("growth", "Solow and Ramsey-Cass-Koopmans convergence speeds");
  growth_cmd->add_option("--alpha", growth_args.alpha, "capital elasticity");
  growth_cmd->add_option("--x", growth_args.x, "technical-change growth rate")->required();
  growth_cmd->add_option("--n", growth_args.n, "labor growth rate")->required();
  growth_cmd->add_option("--delta", growth_args.delta, "depreciation rate")->required();
  growth_cmd->add_option("--rho", growth_args.rho, "discount rate");
  growth_cmd->add_option("--theta", growth_args.theta, "relative fluctuation aversion");
  growth_cmd->add_option("--invert", growth_args.invert, "target convergence speed");
  growth_cmd->add_option("--grid", growth_args.grid, "alpha grid, lo:hi:step or a list");
  growth_cmd->add_option("--mode", growth_args.mode, "solow or rck");
  growth_cmd->add_option("--out", growth_args.out, "output file (default stdout)");

  Fig1Args fig_args;
  auto* fig_cmd = app.add_subcommand("fig1", "Autocorrelation of inflation against b");
  fig_cmd->add_option("--betas", fig_args.betas, "comma-separated beta values");
  fig_cmd->add_option("--steps", fig_args.steps, "points per curve");
  fig_cmd->add_option("--out", fig_args.out, "CSV file (default stdout)");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a model and fit AR(p)");
  sim_cmd->add_option("--catalog", sim_args.catalog, "catalog spec or model file")->required();
  sim_cmd->add_option("--T", sim_args.T, "sample length");
  sim_cmd->add_option("--burn-in", sim_args.burn_in, "discarded initial draws");
  sim_cmd->add_option("--seed", sim_args.seed, "base seed");
  sim_cmd->add_option("--fit", sim_args.fit, "AR order to fit");
  sim_cmd->add_option("--reps", sim_args.reps, "replications");
  sim_cmd->add_option("--out", sim_args.out, "CSV file (default stdout)");

  TraceArgs trace_args;
  auto* trace_cmd = app.add_subcommand("trace", "Check trace.json against the test suite");
  trace_cmd->add_option("--manifest", trace_args.manifest, "manifest file");
  trace_cmd->add_option("--tests", trace_args.test_list, "gtest_list_tests output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e, out, err);
    return status == 0 ? 0 : 2;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_args, out);
    if (*equiv_cmd) return cmd_equiv(equiv_args, out);
    if (*id_cmd) return cmd_identify(id_args, out);
    if (*growth_cmd) return cmd_growth(growth_args, out);
    if (*fig_cmd) return cmd_fig1(fig_args, out);
    if (*sim_cmd) return cmd_simulate(sim_args, out);
    if (*trace_cmd) return cmd_trace(trace_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  }
  return 2;
}

}  // namespace obseq::cli
