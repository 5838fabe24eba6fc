// finslab CLI: batch verification runs driven by an INI config.
// Exit codes: 0 success, 1 config/usage error, 2 run failure (NaN,
// divergence, positivity loss), 3 verification violations present.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "finslab/config.hpp"
#include "finslab/connection.hpp"
#include "finslab/constants.hpp"
#include "finslab/csv.hpp"
#include "finslab/curvature.hpp"
#include "finslab/fundamental.hpp"
#include "finslab/geodesic.hpp"
#include "finslab/nonriemann.hpp"
#include "finslab/rng.hpp"

using namespace finslab;

namespace {

struct CommandResult {
  int exit_code = 0;
};

void write_report_csv(const std::string& path, const std::string& quantity, double min_margin,
                      long violations, double empirical) {
  CsvWriter out(path, {"quantity", "min_margin", "violations", "empirical_constant"});
  out.row_text(quantity, {min_margin, static_cast<double>(violations), empirical});
}

int cmd_validate(const RunConfig& cfg) {
  MetricSpec m = cfg.build_metric();
  const auto& cert = m.validity();
  std::cout << "metric: " << m.description() << "\n";
  std::cout << "certificate: samples=" << cert.samples
            << " homogeneity_residual=" << format_num(cert.homogeneity_residual)
            << " min_g_eigenvalue=" << format_num(cert.min_g_eigenvalue)
            << " min_F=" << format_num(cert.min_F) << "\n";
  Region reg = cfg.build_region();
  auto rep = misalignment_local(m, reg.center, 1e-6);
  std::cout << "alpha=" << format_num(rep.alpha) << " kappa=" << format_num(rep.kappa)
            << " kappa_star=" << format_num(rep.kappa_star) << " rho=" << format_num(rep.rho)
            << "\n";
  return 0;
}

int cmd_tensors(const RunConfig& cfg) {
  MetricSpec m = cfg.build_metric();
  MeasureSpec mu = cfg.build_measure();
  std::string spec = cfg.get("points", "at", "0,0@1,0");  // points separated by |
  ensure_dir(cfg.output_dir());
  CsvWriter out(cfg.output_dir() + "/tensors.csv",
                {"x1", "x2", "y1", "y2", "F", "g11", "g12", "g22", "C111", "C112", "C122", "C222",
                 "I1", "I2", "G1", "G2", "tau", "S", "Sdot", "flag_K"});
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, '|')) {
    auto at = item.find('@');
    if (at == std::string::npos) throw ConfigError("points.at entries look like x1,x2@y1,y2");
    item = item.substr(0, item.size());
    auto parse2 = [](const std::string& s) {
      std::stringstream t(s);
      double a, b;
      char comma;
      if (!(t >> a >> comma >> b)) throw ConfigError("bad point: " + s);
      return vec2(a, b);
    };
    Vec4 x = parse2(item.substr(0, at));
    Vec4 y = parse2(item.substr(at + 1));
    auto fd = fundamental(m, x, y);
    auto conn = connection(m, x, y);
    auto ds = distortion_s(m, mu, x, y);
    Vec4 u = vec2(-y[1], y[0]);
    double flag = flag_curvature(m, x, y, u);
    out.row(std::vector<double>{x[0], x[1], y[0], y[1], fd.F, fd.g[0][0], fd.g[0][1],
                                fd.g[1][1], fd.cartan[0][0][0], fd.cartan[0][0][1],
                                fd.cartan[0][1][1], fd.cartan[1][1][1], fd.mean_cartan[0],
                                fd.mean_cartan[1], conn.spray[0], conn.spray[1], ds.tau, ds.S,
                                ds.Sdot, flag});
  }
  std::cout << "wrote " << cfg.output_dir() << "/tensors.csv\n";
  return 0;
}

int cmd_constants(const RunConfig& cfg) {
  MetricSpec m = cfg.build_metric();
  Region reg = cfg.build_region();
  ensure_dir(cfg.output_dir());
  double pitch = reg.kind == RegionKind::kBall ? reg.radius / 4.0
                                               : (reg.hi[0] - reg.lo[0]) / 6.0;
  auto pts = reg.lattice(std::max(pitch, 1e-3));
  CsvWriter out(cfg.output_dir() + "/constants.csv",
                {"x1", "x2", "alpha", "kappa", "kappa_star", "rho"});
  double worst_gap = 0.0;
  for (const auto& x : pts) {
    if (!m.in_domain(std::span<const double>(x.data(), 2))) continue;
    auto rep = misalignment_local(m, x, 1e-6);
    out.row({x[0], x[1], rep.alpha, rep.kappa, rep.kappa_star, rep.rho});
    worst_gap = std::max(worst_gap, std::abs(rep.alpha_M * rep.alpha_m - 1.0));
  }
  double alpha_region = misalignment_region(m, reg, 1e-6);
  auto uc = uniform_constants(m, reg, 1e-6);
  std::cout << "alpha(region)=" << format_num(alpha_region) << " kappa=" << format_num(uc.kappa)
            << " kappa_star=" << format_num(uc.kappa_star) << " rho=" << format_num(uc.rho)
            << "\n";
  write_report_csv(cfg.output_dir() + "/constants_report.csv", "misalignment-product-gap",
                   -worst_gap, worst_gap > 1e-6 ? 1 : 0, alpha_region);
  return worst_gap > 1e-6 ? 3 : 0;
}

int cmd_compare(const RunConfig& cfg) {
  MetricSpec m = cfg.build_metric();
  MeasureSpec mu = cfg.build_measure();
  auto ccfg = cfg.build_compare();
  auto rep = verify_comparison(m, mu, ccfg);
  ensure_dir(cfg.output_dir());
  CsvWriter out(cfg.output_dir() + "/margins.csv", {"r", "laplacian", "bound", "margin"});
  for (const auto& row : rep.rows) out.row({row[0], row[1], row[2], row[3]});
  write_report_csv(cfg.output_dir() + "/compare_report.csv", "laplacian-comparison",
                   rep.min_margin, rep.violations, 0.0);
  std::cout << "comparison: N=" << format_num(rep.N) << " alpha=" << format_num(rep.alpha)
            << " K=" << format_num(rep.K) << " K0=" << format_num(rep.K0)
            << " C(N,alpha)=" << format_num(rep.C) << " C0=" << format_num(rep.C0) << "\n";
  std::cout << "evaluated=" << rep.evaluated << " min_margin=" << format_num(rep.min_margin)
            << " violations=" << rep.violations << "\n";
  if (rep.override_understated)
    std::cout << "warning: provided curvature constants understate the measured values\n";
  if (rep.disagreement_warning) std::cout << "warning: shooting/eikonal disagreement above 10h\n";
  return rep.violations > 0 ? 3 : 0;
}

int write_snapshots(const RunConfig& cfg, const SolveResult& run) {
  ensure_dir(cfg.output_dir());
  const auto& geo = run.geometry;
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    CsvWriter out(cfg.output_dir() + "/u_" + std::to_string(k) + ".csv", {"x1", "x2", "u"});
    for (int j = 0; j < geo.ny; ++j)
      for (int i = 0; i < geo.nx; ++i) {
        if (!geo.is_inside(i, j)) continue;
        Vec4 x = geo.cell(i, j);
        out.row({x[0], x[1], run.snapshots[k].u[static_cast<std::size_t>(geo.idx(i, j))]});
      }
  }
  std::ofstream man(cfg.output_dir() + "/run_manifest.txt", std::ios::binary);
  man << "steps=" << run.steps << "\n";
  man << "dt=" << format_num(run.dt) << "\n";
  man << "snapshots=" << run.snapshots.size() << "\n";
  for (const auto& s : run.snapshots) man << "t=" << format_num(s.t) << "\n";
  man << "aborted=" << (run.aborted ? 1 : 0) << "\n";
  if (run.aborted) man << "abort_reason=" << run.abort_reason << "\n";
  return 0;
}

int cmd_solve(const RunConfig& cfg) {
  MetricSpec m = cfg.build_metric();
  MeasureSpec mu = cfg.build_measure();
  FieldGrid u0 = cfg.build_grid();
  auto run = solve_schrodinger(m, mu, u0, cfg.build_potential(), cfg.build_solver());
  write_snapshots(cfg, run);
  std::cout << "steps=" << run.steps << " dt=" << format_num(run.dt)
            << " snapshots=" << run.snapshots.size() << "\n";
  if (run.aborted) {
    std::cout << "run aborted: " << run.abort_reason << "\n";
    return 2;
  }
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  MetricSpec m = cfg.build_metric();
  MeasureSpec mu = cfg.build_measure();
  FieldGrid u0 = cfg.build_grid();
  auto run = solve_schrodinger(m, mu, u0, cfg.build_potential(), cfg.build_solver());
  if (run.aborted) {
    std::cout << "run aborted: " << run.abort_reason << "\n";
    return 2;
  }
  auto params = cfg.build_estimate();
  auto q = cfg.build_potential();
  std::string variant = cfg.estimate_variant();
  VerificationReport rep;
  if (variant == "compact-n") rep = check_compact_N(m, mu, run, q, params);
  else if (variant == "compact-inf") rep = check_compact_inf(m, mu, run, q, params);
  else if (variant == "noncompact-n")
    rep = check_noncompact(m, mu, run, q, params, NoncompactVariant::kN);
  else if (variant == "noncompact-inf")
    rep = check_noncompact(m, mu, run, q, params, NoncompactVariant::kInf);
  else throw ConfigError("unknown estimate variant '" + variant + "'");

  ensure_dir(cfg.output_dir());
  {
    CsvWriter out(cfg.output_dir() + "/estimate_rows.csv", {"t", "sup_lhs", "rhs"});
    for (const auto& r : rep.rows) out.row({r[0], r[1], r[2]});
  }
  write_report_csv(cfg.output_dir() + "/verify_report.csv", rep.name, rep.min_margin,
                   rep.violations, rep.empirical_constant);
  std::cout << rep.name << ": points=" << rep.points << " violations=" << rep.violations
            << " min_margin=" << format_num(rep.min_margin);
  if (rep.empirical_set) std::cout << " empirical_constant=" << format_num(rep.empirical_constant);
  std::cout << "\n";
  if (!rep.notes.empty()) std::cout << rep.notes;
  if (rep.degenerate_regime)
    std::cout << "note: vanishing rhs regime; asserted near-constancy instead\n";
  return rep.violations > 0 ? 3 : 0;
}

int cmd_harnack(const RunConfig& cfg) {
  MetricSpec m = cfg.build_metric();
  MeasureSpec mu = cfg.build_measure();
  FieldGrid u0 = cfg.build_grid();
  SolverConfig scfg = cfg.build_solver();
  double t1 = cfg.get_num("harnack", "t1", 0.25);
  double t2 = cfg.get_num("harnack", "t2", 0.5);
  scfg.snapshot_times.push_back(t1);
  scfg.snapshot_times.push_back(t2);
  auto run = solve_schrodinger(m, mu, u0, cfg.build_potential(), scfg);
  if (run.aborted) {
    std::cout << "run aborted: " << run.abort_reason << "\n";
    return 2;
  }
  auto params = cfg.build_estimate();
  params.beta = cfg.get_num("harnack", "beta", params.beta);
  params.N = cfg.get_num("harnack", "N", params.N);
  auto q = cfg.build_potential();
  // measure constants for P
  Region reg = run.geometry.kind == DomainKind::kTorus
                   ? Region::box(2, Vec4{}, vec2(run.geometry.Lx, run.geometry.Ly))
                   : Region::ball(2, run.geometry.center, run.geometry.radius);
  if (params.K < 0.0)
    params.K = measure_weighted_ricci(m, mu, reg, params.N, params.curvature_samples).K;
  if (params.gamma < 0.0 || params.theta < 0.0) {
    auto pb = potential_bounds(m, mu, q, reg);
    if (params.gamma < 0.0) params.gamma = pb.gamma;
    if (params.theta < 0.0) params.theta = pb.theta;
  }

  long npairs = cfg.get_int("harnack", "pairs", 100);
  auto rng = task_rng(cfg.seed(), "harnack-pairs");
  std::vector<HarnackPair> pairs;
  const auto& geo = run.geometry;
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  while (static_cast<long>(pairs.size()) < npairs) {
    HarnackPair pr;
    auto sample_point = [&]() {
      if (geo.kind == DomainKind::kTorus)
        return vec2(ux(rng) * geo.Lx, ux(rng) * geo.Ly);
      double rr = (cfg.get_num("harnack", "R", geo.radius * 0.5)) * std::sqrt(ux(rng));
      double th = 2.0 * M_PI * ux(rng);
      return vec2(geo.center[0] + rr * std::cos(th), geo.center[1] + rr * std::sin(th));
    };
    pr.x1 = sample_point();
    pr.x2 = sample_point();
    pr.t1 = t1;
    pr.t2 = t2;
    pairs.push_back(pr);
  }
  double C3 = cfg.get_num("harnack", "C3", -1.0);
  auto rep = harnack_check(m, mu, run, q, params, pairs, C3);
  ensure_dir(cfg.output_dir());
  {
    CsvWriter out(cfg.output_dir() + "/harnack.csv", {"Q", "u1", "rhs", "log_margin"});
    for (const auto& r : rep.rows) out.row({r[0], r[1], r[2], r[3]});
  }
  write_report_csv(cfg.output_dir() + "/harnack_report.csv", "harnack", rep.min_log_margin,
                   rep.violations, rep.P);
  std::cout << "harnack: pairs=" << rep.pairs << " violations=" << rep.violations
            << " min_log_margin=" << format_num(rep.min_log_margin)
            << " P=" << format_num(rep.P) << " C(N)_implied=" << format_num(rep.CN_implied)
            << "\n";
  return rep.violations > 0 ? 3 : 0;
}

int cmd_report(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  long total_violations = 0;
  int found = 0;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cfg.output_dir()))
    if (e.path().filename().string().find("_report.csv") != std::string::npos)
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream in(p);
    std::string header, line;
    std::getline(in, header);
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string quantity, min_margin, violations, empirical;
      std::getline(ss, quantity, ',');
      std::getline(ss, min_margin, ',');
      std::getline(ss, violations, ',');
      std::getline(ss, empirical, ',');
      std::cout << p.filename().string() << ": " << quantity << " min_margin=" << min_margin
                << " violations=" << violations << " empirical=" << empirical << "\n";
      total_violations += std::atol(violations.c_str());
      ++found;
    }
  }
  if (!found) {
    std::cout << "no reports found in " << cfg.output_dir() << "\n";
    return 1;
  }
  std::cout << "total violations: " << total_violations << "\n";
  return total_violations > 0 ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finsler metric measure space laboratory"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_override;
  app.add_option("--config,-c", config_path, "INI config path")->required();
  app.add_option("--set", overrides, "override section.key=value");
  app.add_option("--out", out_override, "override output directory");

  const char* names[] = {"validate", "tensors", "constants", "compare",
                         "solve",    "verify",  "harnack",   "report"};
  for (const char* n : names) app.add_subcommand(n)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 1;
  }

  try {
    if (!out_override.empty()) overrides.push_back("run.output=" + out_override);
    RunConfig cfg = RunConfig::load(config_path, overrides);
    std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "validate") return cmd_validate(cfg);
    if (sub == "tensors") return cmd_tensors(cfg);
    if (sub == "constants") return cmd_constants(cfg);
    if (sub == "compare") return cmd_compare(cfg);
    if (sub == "solve") return cmd_solve(cfg);
    if (sub == "verify") return cmd_verify(cfg);
    if (sub == "harnack") return cmd_harnack(cfg);
    if (sub == "report") return cmd_report(cfg);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "run failure: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "run failure: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
