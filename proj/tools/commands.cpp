#include "commands.hpp"

#include "bvcf/analysis.hpp"
#include "bvcf/csv.hpp"
#include "bvcf/error.hpp"
#include "bvcf/oracle.hpp"
#include "bvcf/scenario.hpp"
#include "bvcf/solver.hpp"

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace bvcf::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Scenario load_with_overrides(const std::string& path, const CommandOptions& opts) {
  Scenario sc = load_scenario(path);
  bool changed = false;
  if (opts.seed) {
    sc.resolved["seed"] = *opts.seed;
    changed = true;
  }
  if (opts.snapshot_stride) {
    sc.resolved["solver"]["snapshot_stride"] = *opts.snapshot_stride;
    changed = true;
  }
  return changed ? reparse(sc) : sc;
}

json manifest_base(const Scenario& sc, const std::string& command) {
  json m;
  m["command"] = command;
  m["version"] = BVCF_VERSION;
  m["seed"] = sc.seed;
  m["scenario"] = sc.resolved;
  const Grid& g = *sc.problem.grid;
  m["grid"] = {{"kind", to_string(g.kind())}, {"n", g.size()}, {"ratio", g.ratio()}};
  m["kernel"] = {{"kind", to_string(sc.problem.coag.kind())},
                 {"name", sc.problem.coag.name()},
                 {"truncation", sc.problem.coag.truncation()}};
  m["fragmentation"] = {{"kind", to_string(sc.problem.frag.kind())}, {"name", sc.problem.frag.name()}};
  m["boundary"] = sc.problem.boundary.describe();
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

/// Runs one command per scenario; --batch forks up to batch_workers() children.
int for_each_scenario(const CommandOptions& opts, std::ostream& log,
                      const std::function<int(const std::string&, const fs::path&)>& body) {
  if (opts.scenarios.empty()) {
    log << "error: --scenario is required\n";
    return kConfigError;
  }
  if (opts.scenarios.size() == 1 && !opts.batch) return body(opts.scenarios[0], opts.out_dir);
  if (!opts.batch) {
    log << "error: several scenarios need --batch\n";
    return kConfigError;
  }
  // Per-scenario output directories, named after the scenario file.
  std::vector<fs::path> outs;
  std::map<std::string, int> seen;
  for (const auto& s : opts.scenarios) {
    std::string stem = fs::path(s).stem().string();
    if (seen[stem]++) stem += "_" + std::to_string(seen[stem]);
    outs.push_back(opts.out_dir.empty() ? fs::path() : fs::path(opts.out_dir) / stem);
  }
  const int workers = batch_workers();
  log.flush();
  std::fflush(nullptr);
  int worst = kOk;
  std::size_t next = 0;
  int running = 0;
  std::map<pid_t, std::size_t> jobs;
  auto reap = [&] {
    int status = 0;
    const pid_t pid = ::wait(&status);
    if (pid <= 0) return;
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kRuntimeError;
    log << "[batch] " << opts.scenarios[jobs[pid]] << " -> exit " << code << "\n";
    worst = std::max(worst, code);
    --running;
  };
  while (next < opts.scenarios.size() || running > 0) {
    if (next < opts.scenarios.size() && running < workers) {
      const pid_t pid = ::fork();
      if (pid < 0) throw Error("fork failed");
      if (pid == 0) {
        int code = kRuntimeError;
        try {
          code = body(opts.scenarios[next], outs[next]);
        } catch (...) {
        }
        std::cout.flush();
        std::cerr.flush();
        std::_Exit(code);
      }
      jobs[pid] = next++;
      ++running;
    } else {
      reap();
    }
  }
  return worst;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const FitError& e) {
    log << "fit error: " << e.what() << "\n";
    return kConfigError;
  } catch (const StiffnessError& e) {
    log << "stiffness error (cell " << e.cell() << "): " << e.what() << "\n";
    return kRuntimeError;
  } catch (const Error& e) {
    log << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const fs::filesystem_error& e) {
    log << "filesystem error: " << e.what() << "\n";
    return kConfigError;
  }
}

std::string diagnostics_header(bool entropy) {
  std::string h = "t,dt,m_-1,m_-alpha,m_0,m_1,m_2,atom,exited_mass,H,residual_phi1";
  if (entropy) h += ",D1,D2,D3";
  for (int c = 0; c < kContributionCount; ++c) h += std::string(",rate_") + contribution_name(c);
  return h + "\n";
}

std::string diagnostics_row(const DiagnosticsRecord& d, bool entropy) {
  std::vector<double> v{d.t,  d.dt,   d.m_neg1,        d.m_neg_alpha, d.m0,  d.m1,
                        d.m2, d.atom, d.exited_mass,   d.H,           d.residual_phi1};
  if (entropy) {
    v.push_back(d.D1);
    v.push_back(d.D2);
    v.push_back(d.D3);
  }
  for (double r : d.number_rates) v.push_back(r);
  return csv_row(v) + "\n";
}

struct RunProducts {
  Trajectory traj;
  json analysis = json::object();
  std::vector<std::string> warnings;
};

/// The shared core of `run` and `decay-fit`.
RunProducts simulate(const Scenario& sc) {
  RunProducts out;
  if (auto w = resolution_warning(sc.initial)) out.warnings.push_back(*w);
  RhsTables tables(sc.problem);
  Observer observer;
  std::optional<Dissipation> dissipation;
  if (sc.analysis.entropy) {
    dissipation.emplace(tables, entropy_profile(sc),
                        sc.analysis.interpolated_lookup ? MergeLookup::Interpolated : MergeLookup::Cell);
    observer = [&](DiagnosticsRecord& d, const StateMeasure& s) {
      const EntropyRecord e = dissipation->evaluate(s, d.t);
      d.H = e.H;
      d.D1 = e.D1;
      d.D2 = e.D2;
      d.D3 = e.D3;
    };
  }
  out.traj = run(sc.initial, tables, sc.solver, observer);

  const auto& diag = out.traj.diagnostics;
  if (sc.analysis.entropy) {
    double integral = 0.0, max_rise = 0.0;
    for (std::size_t k = 1; k < diag.size(); ++k) {
      const double a = diag[k - 1].D1 + diag[k - 1].D2 + diag[k - 1].D3;
      const double b = diag[k].D1 + diag[k].D2 + diag[k].D3;
      integral += 0.5 * (diag[k].t - diag[k - 1].t) * (a + b);
      max_rise = std::max(max_rise, diag[k].H - diag[k - 1].H);
    }
    const double H0 = diag.front().H, HT = diag.back().H;
    out.analysis["entropy"] = {{"H0", H0},
                               {"HT", HT},
                               {"dissipation_integral", integral},
                               {"max_step_increase", max_rise},
                               {"inequality_gap", H0 - HT - integral}};
    const Eigen::VectorXd Q = entropy_profile(sc);
    const StateMeasure& last = out.traj.states.back();
    out.analysis["entropy"]["l1_distance_to_profile"] = l1_grid_distance(last, Q);
    json weak = json::array();
    for (const auto& phi : test_battery()) {
      weak.push_back({{"phi", phi.name()}, {"distance", std::abs(weak_distance(last, Q, phi))}});
    }
    out.analysis["entropy"]["weak_distance_battery"] = weak;
  }
  if (sc.analysis.residual_battery) {
    json battery = json::array();
    for (const auto& phi : test_battery()) {
      WeakForm form(tables, phi);
      const auto series = weak_residual_series(out.traj, form);
      battery.push_back({{"phi", phi.name()}, {"max_residual", *std::max_element(series.begin(), series.end())}});
    }
    out.analysis["residual_battery"] = battery;
  }
  if (sc.analysis.decay_fit) {
    const auto& spec = *sc.analysis.decay_fit;
    const DecayFit fit = fit_decay(out.traj, spec.lambda, spec.t1, spec.t2,
                                   spec.polynomial ? FitMode::Polynomial : FitMode::Exponential);
    out.analysis["decay_fit"] = {{"lambda", spec.lambda}, {"window", {spec.t1, spec.t2}},
                                 {"rate", fit.rate},      {"r2", fit.r2},
                                 {"points", fit.points}};
  }
  if (sc.analysis.negative_moment) {
    const auto& b = sc.full_kernel.bounds();
    if (!b || !b->K1) throw ConfigError("negative-moment ledger needs a kernel with a lower bound K1");
    const auto ledger = negative_moment_check(out.traj, b->alpha, *b->K1, sc.problem.boundary, b->beta);
    out.analysis["negative_moment"] = {{"m0_initial", ledger.m0_initial},
                                       {"max_excess", ledger.max_excess},
                                       {"ok", ledger.ok}};
    if (!ledger.ok) out.warnings.push_back("negative-moment ledger exceeded its tolerance");
  }
  return out;
}

int run_one(const std::string& path, const fs::path& out_dir, const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const Scenario sc = load_with_overrides(path, opts);
    if (out_dir.empty()) throw ConfigError("run needs --out DIR");
    RunProducts products = simulate(sc);

    // Everything is computed before anything is written.
    std::ostringstream diag;
    diag << diagnostics_header(sc.analysis.entropy);
    for (const auto& d : products.traj.diagnostics) diag << diagnostics_row(d, sc.analysis.entropy);

    fs::create_directories(out_dir / "snapshots");
    write_text(out_dir / "diagnostics.csv", diag.str());
    std::ostringstream index;
    index << "snapshot,t\n";
    for (std::size_t k = 0; k < products.traj.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "snapshot_%05zu.csv", k);
      std::ostringstream snap;
      write_state_csv(snap, products.traj.states[k]);
      write_text(out_dir / "snapshots" / name, snap.str());
      index << k << ',' << format_double(products.traj.times[k]) << '\n';
    }
    write_text(out_dir / "snapshots" / "index.csv", index.str());

    json m = manifest_base(sc, "run");
    const auto& last = products.traj.diagnostics.back();
    m["summary"] = {{"steps", products.traj.diagnostics.size() - 1},
                    {"snapshots", products.traj.size()},
                    {"final", {{"t", last.t}, {"m_0", last.m0}, {"m_1", last.m1}, {"atom", last.atom},
                               {"exited_mass", last.exited_mass}}}};
    m["analysis"] = products.analysis;
    m["warnings"] = products.warnings;
    m["outputs"] = {"diagnostics.csv", "snapshots/index.csv", "snapshots/snapshot_*.csv", "manifest.json"};
    write_text(out_dir / "manifest.json", m.dump(2) + "\n");
    for (const auto& w : products.warnings) log << "warning: " << w << "\n";
    log << sc.name << ": " << products.traj.diagnostics.size() - 1 << " steps to t = " << last.t
        << ", m_0 = " << last.m0 << ", outputs in " << out_dir.string() << "\n";
    return static_cast<int>(kOk);
  });
}

}  // namespace

int batch_workers() {
  if (const char* env = std::getenv("BVCF_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

int cmd_run(const CommandOptions& opts, std::ostream& log) {
  return for_each_scenario(opts, log, [&](const std::string& path, const fs::path& out) {
    return run_one(path, out, opts, log);
  });
}

int cmd_equilibrium(const CommandOptions& opts, std::ostream& log) {
  return for_each_scenario(opts, log, [&](const std::string& path, const fs::path& out_dir) {
    return guarded(log, [&] {
      const Scenario sc = load_with_overrides(path, opts);
      const auto eq = equilibrium_profile(sc.full_kernel, sc.problem.frag, sc.problem.boundary, sc.problem.grid);
      std::ostringstream profile;
      profile << "x,f_inf\n";
      for (int i = 0; i < eq.grid->size(); ++i) {
        profile << format_double(eq.grid->pivot(i)) << ',' << format_double(eq.values[i]) << '\n';
      }
      json report = manifest_base(sc, "equilibrium");
      report["spread"] = eq.spread;
      report["spread_tolerance"] = kSpreadTolerance;
      report["detailed_balance"] = eq.detailed_balance;
      report["probes"] = default_probes();
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(out_dir / "equilibrium_profile.csv", profile.str());
        std::ostringstream state;
        write_state_csv(state, eq.as_state());
        write_text(out_dir / "equilibrium_state.csv", state.str());
        write_text(out_dir / "equilibrium_report.json", report.dump(2) + "\n");
      } else {
        log << profile.str();
      }
      log << "f_inf spread " << eq.spread << (eq.detailed_balance ? " (detailed balance)" : " (WARNING: not detailed balance)")
          << "\n";
      return static_cast<int>(kOk);
    });
  });
}

int cmd_compare_oracle(const CommandOptions& opts, std::ostream& log) {
  return for_each_scenario(opts, log, [&](const std::string& path, const fs::path& out_dir) {
    return guarded(log, [&] {
      const Scenario sc = load_with_overrides(path, opts);
      if (!sc.problem.grid->is_lattice()) throw ConfigError("compare-oracle needs a lattice grid");
      if (!sc.problem.boundary.modulation().is_constant()) {
        throw ConfigError("compare-oracle needs a time-independent boundary datum");
      }
      RhsTables tables(sc.problem);
      // Sectional solution segment by segment so every checkpoint is hit exactly.
      std::vector<StateMeasure> sectional;
      StateMeasure s = sc.initial;
      double t = 0.0;
      for (double target : sc.checkpoints) {
        if (target > t) {
          SolverConfig cfg = sc.solver;
          cfg.t0 = t;
          cfg.T = target;
          cfg.residual_phi1 = false;
          cfg.snapshot_stride = 1 << 30;
          s = run(s, tables, cfg).states.back();
          t = target;
        }
        sectional.push_back(s);
      }
      const DiscreteSystem sys = lattice_system(sc.problem);
      const auto oracle = integrate_discrete(sys, sc.initial.counts, sc.checkpoints, sc.solver.dt_max);

      std::ostringstream table;
      table << "t,m0_sectional,m0_oracle,m0_rel_err,m1_sectional,m1_oracle,m1_rel_err\n";
      double worst = 0.0;
      auto rel = [](double a, double b) { return b != 0.0 ? std::abs(a - b) / std::abs(b) : std::abs(a - b); };
      for (std::size_t k = 0; k < sc.checkpoints.size(); ++k) {
        const double m0s = interior_moment(sectional[k], 0.0), m0o = oracle.moment(k, 0.0);
        const double m1s = interior_moment(sectional[k], 1.0), m1o = oracle.moment(k, 1.0);
        const double e0 = rel(m0s, m0o), e1 = rel(m1s, m1o);
        worst = std::max({worst, e0, e1});
        table << csv_row({sc.checkpoints[k], m0s, m0o, e0, m1s, m1o, e1}) << '\n';
      }
      const bool pass = worst < 1e-3;
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(out_dir / "compare_oracle.csv", table.str());
        json report = manifest_base(sc, "compare-oracle");
        report["max_rel_error"] = worst;
        report["tolerance"] = 1e-3;
        report["pass"] = pass;
        report["oracle_dt"] = oracle.dt;
        write_text(out_dir / "compare_oracle.json", report.dump(2) + "\n");
      }
      log << table.str() << (pass ? "PASS" : "FAIL") << " max rel error " << worst << " (tolerance 1e-3)\n";
      return static_cast<int>(pass ? kOk : kCheckFailed);
    });
  });
}

int cmd_validate_kernel(const CommandOptions& opts, std::ostream& log) {
  return for_each_scenario(opts, log, [&](const std::string& path, const fs::path& out_dir) {
    return guarded(log, [&] {
      const Scenario sc = load_with_overrides(path, opts);
      json report = manifest_base(sc, "validate-kernel");
      auto describe = [](const BoundReport& r) {
        return json{{"max_violation", r.max_violation},
                    {"worst_point", r.worst_point},
                    {"max_lower_violation", r.max_lower_violation},
                    {"worst_lower_point", r.worst_lower_point},
                    {"samples", r.samples}};
      };
      const BoundReport coag = validate_bounds(sc.full_kernel, opts.samples, sc.seed);
      report["coagulation"] = describe(coag);
      log << "coagulation kernel " << sc.full_kernel.name() << ": max upper-bound violation " << coag.max_violation;
      if (sc.full_kernel.bounds() && sc.full_kernel.bounds()->K1) log << ", max lower-bound violation " << coag.max_lower_violation;
      log << "\n";
      if (sc.problem.frag.bounds()) {
        const BoundReport frag = validate_bounds(sc.problem.frag, opts.samples, sc.seed);
        report["fragmentation"] = describe(frag);
        log << "fragmentation kernel " << sc.problem.frag.name() << ": max violation " << frag.max_violation << "\n";
      } else {
        log << "fragmentation kernel " << sc.problem.frag.name() << ": no declared bounds, skipped\n";
      }
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(out_dir / "validate_kernel.json", report.dump(2) + "\n");
      }
      return static_cast<int>(kOk);
    });
  });
}

int cmd_decay_fit(const CommandOptions& opts, std::ostream& log) {
  return for_each_scenario(opts, log, [&](const std::string& path, const fs::path& out_dir) {
    return guarded(log, [&] {
      Scenario sc = load_with_overrides(path, opts);
      DecayFitSpec spec = sc.analysis.decay_fit.value_or(DecayFitSpec{0.0, 0.0, sc.solver.T, false});
      if (opts.lambda) spec.lambda = *opts.lambda;
      if (!opts.window.empty()) {
        if (opts.window.size() != 2) throw ConfigError("--window takes two times");
        spec.t1 = opts.window[0];
        spec.t2 = opts.window[1];
      }
      sc.analysis = AnalysisToggles{};
      sc.analysis.decay_fit = spec;
      const RunProducts products = simulate(sc);
      json report = manifest_base(sc, "decay-fit");
      report["fit"] = products.analysis["decay_fit"];
      const auto& b = sc.full_kernel.bounds();
      if (b && b->K1 && !sc.problem.boundary.is_zero()) {
        // a = K1 theta_beta with theta_beta the smallest M_beta over the window
        const double theta = std::min(moment_M(sc.problem.boundary, b->beta, spec.t1),
                                      moment_M(sc.problem.boundary, b->beta, spec.t2));
        report["theory_rate"] = *b->K1 * theta;
      }
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(out_dir / "decay_fit.json", report.dump(2) + "\n");
      }
      log << report["fit"].dump() << "\n";
      if (report.contains("theory_rate")) log << "theory rate K1*theta_beta = " << report["theory_rate"] << "\n";
      return static_cast<int>(kOk);
    });
  });
}

}  // namespace bvcf::cli
