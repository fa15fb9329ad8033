#include "bvcf/scenario.hpp"

#include "bvcf/analysis.hpp"
#include "bvcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace bvcf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& spec, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!spec.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : spec.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
T opt(const json& spec, const char* key, T fallback, json& out) {
  T v = spec.contains(key) ? spec.at(key).get<T>() : fallback;
  out[key] = v;
  return v;
}

template <typename T>
T req(const json& spec, const char* key, json& out, const std::string& where) {
  if (!spec.contains(key)) throw ConfigError(std::string("missing key '") + key + "' in " + where);
  T v = spec.at(key).get<T>();
  out[key] = v;
  return v;
}

std::string path_string(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).string();
}

std::optional<CoagBounds> declared_coag(const json& spec, json& out) {
  if (!spec.contains("K0")) return std::nullopt;
  CoagBounds b;
  b.K0 = req<double>(spec, "K0", out, "kernel");
  b.alpha = opt<double>(spec, "alpha", 0.0, out);
  b.beta = opt<double>(spec, "beta", 0.0, out);
  if (spec.contains("K1")) b.K1 = req<double>(spec, "K1", out, "kernel");
  return b;
}

std::optional<FragBounds> declared_frag(const json& spec, json& out) {
  if (!spec.contains("F0")) return std::nullopt;
  FragBounds b;
  b.F0 = req<double>(spec, "F0", out, "fragmentation");
  b.gamma = opt<double>(spec, "gamma", 0.0, out);
  return b;
}

TimeModulation parse_modulation(const json& spec, const fs::path& base, json& out) {
  check_keys(spec, {"kind", "c", "path"}, "boundary.modulation");
  const auto kind = opt<std::string>(spec, "kind", "constant", out);
  if (kind == "constant") return TimeModulation::constant(opt<double>(spec, "c", 1.0, out));
  if (kind == "decaying") return TimeModulation::decaying(opt<double>(spec, "c", 1.0, out));
  if (kind == "sampled") return TimeModulation::read_csv(path_string(base, req<std::string>(spec, "path", out, "modulation")));
  throw ConfigError("unknown modulation kind '" + kind + "'");
}

std::function<double(double)> parse_density(const json& spec, json& out) {
  check_keys(spec, {"kind", "profile", "value", "A", "p", "r", "lo", "hi"}, "initial");
  const auto profile = opt<std::string>(spec, "profile", "constant", out);
  if (profile == "constant") {
    const double v = opt<double>(spec, "value", 1.0, out);
    return [v](double) { return v; };
  }
  if (profile == "exponential") {
    const double A = opt<double>(spec, "A", 1.0, out), r = opt<double>(spec, "r", 1.0, out);
    return [A, r](double x) { return A * std::exp(-r * x); };
  }
  if (profile == "power_exponential") {
    PowerExpProfile q{opt<double>(spec, "A", 1.0, out), opt<double>(spec, "p", 0.0, out), opt<double>(spec, "r", 1.0, out)};
    return q;
  }
  if (profile == "indicator") {
    const double lo = opt<double>(spec, "lo", 0.0, out), hi = opt<double>(spec, "hi", 1.0, out);
    const double v = opt<double>(spec, "value", 1.0, out);
    return [lo, hi, v](double x) { return x > lo && x <= hi ? v : 0.0; };
  }
  throw ConfigError("unknown initial density profile '" + profile + "'");
}

StateMeasure parse_initial(const json& spec, const Scenario& sc, json& out) {
  const auto kind = opt<std::string>(spec, "kind", "density", out);
  if (kind == "density") {
    auto f = parse_density(spec, out);
    if (spec.value("profile", std::string("constant")) == "indicator") {
      // integrate exactly over the cells cut by the indicator edges
      const double lo = out["lo"], hi = out["hi"], v = out["value"];
      StateMeasure s(sc.problem.grid);
      for (int i = 0; i < s.size(); ++i) {
        const double a = std::max(lo, sc.problem.grid->left(i)), b = std::min(hi, sc.problem.grid->right(i));
        s.counts[i] = b > a ? v * (b - a) : 0.0;
      }
      return s;
    }
    return from_density(f, sc.problem.grid);
  }
  if (kind == "monodisperse") {
    check_keys(spec, {"kind", "cell", "count"}, "initial");
    const int cell = opt<int>(spec, "cell", 1, out);
    if (cell < 1 || cell > sc.problem.grid->size()) throw ConfigError("monodisperse cell out of range");
    StateMeasure s(sc.problem.grid);
    s.counts[cell - 1] = opt<double>(spec, "count", 1.0, out);
    return s;
  }
  if (kind == "atoms") {
    check_keys(spec, {"kind", "sites", "atom"}, "initial");
    StateMeasure s(sc.problem.grid);
    json sites = json::array();
    for (const auto& site : spec.value("sites", json::array())) {
      json r;
      const double x = req<double>(site, "x", r, "initial.sites");
      const double count = req<double>(site, "count", r, "initial.sites");
      const int cell = sc.problem.grid->locate(x);
      if (cell < 0 || cell >= s.size() || count < 0.0) throw ConfigError("initial atom outside (0,1] or negative");
      s.counts[cell] += count;
      sites.push_back(r);
    }
    out["sites"] = sites;
    s.atom = opt<double>(spec, "atom", 0.0, out);
    if (s.atom < 0.0) throw ConfigError("initial atom must be nonnegative");
    return s;
  }
  if (kind == "csv") {
    check_keys(spec, {"kind", "path"}, "initial");
    StateMeasure s = read_state_csv(path_string(sc.base_dir, req<std::string>(spec, "path", out, "initial")));
    if (!s.grid->same_as(*sc.problem.grid)) throw ConfigError("initial CSV grid differs from the scenario grid");
    s.grid = sc.problem.grid;
    return s;
  }
  if (kind == "equilibrium") {
    check_keys(spec, {"kind"}, "initial");
    return equilibrium_profile(sc.full_kernel, sc.problem.frag, sc.problem.boundary, sc.problem.grid).as_state();
  }
  throw ConfigError("unknown initial kind '" + kind + "'");
}

SolverConfig parse_solver(const json& spec, json& out) {
  check_keys(spec, {"scheme", "T", "dt_max", "safety", "snapshot_stride", "neg_alpha", "residual_phi1"}, "solver");
  SolverConfig c;
  const auto scheme = opt<std::string>(spec, "scheme", "heun", out);
  if (scheme == "heun") c.scheme = Scheme::Heun;
  else if (scheme == "euler") c.scheme = Scheme::Euler;
  else throw ConfigError("unknown scheme '" + scheme + "'");
  c.T = opt<double>(spec, "T", c.T, out);
  c.dt_max = opt<double>(spec, "dt_max", c.dt_max, out);
  c.safety = opt<double>(spec, "safety", c.safety, out);
  c.snapshot_stride = opt<int>(spec, "snapshot_stride", c.snapshot_stride, out);
  c.neg_alpha = opt<double>(spec, "neg_alpha", c.neg_alpha, out);
  c.residual_phi1 = opt<bool>(spec, "residual_phi1", c.residual_phi1, out);
  c.validate();
  return c;
}

}  // namespace

CoagKernel parse_coag_kernel(const json& spec, const fs::path& base, json& out) {
  check_keys(spec, {"kind", "value", "K0", "K1", "alpha", "beta", "path", "truncation"}, "kernel");
  const auto kind = req<std::string>(spec, "kind", out, "kernel");
  if (kind == "constant") return CoagKernel::constant(opt<double>(spec, "value", 1.0, out));
  if (kind == "additive") return CoagKernel::additive();
  if (kind == "multiplicative") return CoagKernel::multiplicative();
  if (kind == "bound_form") {
    return CoagKernel::bound_form(req<double>(spec, "K0", out, "kernel"), opt<double>(spec, "alpha", 0.0, out),
                                  opt<double>(spec, "beta", 0.0, out));
  }
  if (kind == "lower_form") {
    return CoagKernel::lower_form(req<double>(spec, "K1", out, "kernel"), opt<double>(spec, "alpha", 0.0, out),
                                  opt<double>(spec, "beta", 0.0, out));
  }
  if (kind == "tabulated") {
    const auto path = req<std::string>(spec, "path", out, "kernel");
    auto declared = declared_coag(spec, out);
    return CoagKernel::tabulated(KernelTable::read_csv_file(path_string(base, path)), declared);
  }
  throw ConfigError("unknown kernel kind '" + kind + "'");
}

FragKernel parse_frag_kernel(const json& spec, const CoagKernel& coag, const fs::path& base, json& out,
                             std::optional<PowerExpProfile>* profile) {
  check_keys(spec, {"kind", "value", "F0", "gamma", "path", "profile"}, "fragmentation");
  const auto kind = opt<std::string>(spec, "kind", "zero", out);
  if (kind == "zero") return FragKernel::zero();
  if (kind == "constant") return FragKernel::constant(opt<double>(spec, "value", 1.0, out));
  if (kind == "power") {
    return FragKernel::power(req<double>(spec, "F0", out, "fragmentation"), opt<double>(spec, "gamma", 0.0, out));
  }
  if (kind == "additive") return FragKernel::additive();
  if (kind == "multiplicative") return FragKernel::multiplicative();
  if (kind == "tabulated") {
    const auto path = req<std::string>(spec, "path", out, "fragmentation");
    auto declared = declared_frag(spec, out);
    return FragKernel::tabulated(KernelTable::read_csv_file(path_string(base, path)), declared);
  }
  if (kind == "detailed_balance") {
    const json p = spec.value("profile", json::object());
    check_keys(p, {"A", "p", "r"}, "fragmentation.profile");
    json pr;
    PowerExpProfile q{opt<double>(p, "A", 1.0, pr), opt<double>(p, "p", 0.0, pr), opt<double>(p, "r", 1.0, pr)};
    if (!(q.A > 0.0)) throw ConfigError("detailed-balance profile amplitude must be > 0");
    out["profile"] = pr;
    if (profile) *profile = q;
    auto declared = declared_frag(spec, out);
    return detailed_balance_frag(coag, q, declared);
  }
  throw ConfigError("unknown fragmentation kind '" + kind + "'");
}

BoundaryDatum parse_boundary(const json& spec, const fs::path& base, json& out) {
  check_keys(spec, {"kind", "A", "q", "p", "cutoff", "modulation"}, "boundary");
  const auto kind = opt<std::string>(spec, "kind", "zero", out);
  BoundaryDatum g;
  if (kind == "zero") g = BoundaryDatum::zero();
  else if (kind == "exponential") g = BoundaryDatum::exponential(opt<double>(spec, "A", 1.0, out), opt<double>(spec, "q", 1.0, out));
  else if (kind == "power_tail") g = BoundaryDatum::power_tail(opt<double>(spec, "A", 1.0, out), req<double>(spec, "p", out, "boundary"));
  else if (kind == "power_exponential") {
    g = BoundaryDatum::power_exponential(opt<double>(spec, "A", 1.0, out), req<double>(spec, "p", out, "boundary"),
                                         opt<double>(spec, "q", 1.0, out));
  } else {
    throw ConfigError("unknown boundary kind '" + kind + "'");
  }
  g = g.with_cutoff(opt<double>(spec, "cutoff", 50.0, out));
  json m;
  g = g.with_modulation(parse_modulation(spec.value("modulation", json::object()), base, m));
  out["modulation"] = m;
  return g;
}

GridPtr parse_grid(const json& spec, json& out) {
  check_keys(spec, {"kind", "n", "ratio"}, "grid");
  const auto kind = opt<std::string>(spec, "kind", "uniform", out);
  const int n = req<int>(spec, "n", out, "grid");
  if (kind == "uniform") return Grid::uniform(n);
  if (kind == "lattice") return Grid::lattice(n);
  if (kind == "geometric") return Grid::geometric(n, req<double>(spec, "ratio", out, "grid"));
  throw ConfigError("unknown grid kind '" + kind + "'");
}

Scenario parse_scenario(const json& tree, const fs::path& base_dir) {
  try {
    check_keys(tree, {"name", "seed", "kernel", "fragmentation", "boundary", "grid", "initial", "solver", "options",
                      "analysis", "checkpoints", "description"},
               "scenario");
    Scenario sc;
    sc.base_dir = base_dir;
    json& r = sc.resolved;
    sc.name = opt<std::string>(tree, "name", "scenario", r);
    if (tree.contains("description")) r["description"] = tree["description"];
    sc.seed = opt<std::uint64_t>(tree, "seed", 0, r);

    if (!tree.contains("kernel")) throw ConfigError("scenario needs a 'kernel'");
    sc.full_kernel = parse_coag_kernel(tree["kernel"], base_dir, r["kernel"]);
    const int j = tree["kernel"].value("truncation", 0);
    r["kernel"]["truncation"] = j;
    sc.problem.coag = j > 0 ? truncate(sc.full_kernel, j).kernel() : sc.full_kernel;

    sc.problem.frag = parse_frag_kernel(tree.value("fragmentation", json::object()), sc.full_kernel, base_dir,
                                        r["fragmentation"], &sc.profile);
    sc.problem.boundary = parse_boundary(tree.value("boundary", json::object()), base_dir, r["boundary"]);
    if (!tree.contains("grid")) throw ConfigError("scenario needs a 'grid'");
    sc.problem.grid = parse_grid(tree["grid"], r["grid"]);

    const json opts = tree.value("options", json::object());
    check_keys(opts, {"atom_sink", "truncated_boundary_kernel", "frag_quad_nodes"}, "options");
    json& ro = r["options"];
    sc.problem.options.atom_sink = opt<bool>(opts, "atom_sink", false, ro);
    sc.problem.options.truncated_boundary_kernel = opt<bool>(opts, "truncated_boundary_kernel", false, ro);
    sc.problem.options.frag_quad_nodes = opt<int>(opts, "frag_quad_nodes", 6, ro);
    if (sc.problem.options.frag_quad_nodes < 1) throw ConfigError("frag_quad_nodes must be >= 1");

    sc.solver = parse_solver(tree.value("solver", json::object()), r["solver"]);

    // moments the run needs: M_max(beta, gamma)
    if (!sc.problem.boundary.is_zero()) {
      const double beta = sc.full_kernel.bounds() ? sc.full_kernel.bounds()->beta : 1.0;
      const double gamma = sc.problem.frag.bounds() ? sc.problem.frag.bounds()->gamma : 1.0;
      sc.problem.boundary.require_moment(std::max(beta, gamma));
    }

    if (!tree.contains("initial")) throw ConfigError("scenario needs an 'initial' condition");
    sc.initial = parse_initial(tree["initial"], sc, r["initial"]);

    const json an = tree.value("analysis", json::object());
    check_keys(an, {"entropy", "merge_lookup", "residual_battery", "negative_moment", "decay_fit"}, "analysis");
    json& ra = r["analysis"];
    sc.analysis.entropy = opt<bool>(an, "entropy", false, ra);
    const auto lookup = opt<std::string>(an, "merge_lookup", "cell", ra);
    if (lookup != "cell" && lookup != "interpolated") throw ConfigError("merge_lookup must be cell or interpolated");
    sc.analysis.interpolated_lookup = lookup == "interpolated";
    sc.analysis.residual_battery = opt<bool>(an, "residual_battery", false, ra);
    sc.analysis.negative_moment = opt<bool>(an, "negative_moment", false, ra);
    if (an.contains("decay_fit")) {
      const json& df = an["decay_fit"];
      check_keys(df, {"lambda", "window", "mode"}, "analysis.decay_fit");
      json& rd = ra["decay_fit"];
      DecayFitSpec spec;
      spec.lambda = opt<double>(df, "lambda", 0.0, rd);
      const auto window = req<std::vector<double>>(df, "window", rd, "analysis.decay_fit");
      if (window.size() != 2 || !(window[1] > window[0])) throw ConfigError("decay_fit window must be [t1, t2] with t1 < t2");
      spec.t1 = window[0];
      spec.t2 = window[1];
      const auto mode = opt<std::string>(df, "mode", "exponential", rd);
      if (mode != "exponential" && mode != "polynomial") throw ConfigError("decay_fit mode must be exponential or polynomial");
      spec.polynomial = mode == "polynomial";
      sc.analysis.decay_fit = spec;
    }

    const double T = sc.solver.T;
    sc.checkpoints = opt<std::vector<double>>(tree, "checkpoints", {0.0, 0.25 * T, 0.5 * T, T}, r);
    if (!std::is_sorted(sc.checkpoints.begin(), sc.checkpoints.end()) ||
        (!sc.checkpoints.empty() && (sc.checkpoints.front() < 0.0 || sc.checkpoints.back() > T))) {
      throw ConfigError("checkpoints must be sorted within [0, T]");
    }

    if (sc.analysis.entropy) (void)entropy_profile(sc);  // validates detailed balance up front
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  json tree;
  try {
    tree = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_scenario(tree, path.parent_path());
}

Scenario reparse(const Scenario& s) { return parse_scenario(s.resolved, s.base_dir); }

Eigen::VectorXd entropy_profile(const Scenario& s) {
  const Grid& grid = *s.problem.grid;
  Eigen::VectorXd Q(grid.size());
  if (s.profile) {
    for (int i = 0; i < grid.size(); ++i) Q[i] = (*s.profile)(grid.pivot(i));
    return Q;
  }
  const auto eq = equilibrium_profile(s.full_kernel, s.problem.frag, s.problem.boundary, s.problem.grid);
  if (!eq.detailed_balance) {
    std::ostringstream msg;
    msg << "entropy analysis needs detailed balance, but the f_inf spread is " << eq.spread;
    throw ConfigError(msg.str());
  }
  return eq.values;
}

}  // namespace bvcf
