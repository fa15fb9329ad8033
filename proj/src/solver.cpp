#include "bvcf/solver.hpp"

#include "bvcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bvcf {

const char* to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "heun"; }

void SolverConfig::validate() const {
  if (!(T >= t0) || !std::isfinite(T) || !(t0 >= 0.0)) throw ConfigError("need 0 <= t0 <= T < infinity");
  if (!(dt_max > 0.0)) throw ConfigError("dt_max must be > 0");
  if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("positivity safety factor must lie in (0,1]");
  if (snapshot_stride < 1) throw ConfigError("snapshot stride must be >= 1");
}

double positivity_bound(const StateMeasure& s, const Rates& r, double sigma, int* cell) {
  double bound = std::numeric_limits<double>::infinity();
  int arg = -1;
  for (int i = 0; i < s.size(); ++i) {
    if (r.cells[i] < 0.0) {
      const double b = s.counts[i] / -r.cells[i];
      if (b < bound) {
        bound = b;
        arg = i;
      }
    }
  }
  if (r.atom < 0.0 && s.atom / -r.atom < bound) {
    bound = s.atom / -r.atom;
    arg = s.size();
  }
  if (cell) *cell = arg;
  return sigma * bound;
}

namespace {

StateMeasure advance(const StateMeasure& s, const Rates& r, double dt) {
  StateMeasure out = s;
  out.counts += dt * r.cells;
  out.atom += dt * r.atom;
  return out;
}

}  // namespace

StepOutcome step(const StateMeasure& s, const RhsTables& tables, double t, double dt, Scheme scheme,
                 double sigma) {
  StepOutcome out;
  out.start_rates = rhs_breakdown(s, tables, t);
  if (dt == 0.0) {
    out.accepted = true;
    out.state = s;
    out.bound = std::numeric_limits<double>::infinity();
    return out;
  }
  const Rates r1 = out.start_rates.total();
  out.bound = positivity_bound(s, r1, sigma, &out.limiting_cell);
  if (dt > out.bound) return out;

  StateMeasure stage = advance(s, r1, dt);
  if (scheme == Scheme::Euler) {
    out.accepted = true;
    out.state = std::move(stage);
    out.exited_mass = dt * out.start_rates.exited_mass_rate;
    return out;
  }

  // Heun as a convex combination of two Euler steps: both must stay positive.
  const RhsBreakdown b2 = rhs_breakdown(stage, tables, t + dt);
  const Rates r2 = b2.total();
  int cell2 = -1;
  const double bound2 = positivity_bound(stage, r2, sigma, &cell2);
  if (bound2 < out.bound) {
    out.bound = bound2;
    out.limiting_cell = cell2;
  }
  if (dt > bound2) return out;
  out.accepted = true;
  out.state = s;
  out.state.counts += 0.5 * dt * (r1.cells + r2.cells);
  out.state.atom += 0.5 * dt * (r1.atom + r2.atom);
  out.exited_mass = 0.5 * dt * (out.start_rates.exited_mass_rate + b2.exited_mass_rate);
  return out;
}

namespace {

DiagnosticsRecord describe(const StateMeasure& s, double t, double dt, double exited, double neg_alpha) {
  DiagnosticsRecord d;
  d.t = t;
  d.dt = dt;
  d.m_neg1 = moment_m(s, -1.0);
  d.m_neg_alpha = moment_m(s, -neg_alpha);
  d.m0 = moment_m(s, 0.0);
  d.m1 = moment_m(s, 1.0);
  d.m2 = moment_m(s, 2.0);
  d.atom = s.atom;
  d.exited_mass = exited;
  return d;
}

}  // namespace

Trajectory run(const StateMeasure& initial, const RhsTables& tables, const SolverConfig& config,
               const Observer& observer) {
  config.validate();
  if (!initial.grid || !initial.grid->same_as(tables.grid())) throw ConfigError("initial state is on another grid");
  Trajectory traj;
  const double t0 = config.t0;
  traj.push(t0, initial);

  std::optional<WeakForm> form;
  double residual_integral = 0.0, prev_rate = 0.0, pair0 = 0.0;
  if (config.residual_phi1) {
    form.emplace(tables, TestFunction::identity());
    pair0 = form->pairing(initial);
    prev_rate = form->rate(initial, t0);
  }

  DiagnosticsRecord d0 = describe(initial, t0, 0.0, 0.0, config.neg_alpha);
  d0.number_rates = rhs_breakdown(initial, tables, t0).number_rates();
  if (form) d0.residual_phi1 = 0.0;
  if (observer) observer(d0, initial);
  traj.diagnostics.push_back(d0);

  const double dt_floor = config.dt_max * std::ldexp(1.0, -20);
  StateMeasure s = initial;
  double t = t0, dt = config.dt_max, exited = 0.0;
  long accepted = 0;
  while (t < config.T) {
    double trial = std::min(dt, config.T - t);
    if (config.T - (t + trial) < 1e-12 * std::max(1.0, config.T)) trial = config.T - t;
    StepOutcome out = step(s, tables, t, trial, config.scheme, config.safety);
    if (!out.accepted) {
      dt = 0.5 * trial;
      if (dt < dt_floor) {
        std::ostringstream msg;
        msg << "time step underflow at t = " << t << " (dt < " << dt_floor << "), limited by cell "
            << out.limiting_cell;
        throw StiffnessError(msg.str(), out.limiting_cell);
      }
      continue;
    }
    const bool last = trial == config.T - t;
    t = last ? config.T : t + trial;
    s = std::move(out.state);
    exited += out.exited_mass;
    ++accepted;

    DiagnosticsRecord d = describe(s, t, trial, exited, config.neg_alpha);
    d.number_rates = out.start_rates.number_rates();
    if (form) {
      const double cur = form->rate(s, t);
      residual_integral += 0.5 * trial * (prev_rate + cur);
      prev_rate = cur;
      d.residual_phi1 = std::abs(form->pairing(s) - pair0 - residual_integral);
    }
    if (observer) observer(d, s);
    traj.diagnostics.push_back(d);
    if (last || accepted % config.snapshot_stride == 0) traj.push(t, s);
    dt = std::min(config.dt_max, 2.0 * trial);
  }
  return traj;
}

// --- contraction ------------------------------------------------------------------------

ContractionParams contraction_params(const ContractionInputs& in) {
  if (!std::isfinite(in.K_inf)) throw UnboundedKernelError("contraction constants need a bounded kernel (K_inf finite)");
  ContractionParams p;
  p.inputs = in;
  const double source = 2.0 * in.F0 * in.M_gamma;
  p.R = in.mu_in + in.F0 / (1.0 + in.gamma) * (in.mu_in + source * in.T) * in.T + source;
  const double lip_rate = 6.0 * in.K_inf + in.K_beta * in.M_beta + 3.0 * in.F0;
  const double inf = std::numeric_limits<double>::infinity();
  p.tau2 = lip_rate > 0.0 ? 1.0 / lip_rate : inf;
  if (p.R > 0.0) {
    const double growth =
        6.0 * in.K_inf * p.R * p.R + 2.0 * (in.K_beta * in.M_beta + 3.0 * in.F0) * p.R + source;
    p.tau1 = growth > 0.0 ? p.R / growth : inf;
  } else {
    p.tau1 = inf;
  }
  p.tau = 0.99 * std::min(p.tau1, p.tau2);
  p.lipschitz = std::isfinite(p.tau) ? lip_rate * p.tau : 0.0;
  return p;
}

double tv_distance(const StateMeasure& a, const StateMeasure& b) {
  return (a.counts - b.counts).lpNorm<1>() + std::abs(a.atom - b.atom);
}

double sup_tv_distance(const Trajectory& a, const Trajectory& b) {
  double sup = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double tol = 1e-9 * std::max(1.0, std::abs(a.times[i]));
    while (j < b.size() && b.times[j] < a.times[i] - tol) ++j;
    if (j < b.size() && std::abs(b.times[j] - a.times[i]) <= tol) {
      sup = std::max(sup, tv_distance(a.states[i], b.states[j]));
    }
  }
  return sup;
}

// --- Picard --------------------------------------------------------------------------

PicardResult picard_run(const StateMeasure& initial, const RhsTables& tables, double tau, int n_steps,
                        int max_iter, const ContractionParams* limit, double tol) {
  if (!(tau > 0.0) || n_steps < 1 || max_iter < 1) throw ConfigError("picard_run needs tau > 0, n_steps >= 1, max_iter >= 1");
  if (limit && tau > limit->tau) {
    std::ostringstream msg;
    msg << "tau = " << tau << " exceeds the contraction horizon " << limit->tau;
    throw ConfigError(msg.str());
  }
  const double h = tau / n_steps;
  std::vector<double> times(n_steps + 1);
  for (int m = 0; m <= n_steps; ++m) times[m] = m * h;
  times.back() = tau;

  std::vector<StateMeasure> iterate(n_steps + 1, initial);
  PicardResult result;
  std::vector<Rates> rates(n_steps + 1);
  for (int k = 0; k < max_iter; ++k) {
    for (int m = 0; m <= n_steps; ++m) rates[m] = rhs(iterate[m], tables, times[m]);
    std::vector<StateMeasure> next(n_steps + 1, initial);
    double dist = 0.0;
    for (int m = 1; m <= n_steps; ++m) {
      const double dtm = times[m] - times[m - 1];
      next[m].counts = next[m - 1].counts + 0.5 * dtm * (rates[m - 1].cells + rates[m].cells);
      next[m].atom = next[m - 1].atom + 0.5 * dtm * (rates[m - 1].atom + rates[m].atom);
      dist = std::max(dist, tv_distance(next[m], iterate[m]));
    }
    iterate = std::move(next);
    result.distances.push_back(dist);
    result.iterations = k + 1;
    if (dist < tol) {
      result.converged = true;
      break;
    }
  }

  for (int m = 0; m <= n_steps; ++m) {
    result.min_entry = std::min({result.min_entry, iterate[m].counts.minCoeff(), iterate[m].atom});
    result.trajectory.push(times[m], iterate[m]);
  }
  if (result.min_entry < -1e-8) {
    std::ostringstream msg;
    msg << "Picard iterate went negative (" << result.min_entry << ")";
    throw DomainError(msg.str());
  }
  return result;
}

}  // namespace bvcf
