#include "bvcf/analysis.hpp"

#include "bvcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace bvcf {

FInfinityValue f_infinity(const CoagKernel& k, const FragKernel& f, const BoundaryDatum& g, double x,
                          const std::vector<double>& probes) {
  if (probes.empty()) throw ConfigError("f_infinity needs at least one probe");
  std::vector<double> ratios;
  ratios.reserve(probes.size());
  for (double y : probes) {
    if (!(y > 1.0)) throw ConfigError("f_infinity probes must lie beyond 1");
    const double kxy = k(x, y);
    const double gy = g.profile(y);
    if (!(kxy * gy > 0.0)) {
      std::ostringstream msg;
      msg << "K(x,y) g(y) vanishes at x = " << x << ", y = " << y << "; f_inf is undefined";
      throw InvalidScenarioError(msg.str());
    }
    ratios.push_back(f(x, y) / kxy * g.profile(x + y) / gy);
  }
  FInfinityValue out;
  for (double r : ratios) out.value += r;
  out.value /= static_cast<double>(ratios.size());
  for (double r : ratios) {
    const double dev = out.value != 0.0 ? std::abs(r - out.value) / std::abs(out.value) : std::abs(r);
    out.spread = std::max(out.spread, dev);
  }
  return out;
}

StateMeasure EquilibriumProfile::as_state() const {
  StateMeasure s(grid);
  s.counts = values.cwiseProduct(grid->widths());
  return s;
}

EquilibriumProfile equilibrium_profile(const CoagKernel& k, const FragKernel& f, const BoundaryDatum& g,
                                       GridPtr grid, const std::vector<double>& probes) {
  if (g.is_zero()) throw InvalidScenarioError("boundary datum is zero; no equilibrium f_inf is defined");
  EquilibriumProfile p;
  p.grid = grid;
  p.values.resize(grid->size());
  for (int i = 0; i < grid->size(); ++i) {
    const auto v = f_infinity(k, f, g, grid->pivot(i), probes);
    p.values[i] = v.value;
    p.spread = std::max(p.spread, v.spread);
  }
  p.detailed_balance = p.spread <= kSpreadTolerance;
  return p;
}

double check_detailed_balance(const CoagKernel& k, const FragKernel& f, const std::function<double(double)>& Q,
                              std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double x = 2.0 * (1.0 - unif(rng));
    const double y = 2.0 * (1.0 - unif(rng));
    const double lhs = k(x, y) * Q(x) * Q(y);
    const double rhs = f(x, y) * Q(x + y);
    const double scale = lhs > 0.0 ? lhs : rhs;
    if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

double D(double a, double b) {
  if (a == b) return 0.0;
  if (a <= 0.0 || b <= 0.0) return std::numeric_limits<double>::infinity();
  return (a - b) * (std::log(a) - std::log(b));
}

double entropy_density(double u, double q) {
  if (u == 0.0) return q;
  return u * (std::log(u / q) - 1.0) + q;
}

double entropy(const StateMeasure& s, const Eigen::VectorXd& Q_pivots) {
  const auto& w = s.grid->widths();
  double H = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    if (!(Q_pivots[i] > 0.0)) {
      std::ostringstream msg;
      msg << "entropy profile Q is not positive at pivot " << s.grid->pivot(i);
      throw SingularProfileError(msg.str());
    }
    H += w[i] * entropy_density(s.counts[i] / w[i], Q_pivots[i]);
  }
  return H;
}

// --- dissipation ---------------------------------------------------------------------

Dissipation::Dissipation(const RhsTables& tables, Eigen::VectorXd Q_pivots, MergeLookup lookup)
    : grid_(tables.problem().grid), Q_(std::move(Q_pivots)), boundary_(tables.boundary()) {
  const int n = grid_->size();
  if (Q_.size() != n) throw ConfigError("profile and grid sizes differ");
  if ((Q_.array() <= 0.0).any()) throw SingularProfileError("profile Q must be positive at every pivot");
  const auto& x = grid_->pivots();
  K_ = tables.K();
  F_.resize(n, n);
  merge_cell_.resize(static_cast<std::size_t>(n) * n);
  merge_frac_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      F_(i, j) = tables.problem().frag(x[i], x[j]);
      const double v = x[i] + x[j];
      const std::size_t idx = static_cast<std::size_t>(j) * n + i;
      if (v == 1.0) {
        merge_cell_[idx] = -1;
      } else if (v > 1.0) {
        merge_cell_[idx] = n;
      } else if (lookup == MergeLookup::Cell) {
        merge_cell_[idx] = grid_->locate(v);
      } else {
        // f at v by log-linear interpolation between pivots (extrapolated in the last half cell)
        int k = static_cast<int>(std::upper_bound(x.data(), x.data() + n, v) - x.data()) - 1;
        k = std::clamp(k, 0, n - 2);
        merge_cell_[idx] = k;
        merge_frac_[idx] = (v - x[k]) / (x[k + 1] - x[k]);
      }
    }
  }
}

namespace {

double interpolate(const Eigen::VectorXd& f, int k, double frac) {
  if (frac <= 0.0) return f[k];
  const double a = f[k], b = f[k + 1];
  if (a > 0.0 && b > 0.0) return a * std::pow(b / a, frac);
  return frac <= 1.0 ? (1.0 - frac) * a + frac * b : b;
}

}  // namespace

EntropyRecord Dissipation::evaluate(const StateMeasure& s, double t) const {
  const int n = grid_->size();
  const auto& w = grid_->widths();
  const Eigen::VectorXd f = s.density();
  EntropyRecord r;
  r.t = t;
  r.H = entropy(s, Q_);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * n + i;
      const int m = merge_cell_[idx];
      if (m < 0) continue;
      const double weight = 0.5 * w[i] * w[j];
      if (m < n) {
        r.D1 += weight * D(K_(i, j) * f[i] * f[j], F_(i, j) * interpolate(f, m, merge_frac_[idx]));
      } else {
        r.D2 += weight * K_(i, j) * D(f[i] * f[j], Q_[i] * Q_[j]);
      }
    }
  }
  const BoundaryTables bt = boundary_.at(t);
  for (int i = 0; i < n; ++i) r.D3 += w[i] * bt.G[i] * D(f[i], Q_[i]);
  return r;
}

// --- decay fits ------------------------------------------------------------------------

DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values, double t1, double t2,
                   FitMode mode) {
  if (times.size() != values.size()) throw FitError("times and values differ in length");
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t1 || times[k] > t2) continue;
    if (!(values[k] > 0.0)) {
      std::ostringstream msg;
      msg << "nonpositive value " << values[k] << " at t = " << times[k] << " inside the fit window";
      throw FitError(msg.str());
    }
    if (mode == FitMode::Polynomial && !(times[k] > 0.0)) throw FitError("polynomial fit needs t > 0");
    xs.push_back(mode == FitMode::Exponential ? times[k] : std::log(times[k]));
    ys.push_back(-std::log(values[k]));
  }
  if (xs.size() < 10) {
    std::ostringstream msg;
    msg << "only " << xs.size() << " points in the fit window [" << t1 << ", " << t2 << "]; need >= 10";
    throw FitError(msg.str());
  }
  const Eigen::Index m = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd b(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    A(k, 0) = xs[k];
    A(k, 1) = 1.0;
    b[k] = ys[k];
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(b);
  DecayFit fit;
  fit.rate = coef[0];
  fit.intercept = -coef[1];
  fit.points = xs.size();
  const double mean = b.mean();
  const double ss_tot = (b.array() - mean).square().sum();
  const double ss_res = (A * coef - b).squaredNorm();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

DecayFit fit_decay(const Trajectory& traj, double lambda, double t1, double t2, FitMode mode) {
  std::vector<double> values;
  values.reserve(traj.size());
  for (const auto& s : traj.states) values.push_back(moment_m(s, lambda));
  return fit_decay(traj.times, values, t1, t2, mode);
}

NegativeMomentLedger negative_moment_check(const Trajectory& traj, double alpha, double K1, const BoundaryDatum& g,
                                           double beta, double tolerance) {
  NegativeMomentLedger out;
  if (traj.size() == 0) return out;
  const double Mb = g.is_zero() ? 0.0 : g.spatial_moment(beta);
  out.m0_initial = moment_m(traj.states[0], 0.0);
  double integral = 0.0;
  double prev = moment_m(traj.states[0], -alpha) * g.modulation()(traj.times[0]) * Mb;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (k > 0) {
      const double cur = moment_m(traj.states[k], -alpha) * g.modulation()(traj.times[k]) * Mb;
      integral += 0.5 * (traj.times[k] - traj.times[k - 1]) * (prev + cur);
      prev = cur;
    }
    const double m0 = moment_m(traj.states[k], 0.0);
    out.times.push_back(traj.times[k]);
    out.m0.push_back(m0);
    out.integral.push_back(K1 * integral);
    if (out.m0_initial > 0.0) out.max_excess = std::max(out.max_excess, (m0 + K1 * integral) / out.m0_initial - 1.0);
  }
  out.ok = out.max_excess <= tolerance;
  return out;
}

double l1_grid_distance(const StateMeasure& s, const Eigen::VectorXd& f_pivots) {
  return (s.counts - f_pivots.cwiseProduct(s.grid->widths())).lpNorm<1>();
}

double weak_distance(const StateMeasure& s, const Eigen::VectorXd& f_pivots, const TestFunction& phi) {
  double sum = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    sum += (s.counts[i] - f_pivots[i] * s.grid->width(i)) * phi(s.grid->pivot(i));
  }
  return sum;
}

}  // namespace bvcf
