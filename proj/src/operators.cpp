#include "bvcf/operators.hpp"

#include "bvcf/error.hpp"
#include "bvcf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bvcf {

const char* contribution_name(int c) {
  static const char* names[] = {"coag_gain", "coag_overflow", "coag_loss", "boundary_sink",
                                "frag_gain", "frag_loss",     "boundary_source"};
  return c >= 0 && c < kContributionCount ? names[c] : "unknown";
}

Rates RhsBreakdown::total() const {
  Rates r;
  r.cells = cells[0];
  for (int c = 1; c < kContributionCount; ++c) r.cells += cells[c];
  for (double a : atom) r.atom += a;
  return r;
}

std::array<double, kContributionCount> RhsBreakdown::number_rates() const {
  std::array<double, kContributionCount> out{};
  for (int c = 0; c < kContributionCount; ++c) out[c] = cells[c].sum() + atom[c];
  return out;
}

// --- allocation ---------------------------------------------------------------------

Allocation allocate(const Grid& grid, double v) {
  const int n = grid.size();
  Allocation a;
  if (grid.is_lattice()) {
    // Lattice sizes are multiples of h; snap instead of splitting.
    const double k = std::round(v * n);
    if (std::abs(v * n - k) <= 1e-9 && k >= 1.0) {
      if (k <= n) {
        a.lo = static_cast<int>(k) - 1;
        a.w_lo = 1.0;
      } else {
        a.lo = n;
        a.w_lo = 1.0;
        a.excess = v - 1.0;
      }
      return a;
    }
  }
  if (v >= 1.0) {
    a.lo = n;
    a.w_lo = 1.0;
    a.excess = v - 1.0;
    return a;
  }
  const auto& x = grid.pivots();
  if (v <= x[0]) {
    a.lo = 0;
    a.w_lo = 1.0;
    return a;
  }
  if (v >= x[n - 1]) {
    // Above the last pivot the upper neighbour is a ghost pivot one spacing
    // further out; its share lands on the atom (count) and the mass it would
    // carry beyond 1 is booked as excess. The atom itself is only half a
    // cell away, so splitting against it would drain the last cell.
    const double ghost = std::max(1.0, 2.0 * x[n - 1] - x[n - 2]);
    a.lo = n - 1;
    a.hi = n;
    a.w_hi = (v - x[n - 1]) / (ghost - x[n - 1]);
    a.w_lo = 1.0 - a.w_hi;
    a.excess = a.w_hi * (ghost - 1.0);
    return a;
  }
  const int k = static_cast<int>(std::upper_bound(x.data(), x.data() + n, v) - x.data()) - 1;
  const double x_lo = x[k];
  const double x_hi = x[k + 1];
  a.lo = k;
  a.hi = k + 1;
  a.w_hi = (v - x_lo) / (x_hi - x_lo);
  a.w_lo = 1.0 - a.w_hi;
  return a;
}

// --- tables -------------------------------------------------------------------------

RhsTables::RhsTables(const Problem& problem)
    : problem_(problem),
      boundary_(problem.boundary_kernel(), problem.frag, problem.boundary, *problem.grid) {
  if (!problem_.grid) throw ConfigError("problem has no grid");
  const int n = size();
  const auto& x = grid().pivots();
  K_.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) K_(i, j) = K_(j, i) = problem_.coag(x[i], x[j]);
  build_merges();
  build_fragmentation();
}

void RhsTables::build_merges() {
  const int n = size();
  const auto& x = grid().pivots();
  merge_.assign(static_cast<std::size_t>(n) * n, Allocation{});
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) merge_[static_cast<std::size_t>(i) * n + j] = allocate(grid(), x[i] + x[j]);
}

void RhsTables::build_fragmentation() {
  const int n = size();
  frag_gain_ = Eigen::MatrixXd::Zero(n, n);
  frag_loss_ = Eigen::VectorXd::Zero(n);
  const FragKernel& F = problem_.frag;
  if (F.is_zero()) return;
  const auto& x = grid().pivots();

  if (grid().is_lattice()) {
    // Parent of size (j+1)h splits into l h + (j+1-l) h; each ordered l carries
    // half of h F so that species i gains h F(ih, (j+1-i)h) c_j in total.
    const double h = grid().spacing();
    for (int j = 1; j < n; ++j) {
      for (int l = 1; l <= j; ++l) {
        const double rate = 0.5 * h * F(l * h, (j + 1 - l) * h);
        frag_gain_(l - 1, j) += rate;
        frag_gain_(j - l, j) += rate;
        frag_loss_[j] += rate;
      }
    }
    return;
  }

  const auto& rule = gauss_legendre(problem_.options.frag_quad_nodes);
  auto integrate = [&](double xp, double a, double b) {
    const double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
    double sum = 0.0;
    for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
      const double y = mid + rad * rule.nodes[q];
      sum += rad * rule.weights[q] * F(xp - y, y);
    }
    return sum;
  };
  Eigen::VectorXd g(n);
  for (int j = 0; j < n; ++j) {
    const double xp = x[j];
    if (xp < 2.0 * x[0]) continue;
    // Fragment density F(x_j - y, y) integrated over each receiving cell; both
    // fragments of a pair are counted, so the sum is twice the breakup rate.
    g.setZero();
    for (int i = 0; i <= j; ++i) {
      const double a = grid().left(i), b = std::min(grid().right(i), xp);
      if (b > a) g[i] = integrate(xp, a, b);
    }
    const double s0 = g.sum();
    if (!(s0 > 0.0)) continue;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i <= j; ++i) {
      s1 += g[i] * x[i];
      s2 += g[i] * x[i] * x[i];
    }
    // Linear tilt g_i (a + b x_i): keeps the count s0 and restores the
    // mass x_j s0 / 2 that pivot placement shifts slightly.
    const double target = 0.5 * xp * s0;
    const double det = s0 * s2 - s1 * s1;
    bool ok = det > 0.0;
    double ta = 1.0, tb = 0.0;
    if (ok) {
      ta = (s0 * s2 - s1 * target) / det;
      tb = (s0 * target - s0 * s1) / det;
      for (int i = 0; i <= j && ok; ++i) ok = g[i] == 0.0 || ta + tb * x[i] >= 0.0;
    }
    if (ok) {
      for (int i = 0; i <= j; ++i) frag_gain_(i, j) = g[i] * (ta + tb * x[i]);
      frag_loss_[j] = 0.5 * s0;
      continue;
    }
    // Fallback for the few smallest parents: breakups y + (x_j - y) with both
    // fragments hat-allocated; fragments below the first pivot move to
    // (x_1, x_j - x_1), which keeps count and mass.
    std::vector<double> cuts{0.0, 0.5 * xp, x[0]};
    const double half = 0.5 * xp;
    for (int k = 0; k < n && x[k] < xp; ++k) cuts.push_back(x[k] < half ? x[k] : xp - x[k]);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t c = 0; c + 1 < cuts.size() && cuts[c] < half; ++c) {
      const double a = cuts[c], b = std::min(cuts[c + 1], half);
      if (!(b > a)) continue;
      const double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
      for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
        const double y = mid + rad * rule.nodes[q];
        const double rate = rad * rule.weights[q] * F(xp - y, y);
        if (rate == 0.0) continue;
        const double small = y < x[0] ? x[0] : y;
        for (double frag : {small, xp - small}) {
          const Allocation al = allocate(grid(), frag);
          frag_gain_(al.lo, j) += rate * al.w_lo;
          if (al.hi >= 0 && al.w_hi != 0.0) frag_gain_(al.hi, j) += rate * al.w_hi;
        }
        frag_loss_[j] += rate;
      }
    }
  }
}

// --- rhs -----------------------------------------------------------------------------

RhsBreakdown rhs_breakdown(const StateMeasure& s, const RhsTables& tables, double t) {
  const Grid& grid = tables.grid();
  if (!s.grid || !s.grid->same_as(grid)) throw ConfigError("state and rhs tables live on different grids");
  const int n = grid.size();
  const Eigen::VectorXd& c = s.counts;
  RhsBreakdown out;
  for (auto& v : out.cells) v = Eigen::VectorXd::Zero(n);

  Eigen::VectorXd& gain = out.cells[kCoagGain];
  Eigen::VectorXd& loss = out.cells[kCoagLoss];
  const Eigen::MatrixXd& K = tables.K();
  for (int i = 0; i < n; ++i) {
    if (c[i] == 0.0) continue;
    for (int j = i; j < n; ++j) {
      if (c[j] == 0.0) continue;
      const double r = (i == j ? 0.5 : 1.0) * K(j, i) * c[i] * c[j];
      if (r == 0.0) continue;
      loss[i] -= r;
      loss[j] -= r;
      const Allocation& a = tables.merge(i, j);
      if (a.lo == n) out.atom[kCoagOverflow] += r * a.w_lo;
      else gain[a.lo] += r * a.w_lo;
      if (a.hi >= 0) {
        if (a.hi == n) out.atom[kCoagOverflow] += r * a.w_hi;
        else gain[a.hi] += r * a.w_hi;
      }
      out.exited_mass_rate += r * a.excess;
    }
  }

  const BoundaryTables bt = tables.boundary().at(t);
  const auto& x = grid.pivots();
  out.cells[kBoundarySink] = -bt.G.cwiseProduct(c);
  if (tables.problem().options.atom_sink) out.atom[kBoundarySink] = -bt.G_atom * s.atom;
  out.cells[kFragGain].noalias() = tables.frag_gain() * c;
  out.cells[kFragLoss] = -tables.frag_loss().cwiseProduct(c);
  out.cells[kBoundarySource] = bt.C.cwiseProduct(grid.widths());

  out.source_mass_rate = out.cells[kBoundarySource].dot(x);
  out.sink_mass_rate = -out.cells[kBoundarySink].dot(x) - out.atom[kBoundarySink];
  return out;
}

Rates rhs(const StateMeasure& s, const RhsTables& tables, double t) { return rhs_breakdown(s, tables, t).total(); }

// --- weak-form operators -------------------------------------------------------------

double apply_A(const TestFunction& phi, double x, double y) { return phi.extended(x + y) - phi(x) - phi(y); }

double apply_B(const TestFunction& phi, const FragKernel& f, double x, int quad_n) {
  if (!(x > 0.0) || f.is_zero()) return 0.0;
  const double half = 0.5 * x;
  std::vector<double> cuts{0.0, half};
  for (double b : phi.breakpoints()) {
    if (b < half) cuts.push_back(b);
    if (x - b > 0.0 && x - b < half) cuts.push_back(x - b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const auto& rule = gauss_legendre(quad_n);
  const double phi_x = phi(x);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    sum += integrate_gl([&](double y) { return f(x - y, y) * (phi_x - phi(x - y) - phi(y)); }, cuts[k],
                        cuts[k + 1], rule);
  }
  return sum;  // the (0, x/2] half carries the factor 1/2 by symmetry
}

double source_pairing(const TestFunction& phi, const FragKernel& f, const BoundaryDatum& g) {
  if (f.is_zero() || g.is_zero()) return 0.0;
  const BoundaryDatum g0 = g.with_modulation(TimeModulation::constant(1.0));
  std::vector<double> cuts{0.0};
  for (int k = 1; k <= 16; ++k) cuts.push_back(k / 16.0);
  for (double b : phi.breakpoints()) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const auto& rule = gauss_legendre(6);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    sum += integrate_gl([&](double x) { return eval_C(f, g0, 0.0, x) * phi(x); }, cuts[k], cuts[k + 1], rule);
  }
  return sum;
}

WeakForm::WeakForm(const RhsTables& tables, TestFunction phi)
    : phi_(std::move(phi)),
      atom_sink_(tables.problem().options.atom_sink),
      modulation_(tables.problem().boundary.modulation()) {
  const Problem& p = tables.problem();
  const auto& x = tables.grid().pivots();
  const int n = tables.size();
  phi_pivots_.resize(n);
  for (int i = 0; i < n; ++i) phi_pivots_[i] = phi_(x[i]);
  phi_one_ = phi_(1.0);
  KA_.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) KA_(i, j) = tables.K()(i, j) * apply_A(phi_, x[i], x[j]);
  const BoundaryTables& base = tables.boundary().base();
  G_phi_ = base.G.cwiseProduct(phi_pivots_);
  G_atom_phi_ = base.G_atom * phi_one_;
  B_.resize(n);
  for (int i = 0; i < n; ++i) B_[i] = apply_B(phi_, p.frag, x[i]);
  source_ = source_pairing(phi_, p.frag, p.boundary);
}

double WeakForm::pairing(const StateMeasure& s) const { return s.counts.dot(phi_pivots_) + s.atom * phi_one_; }

double WeakForm::rate(const StateMeasure& s, double t) const {
  const Eigen::VectorXd& c = s.counts;
  const double m = modulation_(t);
  double r = 0.5 * c.dot(KA_ * c) - m * c.dot(G_phi_) - c.dot(B_) + m * source_;
  if (atom_sink_) r -= m * G_atom_phi_ * s.atom;
  return r;
}

std::vector<double> weak_residual_series(const Trajectory& traj, const WeakForm& form) {
  std::vector<double> out(traj.size(), 0.0);
  if (traj.size() == 0) return out;
  const double p0 = form.pairing(traj.states[0]);
  double integral = 0.0;
  double prev = form.rate(traj.states[0], traj.times[0]);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double cur = form.rate(traj.states[k], traj.times[k]);
    integral += 0.5 * (traj.times[k] - traj.times[k - 1]) * (prev + cur);
    prev = cur;
    out[k] = std::abs(form.pairing(traj.states[k]) - p0 - integral);
  }
  return out;
}

double weak_residual(const Trajectory& traj, const WeakForm& form, double t) {
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (std::abs(traj.times[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
      Trajectory head;
      head.times.assign(traj.times.begin(), traj.times.begin() + static_cast<std::ptrdiff_t>(k) + 1);
      head.states.assign(traj.states.begin(), traj.states.begin() + static_cast<std::ptrdiff_t>(k) + 1);
      return weak_residual_series(head, form).back();
    }
  }
  std::ostringstream msg;
  msg << "t = " << t << " is not a snapshot time";
  throw ConfigError(msg.str());
}

}  // namespace bvcf
