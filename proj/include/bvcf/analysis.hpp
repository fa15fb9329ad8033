#pragma once

#include "bvcf/boundary.hpp"
#include "bvcf/kernel.hpp"
#include "bvcf/operators.hpp"
#include "bvcf/state.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace bvcf {

inline const std::vector<double>& default_probes() {
  static const std::vector<double> probes{1.25, 1.5, 2.0, 3.0, 5.0};
  return probes;
}
constexpr double kSpreadTolerance = 1e-6;

struct FInfinityValue {
  double value = 0.0;
  double spread = 0.0;  ///< max relative deviation of the probe ratios from their mean
};

/// f_inf(x) = F(x, y)/K(x, y) * g(x + y)/g(y), averaged over probes y > 1.
/// Throws InvalidScenarioError when K(x, y) g(y) vanishes at a probe.
FInfinityValue f_infinity(const CoagKernel& k, const FragKernel& f, const BoundaryDatum& g, double x,
                          const std::vector<double>& probes = default_probes());

struct EquilibriumProfile {
  GridPtr grid;
  Eigen::VectorXd values;  ///< f_inf at the pivots
  double spread = 0.0;     ///< worst spread over pivots
  bool detailed_balance = false;  ///< spread within kSpreadTolerance

  /// The equilibrium as a measure: c_i = f_inf(x_i) width_i.
  StateMeasure as_state() const;
};

EquilibriumProfile equilibrium_profile(const CoagKernel& k, const FragKernel& f, const BoundaryDatum& g,
                                       GridPtr grid, const std::vector<double>& probes = default_probes());

/// max relative residual |K Q(x) Q(y) - F Q(x+y)| / (K Q(x) Q(y)) over seeded
/// points of (0,2]^2, so x + y falls on both sides of 1.
double check_detailed_balance(const CoagKernel& k, const FragKernel& f, const std::function<double(double)>& Q,
                              std::size_t samples = 2000, std::uint64_t seed = 7);

/// D(a, b) = (a - b)(log a - log b), with D(0, 0) = 0 and +inf when exactly one vanishes.
double D(double a, double b);

/// Pointwise entropy integrand u (log(u/q) - 1) + q.
double entropy_density(double u, double q);

/// H = sum width_i (f_i (log(f_i/Q_i) - 1) + Q_i), f = density of the cells.
double entropy(const StateMeasure& s, const Eigen::VectorXd& Q_pivots);

struct EntropyRecord {
  double t = 0.0;
  double H = 0.0;
  double D1 = 0.0;  ///< interior pairs, x + y < 1
  double D2 = 0.0;  ///< interior pairs with x + y > 1, against Q x Q
  double D3 = 0.0;  ///< boundary exchange, weight integral_1^inf K(x, y) Q(y) dy
  double total() const { return D1 + D2 + D3; }
};

/// How D1 reads f at a merge point x_i + x_j.
enum class MergeLookup {
  Cell,         ///< density of the containing cell
  Interpolated  ///< log-linear between the bracketing pivots
};

/// Dissipation terms on one grid. Pairs are ordered and carry the factor 1/2
/// (each unordered pair counted once), for D2 as well as D1.
class Dissipation {
 public:
  /// Q_pivots: the profile at the pivots; G weights come from the problem's
  /// boundary tables (G built with g = Q on (1, inf)).
  Dissipation(const RhsTables& tables, Eigen::VectorXd Q_pivots, MergeLookup lookup = MergeLookup::Cell);

  EntropyRecord evaluate(const StateMeasure& s, double t) const;
  const Eigen::VectorXd& Q() const { return Q_; }

 private:
  GridPtr grid_;
  Eigen::VectorXd Q_;
  Eigen::MatrixXd K_, F_;
  /// Where x_i + x_j falls: -1 exactly at 1, n beyond 1, otherwise the
  /// containing cell, or the lower bracketing pivot with the log-linear
  /// weight in merge_frac_.
  std::vector<int> merge_cell_;
  std::vector<double> merge_frac_;
  BoundaryCoupling boundary_;
};

enum class FitMode { Exponential, Polynomial };

struct DecayFit {
  double rate = 0.0;       ///< a in m ~ e^{-a t}, or p in m ~ t^{-p}
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least-squares slope of -log m against t (or log t) on [t1, t2].
DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values, double t1, double t2,
                   FitMode mode = FitMode::Exponential);
/// Fit of the lambda-moment of a trajectory's snapshots.
DecayFit fit_decay(const Trajectory& traj, double lambda, double t1, double t2,
                   FitMode mode = FitMode::Exponential);

struct NegativeMomentLedger {
  std::vector<double> times;
  std::vector<double> m0;
  std::vector<double> integral;  ///< K1 integral_0^t m_{-alpha} M_beta ds
  double m0_initial = 0.0;
  double max_excess = 0.0;  ///< max of (m0 + integral) / m0_initial - 1
  bool ok = true;           ///< max_excess <= tolerance
};

/// m0(t) + K1 integral_0^t m_{-alpha}(s) M_beta(s) ds against m0(0) at every
/// snapshot (trapezoid in time).
NegativeMomentLedger negative_moment_check(const Trajectory& traj, double alpha, double K1, const BoundaryDatum& g,
                                           double beta, double tolerance = 1e-3);

/// L1 distance sum |c_i / width_i - f_i| width_i of the density against pivot values.
double l1_grid_distance(const StateMeasure& s, const Eigen::VectorXd& f_pivots);

/// <f - f_inf, phi> on the grid: sum (c_i - f_inf(x_i) width_i) phi(x_i).
double weak_distance(const StateMeasure& s, const Eigen::VectorXd& f_pivots, const TestFunction& phi);

}  // namespace bvcf
