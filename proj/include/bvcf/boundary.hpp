#pragma once

#include "bvcf/kernel.hpp"
#include "bvcf/state.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace bvcf {

/// Multiplicative time factor m(t) of the boundary datum.
class TimeModulation {
 public:
  enum class Kind { Constant, Decaying, Sampled };

  static TimeModulation constant(double c = 1.0);
  /// c / (1 + t)
  static TimeModulation decaying(double c);
  /// Piecewise-linear through (t_k, factor_k); held constant outside.
  static TimeModulation sampled(std::vector<double> ts, std::vector<double> factors);
  static TimeModulation read_csv(const std::string& path);

  double operator()(double t) const;
  /// sup over t >= 0.
  double sup() const;
  bool is_constant() const { return kind_ == Kind::Constant; }
  Kind kind() const { return kind_; }
  double scale() const { return c_; }

 private:
  Kind kind_ = Kind::Constant;
  double c_ = 1.0;
  std::vector<double> ts_, fs_;
};

/// Q(x) = A x^p e^{-r x}: the profile families used for detailed balance.
struct PowerExpProfile {
  double A = 1.0;
  double p = 0.0;
  double r = 1.0;
  double operator()(double x) const;
};

/// g(t, y) = m(t) g0(y) on y > 1 with g0 one of
///   exponential       A e^{-q y}
///   power tail        A y^{-p}
///   power-exponential A y^{-p} e^{-q y}
class BoundaryDatum {
 public:
  enum class Kind { Zero, Exponential, PowerTail, PowerExponential };

  static BoundaryDatum zero();
  static BoundaryDatum exponential(double A, double q);
  static BoundaryDatum power_tail(double A, double p);
  static BoundaryDatum power_exponential(double A, double p, double q);

  BoundaryDatum with_modulation(TimeModulation m) const;
  /// Initial quadrature cutoff for exponential-type profiles (default 50).
  BoundaryDatum with_cutoff(double y_max) const;

  double profile(double y) const;
  double operator()(double t, double y) const { return modulation_(t) * profile(y); }

  /// Throws ConfigError when M_lambda diverges.
  void require_moment(double lambda) const;
  /// integral_1^inf y^lambda g0(y) dy.
  double spatial_moment(double lambda) const;

  /// Upper integration limit for integrands bounded by y^s g0(y): the cutoff,
  /// extended until the analytic tail bound drops below 1e-12. Infinite for
  /// pure power tails.
  double upper_limit(double s) const;

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::Zero || A_ == 0.0; }
  const TimeModulation& modulation() const { return modulation_; }
  double amplitude() const { return A_; }
  double decay() const { return q_; }
  double tail_exponent() const { return p_; }
  double cutoff() const { return y_max_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::Zero;
  double A_ = 0.0, q_ = 0.0, p_ = 0.0;
  double y_max_ = 50.0;
  TimeModulation modulation_;
};

/// M_lambda(t) = integral_1^inf y^lambda g(t, y) dy.
double moment_M(const BoundaryDatum& g, double lambda, double t);
/// Uniform bound sup_t M_lambda(t).
double moment_sup(const BoundaryDatum& g, double lambda);

/// G(t, x) = integral_1^inf K(x, y) g(t, y) dy.
double eval_G(const CoagKernel& k, const BoundaryDatum& g, double t, double x);
/// C(t, x) = integral_1^inf F(y - x, x) g(t, y) dy.
double eval_C(const FragKernel& f, const BoundaryDatum& g, double t, double x);

/// Boundary coupling at the grid pivots (and at the atom, x = 1).
struct BoundaryTables {
  Eigen::VectorXd G;
  Eigen::VectorXd C;
  double G_atom = 0.0;
  double t = 0.0;
};

BoundaryTables precompute_tables(const CoagKernel& k, const FragKernel& f, const BoundaryDatum& g,
                                 const Grid& grid, double t);

/// Spatial tables computed once; at(t) rescales them by the modulation (a
/// constant-in-time datum always yields the same contents).
class BoundaryCoupling {
 public:
  BoundaryCoupling() = default;
  BoundaryCoupling(const CoagKernel& k, const FragKernel& f, const BoundaryDatum& g, const Grid& grid);

  BoundaryTables at(double t) const;
  const BoundaryTables& base() const { return base_; }
  bool time_dependent() const { return !modulation_.is_constant(); }

 private:
  TimeModulation modulation_;
  BoundaryTables base_;  ///< m(t) = 1
};

}  // namespace bvcf
