#pragma once

#include "bvcf/operators.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace bvcf {

/// Truncated discrete coagulation-fragmentation system with species 1..N
/// (stored 0-based: K(i-1, j-1) = K_ij).
struct DiscreteSystem {
  int N = 0;
  double h = 1.0;     ///< size of species 1 (for lattice moments)
  Eigen::MatrixXd K;  ///< N x N
  Eigen::MatrixXd F;  ///< N x N, F(i-1, j-1) = F_ij for the split (i+j) -> i, j
  Eigen::VectorXd Q;  ///< source
  Eigen::VectorXd S;  ///< sink rate: contributes -S_i c_i

  static DiscreteSystem zeros(int N, double h = 1.0);
};

/// dc_i/dt = 1/2 sum_{j<i} K_{j,i-j} c_j c_{i-j} - sum_{j=1}^N K_ij c_i c_j
///           - 1/2 sum_{j<i} F_{j,i-j} c_i + sum_{j=1}^{N-i} F_ij c_{i+j} + Q_i - S_i c_i.
Eigen::VectorXd discrete_rhs(const Eigen::VectorXd& c, const DiscreteSystem& sys);

/// Species i <-> lattice site i h: K_ij = K(ih, jh), F_ij = h F(ih, jh),
/// Q_i = h C(ih), S_i = G(ih), with C and G at time t.
DiscreteSystem lattice_system(const Problem& problem, double t = 0.0);

struct DiscreteTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  double dt = 0.0;  ///< accepted step after refinement
  double h = 1.0;

  double moment(std::size_t k, double lambda) const;
};

/// Classic RK4 to each output time. The step is halved from dt until two
/// successive refinements agree to 1e-8 (max-norm, relative); throws
/// DomainError when 12 halvings do not get there.
DiscreteTrajectory integrate_discrete(const DiscreteSystem& sys, const Eigen::VectorXd& c0,
                                      const std::vector<double>& output_times, double dt);

struct OracleQuadrature {
  double value = 0.0;       ///< Richardson-extrapolated value
  double trapezoid = 0.0;   ///< plain composite trapezoid with n intervals
  double ratio = 0.0;       ///< (T_{n/4} - T_{n/2}) / (T_{n/2} - T_n), ~4 when converging
  bool converged = true;    ///< false when the ratio is far from 4 and the correction is not negligible
};

/// Composite trapezoid on [a, b] (finite) with n intervals plus a Richardson check.
OracleQuadrature quad_oracle(const std::function<double(double)>& f, double a, double b, long n);

}  // namespace bvcf
