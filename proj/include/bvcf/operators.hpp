#pragma once

#include "bvcf/boundary.hpp"
#include "bvcf/kernel.hpp"
#include "bvcf/state.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace bvcf {

struct RhsOptions {
  /// Absorbing sink -G(1) a on the atom (off: the atom is inert).
  bool atom_sink = false;
  /// Build G from the truncated kernel K_j instead of the full K.
  bool truncated_boundary_kernel = false;
  /// Gauss-Legendre nodes per sub-interval in the fragmentation split table.
  int frag_quad_nodes = 6;
};

/// Everything the right-hand side depends on.
struct Problem {
  GridPtr grid;
  CoagKernel coag = CoagKernel::constant(0.0);  ///< interior kernel (K or K_j)
  FragKernel frag = FragKernel::zero();
  BoundaryDatum boundary = BoundaryDatum::zero();
  RhsOptions options;

  /// Kernel behind G: the full K unless truncated_boundary_kernel is set.
  const CoagKernel& boundary_kernel() const { return options.truncated_boundary_kernel ? coag : coag.base(); }
};

enum Contribution : int {
  kCoagGain = 0,
  kCoagOverflow,
  kCoagLoss,
  kBoundarySink,
  kFragGain,
  kFragLoss,
  kBoundarySource,
  kContributionCount
};
const char* contribution_name(int c);

/// dc_i/dt and da/dt.
struct Rates {
  Eigen::VectorXd cells;
  double atom = 0.0;
};

/// The rhs split into its contributions. cells[kCoagOverflow] is always zero
/// (overflow lands on the atom); atom[] holds the atom parts.
struct RhsBreakdown {
  std::array<Eigen::VectorXd, kContributionCount> cells;
  std::array<double, kContributionCount> atom{};
  double exited_mass_rate = 0.0;  ///< d/dt of mass carried beyond x = 1
  double source_mass_rate = 0.0;
  double sink_mass_rate = 0.0;

  Rates total() const;
  /// Number rate of each contribution (cells plus atom).
  std::array<double, kContributionCount> number_rates() const;
};

/// Split of one merge (or fragment) between two targets. Index n denotes the
/// atom at x = 1.
struct Allocation {
  int lo = -1;
  int hi = -1;
  double w_lo = 0.0;
  double w_hi = 0.0;
  double excess = 0.0;  ///< mass beyond 1: v - 1 on overflow, or the ghost-pivot share w_hi (ghost - 1)
};

/// Precomputed tables of the discrete operator on one grid.
class RhsTables {
 public:
  explicit RhsTables(const Problem& problem);

  const Problem& problem() const { return problem_; }
  const Grid& grid() const { return *problem_.grid; }
  int size() const { return grid().size(); }

  const Eigen::MatrixXd& K() const { return K_; }
  /// Allocation of the merge x_i + x_j (i <= j).
  const Allocation& merge(int i, int j) const { return merge_[static_cast<std::size_t>(i) * size() + j]; }
  /// frag_gain(i, j): count entering cell i per unit count of parent j.
  const Eigen::MatrixXd& frag_gain() const { return frag_gain_; }
  /// Breakup rate of parent j, (1/2) integral_0^{x_j} F(x_j - y, y) dy.
  const Eigen::VectorXd& frag_loss() const { return frag_loss_; }
  const BoundaryCoupling& boundary() const { return boundary_; }

 private:
  void build_merges();
  void build_fragmentation();

  Problem problem_;
  Eigen::MatrixXd K_;
  std::vector<Allocation> merge_;
  Eigen::MatrixXd frag_gain_;
  Eigen::VectorXd frag_loss_;
  BoundaryCoupling boundary_;
};

/// Splits a size v in [x_1, x_n] (or up to 1, the atom) between bracketing
/// pivots so that count and mass are both preserved.
Allocation allocate(const Grid& grid, double v);

RhsBreakdown rhs_breakdown(const StateMeasure& s, const RhsTables& tables, double t);
Rates rhs(const StateMeasure& s, const RhsTables& tables, double t);

/// A[phi](x, y) = phi-bar(x + y) - phi(x) - phi(y).
double apply_A(const TestFunction& phi, double x, double y);
/// B[phi](x) = (1/2) integral_0^x F(x - y, y) (phi(x) - phi(x - y) - phi(y)) dy,
/// by Gauss-Legendre on (0, x/2] split at the kinks of phi.
double apply_B(const TestFunction& phi, const FragKernel& f, double x, int quad_n = 8);
/// integral_0^1 c(x) phi(x) dx with c the spatial C-profile.
double source_pairing(const TestFunction& phi, const FragKernel& f, const BoundaryDatum& g);

/// Weak form of the equation for one test function on the discrete state:
/// d/dt <mu, phi> = (1/2)<mu x mu, K A[phi]> - <mu, G phi + B[phi]> + <L, C phi>.
/// The atom is inert (only the optional atom sink acts on it).
class WeakForm {
 public:
  WeakForm(const RhsTables& tables, TestFunction phi);

  double pairing(const StateMeasure& s) const;
  double rate(const StateMeasure& s, double t) const;
  const TestFunction& phi() const { return phi_; }

 private:
  TestFunction phi_;
  Eigen::VectorXd phi_pivots_;
  double phi_one_ = 0.0;
  Eigen::MatrixXd KA_;
  Eigen::VectorXd G_phi_;  ///< spatial G_i phi(x_i)
  Eigen::VectorXd B_;
  double G_atom_phi_ = 0.0;
  double source_ = 0.0;  ///< spatial <L, C phi>
  bool atom_sink_ = false;
  TimeModulation modulation_;
};

/// |<mu_t, phi> - <mu_0, phi> - integral_0^t rate ds| at every snapshot, with the
/// time integral by the trapezoid rule over snapshots.
std::vector<double> weak_residual_series(const Trajectory& traj, const WeakForm& form);
/// Residual at the snapshot time t (ConfigError if t is not a snapshot time).
double weak_residual(const Trajectory& traj, const WeakForm& form, double t);

}  // namespace bvcf
