#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <limits>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bvcf {

enum class GridKind { Uniform, Geometric, Lattice, Custom };
const char* to_string(GridKind kind);

/// Sectional partition of (0,1]. Cells are 0-based here: cell i covers
/// (edges[i], edges[i+1]] and carries the pivot pivots[i].
class Grid {
 public:
  /// e_i = i/n, pivots at geometric means (first pivot e_1/2).
  static std::shared_ptr<const Grid> uniform(int n);
  /// e_i = rho^(i-n), refining toward 0.
  static std::shared_ptr<const Grid> geometric(int n, double rho);
  /// Uniform cells with pivots on the right edges i*h, mirroring species i of
  /// the discrete system.
  static std::shared_ptr<const Grid> lattice(int n);
  /// Arbitrary edges/pivots, e.g. read back from a state CSV.
  static std::shared_ptr<const Grid> custom(Eigen::VectorXd edges, Eigen::VectorXd pivots);

  int size() const { return static_cast<int>(pivots_.size()); }
  GridKind kind() const { return kind_; }
  bool is_lattice() const { return kind_ == GridKind::Lattice; }
  double ratio() const { return ratio_; }
  /// Cell width of uniform/lattice grids (0 otherwise).
  double spacing() const { return kind_ == GridKind::Uniform || kind_ == GridKind::Lattice ? widths_[0] : 0.0; }

  const Eigen::VectorXd& edges() const { return edges_; }
  const Eigen::VectorXd& pivots() const { return pivots_; }
  const Eigen::VectorXd& widths() const { return widths_; }
  double left(int i) const { return edges_[i]; }
  double right(int i) const { return edges_[i + 1]; }
  double pivot(int i) const { return pivots_[i]; }
  double width(int i) const { return widths_[i]; }

  /// Cell containing x (edges[i] < x <= edges[i+1]); -1 for x <= 0 and
  /// size() for x > 1.
  int locate(double x) const;

  bool same_as(const Grid& other) const;

 private:
  Grid(GridKind kind, Eigen::VectorXd edges, Eigen::VectorXd pivots, double ratio);

  GridKind kind_;
  Eigen::VectorXd edges_;
  Eigen::VectorXd pivots_;
  Eigen::VectorXd widths_;
  double ratio_ = 0.0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Discrete measure on (0,1]: cell counts (number per cell, not density) and
/// the atom at x = 1.
template <typename Scalar>
struct BasicStateMeasure {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  GridPtr grid;
  Vector counts;
  Scalar atom = Scalar(0);

  BasicStateMeasure() = default;
  explicit BasicStateMeasure(GridPtr g) : grid(std::move(g)), counts(Vector::Zero(grid->size())) {}

  int size() const { return static_cast<int>(counts.size()); }
  Scalar total_variation() const { return counts.sum() + atom; }
  /// Density view c_i / width_i.
  Vector density() const { return counts.cwiseQuotient(grid->widths().template cast<Scalar>()); }
};

using StateMeasure = BasicStateMeasure<double>;

/// c_i = integral of f_in over cell i (16-point Gauss-Legendre per cell).
StateMeasure from_density(const std::function<double(double)>& f_in, GridPtr grid);

/// sum c_i x_i^lambda + a.
double moment_m(const StateMeasure& s, double lambda);
/// Same without the atom.
double interior_moment(const StateMeasure& s, double lambda);
/// Prefix mass mu(0, delta): cells whose pivot lies below delta.
double prefix_count(const StateMeasure& s, double delta);

/// Warning text when the first cell holds more than half of the count.
std::optional<std::string> resolution_warning(const StateMeasure& s);

/// Piecewise-linear function on (0,1] through (0,0) and the given
/// breakpoints, extended by a constant beyond the last breakpoint.
class TestFunction {
 public:
  TestFunction(std::vector<double> breakpoints, std::vector<double> values, std::string name = "");

  /// Samples f at the breakpoints.
  static TestFunction sample(const std::function<double(double)>& f, std::vector<double> breakpoints,
                             std::string name = "");
  /// Samples f at `pieces` uniform breakpoints k/pieces.
  static TestFunction sample_uniform(const std::function<double(double)>& f, int pieces, std::string name = "");
  static TestFunction identity();
  /// 0 at 0, 1 from eps on: approximates the indicator of (0,1].
  static TestFunction ramp(double eps);

  double operator()(double x) const;
  /// phi-bar: phi(min(x, 1)).
  double extended(double x) const { return (*this)(x < 1.0 ? x : 1.0); }

  double lipschitz() const { return lip_; }
  double sup_norm() const { return sup_; }
  const std::vector<double>& breakpoints() const { return xs_; }
  const std::vector<double>& values() const { return vs_; }
  const std::string& name() const { return name_; }

 private:
  std::vector<double> xs_;
  std::vector<double> vs_;
  std::string name_;
  double lip_ = 0.0;
  double sup_ = 0.0;
};

double pair_test(const StateMeasure& s, const TestFunction& phi);

/// Monomials x^k and sines sin(k pi x / 2), k = 1..10.
std::vector<TestFunction> test_battery(int pieces = 512);

struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;
  double m_neg1 = 0.0;
  double m_neg_alpha = 0.0;
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double atom = 0.0;
  double exited_mass = 0.0;  ///< cumulative mass carried beyond x = 1
  double H = std::numeric_limits<double>::quiet_NaN();
  double residual_phi1 = std::numeric_limits<double>::quiet_NaN();
  double D1 = std::numeric_limits<double>::quiet_NaN();
  double D2 = std::numeric_limits<double>::quiet_NaN();
  double D3 = std::numeric_limits<double>::quiet_NaN();
  /// Number rates of the rhs contributions (coag gain, overflow, loss, sink,
  /// frag gain, frag loss, source).
  std::array<double, 7> number_rates{};
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateMeasure> states;
  std::vector<DiagnosticsRecord> diagnostics;  ///< one per accepted step (plus t = 0)

  std::size_t size() const { return times.size(); }
  void push(double t, const StateMeasure& s) {
    times.push_back(t);
    states.push_back(s);
  }
};

void write_state_csv(std::ostream& out, const StateMeasure& s);
void write_state_csv(const std::string& path, const StateMeasure& s);
StateMeasure read_state_csv(std::istream& in);
StateMeasure read_state_csv(const std::string& path);

}  // namespace bvcf
