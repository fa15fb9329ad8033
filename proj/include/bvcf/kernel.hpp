#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bvcf {

/// Declared parameters of K(x,y) <= K0 (x^-a + y^-a)(x^b + y^b) and, when
/// K1 is set, K(x,y) >= K1 (x^-a y^b + y^-a x^b).
struct CoagBounds {
  double K0 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> K1;
};

/// Declared parameters of F(x,y) <= F0 (x^g + y^g).
struct FragBounds {
  double F0 = 0.0;
  double gamma = 0.0;
};

enum class CoagKind { Constant, Additive, Multiplicative, BoundForm, LowerForm, Tabulated, Custom, Truncated };
enum class FragKind { Zero, Constant, Power, Additive, Multiplicative, Tabulated, DetailedBalance, Custom };

const char* to_string(CoagKind kind);
const char* to_string(FragKind kind);

/// Rectangular (x, y, value) table with bilinear interpolation. Queries
/// outside the table are clamped to its edge.
class KernelTable {
 public:
  KernelTable(std::vector<double> xs, std::vector<double> ys, Eigen::MatrixXd values);

  /// Reads a CSV with a header line and (x, y, value) rows covering a full grid.
  static KernelTable read_csv(std::istream& in);
  static KernelTable read_csv_file(const std::string& path);

  double operator()(double x, double y) const;

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  const Eigen::MatrixXd& values() const { return values_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  Eigen::MatrixXd values_;
};

/// Symmetric nonnegative coagulation rate K(x, y). Immutable once built.
///
/// Evaluation always happens in canonical argument order (smaller size
/// first), so K(x, y) and K(y, x) agree bit for bit for every family.
class CoagKernel {
 public:
  using Evaluator = std::function<double(double, double)>;

  static CoagKernel constant(double value);
  static CoagKernel additive();
  static CoagKernel multiplicative();
  /// K0 (x^-a + y^-a)(x^b + y^b): sharp for both bound conditions with K1 = K0.
  static CoagKernel bound_form(double K0, double alpha, double beta);
  /// K1 (x^-a y^b + y^-a x^b).
  static CoagKernel lower_form(double K1, double alpha, double beta);
  static CoagKernel tabulated(KernelTable table, std::optional<CoagBounds> declared = {});
  static CoagKernel custom(std::string name, Evaluator fn, std::optional<CoagBounds> declared = {});

  /// K(x, y); throws DomainError for nonpositive sizes.
  double operator()(double x, double y) const;

  CoagKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::optional<CoagBounds>& bounds() const { return bounds_; }
  /// Truncation index j of K_j, or 0 for an untruncated kernel.
  int truncation() const { return truncation_; }
  /// Untruncated kernel underneath a truncated one (or *this).
  const CoagKernel& base() const { return base_ ? *base_ : *this; }
  /// True when the kernel blows up as a size tends to 0 on (0,1]^2.
  bool singular() const;
  const std::map<std::string, double>& parameters() const { return params_; }

 private:
  friend struct TruncatedKernel;
  CoagKernel(CoagKind kind, std::string name, Evaluator fn, std::optional<CoagBounds> bounds,
             std::map<std::string, double> params);

  CoagKind kind_;
  std::string name_;
  Evaluator eval_;
  std::optional<CoagBounds> bounds_;
  std::map<std::string, double> params_;
  int truncation_ = 0;
  std::shared_ptr<const CoagKernel> base_;
};

/// K_j = K * indicator{x > 1/j and y > 1/j}, strict on both sides.
struct TruncatedKernel {
  CoagKernel base;
  int j;

  double operator()(double x, double y) const;
  /// The truncated kernel as a general CoagKernel (kind Truncated).
  CoagKernel kernel() const;
};

/// Symmetric nonnegative fragmentation rate F(x, y) of x + y -> x, y.
class FragKernel {
 public:
  using Evaluator = std::function<double(double, double)>;

  static FragKernel zero();
  static FragKernel constant(double value);
  /// F0 (x^g + y^g).
  static FragKernel power(double F0, double gamma);
  static FragKernel additive();
  static FragKernel multiplicative();
  static FragKernel tabulated(KernelTable table, std::optional<FragBounds> declared = {});
  static FragKernel custom(std::string name, Evaluator fn, std::optional<FragBounds> declared = {});

  double operator()(double x, double y) const;

  FragKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::optional<FragBounds>& bounds() const { return bounds_; }
  bool is_zero() const { return kind_ == FragKind::Zero; }
  const std::map<std::string, double>& parameters() const { return params_; }

 private:
  friend FragKernel detailed_balance_frag(const CoagKernel&, std::function<double(double)>,
                                          std::optional<FragBounds>);
  FragKernel(FragKind kind, std::string name, Evaluator fn, std::optional<FragBounds> bounds,
             std::map<std::string, double> params);

  FragKind kind_;
  std::string name_;
  Evaluator eval_;
  std::optional<FragBounds> bounds_;
  std::map<std::string, double> params_;
};

double eval_coag(const CoagKernel& k, double x, double y);

TruncatedKernel truncate(const CoagKernel& k, int j);

/// F(x,y) = K(x,y) Q(x) Q(y) / Q(x+y). Throws SingularProfileError at
/// evaluation time when Q(x+y) = 0.
FragKernel detailed_balance_frag(const CoagKernel& k, std::function<double(double)> Q,
                                 std::optional<FragBounds> declared = {});

struct BoundReport {
  double max_violation = 0.0;
  std::array<double, 2> worst_point{0.0, 0.0};
  /// Only meaningful for coagulation kernels with a declared K1.
  double max_lower_violation = 0.0;
  std::array<double, 2> worst_lower_point{0.0, 0.0};
  std::size_t samples = 0;
};

/// Samples a log-uniform lattice of (0,1]^2 plus n_samples seeded uniform
/// points and reports the largest relative excess over the declared bound.
BoundReport validate_bounds(const CoagKernel& k, std::size_t n_samples, std::uint64_t seed);
BoundReport validate_bounds(const FragKernel& f, std::size_t n_samples, std::uint64_t seed);

struct BoundedKernelParams {
  double K_inf = 0.0;   ///< sup of K on (0,1]^2
  double K_beta = 0.0;  ///< sup of K(x,y) / y^beta over x in (0,1], y > 1
  double beta = 0.0;
  bool exact = false;   ///< closed form (true) or sampled estimate (false)
};

/// Constants of a bounded coagulation kernel. Closed forms for the constant,
/// additive and multiplicative families; otherwise the sup over a dense
/// sampling that includes points just above the truncation threshold.
BoundedKernelParams bounded_params(const CoagKernel& k, double tail_beta);

}  // namespace bvcf
