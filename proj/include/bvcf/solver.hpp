#pragma once

#include "bvcf/operators.hpp"
#include "bvcf/state.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace bvcf {

enum class Scheme { Euler, Heun };
const char* to_string(Scheme s);

struct SolverConfig {
  Scheme scheme = Scheme::Heun;
  double t0 = 0.0;  ///< start time (the run covers [t0, T])
  double T = 1.0;
  double dt_max = 1e-2;
  /// Positivity safety factor sigma in (0,1].
  double safety = 0.9;
  /// Keep every k-th accepted step as a snapshot (the last state is always kept).
  int snapshot_stride = 1;
  /// Order alpha of the m_{-alpha} diagnostic column.
  double neg_alpha = 0.5;
  /// Track the weak residual of phi(x) = x along the run.
  bool residual_phi1 = true;

  void validate() const;
};

struct StepOutcome {
  bool accepted = false;
  StateMeasure state;
  RhsBreakdown start_rates;   ///< breakdown at the start of the step
  double exited_mass = 0.0;   ///< mass carried beyond 1 during the step
  double bound = 0.0;         ///< positivity bound that was checked (smallest stage)
  int limiting_cell = -1;     ///< cell attaining the bound (n = atom)
};

/// sigma * min over entries with negative rate of value / |rate|
/// (+infinity when no entry decreases). Writes the minimizing cell.
double positivity_bound(const StateMeasure& s, const Rates& r, double sigma, int* cell = nullptr);

/// One explicit step. Rejected (accepted = false) when dt exceeds the
/// positivity bound of any stage; the state is then left untouched.
StepOutcome step(const StateMeasure& s, const RhsTables& tables, double t, double dt, Scheme scheme,
                 double sigma);

/// Called with each new diagnostics record and the state it describes.
using Observer = std::function<void(DiagnosticsRecord&, const StateMeasure&)>;

/// Integrates to config.T with dt <= dt_max, halving on positivity rejection
/// and growing back by 2x after acceptance. Throws StiffnessError once dt
/// would drop below dt_max / 2^20.
Trajectory run(const StateMeasure& initial, const RhsTables& tables, const SolverConfig& config,
               const Observer& observer = {});

struct ContractionInputs {
  double mu_in = 0.0;  ///< total variation of the initial measure
  double K_inf = 0.0;
  double K_beta = 0.0;
  double M_beta = 0.0;   ///< uniform bound of M_beta
  double M_gamma = 0.0;  ///< uniform bound of M_gamma
  double F0 = 0.0;
  double gamma = 0.0;
  double T = 1.0;
};

struct ContractionParams {
  ContractionInputs inputs;
  double R = 0.0;
  double tau1 = 0.0;  ///< horizon keeping the ball of radius R invariant
  double tau2 = 0.0;  ///< horizon making the map a strict contraction
  double tau = 0.0;   ///< 0.99 min(tau1, tau2)
  double lipschitz = 0.0;  ///< (6 K_inf + K_beta M_beta + 3 F0) tau
};

ContractionParams contraction_params(const ContractionInputs& in);

struct PicardResult {
  Trajectory trajectory;          ///< final iterate on the time grid
  std::vector<double> distances;  ///< sup-in-time TV distance of successive iterates
  int iterations = 0;
  bool converged = false;
  double min_entry = 0.0;         ///< most negative entry of the final iterate
};

/// Fixed-point iteration mu <- mu_in + integral_0^t rhs(mu_s) ds on a uniform
/// grid of n_steps intervals over [0, tau], trapezoid in time. Refuses
/// (ConfigError) when tau exceeds limit->tau. A final iterate dipping below
/// -1e-8 throws DomainError.
PicardResult picard_run(const StateMeasure& initial, const RhsTables& tables, double tau, int n_steps,
                        int max_iter, const ContractionParams* limit = nullptr, double tol = 1e-10);

/// sup over common snapshot times of the total-variation distance.
double sup_tv_distance(const Trajectory& a, const Trajectory& b);
double tv_distance(const StateMeasure& a, const StateMeasure& b);

}  // namespace bvcf
