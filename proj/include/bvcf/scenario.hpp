#pragma once

#include "bvcf/boundary.hpp"
#include "bvcf/operators.hpp"
#include "bvcf/solver.hpp"
#include "bvcf/state.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bvcf {

struct DecayFitSpec {
  double lambda = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  bool polynomial = false;
};

struct AnalysisToggles {
  bool entropy = false;
  /// D1 reads f at merge points by log-linear interpolation instead of the
  /// containing cell.
  bool interpolated_lookup = false;
  bool residual_battery = false;
  std::optional<DecayFitSpec> decay_fit;
  bool negative_moment = false;
};

/// A fully resolved scenario. `resolved` is the input tree with every default
/// filled in; it is what the run manifest records.
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  Problem problem;
  StateMeasure initial;
  SolverConfig solver;
  AnalysisToggles analysis;
  /// Output checkpoints for compare-oracle.
  std::vector<double> checkpoints;
  /// Detailed-balance profile behind a derived fragmentation kernel.
  std::optional<PowerExpProfile> profile;
  /// Untruncated kernel before the optional truncation.
  CoagKernel full_kernel = CoagKernel::constant(0.0);
  nlohmann::json resolved;
  std::filesystem::path base_dir;
};

/// Parses a scenario tree; relative paths resolve against base_dir. Throws
/// ConfigError on anything malformed or inconsistent.
Scenario parse_scenario(const nlohmann::json& tree, const std::filesystem::path& base_dir = ".");
Scenario load_scenario(const std::filesystem::path& path);

/// Re-derives the scenario after edits to `resolved` (seed, stride overrides).
Scenario reparse(const Scenario& s);

CoagKernel parse_coag_kernel(const nlohmann::json& spec, const std::filesystem::path& base_dir, nlohmann::json& resolved);
FragKernel parse_frag_kernel(const nlohmann::json& spec, const CoagKernel& coag, const std::filesystem::path& base_dir,
                             nlohmann::json& resolved, std::optional<PowerExpProfile>* profile = nullptr);
BoundaryDatum parse_boundary(const nlohmann::json& spec, const std::filesystem::path& base_dir, nlohmann::json& resolved);
GridPtr parse_grid(const nlohmann::json& spec, nlohmann::json& resolved);

/// Profile Q on the pivots for entropy analysis: the detailed-balance profile
/// when given, else f_inf (which must pass the spread check).
Eigen::VectorXd entropy_profile(const Scenario& s);

}  // namespace bvcf
