#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "peh/excitation.hpp"
#include "peh/femodel.hpp"
#include "peh/geometry.hpp"
#include "peh/modal.hpp"

namespace peh {

/// Everything needed to turn a design vector into a reduced model.
struct ModelSettings {
  std::pair<int, int> degrees = {3, 3};
  std::pair<int, int> elements = {8, 8};
  int num_modes = 5;
  double load_resistance_ohm = 1000.0;
  double aspect_ratio = 1.0;      // square devices; R barely moves the tuning
  double total_thickness_m = 1e-3;
  MaterialSet materials = MaterialSet::bronze_pzt5a();
  CouplingZWeight coupling_z_weight = CouplingZWeight::kFirstMoment;

  ShapeParams shape(double length, double length_ratio, double thickness_ratio) const;
  DeviceModel device(const ShapeParams& params) const;
  ReducedModel reduce(const ShapeParams& params) const;
};

enum class BoundHandling { kClamp };

struct PsoConfig {
  int swarm_size = 20;
  int max_iterations = 50;
  double inertia = 0.72;
  double cognitive = 1.49;  // c1
  double social = 1.49;     // c2
  BoundHandling bound_handling = BoundHandling::kClamp;
  double convergence_tol = 1e-4;  // relative best-value improvement
  int convergence_window = 10;    // iterations without improvement before stopping
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

/// Result of a swarm run on a bounded continuous space.
struct PsoRun {
  Eigen::VectorXd best_position;
  double best_value = 0;
  std::vector<double> trace;  // best-so-far per iteration (index 0 = initial swarm)
  int evaluations = 0;
  std::vector<std::string> warnings;
};

/// Plain bounded PSO maximization with clamped bound handling. Failed
/// objective evaluations score -inf and are logged, never abort the swarm.
/// Deterministic under a fixed seed regardless of thread count.
PsoRun pso_maximize(const std::function<double(const Eigen::VectorXd&)>& objective,
                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                    const PsoConfig& config);

struct OptResult {
  ShapeParams best;
  double best_energy_joule = 0;             // spectral surrogate used in search
  double best_energy_time_domain_joule = 0; // re-scored with full integration
  double fundamental_frequency_hz = 0;
  std::vector<double> trace;
  std::string window_id;
  std::string location_id;
  double window_start_s = 0;
  std::vector<std::string> warnings;
};

/// Maximizes spectral harvested energy over x = [L, l, H] for one window.
OptResult optimize(const AccelerationWindow& window, const PsoConfig& config,
                   const ModelSettings& settings);

struct OptimizeAllResult {
  std::vector<OptResult> results;  // ordered by window start time
  std::vector<std::string> failures;
};

/// One optimization per window (seeded per window index); windows run
/// concurrently across `threads`.
OptimizeAllResult optimize_all(std::vector<AccelerationWindow> windows,
                               const std::string& location_id, const PsoConfig& config,
                               const ModelSettings& settings, int threads = 1);

}  // namespace peh
