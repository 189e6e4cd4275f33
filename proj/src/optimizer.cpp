#include "peh/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>

#include "peh/errors.hpp"
#include "peh/parallel.hpp"
#include "peh/response.hpp"

namespace peh {

ShapeParams ModelSettings::shape(double length, double length_ratio,
                                 double thickness_ratio) const {
  return ShapeParams(length, length_ratio, thickness_ratio, aspect_ratio, total_thickness_m);
}

DeviceModel ModelSettings::device(const ShapeParams& params) const {
  const DeviceDimensions dims = expand_shape(params);
  const NurbsPatch patch = build_patch(dims, degrees, elements);
  AssemblyOptions opts;
  opts.coupling_z_weight = coupling_z_weight;
  return assemble(patch, dims, materials, load_resistance_ohm, opts);
}

ReducedModel ModelSettings::reduce(const ShapeParams& params) const {
  return solve_modes(device(params), num_modes);
}

void PsoConfig::validate() const {
  if (swarm_size < 2) throw ValidationError("swarm size must be at least 2");
  if (max_iterations < 1) throw ValidationError("need at least one iteration");
  if (!(inertia > 0.0 && inertia < 1.0)) throw ValidationError("inertia must lie in (0,1)");
  if (!(cognitive > 0.0) || !(social > 0.0))
    throw ValidationError("velocity coefficients must be positive");
}

PsoRun pso_maximize(const std::function<double(const Eigen::VectorXd&)>& objective,
                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                    const PsoConfig& config) {
  config.validate();
  const int dim = static_cast<int>(lower.size());
  if (upper.size() != dim || ((upper - lower).array() <= 0.0).any())
    throw ArgumentError("bounds must satisfy lower < upper in every dimension");

  const int np = config.swarm_size;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::VectorXd range = upper - lower;

  std::vector<Eigen::VectorXd> x(np), v(np), pbest(np);
  std::vector<double> fitness(np), pbest_val(np, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < np; ++i) {
    x[i].resize(dim);
    v[i].resize(dim);
    for (int d = 0; d < dim; ++d) {
      x[i](d) = lower(d) + unit(rng) * range(d);
      v[i](d) = 0.2 * range(d) * (2.0 * unit(rng) - 1.0);
    }
    pbest[i] = x[i];  // stays valid even if every evaluation of particle i fails
  }

  PsoRun run;
  run.best_value = -std::numeric_limits<double>::infinity();
  std::mutex warn_mutex;

  auto evaluate_swarm = [&] {
    parallel_for(static_cast<std::size_t>(np), config.threads, [&](std::size_t i) {
      try {
        fitness[i] = objective(x[i]);
        if (std::isnan(fitness[i])) throw NumericError("objective returned NaN");
      } catch (const std::exception& e) {
        fitness[i] = -std::numeric_limits<double>::infinity();
        std::lock_guard<std::mutex> lock(warn_mutex);
        run.warnings.push_back("particle " + std::to_string(i) + " failed: " + e.what());
      }
    });
    run.evaluations += np;
    for (int i = 0; i < np; ++i) {
      if (fitness[i] > pbest_val[i]) {
        pbest_val[i] = fitness[i];
        pbest[i] = x[i];
      }
      if (fitness[i] > run.best_value) {
        run.best_value = fitness[i];
        run.best_position = x[i];
      }
    }
  };

  evaluate_swarm();
  run.trace.push_back(run.best_value);
  if (!run.best_position.size())
    throw NumericError("every particle of the initial swarm failed to evaluate");

  for (int it = 0; it < config.max_iterations; ++it) {
    for (int i = 0; i < np; ++i) {
      for (int d = 0; d < dim; ++d) {
        const double r1 = unit(rng), r2 = unit(rng);
        v[i](d) = config.inertia * v[i](d) +
                  config.cognitive * r1 * (pbest[i](d) - x[i](d)) +
                  config.social * r2 * (run.best_position(d) - x[i](d));
        x[i](d) += v[i](d);
        if (x[i](d) < lower(d)) {
          x[i](d) = lower(d);
          v[i](d) = 0.0;
        } else if (x[i](d) > upper(d)) {
          x[i](d) = upper(d);
          v[i](d) = 0.0;
        }
      }
    }
    evaluate_swarm();
    run.trace.push_back(run.best_value);

    const int lag = config.convergence_window;
    if (static_cast<int>(run.trace.size()) > lag) {
      const double now = run.trace.back();
      const double then = run.trace[run.trace.size() - 1 - lag];
      if (now - then < config.convergence_tol * std::max(std::abs(now), 1e-300)) break;
    }
  }
  return run;
}

namespace {

std::string make_window_id(const std::string& location, double start_s) {
  std::ostringstream os;
  os << location << "@" << start_s << "s";
  return os.str();
}

// Per-window seed from the base seed and the window content, so identical
// windows optimize identically regardless of their position in the plan.
std::uint64_t window_seed(std::uint64_t base, const AccelerationWindow& w) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  mix(&base, sizeof(base));
  mix(w.samples.data(), w.samples.size() * sizeof(double));
  return h;
}

}  // namespace

OptResult optimize(const AccelerationWindow& window, const PsoConfig& config,
                   const ModelSettings& settings) {
  window.validate();
  if (window.samples.empty()) throw ArgumentError("window is empty");

  const WindowSpectrum spec = window_spectrum(window);
  auto objective = [&](const Eigen::VectorXd& x) {
    const ShapeParams p = settings.shape(x(0), x(1), x(2));
    return energy_spectral(settings.reduce(p), spec);
  };

  Eigen::Vector3d lower(ShapeParams::kLengthLo, ShapeParams::kLenRatioLo,
                        ShapeParams::kThickRatioLo);
  Eigen::Vector3d upper(ShapeParams::kLengthHi, ShapeParams::kLenRatioHi,
                        ShapeParams::kThickRatioHi);
  PsoRun run = pso_maximize(objective, lower, upper, config);

  OptResult res;
  res.best = settings.shape(run.best_position(0), run.best_position(1), run.best_position(2));
  res.best_energy_joule = run.best_value;
  res.trace = std::move(run.trace);
  res.warnings = std::move(run.warnings);
  res.location_id = window.location_id;
  res.window_start_s = window.start_time_s;
  res.window_id = make_window_id(window.location_id, window.start_time_s);

  const ReducedModel best_model = settings.reduce(res.best);
  res.fundamental_frequency_hz = best_model.omega(0) / (2.0 * M_PI);
  res.best_energy_time_domain_joule = simulate(best_model, window).energy_joule;
  const double rel_gap =
      std::abs(res.best_energy_time_domain_joule - res.best_energy_joule) /
      std::max(res.best_energy_time_domain_joule, 1e-300);
  if (rel_gap > 0.10) {
    res.warnings.push_back("spectral surrogate deviates " +
                           std::to_string(100.0 * rel_gap) +
                           "% from the time-domain energy of the best design");
  }
  return res;
}

OptimizeAllResult optimize_all(std::vector<AccelerationWindow> windows,
                               const std::string& location_id, const PsoConfig& config,
                               const ModelSettings& settings, int threads) {
  OptimizeAllResult out;
  if (windows.empty()) return out;
  for (const auto& w : windows)
    if (w.location_id != location_id)
      throw ArgumentError("window location '" + w.location_id + "' does not match '" +
                          location_id + "'");
  std::stable_sort(windows.begin(), windows.end(),
                   [](const auto& a, const auto& b) { return a.start_time_s < b.start_time_s; });

  std::vector<OptResult> slots(windows.size());
  std::vector<std::string> errors(windows.size());
  parallel_for(windows.size(), threads, [&](std::size_t i) {
    PsoConfig per_window = config;
    per_window.seed = window_seed(config.seed, windows[i]);
    per_window.threads = 1;  // outer loop owns the parallelism
    try {
      slots[i] = optimize(windows[i], per_window, settings);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (errors[i].empty()) {
      out.results.push_back(std::move(slots[i]));
    } else {
      out.failures.push_back(make_window_id(location_id, windows[i].start_time_s) + ": " +
                             errors[i]);
    }
  }
  return out;
}

}  // namespace peh
