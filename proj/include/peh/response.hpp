#pragma once

#include <complex>
#include <string>
#include <vector>

#include "peh/excitation.hpp"
#include "peh/femodel.hpp"
#include "peh/modal.hpp"

namespace peh {

/// Voltage-per-acceleration frequency response sampled on a grid.
struct FrfCurve {
  std::vector<double> frequencies_hz;
  std::vector<std::complex<double>> values;  // [V / (m/s^2)]
  std::vector<int> pole_indices;             // grid points where the response is singular

  double magnitude(size_t i) const { return std::abs(values[i]); }
  /// Grid point of maximum magnitude.
  size_t peak_index() const;
  double peak_frequency_hz() const { return frequencies_hz[peak_index()]; }
  double peak_magnitude() const { return std::abs(values[peak_index()]); }
};

/// Voltage FRF of the reduced system. The inner matrix is diagonal plus a
/// rank-one electromechanical term, solved in O(K) per frequency.
FrfCurve frf(const ReducedModel& reduced, const std::vector<double>& frequencies_hz);

std::complex<double> frf_at(const ReducedModel& reduced, double frequency_hz);

/// Voltage FRF of the full (unreduced) clamped system via dense complex
/// solves; the independent route used to validate the modal reduction.
FrfCurve frf_full(const DeviceModel& model, const std::vector<double>& frequencies_hz);

struct SimResult {
  std::vector<double> voltage;  // on the input sample grid [V]
  double sample_rate_hz = 0;
  double start_time_s = 0;
  double energy_joule = 0;  // dissipated in the load resistor
  double peak_voltage = 0;
  std::vector<std::string> warnings;
};

struct SimTolerances {
  double rel = 1e-6;
  double abs = 1e-9;
};

/// Integrates the reduced electromechanical ODEs under the window's base
/// acceleration (linearly interpolated) with an adaptive Dormand-Prince 4(5)
/// scheme, from zero initial conditions.
SimResult simulate(const ReducedModel& reduced, const AccelerationWindow& accel,
                   const SimTolerances& tol = {});

/// Load-resistor energy of a voltage trace (trapezoid rule).
double voltage_energy(const std::vector<double>& voltage, double sample_rate_hz,
                      double load_resistance_ohm);

/// Cached squared window spectrum for repeated spectral-energy evaluation.
struct WindowSpectrum {
  std::vector<double> frequencies_hz;  // rfft bins
  std::vector<double> power;           // |A_k|^2 with two-sided multiplicity folded in
  double dt = 0;
  size_t n = 0;
};

WindowSpectrum window_spectrum(const AccelerationWindow& window);

/// Steady-state harvested energy via the discrete Parseval identity; the fast
/// objective surrogate used inside optimization loops.
double energy_spectral(const ReducedModel& reduced, const WindowSpectrum& spec);
double energy_spectral(const ReducedModel& reduced, const AccelerationWindow& window);

/// time,voltage rows.
void write_sim_csv(const SimResult& result, const std::string& path);
/// Energy/peak summary with provenance tags.
std::string sim_summary_json(const SimResult& result, const std::string& design_hash,
                             const std::string& window_id);

}  // namespace peh
