#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace peh {

/// Uniformly sampled base-acceleration record.
struct AccelerationWindow {
  std::vector<double> samples;  // [m/s^2]
  double sample_rate_hz = 0;
  std::string location_id;
  double start_time_s = 0;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
  void validate() const;
};

/// Modal description of the host bridge deck: span, measured bending-mode
/// frequencies, damping, and mode-shape ordinates per sensor.
struct BridgeModel {
  double span_m = 46.0;
  std::vector<double> modal_frequencies_hz = {2.01, 3.51};
  std::vector<double> modal_damping = {0.02, 0.02};
  double modal_mass_kg = 50e3;

  /// Sensor positions along the span [m].
  std::map<std::string, double> sensors;

  /// Optional per-sensor, per-mode ordinate override; when absent the default
  /// sinusoidal shapes sin((m+1) pi x / span) are sampled at the sensor.
  std::map<std::string, std::vector<double>> mode_table;

  double mode_shape(int mode, double position_m) const;
  double mode_ordinate(int mode, const std::string& sensor) const;
  int num_modes() const { return static_cast<int>(modal_frequencies_hz.size()); }
  void validate() const;

  static BridgeModel from_json(const std::string& json_text);
  std::string to_json() const;
};

/// Synthetic traffic plan. Vehicles arrive as a Poisson process; each crossing
/// is a moving point load with a suspension-bounce component. The heavy-vehicle
/// share grows with the arrival rate, which shifts excitation toward the
/// second deck mode at high volumes (the rate itself leaves per-vehicle
/// statistics unchanged otherwise).
struct TrafficSpec {
  double arrival_rate_per_hour = 10.0;
  std::array<double, 2> speed_range_mps = {8.0, 20.0};
  std::array<double, 2> load_range_n = {8e3, 25e3};
  std::uint64_t seed = 0;

  double noise_rms = 0.005;            // measurement noise [m/s^2]
  double bounce_ratio = 0.7;           // dynamic axle force / static load
  std::array<double, 2> car_bounce_hz = {1.7, 2.3};
  std::array<double, 2> truck_bounce_hz = {3.2, 3.9};
  double truck_share_base = 0.05;      // heavy-vehicle share at zero volume
  double truck_share_per_rate = 0.015; // share increase per vehicle/hour
  double truck_load_factor = 3.0;

  double truck_share() const;
  void validate() const;

  static TrafficSpec from_json(const std::string& json_text);
  std::string to_json() const;
};

enum class TrafficClass { kLow, kMedium, kHigh };

const char* to_string(TrafficClass c);

/// Reads acceleration CSVs. Two layouts are accepted: `time_s,accel_ms2`
/// rows (rate inferred, jitter checked) or a `sample_rate_hz,<rate>` first
/// line followed by one sample per row. Complete windows of `window_s`
/// seconds are returned; a partial tail is dropped with a warning.
std::vector<AccelerationWindow> ingest_csv(const std::string& path,
                                           const std::string& location_id,
                                           double window_s = 3600.0,
                                           std::vector<std::string>* warnings = nullptr);

struct SynthesisResult {
  AccelerationWindow window;
  int vehicle_count = 0;
  std::vector<double> arrival_times_s;
};

/// Simulates the sensor acceleration at `location_id` under Poisson traffic.
/// Deterministic under a fixed TrafficSpec::seed.
SynthesisResult synthesize_detailed(const BridgeModel& bridge, const TrafficSpec& traffic,
                                    const std::string& location_id, double duration_s,
                                    double sample_rate_hz);

AccelerationWindow synthesize(const BridgeModel& bridge, const TrafficSpec& traffic,
                              const std::string& location_id, double duration_s,
                              double sample_rate_hz);

/// Counts burst groups exceeding `threshold`; excursions closer than
/// `merge_gap_s` merge into one vehicle.
int count_vehicles(const AccelerationWindow& window, double threshold = 0.2,
                   double merge_gap_s = 2.0);

/// Low for [0,10] vehicles/h, Medium for (10,20], High above 20.
TrafficClass classify_traffic(double vehicles_per_hour);

struct Spectrum {
  std::vector<double> frequencies_hz;
  std::vector<double> amplitude;  // a unit-amplitude tone reads 1.0 at its bin

  /// Amplitude at the bin nearest `freq_hz`.
  double amplitude_near(double freq_hz) const;
};

/// One-sided Hann-windowed amplitude spectrum.
Spectrum spectrum(const AccelerationWindow& window);

}  // namespace peh
