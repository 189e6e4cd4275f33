#include "peh/excitation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <unsupported/Eigen/FFT>

#include "peh/errors.hpp"

namespace peh {

using json = nlohmann::ordered_json;

void AccelerationWindow::validate() const {
  if (!(sample_rate_hz > 0)) throw ValidationError("sample rate must be positive");
  for (size_t i = 0; i < samples.size(); ++i)
    if (!std::isfinite(samples[i]))
      throw DataError("non-finite acceleration sample", static_cast<long>(i));
}

double BridgeModel::mode_shape(int mode, double position_m) const {
  return std::sin((mode + 1) * M_PI * position_m / span_m);
}

double BridgeModel::mode_ordinate(int mode, const std::string& sensor) const {
  if (auto it = mode_table.find(sensor); it != mode_table.end()) {
    if (mode >= static_cast<int>(it->second.size()))
      throw ArgumentError("mode table for sensor '" + sensor + "' has too few modes");
    return it->second[mode];
  }
  auto it = sensors.find(sensor);
  if (it == sensors.end()) throw ArgumentError("unknown sensor location '" + sensor + "'");
  return mode_shape(mode, it->second);
}

void BridgeModel::validate() const {
  if (!(span_m > 0)) throw ValidationError("bridge span must be positive");
  if (modal_frequencies_hz.size() < 1) throw ValidationError("bridge needs at least one mode");
  if (!std::is_sorted(modal_frequencies_hz.begin(), modal_frequencies_hz.end()))
    throw ValidationError("bridge modal frequencies must ascend");
  if (modal_damping.size() != modal_frequencies_hz.size())
    throw ValidationError("one damping ratio per bridge mode required");
  for (const auto& [name, tab] : mode_table)
    for (double v : tab)
      if (std::abs(v) > 1.0 + 1e-12)
        throw ValidationError("mode ordinate for '" + name + "' exceeds 1 after normalization");
}

BridgeModel BridgeModel::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("bridge document: ") + e.what());
  }
  BridgeModel b;
  if (j.contains("span_m")) b.span_m = j["span_m"].get<double>();
  if (j.contains("modal_frequencies_hz"))
    b.modal_frequencies_hz = j["modal_frequencies_hz"].get<std::vector<double>>();
  if (j.contains("modal_damping")) b.modal_damping = j["modal_damping"].get<std::vector<double>>();
  while (b.modal_damping.size() < b.modal_frequencies_hz.size())
    b.modal_damping.push_back(b.modal_damping.empty() ? 0.02 : b.modal_damping.back());
  if (j.contains("modal_mass_kg")) b.modal_mass_kg = j["modal_mass_kg"].get<double>();
  if (j.contains("sensors"))
    for (auto& [k, v] : j["sensors"].items()) b.sensors[k] = v.get<double>();
  if (j.contains("mode_table"))
    for (auto& [k, v] : j["mode_table"].items()) b.mode_table[k] = v.get<std::vector<double>>();
  b.validate();
  return b;
}

std::string BridgeModel::to_json() const {
  json j;
  j["span_m"] = span_m;
  j["modal_frequencies_hz"] = modal_frequencies_hz;
  j["modal_damping"] = modal_damping;
  j["modal_mass_kg"] = modal_mass_kg;
  j["sensors"] = json::object();
  for (const auto& [k, v] : sensors) j["sensors"][k] = v;
  if (!mode_table.empty()) {
    j["mode_table"] = json::object();
    for (const auto& [k, v] : mode_table) j["mode_table"][k] = v;
  }
  return j.dump(2);
}

double TrafficSpec::truck_share() const {
  return std::clamp(truck_share_base + truck_share_per_rate * arrival_rate_per_hour, 0.0, 0.8);
}

void TrafficSpec::validate() const {
  if (arrival_rate_per_hour < 0) throw ValidationError("arrival rate must be non-negative");
  if (!(speed_range_mps[0] > 0) || speed_range_mps[1] < speed_range_mps[0])
    throw ValidationError("speed range must be positive and ordered");
  if (!(load_range_n[0] > 0) || load_range_n[1] < load_range_n[0])
    throw ValidationError("load range must be positive and ordered");
}

TrafficSpec TrafficSpec::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("traffic document: ") + e.what());
  }
  TrafficSpec t;
  auto get = [&](const char* key, auto& field) {
    using T = std::remove_reference_t<decltype(field)>;
    if (j.contains(key)) field = j[key].get<T>();
  };
  get("arrival_rate_per_hour", t.arrival_rate_per_hour);
  get("speed_range_mps", t.speed_range_mps);
  get("load_range_n", t.load_range_n);
  get("seed", t.seed);
  get("noise_rms", t.noise_rms);
  get("bounce_ratio", t.bounce_ratio);
  get("car_bounce_hz", t.car_bounce_hz);
  get("truck_bounce_hz", t.truck_bounce_hz);
  get("truck_share_base", t.truck_share_base);
  get("truck_share_per_rate", t.truck_share_per_rate);
  get("truck_load_factor", t.truck_load_factor);
  t.validate();
  return t;
}

std::string TrafficSpec::to_json() const {
  json j;
  j["arrival_rate_per_hour"] = arrival_rate_per_hour;
  j["speed_range_mps"] = speed_range_mps;
  j["load_range_n"] = load_range_n;
  j["seed"] = seed;
  j["noise_rms"] = noise_rms;
  j["bounce_ratio"] = bounce_ratio;
  j["car_bounce_hz"] = car_bounce_hz;
  j["truck_bounce_hz"] = truck_bounce_hz;
  j["truck_share_base"] = truck_share_base;
  j["truck_share_per_rate"] = truck_share_per_rate;
  j["truck_load_factor"] = truck_load_factor;
  return j.dump(2);
}

const char* to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::kLow: return "Low";
    case TrafficClass::kMedium: return "Medium";
    case TrafficClass::kHigh: return "High";
  }
  return "?";
}

namespace {

std::vector<AccelerationWindow> cut_windows(std::vector<double> samples, double rate,
                                            const std::string& location_id, double window_s,
                                            std::vector<std::string>* warnings) {
  const auto per_window = static_cast<size_t>(std::llround(window_s * rate));
  if (per_window == 0) throw ArgumentError("window duration too short for the sample rate");
  std::vector<AccelerationWindow> out;
  size_t pos = 0;
  while (pos + per_window <= samples.size()) {
    AccelerationWindow w;
    w.samples.assign(samples.begin() + pos, samples.begin() + pos + per_window);
    w.sample_rate_hz = rate;
    w.location_id = location_id;
    w.start_time_s = static_cast<double>(pos) / rate;
    out.push_back(std::move(w));
    pos += per_window;
  }
  if (out.empty() && warnings)
    warnings->push_back("record shorter than one window; no windows produced");
  else if (pos < samples.size() && warnings)
    warnings->push_back("partial trailing window discarded");
  return out;
}

}  // namespace

std::vector<AccelerationWindow> ingest_csv(const std::string& path, const std::string& location_id,
                                           double window_s, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header)) throw FormatError("empty file '" + path + "'");
  while (!header.empty() && (header.back() == '\r' || header.back() == '\n')) header.pop_back();

  std::vector<double> samples;
  double rate = 0.0;
  std::string line;
  long row = 1;  // header consumed

  auto parse_cell = [&](const std::string& cell) {
    try {
      size_t used = 0;
      const double v = std::stod(cell, &used);
      return v;
    } catch (const std::exception&) {
      throw DataError("unparseable value '" + cell + "' at row " + std::to_string(row), row);
    }
  };

  if (header.rfind("sample_rate_hz", 0) == 0) {
    const auto comma = header.find(',');
    if (comma == std::string::npos) throw FormatError("sample_rate_hz line missing value");
    rate = std::stod(header.substr(comma + 1));
    if (!(rate > 0)) throw FormatError("sample rate must be positive");
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const double v = parse_cell(line);
      if (!std::isfinite(v))
        throw DataError("non-finite acceleration at row " + std::to_string(row), row);
      samples.push_back(v);
    }
  } else if (header == "time_s,accel_ms2") {
    std::vector<double> times;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos)
        throw FormatError("row " + std::to_string(row) + " is not 'time,accel'");
      const double t = parse_cell(line.substr(0, comma));
      const double v = parse_cell(line.substr(comma + 1));
      if (!std::isfinite(v))
        throw DataError("non-finite acceleration at row " + std::to_string(row), row);
      if (!times.empty() && t <= times.back())
        throw FormatError("time must increase at row " + std::to_string(row));
      times.push_back(t);
      samples.push_back(v);
    }
    if (times.size() < 2) throw FormatError("need at least two samples to infer the rate");
    const double dt = (times.back() - times.front()) / (static_cast<double>(times.size()) - 1);
    for (size_t i = 1; i < times.size(); ++i)
      if (std::abs((times[i] - times[i - 1]) - dt) > 1e-6)
        throw FormatError("non-uniform sampling near row " + std::to_string(i + 2));
    rate = 1.0 / dt;
  } else {
    throw FormatError("unrecognized header '" + header + "'");
  }

  return cut_windows(std::move(samples), rate, location_id, window_s, warnings);
}

namespace {

// Exact discrete update of a damped oscillator under piecewise-linear forcing.
struct OscillatorStepper {
  double omega, two_zeta_omega;
  Eigen::Matrix2d e;        // state transition over dt
  Eigen::Matrix2d phi0;     // weight of f_n
  Eigen::Matrix2d phi1;     // weight of f_{n+1}

  OscillatorStepper(double freq_hz, double zeta, double dt) {
    omega = 2.0 * M_PI * freq_hz;
    two_zeta_omega = 2.0 * zeta * omega;
    const double wd = omega * std::sqrt(1.0 - zeta * zeta);
    const double ex = std::exp(-zeta * omega * dt);
    const double c = std::cos(wd * dt), s = std::sin(wd * dt);
    e << ex * (c + zeta * omega * s / wd), ex * s / wd,
        -ex * omega * omega * s / wd, ex * (c - zeta * omega * s / wd);

    Eigen::Matrix2d a;
    a << 0.0, 1.0, -omega * omega, -two_zeta_omega;
    const Eigen::Matrix2d ainv = a.inverse();
    const Eigen::Matrix2d i0 = ainv * (e - Eigen::Matrix2d::Identity());
    const Eigen::Matrix2d i1 =
        i0 - ainv * e + (1.0 / dt) * ainv * ainv * (e - Eigen::Matrix2d::Identity());
    phi0 = i0 - i1;
    phi1 = i1;
  }
};

}  // namespace

SynthesisResult synthesize_detailed(const BridgeModel& bridge, const TrafficSpec& traffic,
                                    const std::string& location_id, double duration_s,
                                    double sample_rate_hz) {
  bridge.validate();
  traffic.validate();
  if (!(duration_s > 0) || !(sample_rate_hz > 0))
    throw ArgumentError("duration and sample rate must be positive");
  // Resolves the ordinate early so unknown sensors fail fast.
  (void)bridge.mode_ordinate(0, location_id);

  const auto n = static_cast<size_t>(std::llround(duration_s * sample_rate_hz));
  const double dt = 1.0 / sample_rate_hz;
  const int nm = bridge.num_modes();

  std::mt19937_64 rng(traffic.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Poisson arrivals with per-vehicle draws in arrival order.
  std::poisson_distribution<int> pois(traffic.arrival_rate_per_hour * duration_s / 3600.0);
  const int n_vehicles = traffic.arrival_rate_per_hour > 0 ? pois(rng) : 0;

  struct Vehicle {
    double t0, speed, load, bounce_hz, bounce_phase;
  };
  std::vector<Vehicle> vehicles(n_vehicles);
  const double share = traffic.truck_share();
  for (auto& v : vehicles) {
    v.t0 = unit(rng) * duration_s;
    v.speed = traffic.speed_range_mps[0] +
              unit(rng) * (traffic.speed_range_mps[1] - traffic.speed_range_mps[0]);
    const bool truck = unit(rng) < share;
    const double base_load =
        traffic.load_range_n[0] + unit(rng) * (traffic.load_range_n[1] - traffic.load_range_n[0]);
    v.load = truck ? base_load * traffic.truck_load_factor : base_load;
    const auto& band = truck ? traffic.truck_bounce_hz : traffic.car_bounce_hz;
    v.bounce_hz = band[0] + unit(rng) * (band[1] - band[0]);
    v.bounce_phase = unit(rng) * 2.0 * M_PI;
  }
  std::sort(vehicles.begin(), vehicles.end(),
            [](const Vehicle& a, const Vehicle& b) { return a.t0 < b.t0; });

  // Modal force per sample: moving point load with a suspension-bounce
  // component, shaped by the mode along the crossing path.
  std::vector<std::vector<double>> modal_force(nm, std::vector<double>(n + 1, 0.0));
  for (const auto& v : vehicles) {
    const double crossing = bridge.span_m / v.speed;
    const auto i0 = static_cast<size_t>(std::max(0.0, std::ceil(v.t0 / dt)));
    const auto i1 =
        std::min(n, static_cast<size_t>(std::max(0.0, std::floor((v.t0 + crossing) / dt))));
    for (size_t i = i0; i <= i1; ++i) {
      const double tau = i * dt - v.t0;
      const double pos = v.speed * tau;
      const double load =
          v.load * (1.0 + traffic.bounce_ratio *
                              std::sin(2.0 * M_PI * v.bounce_hz * tau + v.bounce_phase));
      for (int m = 0; m < nm; ++m)
        modal_force[m][i] += load * bridge.mode_shape(m, pos);
    }
  }

  // Integrate each modal oscillator exactly for the sampled (piecewise-linear)
  // force and superpose sensor accelerations.
  std::vector<double> accel(n, 0.0);
  for (int m = 0; m < nm; ++m) {
    const double ord = bridge.mode_ordinate(m, location_id);
    OscillatorStepper st(bridge.modal_frequencies_hz[m], bridge.modal_damping[m], dt);
    Eigen::Vector2d state = Eigen::Vector2d::Zero();
    const double inv_mass = 1.0 / bridge.modal_mass_kg;
    for (size_t i = 0; i < n; ++i) {
      const double f = modal_force[m][i] * inv_mass;
      const double qdd = f - st.two_zeta_omega * state(1) - st.omega * st.omega * state(0);
      accel[i] += ord * qdd;
      const double f1 = modal_force[m][i + 1] * inv_mass;
      state = st.e * state + st.phi0 * Eigen::Vector2d(0.0, f) + st.phi1 * Eigen::Vector2d(0.0, f1);
    }
  }

  if (traffic.noise_rms > 0) {
    std::normal_distribution<double> noise(0.0, traffic.noise_rms);
    for (auto& a : accel) a += noise(rng);
  }

  SynthesisResult res;
  res.window.samples = std::move(accel);
  res.window.sample_rate_hz = sample_rate_hz;
  res.window.location_id = location_id;
  res.vehicle_count = n_vehicles;
  res.arrival_times_s.reserve(vehicles.size());
  for (const auto& v : vehicles) res.arrival_times_s.push_back(v.t0);
  return res;
}

AccelerationWindow synthesize(const BridgeModel& bridge, const TrafficSpec& traffic,
                              const std::string& location_id, double duration_s,
                              double sample_rate_hz) {
  return synthesize_detailed(bridge, traffic, location_id, duration_s, sample_rate_hz).window;
}

int count_vehicles(const AccelerationWindow& window, double threshold, double merge_gap_s) {
  const auto gap = static_cast<size_t>(std::llround(merge_gap_s * window.sample_rate_hz));
  int count = 0;
  bool active = false;
  size_t last_exceed = 0;
  for (size_t i = 0; i < window.samples.size(); ++i) {
    if (std::abs(window.samples[i]) > threshold) {
      if (!active) {
        if (count == 0 || i - last_exceed > gap) ++count;
        active = true;
      }
      last_exceed = i;
    } else if (active && i - last_exceed > gap) {
      active = false;
    }
  }
  return count;
}

TrafficClass classify_traffic(double vehicles_per_hour) {
  if (vehicles_per_hour < 0) throw ArgumentError("vehicle count must be non-negative");
  if (vehicles_per_hour <= 10.0) return TrafficClass::kLow;
  if (vehicles_per_hour <= 20.0) return TrafficClass::kMedium;
  return TrafficClass::kHigh;
}

double Spectrum::amplitude_near(double freq_hz) const {
  if (frequencies_hz.empty()) throw ArgumentError("empty spectrum");
  const auto it = std::lower_bound(frequencies_hz.begin(), frequencies_hz.end(), freq_hz);
  size_t idx = static_cast<size_t>(it - frequencies_hz.begin());
  if (idx == frequencies_hz.size()) return amplitude.back();
  if (idx > 0 && freq_hz - frequencies_hz[idx - 1] < frequencies_hz[idx] - freq_hz) --idx;
  return amplitude[idx];
}

Spectrum spectrum(const AccelerationWindow& window) {
  const size_t n = window.samples.size();
  if (n < 2) throw ArgumentError("need at least 2 samples for a spectrum");

  std::vector<double> windowed(n);
  double wsum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));  // periodic Hann
    windowed[i] = window.samples[i] * w;
    wsum += w;
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  fft.fwd(freq, windowed);

  Spectrum s;
  const size_t half = freq.size();
  s.frequencies_hz.resize(half);
  s.amplitude.resize(half);
  const double df = window.sample_rate_hz / static_cast<double>(n);
  for (size_t k = 0; k < half; ++k) {
    s.frequencies_hz[k] = df * static_cast<double>(k);
    const bool edge = (k == 0) || (n % 2 == 0 && k == half - 1);
    s.amplitude[k] = (edge ? 1.0 : 2.0) * std::abs(freq[k]) / wsum;
  }
  return s;
}

}  // namespace peh
