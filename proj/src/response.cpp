#include "peh/response.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <unsupported/Eigen/FFT>

#include "peh/errors.hpp"

namespace peh {

using Complex = std::complex<double>;
using json = nlohmann::ordered_json;

size_t FrfCurve::peak_index() const {
  if (values.empty()) throw ArgumentError("empty FRF");
  size_t best = 0;
  for (size_t i = 1; i < values.size(); ++i)
    if (std::abs(values[i]) > std::abs(values[best])) best = i;
  return best;
}

namespace {

// H_v(w) = i w G (sum_k theta_k f_k / D_k + T_f(w))
//          / (1 + i w G (sum_k theta_k^2 / D_k + T_t(w)))
// with D_k the modal denominators; equivalent to the rank-one-coupled matrix
// form by Sherman-Morrison. T(w) expands the truncated modes to second order,
//   T = S1 + w^2 S2 - i w (alpha S2 + beta S1),
// frozen above the retained band where the expansion stops being valid.
Complex frf_reduced_point(const ReducedModel& r, double omega, bool* pole) {
  if (omega == 0.0) return {0.0, 0.0};
  const Complex iw(0.0, omega);
  const Complex g = 1.0 / (1.0 / r.load_resistance_ohm + iw * r.capacitance_farad);
  const int k = r.num_modes();

  const double w_corr = std::min(omega, r.omega(k - 1));
  auto truncated = [&](double s1, double s2) {
    return Complex(s1 + w_corr * w_corr * s2,
                   -w_corr * (r.rayleigh.alpha * s2 + r.rayleigh.beta * s1));
  };
  Complex theta_dinv_f = truncated(r.static_force_residual, r.inertia_force_residual);
  Complex theta_dinv_u =
      iw * g * truncated(r.static_coupling_residual, r.inertia_coupling_residual);
  for (int i = 0; i < k; ++i) {
    const Complex d(r.omega(i) * r.omega(i) - omega * omega,
                    2.0 * r.zeta(i) * r.omega(i) * omega);
    if (d == Complex(0.0, 0.0)) {
      if (pole) *pole = true;
      return {std::numeric_limits<double>::infinity(), 0.0};
    }
    theta_dinv_f += r.coupling(i) * r.force(i) / d;
    theta_dinv_u += r.coupling(i) * (iw * g * r.coupling(i)) / d;
  }
  const Complex denom = 1.0 + theta_dinv_u;
  if (std::abs(denom) < 1e-300) {
    if (pole) *pole = true;
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  return iw * g * theta_dinv_f / denom;
}

}  // namespace

FrfCurve frf(const ReducedModel& reduced, const std::vector<double>& frequencies_hz) {
  FrfCurve out;
  out.frequencies_hz = frequencies_hz;
  out.values.resize(frequencies_hz.size());
  for (size_t i = 0; i < frequencies_hz.size(); ++i) {
    const double f = frequencies_hz[i];
    if (f < 0) throw ArgumentError("FRF grid must be non-negative");
    bool pole = false;
    out.values[i] = frf_reduced_point(reduced, 2.0 * M_PI * f, &pole);
    if (pole) out.pole_indices.push_back(static_cast<int>(i));
  }
  return out;
}

Complex frf_at(const ReducedModel& reduced, double frequency_hz) {
  return frf_reduced_point(reduced, 2.0 * M_PI * frequency_hz, nullptr);
}

FrfCurve frf_full(const DeviceModel& model, const std::vector<double>& frequencies_hz) {
  FrfCurve out;
  out.frequencies_hz = frequencies_hz;
  out.values.resize(frequencies_hz.size());
  const auto& d = model.materials.damping;
  const Eigen::MatrixXcd mc = model.mass_c.cast<Complex>();
  const Eigen::MatrixXcd kc = model.stiffness_c.cast<Complex>();
  const Eigen::VectorXcd theta = model.coupling_c.cast<Complex>();
  const Eigen::VectorXcd f = model.force_c.cast<Complex>();

  for (size_t i = 0; i < frequencies_hz.size(); ++i) {
    const double omega = 2.0 * M_PI * frequencies_hz[i];
    if (omega == 0.0) {
      out.values[i] = {0.0, 0.0};
      continue;
    }
    const Complex iw(0.0, omega);
    const Complex g = 1.0 / (1.0 / model.load_resistance_ohm + iw * model.capacitance_farad);
    Eigen::MatrixXcd a = -omega * omega * mc + iw * (d.alpha * mc + d.beta * kc) + kc;
    a.noalias() += (iw * g) * theta * theta.transpose();
    const Eigen::VectorXcd x = a.partialPivLu().solve(f);
    out.values[i] = iw * g * theta.dot(x);  // theta is real; adjoint == transpose
  }
  return out;
}

namespace {

// Dormand-Prince 4(5) tableau.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192, kB5 = -2187.0 / 6784,
                 kB6 = 11.0 / 84;
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

// Reduced electromechanical ODE over one sample interval, where the base
// acceleration is the linear segment a(t) = a0 + slope (t - t0). The
// truncated modes enter the voltage equation quasi-statically:
//   (C_p + S_tt) vdot + v / R_l + theta_o^T etadot + S_tf adot = 0.
struct ReducedOde {
  const ReducedModel& r;
  int k;
  double t0 = 0, a0 = 0, slope = 0;

  void set_segment(double start, double a_lo, double a_hi, double dt) {
    t0 = start;
    a0 = a_lo;
    slope = (a_hi - a_lo) / dt;
  }

  void operator()(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) const {
    const double ab = a0 + slope * (t - t0);
    const double v = y(2 * k);
    dy.head(k) = y.segment(k, k);
    for (int i = 0; i < k; ++i) {
      dy(k + i) = -r.omega(i) * r.omega(i) * y(i) -
                  2.0 * r.zeta(i) * r.omega(i) * y(k + i) + r.coupling(i) * v +
                  r.force(i) * ab;
    }
    double theta_etadot = 0.0;
    for (int i = 0; i < k; ++i) theta_etadot += r.coupling(i) * y(k + i);
    dy(2 * k) = (-v / r.load_resistance_ohm - theta_etadot -
                 r.static_force_residual * slope) /
                (r.capacitance_farad + r.static_coupling_residual);
  }
};

}  // namespace

SimResult simulate(const ReducedModel& reduced, const AccelerationWindow& accel,
                   const SimTolerances& tol) {
  accel.validate();
  const int k = reduced.num_modes();
  const size_t n = accel.samples.size();
  const double dt = 1.0 / accel.sample_rate_hz;

  SimResult res;
  res.sample_rate_hz = accel.sample_rate_hz;
  res.start_time_s = accel.start_time_s;
  res.voltage.assign(n, 0.0);
  if (n == 0) return res;

  const double f_top = reduced.omega(k - 1) / (2.0 * M_PI);
  if (accel.sample_rate_hz < 10.0 * f_top) {
    res.warnings.push_back("sample rate " + std::to_string(accel.sample_rate_hz) +
                           " Hz under-resolves the retained band (f_K = " +
                           std::to_string(f_top) + " Hz); interpolated forcing may alias");
  }

  ReducedOde ode{reduced, k};
  const int dim = 2 * k + 1;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), ytmp(dim),
      ynew(dim), yerr(dim);

  double t = accel.start_time_s;
  double h = dt;
  res.voltage[0] = 0.0;

  for (size_t s = 1; s < n; ++s) {
    const double t_end = accel.start_time_s + static_cast<double>(s) * dt;
    ode.set_segment(accel.start_time_s + static_cast<double>(s - 1) * dt, accel.samples[s - 1],
                    accel.samples[s], dt);
    // The forcing slope jumps between segments, so the FSAL derivative from
    // the previous step cannot be reused across the boundary.
    bool fsal_valid = false;
    while (t < t_end) {
      // Steps that aim at the segment boundary land on it exactly; the
      // controller step h is not shrunk by the boundary cap.
      const double remaining = t_end - t;
      const bool closing = h >= remaining;
      const double hs = closing ? remaining : h;
      if (!fsal_valid) ode(t, y, k1);

      ytmp = y + hs * kA21 * k1;
      ode(t + hs / 5.0, ytmp, k2);
      ytmp = y + hs * (kA31 * k1 + kA32 * k2);
      ode(t + 3.0 * hs / 10.0, ytmp, k3);
      ytmp = y + hs * (kA41 * k1 + kA42 * k2 + kA43 * k3);
      ode(t + 4.0 * hs / 5.0, ytmp, k4);
      ytmp = y + hs * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4);
      ode(t + 8.0 * hs / 9.0, ytmp, k5);
      ytmp = y + hs * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
      ode(t + hs, ytmp, k6);
      ynew = y + hs * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
      ode(t + hs, ynew, k7);
      yerr = hs * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);

      double err = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double scale = tol.abs + tol.rel * std::max(std::abs(y(i)), std::abs(ynew(i)));
        const double e = yerr(i) / scale;
        err += e * e;
      }
      err = std::sqrt(err / dim);

      const double factor =
          err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
      if (err <= 1.0) {
        t = closing ? t_end : t + hs;
        y.swap(ynew);
        k1.swap(k7);
        fsal_valid = true;
        if (!closing) h = hs * factor;
      } else {
        fsal_valid = false;
        h = hs * factor;
        if (h < 1e-13 * std::max(1.0, std::abs(t)))
          throw NumericError("integrator step size collapsed at t = " + std::to_string(t) +
                             " s (stiff system or inconsistent tolerances)");
      }
    }
    res.voltage[s] = y(2 * k);
  }

  res.energy_joule = voltage_energy(res.voltage, accel.sample_rate_hz, reduced.load_resistance_ohm);
  res.peak_voltage = 0.0;
  for (double v : res.voltage) res.peak_voltage = std::max(res.peak_voltage, std::abs(v));
  return res;
}

double voltage_energy(const std::vector<double>& voltage, double sample_rate_hz,
                      double load_resistance_ohm) {
  if (voltage.size() < 2) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i + 1 < voltage.size(); ++i)
    acc += 0.5 * (voltage[i] * voltage[i] + voltage[i + 1] * voltage[i + 1]);
  return acc / (sample_rate_hz * load_resistance_ohm);
}

WindowSpectrum window_spectrum(const AccelerationWindow& window) {
  window.validate();
  const size_t n = window.samples.size();
  if (n < 2) throw ArgumentError("window too short for a spectrum");

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> bins;
  std::vector<double> buf(window.samples.begin(), window.samples.end());
  fft.fwd(bins, buf);

  WindowSpectrum spec;
  spec.dt = 1.0 / window.sample_rate_hz;
  spec.n = n;
  const double df = window.sample_rate_hz / static_cast<double>(n);
  spec.frequencies_hz.resize(bins.size());
  spec.power.resize(bins.size());
  for (size_t kk = 0; kk < bins.size(); ++kk) {
    spec.frequencies_hz[kk] = df * static_cast<double>(kk);
    const bool edge = (kk == 0) || (n % 2 == 0 && kk == bins.size() - 1);
    spec.power[kk] = (edge ? 1.0 : 2.0) * std::norm(bins[kk]);
  }
  return spec;
}

double energy_spectral(const ReducedModel& reduced, const WindowSpectrum& spec) {
  double acc = 0.0;
  for (size_t kk = 1; kk < spec.frequencies_hz.size(); ++kk) {
    const Complex h = frf_reduced_point(reduced, 2.0 * M_PI * spec.frequencies_hz[kk], nullptr);
    acc += std::norm(h) * spec.power[kk];
  }
  return acc * spec.dt /
         (static_cast<double>(spec.n) * reduced.load_resistance_ohm);
}

double energy_spectral(const ReducedModel& reduced, const AccelerationWindow& window) {
  return energy_spectral(reduced, window_spectrum(window));
}

void write_sim_csv(const SimResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << "time_s,voltage_v\n";
  for (size_t i = 0; i < result.voltage.size(); ++i) {
    out << (result.start_time_s + static_cast<double>(i) / result.sample_rate_hz) << ','
        << result.voltage[i] << '\n';
  }
}

std::string sim_summary_json(const SimResult& result, const std::string& design_hash,
                             const std::string& window_id) {
  json j;
  j["design_hash"] = design_hash;
  j["window_id"] = window_id;
  j["energy_joule"] = result.energy_joule;
  j["peak_voltage"] = result.peak_voltage;
  j["samples"] = result.voltage.size();
  j["sample_rate_hz"] = result.sample_rate_hz;
  return j.dump(2);
}

}  // namespace peh
