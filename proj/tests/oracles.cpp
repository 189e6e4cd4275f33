#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "peh/geometry.hpp"
#include "peh/parallel.hpp"

namespace peh::oracles {

namespace {

// Shifted Legendre values and first two derivatives on [0,1] via the
// three-term recurrence.
void shifted_legendre(int max_order, double u, Eigen::VectorXd& p, Eigen::VectorXd& dp,
                      Eigen::VectorXd& ddp) {
  const double t = 2.0 * u - 1.0;
  p.resize(max_order + 1);
  dp.resize(max_order + 1);
  ddp.resize(max_order + 1);
  p(0) = 1.0;
  dp(0) = 0.0;
  ddp(0) = 0.0;
  if (max_order >= 1) {
    p(1) = t;
    dp(1) = 2.0;
    ddp(1) = 0.0;
  }
  for (int k = 1; k < max_order; ++k) {
    const double a = (2.0 * k + 1.0) / (k + 1.0), b = static_cast<double>(k) / (k + 1.0);
    p(k + 1) = a * t * p(k) - b * p(k - 1);
    dp(k + 1) = a * (2.0 * p(k) + t * dp(k)) - b * dp(k - 1);
    ddp(k + 1) = a * (4.0 * dp(k) + t * ddp(k)) - b * ddp(k - 1);
  }
}

}  // namespace

double plate_cfff_fundamental_hz(double length, double width, double bending_rigidity,
                                 double mass_per_area, double poisson, int terms) {
  const int nq = 40;
  std::vector<double> nodes, weights;
  gauss_legendre(nq, nodes, weights);

  // Trial functions: X_i(s) = s^2 * P_i(s) (clamped at s = 0), Y_j(t) = P_j(t).
  struct Axis {
    Eigen::MatrixXd v, d1, d2;  // nq x terms, derivatives w.r.t. the unit coordinate
    std::vector<double> w;
  };
  Axis ax, ay;
  ax.v.resize(nq, terms);
  ax.d1.resize(nq, terms);
  ax.d2.resize(nq, terms);
  ay = ax;
  ax.w.resize(nq);
  ay.w.resize(nq);

  Eigen::VectorXd p, dp, ddp;
  for (int g = 0; g < nq; ++g) {
    const double s = 0.5 * (nodes[g] + 1.0);
    const double wq = 0.5 * weights[g];
    ax.w[g] = wq;
    ay.w[g] = wq;
    shifted_legendre(terms - 1, s, p, dp, ddp);
    for (int i = 0; i < terms; ++i) {
      ax.v(g, i) = s * s * p(i);
      ax.d1(g, i) = 2.0 * s * p(i) + s * s * dp(i);
      ax.d2(g, i) = 2.0 * p(i) + 4.0 * s * dp(i) + s * s * ddp(i);
      ay.v(g, i) = p(i);
      ay.d1(g, i) = dp(i);
      ay.d2(g, i) = ddp(i);
    }
  }

  const int n = terms * terms;
  Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd mmat = Eigen::MatrixXd::Zero(n, n);
  const double il2 = 1.0 / (length * length), iw2 = 1.0 / (width * width);
  const double area = length * width;

  for (int gx = 0; gx < nq; ++gx) {
    for (int gy = 0; gy < nq; ++gy) {
      const double wq = ax.w[gx] * ay.w[gy] * area;
      for (int i = 0; i < terms; ++i) {
        for (int j = 0; j < terms; ++j) {
          const int row = i * terms + j;
          const double wxx_r = ax.d2(gx, i) * ay.v(gy, j) * il2;
          const double wyy_r = ax.v(gx, i) * ay.d2(gy, j) * iw2;
          const double wxy_r = ax.d1(gx, i) * ay.d1(gy, j) / (length * width);
          const double w_r = ax.v(gx, i) * ay.v(gy, j);
          for (int k = 0; k < terms; ++k) {
            for (int l = 0; l < terms; ++l) {
              const int col = k * terms + l;
              if (col < row) continue;
              const double wxx_c = ax.d2(gx, k) * ay.v(gy, l) * il2;
              const double wyy_c = ax.v(gx, k) * ay.d2(gy, l) * iw2;
              const double wxy_c = ax.d1(gx, k) * ay.d1(gy, l) / (length * width);
              const double w_c = ax.v(gx, k) * ay.v(gy, l);
              const double ke =
                  wq * bending_rigidity *
                  (wxx_r * wxx_c + wyy_r * wyy_c + poisson * (wxx_r * wyy_c + wyy_r * wxx_c) +
                   2.0 * (1.0 - poisson) * wxy_r * wxy_c);
              const double me = wq * mass_per_area * w_r * w_c;
              kmat(row, col) += ke;
              mmat(row, col) += me;
              if (row != col) {
                kmat(col, row) += ke;
                mmat(col, row) += me;
              }
            }
          }
        }
      }
    }
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(kmat, mmat);
  return std::sqrt(ges.eigenvalues()(0)) / (2.0 * M_PI);
}

double bimorph_beam_fundamental_hz(const DeviceDimensions& dims, const MaterialSet& mats) {
  const double hs = dims.substrate_thickness, h = dims.total_thickness;
  const double ep = mats.piezo.c11 - mats.piezo.c12 * mats.piezo.c12 / mats.piezo.c22;
  const double ei = mats.substrate.youngs_modulus * hs * hs * hs / 12.0 +
                    ep * (2.0 / 3.0) * (std::pow(h / 2.0, 3) - std::pow(hs / 2.0, 3));
  const double mass = mats.substrate.density * hs + 2.0 * mats.piezo.density * dims.piezo_thickness;
  const double lam = 1.8751040687119611;
  return lam * lam / (2.0 * M_PI) * std::sqrt(ei / (mass * std::pow(dims.length, 4)));
}

double beam_mode_ratio() {
  const double l1 = 1.8751040687119611, l2 = 4.6940911329741746;
  return (l2 * l2) / (l1 * l1);
}

GridSearchResult grid_search_energy(const ModelSettings& settings, const WindowSpectrum& spectrum,
                                    int points_per_axis, int threads) {
  const int n = points_per_axis;
  std::vector<double> values(static_cast<size_t>(n) * n * n,
                             -std::numeric_limits<double>::infinity());
  auto coord = [n](double lo, double hi, int i) {
    return lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  };
  parallel_for(static_cast<size_t>(n) * n * n, threads, [&](std::size_t idx) {
    const int i = static_cast<int>(idx / (n * n));
    const int j = static_cast<int>((idx / n) % n);
    const int k = static_cast<int>(idx % n);
    const ShapeParams p(coord(ShapeParams::kLengthLo, ShapeParams::kLengthHi, i),
                        coord(ShapeParams::kLenRatioLo, ShapeParams::kLenRatioHi, j),
                        coord(ShapeParams::kThickRatioLo, ShapeParams::kThickRatioHi, k),
                        settings.aspect_ratio, settings.total_thickness_m);
    values[idx] = energy_spectral(settings.reduce(p), spectrum);
  });
  size_t best = 0;
  for (size_t idx = 1; idx < values.size(); ++idx)
    if (values[idx] > values[best]) best = idx;
  const int i = static_cast<int>(best / (n * n));
  const int j = static_cast<int>((best / n) % n);
  const int k = static_cast<int>(best % n);
  GridSearchResult res;
  res.best = ShapeParams(coord(ShapeParams::kLengthLo, ShapeParams::kLengthHi, i),
                         coord(ShapeParams::kLenRatioLo, ShapeParams::kLenRatioHi, j),
                         coord(ShapeParams::kThickRatioLo, ShapeParams::kThickRatioHi, k),
                         settings.aspect_ratio, settings.total_thickness_m);
  res.best_energy = values[best];
  return res;
}

AccelerationWindow tone_window(double freq_hz, double amplitude, double duration_s,
                               double sample_rate_hz, const std::string& location) {
  AccelerationWindow w;
  w.sample_rate_hz = sample_rate_hz;
  w.location_id = location;
  const auto n = static_cast<size_t>(std::llround(duration_s * sample_rate_hz));
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    w.samples[i] = amplitude * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / sample_rate_hz);
  return w;
}

AccelerationWindow multitone_window(std::uint64_t seed, double f_lo, double f_hi, int tones,
                                    double amplitude, double duration_s, double sample_rate_hz,
                                    const std::string& location) {
  AccelerationWindow w;
  w.sample_rate_hz = sample_rate_hz;
  w.location_id = location;
  const auto n = static_cast<size_t>(std::llround(duration_s * sample_rate_hz));
  w.samples.assign(n, 0.0);
  const double df = sample_rate_hz / static_cast<double>(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int k_lo = std::max(1, static_cast<int>(std::ceil(f_lo / df)));
  const int k_hi = static_cast<int>(std::floor(f_hi / df));
  const int span = std::max(1, k_hi - k_lo + 1);
  for (int t = 0; t < tones; ++t) {
    // Bin-centered so the tone is exactly representable in the window DFT.
    const int k = k_lo + std::min(span - 1, static_cast<int>(unit(rng) * span));
    const double phase = 2.0 * M_PI * unit(rng);
    const double f = k * df;
    for (size_t i = 0; i < n; ++i)
      w.samples[i] += amplitude * std::sin(2.0 * M_PI * f * static_cast<double>(i) / sample_rate_hz + phase);
  }
  return w;
}

}  // namespace peh::oracles
