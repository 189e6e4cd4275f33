#include "peh/modal.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <random>

#include "peh/errors.hpp"

namespace peh {

namespace {

constexpr int kDenseDofLimit = 500;

// Shift-invert subspace iteration for the smallest eigenpairs of K x = w^2 M x.
// K is SPD after clamping, so the shift is zero and a single LDLT of K drives
// the iteration.
void sparse_smallest(const Eigen::MatrixXd& kc, const Eigen::MatrixXd& mc, int want,
                     Eigen::VectorXd& eigvals, Eigen::MatrixXd& eigvecs) {
  const int n = static_cast<int>(kc.rows());
  const int m = std::min(n, 2 * want + 8);

  Eigen::SparseMatrix<double> ks = kc.sparseView(1.0, 1e-300);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(ks);
  if (solver.info() != Eigen::Success)
    throw NumericError("stiffness factorization failed in shift-invert iteration");

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd v(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) v(i, j) = gauss(rng);

  for (int it = 0; it < 300; ++it) {
    v = solver.solve(mc * v);
    // Orthonormalize before projecting; the power sweeps collapse the columns
    // toward the dominant subspace otherwise.
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
    v = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    // Rayleigh-Ritz on the subspace.
    Eigen::MatrixXd a = v.transpose() * kc * v;
    Eigen::MatrixXd b = v.transpose() * mc * v;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> small(a, b);
    if (small.info() != Eigen::Success) throw NumericError("subspace projection failed");
    v = v * small.eigenvectors();
    const Eigen::VectorXd cur = small.eigenvalues().head(want);

    // Residual-based stop on the wanted pairs.
    bool converged = true;
    for (int k = 0; k < want && converged; ++k) {
      const Eigen::VectorXd kv = kc * v.col(k);
      const double res = (kv - cur(k) * (mc * v.col(k))).norm();
      if (res > 1e-8 * kv.norm()) converged = false;
    }
    if (converged) {
      eigvals = cur;
      eigvecs = v.leftCols(want);
      return;
    }
  }
  throw NumericError("shift-invert iteration did not converge in 300 sweeps");
}

}  // namespace

ReducedModel solve_modes(const DeviceModel& model, int num_modes) {
  const int nf = model.num_free();
  if (num_modes < 1 || num_modes > nf)
    throw ArgumentError("mode count must lie in [1, free DOF count]");

  Eigen::VectorXd lambda;
  Eigen::MatrixXd phi;
  if (nf < kDenseDofLimit) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(model.stiffness_c,
                                                                  model.mass_c);
    if (ges.info() != Eigen::Success) {
      throw NumericError("generalized eigensolver failed; |K| = " +
                         std::to_string(model.stiffness_c.norm()) +
                         ", |M| = " + std::to_string(model.mass_c.norm()));
    }
    lambda = ges.eigenvalues().head(num_modes);
    phi = ges.eigenvectors().leftCols(num_modes);
  } else {
    sparse_smallest(model.stiffness_c, model.mass_c, num_modes, lambda, phi);
  }

  if ((lambda.array() <= 0.0).any())
    throw NumericError("non-positive eigenvalue: clamped stiffness lost definiteness");

  // Mass-normalize (the dense path already is; the sparse path up to rounding).
  for (int k = 0; k < num_modes; ++k) {
    const double mk = phi.col(k).dot(model.mass_c * phi.col(k));
    phi.col(k) /= std::sqrt(mk);
  }

  ReducedModel red;
  red.mode_shapes = phi;
  red.omega = lambda.array().sqrt();
  red.zeta.resize(num_modes);
  const auto& d = model.materials.damping;
  for (int k = 0; k < num_modes; ++k)
    red.zeta(k) = d.alpha / (2.0 * red.omega(k)) + d.beta * red.omega(k) / 2.0;
  red.coupling = phi.transpose() * model.coupling_c;
  red.force = phi.transpose() * model.force_c;

  // Mode-acceleration residuals of the truncated modes.
  Eigen::LLT<Eigen::MatrixXd> kllt(model.stiffness_c);
  if (kllt.info() != Eigen::Success)
    throw NumericError("stiffness factorization failed computing static residuals");
  const Eigen::VectorXd k_inv_theta = kllt.solve(model.coupling_c);
  const Eigen::VectorXd k_inv_force = kllt.solve(model.force_c);
  const Eigen::VectorXd m_k_inv_theta = model.mass_c * k_inv_theta;
  double retained_tt = 0.0, retained_tf = 0.0, retained2_tt = 0.0, retained2_tf = 0.0;
  for (int k = 0; k < num_modes; ++k) {
    const double tt = red.coupling(k) * red.coupling(k);
    const double tf = red.coupling(k) * red.force(k);
    retained_tt += tt / lambda(k);
    retained_tf += tf / lambda(k);
    retained2_tt += tt / (lambda(k) * lambda(k));
    retained2_tf += tf / (lambda(k) * lambda(k));
  }
  red.static_coupling_residual = model.coupling_c.dot(k_inv_theta) - retained_tt;
  red.static_force_residual = k_inv_theta.dot(model.force_c) - retained_tf;
  red.inertia_coupling_residual = k_inv_theta.dot(m_k_inv_theta) - retained2_tt;
  red.inertia_force_residual = k_inv_force.dot(m_k_inv_theta) - retained2_tf;
  red.rayleigh = d;

  red.capacitance_farad = model.capacitance_farad;
  red.load_resistance_ohm = model.load_resistance_ohm;
  return red;
}

double fundamental_frequency(const DeviceModel& model) {
  return solve_modes(model, 1).omega(0) / (2.0 * M_PI);
}

}  // namespace peh
