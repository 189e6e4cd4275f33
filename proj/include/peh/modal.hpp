#pragma once

#include <Eigen/Dense>

#include "peh/femodel.hpp"

namespace peh {

/// K-mode reduced electromechanical system. Mode shapes are mass-normalized,
/// so the reduced mass matrix is the identity and the reduced stiffness /
/// damping are diag(omega_i^2) and diag(2 zeta_i omega_i). Immutable.
///
/// The residual scalars carry the mode-acceleration contribution of the
/// truncated modes to the voltage path. First order (quasi-static):
///   static_coupling_residual = Theta^T K^-1 Theta - sum_k theta_k^2 / w_k^2
///   static_force_residual    = Theta^T K^-1 F     - sum_k theta_k f_k / w_k^2
/// Second order (inertia, used by the FRF expansion):
///   inertia_*_residual follows with K^-1 M K^-1 weights and 1 / w_k^4 sums.
/// Without them the truncated modes' tails cost 0.1-1% of |H_v| well below
/// the retained band. All four vanish when every mode is retained.
struct ReducedModel {
  Eigen::MatrixXd mode_shapes;  // free DOFs x K
  Eigen::VectorXd omega;        // natural angular frequencies [rad/s], ascending
  Eigen::VectorXd zeta;         // modal damping ratios (Rayleigh)
  Eigen::VectorXd coupling;     // theta_o = Phi^T Theta
  Eigen::VectorXd force;        // f_o = Phi^T F
  double static_coupling_residual = 0;
  double static_force_residual = 0;
  double inertia_coupling_residual = 0;
  double inertia_force_residual = 0;
  RayleighDamping rayleigh;
  double capacitance_farad = 0;
  double load_resistance_ohm = 0;

  int num_modes() const { return static_cast<int>(omega.size()); }
};

/// Smallest `num_modes` eigenpairs of the clamped pencil (K, M), reduced per
/// the modal projection. Dense solve below 500 free DOFs, shift-invert
/// subspace iteration above.
ReducedModel solve_modes(const DeviceModel& model, int num_modes);

/// First natural frequency in Hz.
double fundamental_frequency(const DeviceModel& model);

}  // namespace peh
