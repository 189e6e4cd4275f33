#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "peh/errors.hpp"

namespace peh {

/// Design vector [L, l, H] plus the fixed aspect ratio R and total thickness h.
/// Bounds are enforced at construction; use unchecked() only for test scaffolding.
struct ShapeParams {
  double length = 0.3;                 // L [m]
  double piezo_length_ratio = 0.5;     // l = L_pzt / L
  double piezo_thickness_ratio = 0.2;  // H = h_p / h
  double aspect_ratio = 1.0;           // R = W / L
  double thickness = 1e-3;             // h [m]

  static constexpr double kLengthLo = 0.1, kLengthHi = 0.5;
  static constexpr double kThickRatioLo = 0.05, kThickRatioHi = 0.45;
  static constexpr double kLenRatioLo = 0.1, kLenRatioHi = 1.0;

  ShapeParams(double L, double l, double H, double R = 1.0, double h = 1e-3);
  ShapeParams() = default;

  /// Bypasses bounds checks. Used where out-of-range geometry is intentional.
  static ShapeParams unchecked(double L, double l, double H, double R = 1.0, double h = 1e-3);

  void validate() const;
};

/// Full device dimensions in meters, expanded from a ShapeParams.
struct DeviceDimensions {
  double length = 0;               // L
  double width = 0;                // W = R * L
  double piezo_thickness = 0;      // h_p = H * h
  double substrate_thickness = 0;  // h_s = h - 2 h_p
  double piezo_length = 0;         // L_pzt = l * L
  double total_thickness = 0;      // h
};

DeviceDimensions expand_shape(const ShapeParams& params);

/// Open (clamped) B-spline basis in one parametric direction.
class BsplineBasis1d {
public:
  BsplineBasis1d() = default;
  BsplineBasis1d(int degree, std::vector<double> knots);

  /// Open uniform knot vector on [0,1] with `spans` nonzero spans.
  static BsplineBasis1d uniform_open(int degree, int spans);

  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }
  int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  int num_spans() const;

  /// Index of the knot span containing u (Piegl & Tiller A2.1).
  int find_span(double u) const;

  /// Nonzero basis functions and derivatives up to `order` at u.
  /// ders(k, j) = d^k N_{span-degree+j} / du^k, j in [0, degree].
  Eigen::MatrixXd ders_basis(double u, int order) const;

  /// Greville abscissae (control point parameter averages).
  std::vector<double> greville() const;

  /// Returns a basis with `u` inserted once (no-op within tol of an existing knot).
  BsplineBasis1d insert_knot(double u, double tol = 1e-12) const;

  /// Returns a basis where `u` has at least the given knot multiplicity,
  /// reducing the continuity there to C^(degree - multiplicity).
  BsplineBasis1d with_knot_multiplicity(double u, int multiplicity, double tol = 1e-12) const;

  /// Breakpoints: unique knots delimiting the nonzero spans.
  std::vector<double> breakpoints() const;

private:
  int degree_ = 0;
  std::vector<double> knots_;
};

/// All basis values at one parametric point, in physical-space derivatives.
struct BasisEval {
  Eigen::VectorXd n;    // N_I
  Eigen::VectorXd dx;   // dN_I/dx
  Eigen::VectorXd dy;   // dN_I/dy
  Eigen::VectorXd dxx;  // d2N_I/dx2
  Eigen::VectorXd dyy;  // d2N_I/dy2
  Eigen::VectorXd dxy;  // d2N_I/dxdy
};

/// One nonzero knot-span rectangle in parametric space.
struct PatchElement {
  double xi0, xi1, eta0, eta1;
};

/// Tensor-product NURBS patch over the rectangle [0,L] x [0,W].
/// Weights are all 1 for this geometry (B-spline special case) but kept so the
/// type can carry rational patches later. Immutable after construction.
class NurbsPatch {
public:
  NurbsPatch(BsplineBasis1d basis_xi, BsplineBasis1d basis_eta, double length, double width);

  const BsplineBasis1d& basis_xi() const { return bx_; }
  const BsplineBasis1d& basis_eta() const { return by_; }
  double length() const { return length_; }
  double width() const { return width_; }

  int num_ctrl_xi() const { return bx_.num_basis(); }
  int num_ctrl_eta() const { return by_.num_basis(); }
  int num_ctrl() const { return num_ctrl_xi() * num_ctrl_eta(); }

  /// Global index of control point (i, j); i runs along xi (length direction).
  int ctrl_index(int i, int j) const { return i * num_ctrl_eta() + j; }

  /// Physical control point coordinates (Greville, scaled); the affine map
  /// x = L*xi, y = W*eta is reproduced exactly.
  Eigen::Vector2d ctrl_point(int i, int j) const;
  const Eigen::VectorXd& weights() const { return weights_; }

  std::vector<PatchElement> elements() const;

  /// Dense evaluation of every basis function at (xi, eta) with physical
  /// derivatives up to `order` (<= 2). Throws DomainError outside [0,1]^2.
  BasisEval eval_basis(double xi, double eta, int order = 2) const;

  /// Active-function evaluation for assembly: fills `global` with the
  /// (p+1)(q+1) active control point indices at (xi, eta).
  void eval_basis_local(double xi, double eta, int order, std::vector<int>& global,
                        Eigen::MatrixXd& ders) const;
  static constexpr int kDerN = 0, kDerX = 1, kDerY = 2, kDerXX = 3, kDerYY = 4, kDerXY = 5;

private:
  BsplineBasis1d bx_, by_;
  double length_, width_;
  Eigen::VectorXd weights_;
};

/// Parametric tolerance for merging the piezo interface with an existing knot
/// line. A narrower gap would create a degenerate sliver span whose basis
/// functions destroy the stiffness conditioning (kappa grows like the inverse
/// cube of the sliver width; Cholesky breaks down near 1e16). The snap moves
/// the material boundary by at most 5e-4 of the plate length.
inline constexpr double kInterfaceSnapTol = 5e-4;

/// Builds the device patch: open uniform knots with a knot line at
/// xi = L_pzt / L so the piezo boundary coincides with an element edge. The
/// interface knot carries multiplicity degree - 1, leaving the basis C1 there:
/// the bending stiffness jumps across the interface, so the physical curvature
/// must be free to jump while deflection and slope stay continuous. An
/// interface within kInterfaceSnapTol of an existing knot (or of the patch
/// ends) is snapped onto it.
/// Degrees must be >= 2 (C1 continuity requirement of the plate operator).
NurbsPatch build_patch(const DeviceDimensions& dims, std::pair<int, int> degrees = {3, 3},
                       std::pair<int, int> elements = {8, 8});

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace peh
