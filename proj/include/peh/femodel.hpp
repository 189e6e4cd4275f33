#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "peh/geometry.hpp"

namespace peh {

struct SubstrateMaterial {
  double youngs_modulus = 0;  // [Pa]
  double poisson = 0;
  double density = 0;  // [kg/m^3]
};

struct PiezoMaterial {
  double c11 = 0, c22 = 0, c12 = 0, c66 = 0;  // elastic constants at constant field [Pa]
  double e31 = 0, e32 = 0;                    // piezoelectric stress constants [C/m^2]
  double permittivity = 0;                    // eps33 at constant strain [F/m]
  double density = 0;                         // [kg/m^3]
  double poisson = 0;
};

struct RayleighDamping {
  double alpha = 0;  // mass-proportional [1/s]
  double beta = 0;   // stiffness-proportional [s]
};

struct MaterialSet {
  SubstrateMaterial substrate;
  PiezoMaterial piezo;
  RayleighDamping damping;

  /// Bronze substrate with PZT-5A layers; the built-in preset.
  static MaterialSet bronze_pzt5a();

  /// Parses a material document (see README for the schema). Missing fields
  /// fall back to the bronze/PZT-5A preset.
  static MaterialSet from_json(const std::string& json_text);
  std::string to_json() const;

  void validate() const;

  /// Isotropic plane-stress elasticity matrix of the substrate.
  Eigen::Matrix3d substrate_elasticity() const;
  /// Orthotropic plane-stress elasticity matrix of the piezo layers.
  Eigen::Matrix3d piezo_elasticity() const;
};

/// Through-thickness weight applied to the piezoelectric coupling integrand.
/// FirstMoment pairs the antisymmetric electric field of the series bimorph
/// with the first z-moment of each layer; ZSquared keeps the second moment.
enum class CouplingZWeight { kFirstMoment, kZSquared };

struct AssemblyOptions {
  CouplingZWeight coupling_z_weight = CouplingZWeight::kFirstMoment;
  int quadrature_points = 0;  // per direction; 0 -> degree + 1
};

/// Assembled coupled electromechanical system with cantilever clamping at the
/// x = 0 edge. Immutable after assembly; safe to share across threads.
struct DeviceModel {
  Eigen::MatrixXd mass;       // M, full control net
  Eigen::MatrixXd stiffness;  // K, full control net
  Eigen::VectorXd coupling;   // Theta
  Eigen::VectorXd force;      // F
  double capacitance_farad = 0;
  double load_resistance_ohm = 0;

  std::vector<int> free_dofs;     // control point indices kept after clamping
  std::vector<int> clamped_dofs;  // first two control point columns at x = 0

  // Constrained (clamped) views used by the modal solver.
  Eigen::MatrixXd mass_c;
  Eigen::MatrixXd stiffness_c;
  Eigen::VectorXd coupling_c;
  Eigen::VectorXd force_c;

  NurbsPatch patch;
  DeviceDimensions dims;
  MaterialSet materials;

  int num_free() const { return static_cast<int>(free_dofs.size()); }
};

/// Per-layer parallel-plate capacitance of the two piezo layers in series.
double capacitance(const DeviceDimensions& dims, const MaterialSet& mats);

DeviceModel assemble(const NurbsPatch& patch, const DeviceDimensions& dims,
                     const MaterialSet& mats, double load_resistance_ohm = 1000.0,
                     const AssemblyOptions& options = {});

}  // namespace peh
