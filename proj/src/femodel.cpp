#include "peh/femodel.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <nlohmann/json.hpp>

#include "peh/errors.hpp"

namespace peh {

using json = nlohmann::ordered_json;

MaterialSet MaterialSet::bronze_pzt5a() {
  MaterialSet m;
  m.substrate = {105e9, 0.30, 9000.0};
  m.piezo.c11 = 69.5e9;
  m.piezo.c22 = 69.5e9;
  m.piezo.c12 = 24.3e9;
  m.piezo.c66 = 22.6e9;
  m.piezo.e31 = -16.0;
  m.piezo.e32 = -16.0;
  m.piezo.permittivity = 9.57e-9;
  m.piezo.density = 7800.0;
  m.piezo.poisson = 0.30;
  m.damping = {14.65, 1e-5};
  return m;
}

MaterialSet MaterialSet::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("material document: ") + e.what());
  }
  MaterialSet m = bronze_pzt5a();
  if (j.contains("substrate")) {
    const auto& s = j["substrate"];
    if (s.contains("youngs_modulus_gpa")) m.substrate.youngs_modulus = 1e9 * s["youngs_modulus_gpa"].get<double>();
    if (s.contains("density_kgm3")) m.substrate.density = s["density_kgm3"].get<double>();
    if (s.contains("poisson")) m.substrate.poisson = s["poisson"].get<double>();
  }
  if (j.contains("piezo")) {
    const auto& p = j["piezo"];
    if (p.contains("c11_gpa")) m.piezo.c11 = 1e9 * p["c11_gpa"].get<double>();
    if (p.contains("c22_gpa")) m.piezo.c22 = 1e9 * p["c22_gpa"].get<double>();
    if (p.contains("c12_gpa")) m.piezo.c12 = 1e9 * p["c12_gpa"].get<double>();
    if (p.contains("c66_gpa")) m.piezo.c66 = 1e9 * p["c66_gpa"].get<double>();
    if (p.contains("e31_cm2")) m.piezo.e31 = p["e31_cm2"].get<double>();
    if (p.contains("e32_cm2")) m.piezo.e32 = p["e32_cm2"].get<double>();
    if (p.contains("permittivity_nfm")) m.piezo.permittivity = 1e-9 * p["permittivity_nfm"].get<double>();
    if (p.contains("density_kgm3")) m.piezo.density = p["density_kgm3"].get<double>();
    if (p.contains("poisson")) m.piezo.poisson = p["poisson"].get<double>();
  }
  if (j.contains("damping")) {
    const auto& d = j["damping"];
    if (d.contains("alpha")) m.damping.alpha = d["alpha"].get<double>();
    if (d.contains("beta")) m.damping.beta = d["beta"].get<double>();
  }
  m.validate();
  return m;
}

std::string MaterialSet::to_json() const {
  json j;
  j["substrate"] = {{"youngs_modulus_gpa", substrate.youngs_modulus / 1e9},
                    {"density_kgm3", substrate.density},
                    {"poisson", substrate.poisson}};
  j["piezo"] = {{"c11_gpa", piezo.c11 / 1e9},     {"c22_gpa", piezo.c22 / 1e9},
                {"c12_gpa", piezo.c12 / 1e9},     {"c66_gpa", piezo.c66 / 1e9},
                {"e31_cm2", piezo.e31},           {"e32_cm2", piezo.e32},
                {"permittivity_nfm", piezo.permittivity / 1e-9},
                {"density_kgm3", piezo.density},  {"poisson", piezo.poisson}};
  j["damping"] = {{"alpha", damping.alpha}, {"beta", damping.beta}};
  return j.dump(2);
}

void MaterialSet::validate() const {
  if (!(substrate.youngs_modulus > 0)) throw ValidationError("substrate modulus must be positive");
  if (!(substrate.density > 0)) throw ValidationError("substrate density must be positive");
  if (!(substrate.poisson > 0 && substrate.poisson < 0.5))
    throw ValidationError("substrate Poisson ratio must lie in (0, 0.5)");
  if (!(piezo.permittivity > 0)) throw ValidationError("permittivity must be positive");
  if (piezo.density < 0) throw ValidationError("piezo density must be non-negative");
  Eigen::LLT<Eigen::Matrix3d> llt(substrate_elasticity());
  if (llt.info() != Eigen::Success)
    throw ValidationError("substrate plane-stress matrix is not positive definite");
}

Eigen::Matrix3d MaterialSet::substrate_elasticity() const {
  const double e = substrate.youngs_modulus, nu = substrate.poisson;
  const double f = e / (1.0 - nu * nu);
  Eigen::Matrix3d c;
  c << f, f * nu, 0.0, f * nu, f, 0.0, 0.0, 0.0, f * (1.0 - nu) / 2.0;
  return c;
}

Eigen::Matrix3d MaterialSet::piezo_elasticity() const {
  Eigen::Matrix3d c;
  c << piezo.c11, piezo.c12, 0.0, piezo.c12, piezo.c22, 0.0, 0.0, 0.0, piezo.c66;
  return c;
}

double capacitance(const DeviceDimensions& dims, const MaterialSet& mats) {
  if (!(dims.piezo_thickness > 0)) throw ArgumentError("piezo thickness must be positive");
  const double area = dims.piezo_length * dims.width;
  return mats.piezo.permittivity * area / (2.0 * dims.piezo_thickness);
}

DeviceModel assemble(const NurbsPatch& patch, const DeviceDimensions& dims,
                     const MaterialSet& mats, double load_resistance_ohm,
                     const AssemblyOptions& options) {
  mats.validate();
  const double hs = dims.substrate_thickness;
  const double h = dims.total_thickness;
  const double hp = dims.piezo_thickness;
  const double xi_interface = dims.piezo_length / dims.length;

  // The piezo boundary must lie on an element edge (up to the patch snap
  // tolerance); otherwise piezo-region integrals would straddle the material
  // jump.
  if (xi_interface < 1.0 - kInterfaceSnapTol) {
    bool aligned = false;
    for (double b : patch.basis_xi().breakpoints())
      if (std::abs(b - xi_interface) < kInterfaceSnapTol) aligned = true;
    if (!aligned)
      throw MeshError("no knot line at the piezo interface x = " +
                      std::to_string(dims.piezo_length));
  }

  // Per-layer through-thickness moments.
  const double half_h = h / 2.0, half_hs = hs / 2.0;
  const double sub_m0 = mats.substrate.density * hs;
  const double sub_m2 = mats.substrate.density * hs * hs * hs / 12.0;
  const double pz_m0 = 2.0 * mats.piezo.density * hp;
  const double pz_second = (2.0 / 3.0) * (half_h * half_h * half_h - half_hs * half_hs * half_hs);
  const double pz_m2 = mats.piezo.density * pz_second;

  const Eigen::Matrix3d d_sub = mats.substrate_elasticity() * (hs * hs * hs / 12.0);
  const Eigen::Matrix3d d_pz = mats.piezo_elasticity() * pz_second;

  // Coupling z-weight: both series-wired layers add.
  const double z_first = (half_h * half_h - half_hs * half_hs) / 2.0;
  const double z_weight =
      options.coupling_z_weight == CouplingZWeight::kFirstMoment ? z_first : pz_second / 2.0;

  const int n = patch.num_ctrl();
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd stiff = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd force = Eigen::VectorXd::Zero(n);

  const int p = patch.basis_xi().degree(), q = patch.basis_eta().degree();
  const int nqx = options.quadrature_points > 0 ? options.quadrature_points : p + 1;
  const int nqy = options.quadrature_points > 0 ? options.quadrature_points : q + 1;
  std::vector<double> gx, wx, gy, wy;
  gauss_legendre(nqx, gx, wx);
  gauss_legendre(nqy, gy, wy);

  std::vector<int> map;
  Eigen::MatrixXd ders;
  const double jac = patch.length() * patch.width();

  for (const PatchElement& el : patch.elements()) {
    const double xm = 0.5 * (el.xi0 + el.xi1), xr = 0.5 * (el.xi1 - el.xi0);
    const double ym = 0.5 * (el.eta0 + el.eta1), yr = 0.5 * (el.eta1 - el.eta0);
    const bool in_piezo = xm <= xi_interface + 1e-12;

    const double m0 = sub_m0 + (in_piezo ? pz_m0 : 0.0);
    const double m2 = sub_m2 + (in_piezo ? pz_m2 : 0.0);
    const Eigen::Matrix3d d_el = in_piezo ? Eigen::Matrix3d(d_sub + d_pz) : d_sub;

    for (int a = 0; a < nqx; ++a) {
      for (int b = 0; b < nqy; ++b) {
        const double xi = xm + xr * gx[a];
        const double eta = ym + yr * gy[b];
        const double w = wx[a] * wy[b] * xr * yr * jac;
        patch.eval_basis_local(xi, eta, 2, map, ders);
        const int nloc = static_cast<int>(map.size());

        Eigen::MatrixXd bmat(3, nloc);
        bmat.row(0) = -ders.row(NurbsPatch::kDerXX);
        bmat.row(1) = -ders.row(NurbsPatch::kDerYY);
        bmat.row(2) = -2.0 * ders.row(NurbsPatch::kDerXY);
        const Eigen::MatrixXd db = d_el * bmat;

        for (int i = 0; i < nloc; ++i) {
          const int gi = map[i];
          force(gi) += w * m0 * ders(NurbsPatch::kDerN, i);
          if (in_piezo) {
            theta(gi) += w * (z_weight / hp) *
                         (mats.piezo.e31 * bmat(0, i) + mats.piezo.e32 * bmat(1, i));
          }
          for (int jl = i; jl < nloc; ++jl) {
            const int gj = map[jl];
            const double mval =
                w * (m0 * ders(NurbsPatch::kDerN, i) * ders(NurbsPatch::kDerN, jl) +
                     m2 * (ders(NurbsPatch::kDerX, i) * ders(NurbsPatch::kDerX, jl) +
                           ders(NurbsPatch::kDerY, i) * ders(NurbsPatch::kDerY, jl)));
            const double kval = w * bmat.col(i).dot(db.col(jl));
            mass(gi, gj) += mval;
            stiff(gi, gj) += kval;
            if (gi != gj) {
              mass(gj, gi) += mval;
              stiff(gj, gi) += kval;
            }
          }
        }
      }
    }
  }

  DeviceModel model{std::move(mass),
                    std::move(stiff),
                    std::move(theta),
                    std::move(force),
                    capacitance(dims, mats),
                    load_resistance_ohm,
                    {},
                    {},
                    {},
                    {},
                    {},
                    {},
                    patch,
                    dims,
                    mats};

  // Cantilever clamp at x = 0: w = 0 and dw/dx = 0 via the first two control
  // point columns.
  const int ny = patch.num_ctrl_eta();
  for (int i = 0; i < patch.num_ctrl_xi(); ++i)
    for (int j = 0; j < ny; ++j)
      (i < 2 ? model.clamped_dofs : model.free_dofs).push_back(patch.ctrl_index(i, j));

  const int nf = model.num_free();
  model.mass_c.resize(nf, nf);
  model.stiffness_c.resize(nf, nf);
  model.coupling_c.resize(nf);
  model.force_c.resize(nf);
  for (int i = 0; i < nf; ++i) {
    model.coupling_c(i) = model.coupling(model.free_dofs[i]);
    model.force_c(i) = model.force(model.free_dofs[i]);
    for (int j = 0; j < nf; ++j) {
      model.mass_c(i, j) = model.mass(model.free_dofs[i], model.free_dofs[j]);
      model.stiffness_c(i, j) = model.stiffness(model.free_dofs[i], model.free_dofs[j]);
    }
  }

  if (Eigen::LLT<Eigen::MatrixXd>(model.mass_c).info() != Eigen::Success)
    throw AssemblyError("constrained mass matrix is not positive definite");
  if (Eigen::LLT<Eigen::MatrixXd>(model.stiffness_c).info() != Eigen::Success)
    throw AssemblyError("constrained stiffness matrix is not positive definite");

  return model;
}

}  // namespace peh
