#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "oracles.hpp"
#include "peh/errors.hpp"
#include "peh/femodel.hpp"
#include "peh/modal.hpp"

using namespace peh;

namespace {

DeviceModel make_model(const ShapeParams& p, std::pair<int, int> elements = {6, 6},
                       const AssemblyOptions& opts = {}) {
  const auto dims = expand_shape(p);
  const auto patch = build_patch(dims, {3, 3}, elements);
  return assemble(patch, dims, MaterialSet::bronze_pzt5a(), 1000.0, opts);
}

}  // namespace

TEST_CASE("preset matches the published material constants") {
  const auto m = MaterialSet::bronze_pzt5a();
  CHECK(m.substrate.youngs_modulus == doctest::Approx(105e9));
  CHECK(m.substrate.density == doctest::Approx(9000.0));
  CHECK(m.substrate.poisson == doctest::Approx(0.30));
  CHECK(m.piezo.c11 == doctest::Approx(69.5e9));
  CHECK(m.piezo.c12 == doctest::Approx(24.3e9));
  CHECK(m.piezo.c66 == doctest::Approx(22.6e9));
  CHECK(m.piezo.e31 == doctest::Approx(-16.0));
  CHECK(m.piezo.permittivity == doctest::Approx(9.57e-9));
  CHECK(m.piezo.density == doctest::Approx(7800.0));
  CHECK(m.damping.alpha == doctest::Approx(14.65));
  CHECK(m.damping.beta == doctest::Approx(1e-5));
}

TEST_CASE("material JSON round trip and partial overrides") {
  const auto m = MaterialSet::bronze_pzt5a();
  const auto back = MaterialSet::from_json(m.to_json());
  CHECK(back.substrate.youngs_modulus == doctest::Approx(m.substrate.youngs_modulus));
  CHECK(back.piezo.permittivity == doctest::Approx(m.piezo.permittivity));
  CHECK(back.damping.beta == doctest::Approx(m.damping.beta));

  const auto override_only = MaterialSet::from_json(R"({"substrate": {"youngs_modulus_gpa": 70}})");
  CHECK(override_only.substrate.youngs_modulus == doctest::Approx(70e9));
  CHECK(override_only.piezo.c11 == doctest::Approx(69.5e9));

  CHECK_THROWS_AS(MaterialSet::from_json("not json"), FormatError);
  CHECK_THROWS_AS(MaterialSet::from_json(R"({"substrate": {"poisson": 0.7}})"), ValidationError);
}

TEST_CASE("capacitance: series parallel-plate arithmetic") {
  MaterialSet m = MaterialSet::bronze_pzt5a();
  DeviceDimensions d;
  d.piezo_length = 0.15;
  d.width = 0.3;
  d.piezo_thickness = 2e-4;
  CHECK(capacitance(d, m) == doctest::Approx(1.0766e-6).epsilon(1e-3));

  DeviceDimensions half = d;
  half.piezo_thickness = 1e-4;
  CHECK(capacitance(half, m) == doctest::Approx(2.0 * capacitance(d, m)).epsilon(1e-12));

  DeviceDimensions shorter = d;
  shorter.piezo_length = 0.075;  // l: 0.4 -> 0.2 at the same L
  CHECK(capacitance(shorter, m) == doctest::Approx(0.5 * capacitance(d, m)).epsilon(1e-12));
}

TEST_CASE("rigid-body force identity F = M 1") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ul(0.1, 0.5), ur(0.1, 1.0), uh(0.05, 0.45);
  for (int trial = 0; trial < 5; ++trial) {
    const auto model = make_model(ShapeParams(ul(rng), ur(rng), uh(rng)));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(model.mass.rows());
    const double rel = (model.force - model.mass * ones).norm() / model.force.norm();
    CHECK(rel < 1e-10);
  }
}

TEST_CASE("symmetry of assembled matrices") {
  const auto model = make_model(ShapeParams(0.3, 0.43, 0.2));
  const double m_asym = (model.mass - model.mass.transpose()).cwiseAbs().maxCoeff();
  const double k_asym = (model.stiffness - model.stiffness.transpose()).cwiseAbs().maxCoeff();
  CHECK(m_asym < 1e-12 * model.mass.cwiseAbs().maxCoeff());
  CHECK(k_asym < 1e-12 * model.stiffness.cwiseAbs().maxCoeff());
}

TEST_CASE("constrained mass and stiffness are positive definite") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ul(0.1, 0.5), ur(0.1, 1.0), uh(0.05, 0.45);
  for (int trial = 0; trial < 5; ++trial) {
    const auto model = make_model(ShapeParams(ul(rng), ur(rng), uh(rng)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(model.mass_c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ek(model.stiffness_c);
    CHECK(em.eigenvalues().minCoeff() > 0.0);
    CHECK(ek.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("zero piezo stress constants give a zero coupling vector") {
  MaterialSet m = MaterialSet::bronze_pzt5a();
  m.piezo.e31 = 0.0;
  m.piezo.e32 = 0.0;
  const auto dims = expand_shape(ShapeParams(0.3, 0.5, 0.2));
  const auto patch = build_patch(dims, {3, 3}, {6, 6});
  const auto model = assemble(patch, dims, m, 1000.0);
  CHECK(model.coupling.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("beam-like full-coverage device matches the composite-beam formula") {
  const ShapeParams p(0.3, 1.0, 0.2, 0.1, 0.001);
  const auto dims = expand_shape(p);
  const auto patch = build_patch(dims, {3, 3}, {12, 4});
  const auto model = assemble(patch, dims, MaterialSet::bronze_pzt5a(), 1000.0);
  const double f_iga = fundamental_frequency(model);
  const double f_beam = oracles::bimorph_beam_fundamental_hz(dims, MaterialSet::bronze_pzt5a());
  CHECK(f_iga == doctest::Approx(f_beam).epsilon(0.02));
}

TEST_CASE("doubling the quadrature order leaves the matrices unchanged") {
  const ShapeParams p(0.3, 0.37, 0.22);
  const auto base = make_model(p, {5, 5});
  AssemblyOptions fine;
  fine.quadrature_points = 8;  // double the default p + 1 = 4
  const auto refined = make_model(p, {5, 5}, fine);
  const double dm = (base.mass - refined.mass).cwiseAbs().maxCoeff() /
                    base.mass.cwiseAbs().maxCoeff();
  const double dk = (base.stiffness - refined.stiffness).cwiseAbs().maxCoeff() /
                    base.stiffness.cwiseAbs().maxCoeff();
  const double dt = (base.coupling - refined.coupling).cwiseAbs().maxCoeff() /
                    base.coupling.cwiseAbs().maxCoeff();
  CHECK(dm < 1e-10);
  CHECK(dk < 1e-10);
  CHECK(dt < 1e-10);
}

TEST_CASE("fundamental frequency converges from 8x8 to 16x16 elements") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ul(0.1, 0.5), ur(0.1, 1.0), uh(0.05, 0.45);
  for (int trial = 0; trial < 3; ++trial) {
    const ShapeParams p(ul(rng), ur(rng), uh(rng));
    const double f8 = fundamental_frequency(make_model(p, {8, 8}));
    const double f16 = fundamental_frequency(make_model(p, {16, 16}));
    CHECK(std::abs(f8 - f16) / f16 < 0.005);
  }
}

TEST_CASE("interface misalignment is a mesh error") {
  const auto dims = expand_shape(ShapeParams(0.3, 0.5, 0.2));
  auto bad_dims = dims;
  bad_dims.piezo_length = 0.13;  // patch knot line stays at 0.5 L
  const auto patch = build_patch(dims, {3, 3}, {4, 4});
  CHECK_THROWS_AS(assemble(patch, bad_dims, MaterialSet::bronze_pzt5a(), 1000.0), MeshError);
}

TEST_CASE("coupling z-weight variants differ and both couple") {
  const ShapeParams p(0.3, 0.5, 0.2);
  const auto first = make_model(p);
  AssemblyOptions opts;
  opts.coupling_z_weight = CouplingZWeight::kZSquared;
  const auto squared = make_model(p, {6, 6}, opts);
  CHECK(first.coupling.norm() > 0.0);
  CHECK(squared.coupling.norm() > 0.0);
  CHECK((first.coupling - squared.coupling).norm() > 1e-12 * first.coupling.norm());
}
