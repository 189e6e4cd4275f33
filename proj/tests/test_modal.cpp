#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "peh/femodel.hpp"
#include "peh/modal.hpp"
#include "peh/response.hpp"

using namespace peh;

namespace {

DeviceModel make_model(const ShapeParams& p, std::pair<int, int> elements = {6, 6},
                       MaterialSet mats = MaterialSet::bronze_pzt5a()) {
  const auto dims = expand_shape(p);
  const auto patch = build_patch(dims, {3, 3}, elements);
  return assemble(patch, dims, mats, 1000.0);
}

}  // namespace

TEST_CASE("modes are mass-orthonormal and stiffness-orthogonal") {
  const auto model = make_model(ShapeParams(0.3, 0.45, 0.2));
  const auto red = solve_modes(model, 6);
  const Eigen::MatrixXd m_red =
      red.mode_shapes.transpose() * model.mass_c * red.mode_shapes;
  const Eigen::MatrixXd k_red =
      red.mode_shapes.transpose() * model.stiffness_c * red.mode_shapes;
  CHECK((m_red - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
  for (int i = 0; i < 6; ++i) {
    CHECK(k_red(i, i) == doctest::Approx(red.omega(i) * red.omega(i)).epsilon(1e-8));
    for (int j = 0; j < 6; ++j)
      if (i != j) CHECK(std::abs(k_red(i, j)) < 1e-8 * k_red.diagonal().maxCoeff());
  }
  for (int i = 1; i < 6; ++i) CHECK(red.omega(i) > red.omega(i - 1));
  CHECK(red.omega(0) > 0.0);
}

TEST_CASE("Rayleigh damping ratios follow the closed form") {
  const auto model = make_model(ShapeParams(0.35, 0.5, 0.2));
  const auto red = solve_modes(model, 4);
  for (int i = 0; i < 4; ++i) {
    const double expected = 14.65 / (2.0 * red.omega(i)) + 1e-5 * red.omega(i) / 2.0;
    CHECK(red.zeta(i) == doctest::Approx(expected).epsilon(1e-12));
  }
  // Worked value: f1 = 2.1 Hz gives zeta ~ 0.5554.
  const double w1 = 2.0 * M_PI * 2.1;
  CHECK(14.65 / (2.0 * w1) + 1e-5 * w1 / 2.0 == doctest::Approx(0.55539).epsilon(2e-3));
}

TEST_CASE("stiffness scaling: quadrupled stiffness doubles every frequency") {
  MaterialSet mats = MaterialSet::bronze_pzt5a();
  const auto base = solve_modes(make_model(ShapeParams(0.3, 0.5, 0.2), {6, 6}, mats), 3);
  mats.substrate.youngs_modulus *= 4.0;
  mats.piezo.c11 *= 4.0;
  mats.piezo.c22 *= 4.0;
  mats.piezo.c12 *= 4.0;
  mats.piezo.c66 *= 4.0;
  const auto stiff = solve_modes(make_model(ShapeParams(0.3, 0.5, 0.2), {6, 6}, mats), 3);
  for (int i = 0; i < 3; ++i)
    CHECK(stiff.omega(i) == doctest::Approx(2.0 * base.omega(i)).epsilon(1e-10));
}

TEST_CASE("doubling the length divides the fundamental frequency by ~4") {
  const double f_short = fundamental_frequency(make_model(ShapeParams(0.2, 0.5, 0.2)));
  const double f_long = fundamental_frequency(make_model(ShapeParams(0.4, 0.5, 0.2)));
  CHECK(f_short / f_long == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("fundamental frequency decreases monotonically with length") {
  double prev = std::numeric_limits<double>::infinity();
  for (double length : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    const double f = fundamental_frequency(make_model(ShapeParams(length, 0.5, 0.2)));
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("beam-like mode ratio matches Euler-Bernoulli") {
  // Narrow strip, full piezo coverage. Bending modes are symmetric across the
  // width; skip torsional modes by parity of the mode shape.
  const ShapeParams p(0.3, 1.0, 0.2, 0.1, 0.001);
  const auto dims = expand_shape(p);
  const auto patch = build_patch(dims, {3, 3}, {12, 4});
  const auto model = assemble(patch, dims, MaterialSet::bronze_pzt5a(), 1000.0);
  const auto red = solve_modes(model, 6);

  // Parity check: contract each mode with a y-antisymmetric weight; bending
  // modes give ~0, torsional modes do not.
  const int ny = patch.num_ctrl_eta();
  std::vector<double> bending;
  for (int k = 0; k < red.num_modes() && bending.size() < 2; ++k) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(patch.num_ctrl());
    for (int i = 0; i < model.num_free(); ++i)
      full(model.free_dofs[i]) = red.mode_shapes(i, k);
    double sym = 0, anti = 0;
    for (int ix = 0; ix < patch.num_ctrl_xi(); ++ix) {
      for (int iy = 0; iy < ny; ++iy) {
        const double v = full(patch.ctrl_index(ix, iy));
        const double mirror = full(patch.ctrl_index(ix, ny - 1 - iy));
        sym += std::abs(v + mirror);
        anti += std::abs(v - mirror);
      }
    }
    if (anti < 1e-6 * sym) bending.push_back(red.omega(k));
  }
  REQUIRE(bending.size() == 2);
  CHECK(bending[1] / bending[0] == doctest::Approx(oracles::beam_mode_ratio()).epsilon(0.03));
}

TEST_CASE("full-coverage beam matches the composite oracle through solve_modes") {
  const ShapeParams p(0.25, 1.0, 0.3, 0.1, 0.001);
  const auto dims = expand_shape(p);
  const auto patch = build_patch(dims, {3, 3}, {12, 4});
  const auto model = assemble(patch, dims, MaterialSet::bronze_pzt5a(), 1000.0);
  const double f_beam = oracles::bimorph_beam_fundamental_hz(dims, MaterialSet::bronze_pzt5a());
  CHECK(fundamental_frequency(model) == doctest::Approx(f_beam).epsilon(0.02));
}

TEST_CASE("identity-case reduction: K = N reproduces the full FRF") {
  const auto model = make_model(ShapeParams(0.3, 0.5, 0.2), {4, 4});
  const auto red = solve_modes(model, model.num_free());

  std::vector<double> grid(100);
  for (size_t i = 0; i < grid.size(); ++i) grid[i] = 0.5 + 0.5 * static_cast<double>(i);
  const auto reduced_frf = frf(red, grid);
  const auto full_frf = frf_full(model, grid);

  double scale = 0.0;
  for (size_t i = 0; i < grid.size(); ++i)
    scale = std::max(scale, std::abs(full_frf.values[i]));
  for (size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(reduced_frf.values[i] - full_frf.values[i]) < 1e-8 * scale);
}

TEST_CASE("reduction converges: adding two modes barely moves the FRF below omega_K/2") {
  const auto model = make_model(ShapeParams(0.3, 0.5, 0.2));
  const auto red5 = solve_modes(model, 5);
  const auto red7 = solve_modes(model, 7);
  const double f_half = red5.omega(4) / (2.0 * M_PI) / 2.0;
  std::vector<double> grid;
  for (double f = 0.2; f < f_half; f += f_half / 60.0) grid.push_back(f);
  const auto h5 = frf(red5, grid);
  const auto h7 = frf(red7, grid);
  for (size_t i = 0; i < grid.size(); ++i) {
    const double m5 = std::abs(h5.values[i]), m7 = std::abs(h7.values[i]);
    CHECK(std::abs(m5 - m7) <= 0.001 * std::max(m7, 1e-300));
  }
}

TEST_CASE("mode count bounds are enforced") {
  const auto model = make_model(ShapeParams(0.3, 0.5, 0.2), {4, 4});
  CHECK_THROWS_AS(solve_modes(model, 0), ArgumentError);
  CHECK_THROWS_AS(solve_modes(model, model.num_free() + 1), ArgumentError);
}

TEST_CASE("sparse shift-invert path agrees with the dense path") {
  // 16x16 cubic mesh exceeds the dense cutoff only in x-direction count;
  // force the comparison on a moderate model by calling both paths.
  const ShapeParams p(0.3, 0.41, 0.2);
  const auto dims = expand_shape(p);
  const auto coarse_patch = build_patch(dims, {3, 3}, {14, 14});
  const auto model = assemble(coarse_patch, dims, MaterialSet::bronze_pzt5a(), 1000.0);
  // num_free for 14x14 cubic with the interface column is ~16*17 - 2*17 > 200;
  // still dense. Compare dense eigenvalues with the sparse fallback on a
  // larger 20x20 mesh that crosses the 500-DOF threshold.
  const auto fine_patch = build_patch(dims, {3, 3}, {22, 22});
  const auto big = assemble(fine_patch, dims, MaterialSet::bronze_pzt5a(), 1000.0);
  REQUIRE(big.num_free() >= 500);
  const auto red_big = solve_modes(big, 4);  // sparse path
  const auto red_small = solve_modes(model, 4);  // dense path
  for (int i = 0; i < 4; ++i)
    CHECK(red_big.omega(i) == doctest::Approx(red_small.omega(i)).epsilon(2e-3));
  // Sparse-path modes must still be mass-orthonormal.
  const Eigen::MatrixXd m_red =
      red_big.mode_shapes.transpose() * big.mass_c * red_big.mode_shapes;
  CHECK((m_red - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
}
