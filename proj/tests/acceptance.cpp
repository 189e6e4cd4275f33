// Acceptance suite: one criterion per entry, each printing a PASS/FAIL line
// with its measured figure. Run all (no arguments) or a single criterion by
// number. Exit code equals the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "peh/cluster.hpp"
#include "peh/femodel.hpp"
#include "peh/modal.hpp"
#include "peh/pipeline.hpp"
#include "peh/response.hpp"

using namespace peh;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// --- 1. Discretization correctness vs an independent Rayleigh-Ritz oracle ---
Outcome criterion_substrate_plate() {
  // Substrate-only limit: zero the piezo layers' stiffness, density, and
  // coupling; the device degenerates to a uniform plate of thickness h_s.
  MaterialSet mats = MaterialSet::bronze_pzt5a();
  mats.piezo.c11 = mats.piezo.c22 = mats.piezo.c12 = mats.piezo.c66 = 0.0;
  mats.piezo.e31 = mats.piezo.e32 = 0.0;
  mats.piezo.density = 0.0;

  const auto dims = expand_shape(ShapeParams(0.3, 0.5, 0.2, 1.0, 0.001));
  const auto patch = build_patch(dims, {3, 3}, {16, 16});
  const auto model = assemble(patch, dims, mats, 1000.0);
  const double f_iga = fundamental_frequency(model);

  const double hs = dims.substrate_thickness;
  const double rigidity = mats.substrate.youngs_modulus * hs * hs * hs /
                          (12.0 * (1.0 - mats.substrate.poisson * mats.substrate.poisson));
  const double f_rr = oracles::plate_cfff_fundamental_hz(
      dims.length, dims.width, rigidity, mats.substrate.density * hs, mats.substrate.poisson, 15);

  const double rel = std::abs(f_iga - f_rr) / f_rr;
  std::ostringstream os;
  os << "f1(IGA 16x16) = " << f_iga << " Hz, f1(Rayleigh-Ritz 15x15) = " << f_rr
     << " Hz, rel = " << rel;
  return {rel < 0.01, os.str()};
}

// --- 2. Composite Euler-Bernoulli bimorph check ---
Outcome criterion_composite_beam() {
  const ShapeParams p(0.3, 1.0, 0.2, 0.1, 0.001);
  const auto dims = expand_shape(p);
  const auto patch = build_patch(dims, {3, 3}, {12, 4});
  const auto model = assemble(patch, dims, MaterialSet::bronze_pzt5a(), 1000.0);
  const double f_iga = fundamental_frequency(model);
  const double f_beam = oracles::bimorph_beam_fundamental_hz(dims, MaterialSet::bronze_pzt5a());
  const double rel = std::abs(f_iga - f_beam) / f_beam;
  std::ostringstream os;
  os << "f1(IGA) = " << f_iga << " Hz, f1(beam) = " << f_beam << " Hz, rel = " << rel;
  return {rel < 0.02, os.str()};
}

// --- 3. Matrix identities over 50 random in-bounds shapes ---
Outcome criterion_matrix_identities() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ul(ShapeParams::kLengthLo, ShapeParams::kLengthHi);
  std::uniform_real_distribution<double> ur(ShapeParams::kLenRatioLo, ShapeParams::kLenRatioHi);
  std::uniform_real_distribution<double> uh(ShapeParams::kThickRatioLo,
                                            ShapeParams::kThickRatioHi);
  double worst_force = 0.0, worst_sym = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const ShapeParams p(ul(rng), ur(rng), uh(rng));
    const auto dims = expand_shape(p);
    const auto patch = build_patch(dims, {3, 3}, {6, 6});
    try {
      const DeviceModel model = assemble(patch, dims, MaterialSet::bronze_pzt5a(), 1000.0);
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(model.mass.rows());
      worst_force = std::max(worst_force,
                             (model.force - model.mass * ones).norm() / model.force.norm());
      worst_sym = std::max(
          worst_sym, (model.mass - model.mass.transpose()).cwiseAbs().maxCoeff() /
                         model.mass.cwiseAbs().maxCoeff());
      worst_sym = std::max(
          worst_sym, (model.stiffness - model.stiffness.transpose()).cwiseAbs().maxCoeff() /
                         model.stiffness.cwiseAbs().maxCoeff());
      // assemble() already proves SPD of the clamped M and K by Cholesky.
    } catch (const std::exception& e) {
      return {false, std::string("assembly failed (SPD?): ") + e.what()};
    }
  }
  std::ostringstream os;
  os << "max |F - M*1|/|F| = " << worst_force << ", max asymmetry = " << worst_sym
     << " over 50 shapes";
  return {worst_force < 1e-10 && worst_sym < 1e-12, os.str()};
}

// --- 4. MOR fidelity: identity at K = N, 0.1% at K = 5 below 15 Hz ---
Outcome criterion_mor_fidelity() {
  const auto dims = expand_shape(ShapeParams(0.3, 0.5, 0.2));
  const auto small_patch = build_patch(dims, {3, 3}, {4, 4});
  const auto small = assemble(small_patch, dims, MaterialSet::bronze_pzt5a(), 1000.0);
  const auto red_all = solve_modes(small, small.num_free());

  std::vector<double> sweep(200);
  for (int i = 0; i < 200; ++i) sweep[i] = 0.25 + 0.25 * i;  // 0.25..50 Hz
  const auto h_red = frf(red_all, sweep);
  const auto h_full = frf_full(small, sweep);
  double peak = 0.0, worst_identity = 0.0;
  for (int i = 0; i < 200; ++i) peak = std::max(peak, std::abs(h_full.values[i]));
  for (int i = 0; i < 200; ++i)
    worst_identity =
        std::max(worst_identity, std::abs(h_red.values[i] - h_full.values[i]) / peak);

  const auto patch = build_patch(dims, {3, 3}, {8, 8});
  const auto model = assemble(patch, dims, MaterialSet::bronze_pzt5a(), 1000.0);
  const auto red5 = solve_modes(model, 5);
  std::vector<double> low(200);
  for (int i = 0; i < 200; ++i) low[i] = 0.075 + 0.075 * i;  // 0.075..15 Hz
  const auto h5 = frf(red5, low);
  const auto hf = frf_full(model, low);
  double worst_trunc = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double rel = std::abs(std::abs(h5.values[i]) - std::abs(hf.values[i])) /
                       std::abs(hf.values[i]);
    worst_trunc = std::max(worst_trunc, rel);
  }
  std::ostringstream os;
  os << "K=N max error = " << worst_identity << " (vs 1e-8), K=5 max rel below 15 Hz = "
     << worst_trunc << " (vs 1e-3)";
  return {worst_identity < 1e-8 && worst_trunc < 1e-3, os.str()};
}

// --- 5. FRF / time-domain consistency ---
Outcome criterion_frf_time_consistency() {
  const auto dims = expand_shape(ShapeParams(0.3, 0.5, 0.2));
  const auto patch = build_patch(dims, {3, 3}, {6, 6});
  const auto red = solve_modes(assemble(patch, dims, MaterialSet::bronze_pzt5a(), 1000.0), 5);

  double worst_amp = 0.0;
  for (double f0 : {3.0, 6.0, 9.0}) {
    const auto w = oracles::tone_window(f0, 0.8, 8.0, 500.0);
    const auto sim = simulate(red, w);
    double steady = 0.0;
    for (size_t i = w.samples.size() * 3 / 4; i < w.samples.size(); ++i)
      steady = std::max(steady, std::abs(sim.voltage[i]));
    const double expected = std::abs(frf_at(red, f0)) * 0.8;
    worst_amp = std::max(worst_amp, std::abs(steady - expected) / expected);
  }

  double worst_energy = 0.0;
  for (std::uint64_t seed : {11ull, 42ull, 137ull}) {
    const auto w = oracles::multitone_window(seed, 0.3, 12.0, 60, 0.05, 60.0, 400.0);
    const double e_time = simulate(red, w).energy_joule;
    const double e_spec = energy_spectral(red, w);
    worst_energy = std::max(worst_energy, std::abs(e_spec - e_time) / e_time);
  }
  std::ostringstream os;
  os << "max steady-state amplitude error = " << worst_amp
     << " (vs 0.01), max spectral-vs-time energy error = " << worst_energy << " (vs 0.05)";
  return {worst_amp < 0.01 && worst_energy < 0.05, os.str()};
}

// --- 6. Tuning reproduction with a grid-search oracle ---
Outcome criterion_tuning() {
  const ModelSettings settings;  // default 8x8 cubic, 5 modes
  const double tone = 2.5;
  const auto window = oracles::tone_window(tone, 1.0, 40.0, 200.0);

  PsoConfig pso;
  pso.seed = 7;
  pso.threads = 2;
  const OptResult res = optimize(window, pso, settings);

  const auto spec = window_spectrum(window);
  const auto grid = oracles::grid_search_energy(settings, spec, 30, 2);

  const double tune_err = std::abs(res.fundamental_frequency_hz - tone) / tone;
  const double dominance = res.best_energy_joule / grid.best_energy;
  std::ostringstream os;
  os << "PSO f1 = " << res.fundamental_frequency_hz << " Hz (tone " << tone
     << ", rel " << tune_err << "), PSO/grid best = " << dominance;
  return {tune_err < 0.05 && dominance >= 0.99, os.str()};
}

// --- 7. Clustering reproduction ---
Outcome criterion_clustering() {
  ModelSettings settings;
  settings.elements = {4, 4};
  settings.num_modes = 3;

  auto fake = [](double a, double b, double c, int i) {
    OptResult r;
    r.best = ShapeParams(a, b, c);
    r.fundamental_frequency_hz = 100.0 * a;
    r.window_id = "A2@" + std::to_string(i) + "s";
    r.location_id = "A2";
    r.window_start_s = i;
    return r;
  };

  // Three blobs, separation ~5x spread.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.008);
  const double centers[3][3] = {{0.15, 0.3, 0.1}, {0.3, 0.6, 0.25}, {0.45, 0.9, 0.4}};
  std::vector<OptResult> blobs;
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 8; ++i)
      blobs.push_back(fake(centers[b][0] + noise(rng), centers[b][1] + noise(rng),
                           centers[b][2] + noise(rng), static_cast<int>(blobs.size())));
  const auto [cands3, rep3] = select_candidates(blobs, settings);

  std::vector<OptResult> same;
  for (int i = 0; i < 24; ++i) same.push_back(fake(0.3, 0.5, 0.2, i));
  const auto [cands1, rep1] = select_candidates(same, settings);

  auto shuffled = blobs;
  std::mt19937_64 shuffle_rng(99);
  std::shuffle(shuffled.begin(), shuffled.end(), shuffle_rng);
  const auto [cands_p, rep_p] = select_candidates(shuffled, settings);
  std::vector<double> la, lb;
  for (const auto& c : cands3) la.push_back(c.centroid.length);
  for (const auto& c : cands_p) lb.push_back(c.centroid.length);
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  bool permutation_ok = rep3.k_chosen == rep_p.k_chosen && la.size() == lb.size();
  for (size_t i = 0; permutation_ok && i < la.size(); ++i)
    permutation_ok = std::abs(la[i] - lb[i]) < 1e-12;

  std::ostringstream os;
  os << "three blobs k = " << rep3.k_chosen << " (want 3), coincident k = " << rep1.k_chosen
     << " (want 1), permutation invariant = " << (permutation_ok ? "yes" : "no");
  return {rep3.k_chosen == 3 && rep1.k_chosen == 1 && permutation_ok, os.str()};
}

// --- 8. Traffic effect: energy ordering and count-energy correlation ---
Outcome criterion_traffic_effect() {
  BridgeModel bridge;
  bridge.sensors["mid"] = 23.0;
  ModelSettings settings;
  settings.elements = {6, 6};

  const double rates[3] = {5.0, 15.0, 25.0};
  // Windows long enough that per-window Poisson counts separate the classes.
  const double duration = 2700.0, rate_hz = 150.0;

  // One best device, tuned on a medium-traffic window.
  TrafficSpec tune_spec;
  tune_spec.arrival_rate_per_hour = 15.0;
  tune_spec.seed = 5005;
  const auto tune_window = synthesize(bridge, tune_spec, "mid", duration, rate_hz);
  PsoConfig pso;
  pso.seed = 17;
  pso.threads = 2;
  pso.swarm_size = 14;
  pso.max_iterations = 25;
  const OptResult best = optimize(tune_window, pso, settings);
  const ReducedModel device = settings.reduce(best.best);

  std::vector<double> counts, energies;
  double mean_energy[3] = {0.0, 0.0, 0.0};
  for (int seed = 0; seed < 20; ++seed) {
    for (int cls = 0; cls < 3; ++cls) {
      TrafficSpec t;
      t.arrival_rate_per_hour = rates[cls];
      t.seed = 9000 + static_cast<std::uint64_t>(seed * 3 + cls);
      const auto w = synthesize(bridge, t, "mid", duration, rate_hz);
      const double e = simulate(device, w).energy_joule;
      counts.push_back(count_vehicles(w));
      energies.push_back(e);
      mean_energy[cls] += e / 20.0;
    }
  }
  const double corr = spearman(counts, energies);
  const bool ordered = mean_energy[0] < mean_energy[1] && mean_energy[1] < mean_energy[2];
  std::ostringstream os;
  os << "mean energy Low/Med/High = " << mean_energy[0] << " / " << mean_energy[1] << " / "
     << mean_energy[2] << " J, spearman = " << corr;
  return {ordered && corr > 0.7, os.str()};
}

// --- 9. Location effect under mode-1-dominant traffic ---
Outcome criterion_location_effect() {
  CampaignConfig config;
  config.locations = {"midspan", "near_support"};
  config.bridge.sensors["midspan"] = 23.0;
  config.bridge.sensors["near_support"] = 2.76;  // 6% of the span
  config.windows.count = 24;
  config.windows.duration_s = 120.0;
  config.windows.sample_rate_hz = 150.0;
  // Mode-1-dominant: passenger bounce band around f1, no heavy vehicles.
  config.traffic.arrival_rate_per_hour = 60.0;
  config.traffic.car_bounce_hz = {1.8, 2.2};
  config.traffic.truck_share_base = 0.0;
  config.traffic.truck_share_per_rate = 0.0;
  config.pso.swarm_size = 12;
  config.pso.max_iterations = 15;
  config.model.elements = {6, 6};
  config.seed = 31;
  config.threads = 2;

  const CampaignReport report = run_campaign(config);
  double e_mid = -1.0, e_support = -1.0;
  std::string status;
  for (const auto& loc : report.locations) {
    if (loc.status != "ok") status += loc.location_id + ": " + loc.status + "; ";
    if (loc.best_candidate_index < 0) continue;
    const double e = loc.candidates[loc.best_candidate_index].energy_24h_joule;
    (loc.location_id == "midspan" ? e_mid : e_support) = e;
  }
  if (!status.empty()) return {false, status};
  const double ratio = e_mid / e_support;
  std::ostringstream os;
  os << "best 24-h energy midspan = " << e_mid << " J, near support = " << e_support
     << " J, ratio = " << ratio << " (want >= 2)";
  return {ratio >= 2.0, os.str()};
}

// --- 10. Byte-identical campaign reruns ---
Outcome criterion_reproducibility() {
  CampaignConfig config;
  config.locations = {"mid"};
  config.bridge.sensors["mid"] = 23.0;
  config.windows.count = 3;
  config.windows.duration_s = 30.0;
  config.windows.sample_rate_hz = 150.0;
  config.traffic.arrival_rate_per_hour = 60.0;
  config.pso.swarm_size = 8;
  config.pso.max_iterations = 8;
  config.model.elements = {5, 5};
  config.model.num_modes = 4;
  config.seed = 77;
  config.threads = 2;

  const std::string a = run_campaign(config).to_json();
  const std::string b = run_campaign(config).to_json();
  std::ostringstream os;
  os << "report bytes = " << a.size() << ", reruns identical = " << (a == b ? "yes" : "no");
  return {a == b && !a.empty(), os.str()};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "discretization vs Rayleigh-Ritz oracle", criterion_substrate_plate},
      {2, "composite-beam frequency", criterion_composite_beam},
      {3, "matrix identities (50 random shapes)", criterion_matrix_identities},
      {4, "modal reduction fidelity", criterion_mor_fidelity},
      {5, "FRF/time-domain consistency", criterion_frf_time_consistency},
      {6, "tuning vs grid-search oracle", criterion_tuning},
      {7, "clustering reproduction", criterion_clustering},
      {8, "traffic-volume effect", criterion_traffic_effect},
      {9, "location effect", criterion_location_effect},
      {10, "campaign reproducibility", criterion_reproducibility},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.number != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s — %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.number,
                c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures;
}
