#include "peh/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "peh/errors.hpp"
#include "peh/parallel.hpp"
#include "peh/response.hpp"

namespace peh {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::uint64_t fnv1a_bytes(const void* data, std::size_t len,
                          std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag, std::uint64_t index = 0) {
  std::uint64_t h = fnv1a_bytes(&seed, sizeof(seed));
  h = fnv1a_bytes(tag.data(), tag.size(), h);
  h = fnv1a_bytes(&index, sizeof(index), h);
  return h;
}

json shape_to_json(const ShapeParams& p) {
  return json{{"length_m", p.length},
              {"piezo_length_ratio", p.piezo_length_ratio},
              {"piezo_thickness_ratio", p.piezo_thickness_ratio},
              {"aspect_ratio", p.aspect_ratio},
              {"thickness_m", p.thickness}};
}

ShapeParams shape_from_json(const json& j) {
  return ShapeParams(j.at("length_m").get<double>(), j.at("piezo_length_ratio").get<double>(),
                     j.at("piezo_thickness_ratio").get<double>(),
                     j.at("aspect_ratio").get<double>(), j.at("thickness_m").get<double>());
}

json opt_to_json(const OptResult& r) {
  json j;
  j["location_id"] = r.location_id;
  j["window_id"] = r.window_id;
  j["window_start_s"] = r.window_start_s;
  j["best"] = shape_to_json(r.best);
  j["best_energy_joule"] = r.best_energy_joule;
  j["best_energy_time_domain_joule"] = r.best_energy_time_domain_joule;
  j["fundamental_frequency_hz"] = r.fundamental_frequency_hz;
  j["trace"] = r.trace;
  j["warnings"] = r.warnings;
  return j;
}

OptResult opt_from_json(const json& j) {
  OptResult r;
  r.location_id = j.at("location_id").get<std::string>();
  r.window_id = j.at("window_id").get<std::string>();
  r.window_start_s = j.at("window_start_s").get<double>();
  r.best = shape_from_json(j.at("best"));
  r.best_energy_joule = j.at("best_energy_joule").get<double>();
  r.best_energy_time_domain_joule = j.at("best_energy_time_domain_joule").get<double>();
  r.fundamental_frequency_hz = j.at("fundamental_frequency_hz").get<double>();
  r.trace = j.at("trace").get<std::vector<double>>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

json candidate_to_json(const DesignCandidate& c) {
  json j;
  j["centroid"] = shape_to_json(c.centroid);
  j["member_window_ids"] = c.member_window_ids;
  j["fundamental_frequency_hz"] = c.fundamental_frequency_hz;
  j["frf_peak_frequency_hz"] = c.frf_peak_frequency_hz;
  j["frf_peak_magnitude"] = c.frf_peak_magnitude;
  j["frf_frequencies_hz"] = c.frf_frequencies_hz;
  j["frf_magnitude"] = c.frf_magnitude;
  j["window_energies_joule"] = c.window_energies_joule;
  j["energy_24h_joule"] = c.energy_24h_joule;
  return j;
}

DesignCandidate candidate_from_json(const json& j) {
  DesignCandidate c;
  c.centroid = shape_from_json(j.at("centroid"));
  c.member_window_ids = j.at("member_window_ids").get<std::vector<std::string>>();
  c.fundamental_frequency_hz = j.at("fundamental_frequency_hz").get<double>();
  c.frf_peak_frequency_hz = j.at("frf_peak_frequency_hz").get<double>();
  c.frf_peak_magnitude = j.at("frf_peak_magnitude").get<double>();
  c.frf_frequencies_hz = j.at("frf_frequencies_hz").get<std::vector<double>>();
  c.frf_magnitude = j.at("frf_magnitude").get<std::vector<double>>();
  c.window_energies_joule = j.at("window_energies_joule").get<std::vector<double>>();
  c.energy_24h_joule = j.at("energy_24h_joule").get<double>();
  return c;
}

json clustering_to_json(const ClusteringReport& r) {
  json j;
  j["k_chosen"] = r.k_chosen;
  json sil = json::array();
  for (const auto& [k, s] : r.silhouette_by_k) sil.push_back(json::array({k, s}));
  j["silhouette_by_k"] = sil;
  j["assignments"] = r.assignments;
  j["feature_mean"] = std::vector<double>(r.feature_mean.data(),
                                          r.feature_mean.data() + r.feature_mean.size());
  j["feature_std"] =
      std::vector<double>(r.feature_std.data(), r.feature_std.data() + r.feature_std.size());
  return j;
}

ClusteringReport clustering_from_json(const json& j) {
  ClusteringReport r;
  r.k_chosen = j.at("k_chosen").get<int>();
  for (const auto& e : j.at("silhouette_by_k"))
    r.silhouette_by_k.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
  r.assignments = j.at("assignments").get<std::vector<int>>();
  const auto fm = j.at("feature_mean").get<std::vector<double>>();
  const auto fstd = j.at("feature_std").get<std::vector<double>>();
  r.feature_mean = Eigen::Map<const Eigen::VectorXd>(fm.data(), fm.size());
  r.feature_std = Eigen::Map<const Eigen::VectorXd>(fstd.data(), fstd.size());
  return r;
}

json model_to_json(const ModelSettings& m) {
  json j;
  j["degrees"] = {m.degrees.first, m.degrees.second};
  j["elements"] = {m.elements.first, m.elements.second};
  j["modes"] = m.num_modes;
  j["load_resistance_ohm"] = m.load_resistance_ohm;
  j["aspect_ratio"] = m.aspect_ratio;
  j["total_thickness_m"] = m.total_thickness_m;
  j["materials"] = json::parse(m.materials.to_json());
  j["coupling_z_weight"] =
      m.coupling_z_weight == CouplingZWeight::kFirstMoment ? "first_moment" : "z_squared";
  return j;
}

ModelSettings model_from_json(const json& j) {
  ModelSettings m;
  if (j.contains("degrees"))
    m.degrees = {j["degrees"].at(0).get<int>(), j["degrees"].at(1).get<int>()};
  if (j.contains("elements"))
    m.elements = {j["elements"].at(0).get<int>(), j["elements"].at(1).get<int>()};
  if (j.contains("modes")) m.num_modes = j["modes"].get<int>();
  if (j.contains("load_resistance_ohm"))
    m.load_resistance_ohm = j["load_resistance_ohm"].get<double>();
  if (j.contains("aspect_ratio")) m.aspect_ratio = j["aspect_ratio"].get<double>();
  if (j.contains("total_thickness_m")) m.total_thickness_m = j["total_thickness_m"].get<double>();
  if (j.contains("materials")) m.materials = MaterialSet::from_json(j["materials"].dump());
  if (j.contains("coupling_z_weight")) {
    const auto s = j["coupling_z_weight"].get<std::string>();
    if (s == "first_moment")
      m.coupling_z_weight = CouplingZWeight::kFirstMoment;
    else if (s == "z_squared")
      m.coupling_z_weight = CouplingZWeight::kZSquared;
    else
      throw ValidationError("unknown coupling_z_weight '" + s + "'");
  }
  return m;
}

json pso_to_json(const PsoConfig& p) {
  return json{{"swarm_size", p.swarm_size},
              {"max_iterations", p.max_iterations},
              {"inertia", p.inertia},
              {"cognitive", p.cognitive},
              {"social", p.social},
              {"convergence_tol", p.convergence_tol},
              {"convergence_window", p.convergence_window}};
}

PsoConfig pso_from_json(const json& j) {
  PsoConfig p;
  if (j.contains("swarm_size")) p.swarm_size = j["swarm_size"].get<int>();
  if (j.contains("max_iterations")) p.max_iterations = j["max_iterations"].get<int>();
  if (j.contains("inertia")) p.inertia = j["inertia"].get<double>();
  if (j.contains("cognitive")) p.cognitive = j["cognitive"].get<double>();
  if (j.contains("social")) p.social = j["social"].get<double>();
  if (j.contains("convergence_tol")) p.convergence_tol = j["convergence_tol"].get<double>();
  if (j.contains("convergence_window")) p.convergence_window = j["convergence_window"].get<int>();
  return p;
}

json cluster_cfg_to_json(const ClusterConfig& c) {
  return json{{"max_clusters", c.max_clusters},
              {"single_cluster_floor", c.single_cluster_floor},
              {"include_frequency_feature", c.include_frequency_feature},
              {"inter_cluster", c.inter_cluster == InterClusterDistance::kMin ? "min" : "mean"}};
}

ClusterConfig cluster_cfg_from_json(const json& j) {
  ClusterConfig c;
  if (j.contains("max_clusters")) c.max_clusters = j["max_clusters"].get<int>();
  if (j.contains("single_cluster_floor"))
    c.single_cluster_floor = j["single_cluster_floor"].get<double>();
  if (j.contains("include_frequency_feature"))
    c.include_frequency_feature = j["include_frequency_feature"].get<bool>();
  if (j.contains("inter_cluster")) {
    const auto s = j["inter_cluster"].get<std::string>();
    if (s == "min")
      c.inter_cluster = InterClusterDistance::kMin;
    else if (s == "mean")
      c.inter_cluster = InterClusterDistance::kMean;
    else
      throw ValidationError("unknown inter_cluster mode '" + s + "'");
  }
  return c;
}

}  // namespace

void CampaignConfig::validate() const {
  if (locations.empty()) throw ValidationError("campaign needs at least one location");
  if (!(windows.duration_s > 0)) throw ValidationError("window duration must be positive");
  if (!(windows.sample_rate_hz > 0)) throw ValidationError("sample rate must be positive");
  if (windows.count < 1) throw ValidationError("window count must be at least 1");
  if (windows.source != "synthetic" && windows.source != "csv")
    throw ValidationError("window source must be 'synthetic' or 'csv'");
  bridge.validate();
  traffic.validate();
  pso.validate();
  if (windows.source == "synthetic") {
    for (const auto& loc : locations)
      if (!bridge.sensors.count(loc) && !bridge.mode_table.count(loc))
        throw ValidationError("location '" + loc + "' missing from bridge sensors");
  } else {
    for (const auto& loc : locations) {
      auto it = windows.csv_paths.find(loc);
      if (it == windows.csv_paths.end())
        throw ValidationError("location '" + loc + "' has no csv path");
      if (!fs::exists(it->second))
        throw ValidationError("csv file '" + it->second + "' does not exist");
    }
  }
}

CampaignConfig CampaignConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("campaign config: ") + e.what());
  }
  CampaignConfig c;
  if (j.contains("locations")) c.locations = j["locations"].get<std::vector<std::string>>();
  if (j.contains("windows")) {
    const auto& w = j["windows"];
    if (w.contains("count")) c.windows.count = w["count"].get<int>();
    if (w.contains("duration_s")) c.windows.duration_s = w["duration_s"].get<double>();
    if (w.contains("sample_rate_hz")) c.windows.sample_rate_hz = w["sample_rate_hz"].get<double>();
    if (w.contains("source")) c.windows.source = w["source"].get<std::string>();
    if (w.contains("csv_paths"))
      for (auto& [k, v] : w["csv_paths"].items()) c.windows.csv_paths[k] = v.get<std::string>();
  }
  if (j.contains("bridge")) c.bridge = BridgeModel::from_json(j["bridge"].dump());
  if (j.contains("traffic")) c.traffic = TrafficSpec::from_json(j["traffic"].dump());
  if (j.contains("window_rates")) c.window_rates = j["window_rates"].get<std::vector<double>>();
  if (j.contains("pso")) c.pso = pso_from_json(j["pso"]);
  if (j.contains("clustering")) c.clustering = cluster_cfg_from_json(j["clustering"]);
  if (j.contains("model")) c.model = model_from_json(j["model"]);
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) c.threads = j["threads"].get<int>();
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  return c;
}

CampaignConfig CampaignConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string CampaignConfig::to_json() const {
  json j;
  j["locations"] = locations;
  j["windows"] = {{"count", windows.count},
                  {"duration_s", windows.duration_s},
                  {"sample_rate_hz", windows.sample_rate_hz},
                  {"source", windows.source}};
  if (!windows.csv_paths.empty()) {
    j["windows"]["csv_paths"] = json::object();
    for (const auto& [k, v] : windows.csv_paths) j["windows"]["csv_paths"][k] = v;
  }
  j["bridge"] = json::parse(bridge.to_json());
  j["traffic"] = json::parse(traffic.to_json());
  if (!window_rates.empty()) j["window_rates"] = window_rates;
  j["pso"] = pso_to_json(pso);
  j["clustering"] = cluster_cfg_to_json(clustering);
  j["model"] = model_to_json(model);
  j["seed"] = seed;
  j["threads"] = threads;
  j["output_dir"] = output_dir;
  return j.dump(2);
}

std::vector<AccelerationWindow> acquire_windows(const CampaignConfig& config,
                                                const std::string& location,
                                                std::vector<std::string>* warnings) {
  std::vector<AccelerationWindow> windows;
  if (config.windows.source == "csv") {
    auto it = config.windows.csv_paths.find(location);
    if (it == config.windows.csv_paths.end())
      throw ValidationError("no csv path for location '" + location + "'");
    windows = ingest_csv(it->second, location, config.windows.duration_s, warnings);
    if (static_cast<int>(windows.size()) > config.windows.count)
      windows.resize(config.windows.count);
    return windows;
  }
  windows.reserve(config.windows.count);
  for (int i = 0; i < config.windows.count; ++i) {
    TrafficSpec t = config.traffic;
    t.seed = mix_seed(config.seed, location, static_cast<std::uint64_t>(i));
    if (!config.window_rates.empty())
      t.arrival_rate_per_hour = config.window_rates[i % config.window_rates.size()];
    AccelerationWindow w = synthesize(config.bridge, t, location, config.windows.duration_s,
                                      config.windows.sample_rate_hz);
    w.start_time_s = i * config.windows.duration_s;
    windows.push_back(std::move(w));
  }
  return windows;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const size_t n = a.size();
  if (n != b.size() || n < 2) throw ArgumentError("spearman needs two equal series, n >= 2");
  auto ranks = [](const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  double ma = 0, mb = 0;
  for (size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < n; ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

namespace {

TrafficTable build_traffic_table(const std::vector<AccelerationWindow>& windows,
                                 const std::vector<double>& best_energies,
                                 double window_duration_s) {
  TrafficTable table;
  std::vector<double> counts, energies;
  for (size_t i = 0; i < windows.size(); ++i) {
    WindowTrafficRow row;
    row.window_id = windows[i].location_id + "@" + std::to_string(windows[i].start_time_s) + "s";
    row.start_s = windows[i].start_time_s;
    row.vehicle_count = count_vehicles(windows[i]);
    const double per_hour = row.vehicle_count * 3600.0 / window_duration_s;
    row.traffic_class = classify_traffic(per_hour);
    row.best_device_energy_joule = i < best_energies.size() ? best_energies[i] : 0.0;
    counts.push_back(row.vehicle_count);
    energies.push_back(row.best_device_energy_joule);
    table.rows.push_back(std::move(row));
  }
  table.spearman_count_energy = windows.size() >= 2 ? spearman(counts, energies) : 0.0;
  return table;
}

LocationReport process_location(const CampaignConfig& config, const std::string& location,
                                int inner_threads) {
  LocationReport rep;
  rep.location_id = location;
  try {
    std::vector<std::string> warnings;
    std::vector<AccelerationWindow> windows = acquire_windows(config, location, &warnings);
    if (windows.empty()) throw ValidationError("no complete windows for '" + location + "'");

    PsoConfig pso = config.pso;
    pso.seed = mix_seed(config.seed, location, 0x9e3779b97f4a7c15ull);
    OptimizeAllResult oa =
        optimize_all(windows, location, pso, config.model, inner_threads);
    rep.optima = std::move(oa.results);
    rep.optimize_failures = std::move(oa.failures);
    if (rep.optima.empty())
      throw NumericError("every window failed optimization at '" + location + "'");

    auto [cands, clustering] = select_candidates(rep.optima, config.model, config.clustering);
    rep.clustering = std::move(clustering);

    // 24-h record: the same windows, concatenated in start-time order.
    AccelerationWindow record;
    record.location_id = location;
    record.sample_rate_hz = windows.front().sample_rate_hz;
    record.start_time_s = 0.0;
    size_t total = 0;
    for (const auto& w : windows) total += w.samples.size();
    record.samples.reserve(total);
    for (const auto& w : windows)
      record.samples.insert(record.samples.end(), w.samples.begin(), w.samples.end());

    const size_t per_window = windows.front().samples.size();
    for (auto& cand : cands) {
      const ReducedModel red = config.model.reduce(cand.centroid);
      const SimResult sim = simulate(red, record);
      cand.energy_24h_joule = sim.energy_joule;
      cand.window_energies_joule.clear();
      for (size_t w = 0; w < windows.size(); ++w) {
        const size_t lo = w * per_window;
        const size_t hi = std::min(record.samples.size() - 1, (w + 1) * per_window);
        std::vector<double> segment(sim.voltage.begin() + lo, sim.voltage.begin() + hi + 1);
        cand.window_energies_joule.push_back(
            voltage_energy(segment, record.sample_rate_hz, red.load_resistance_ohm));
      }
    }
    rep.candidates = std::move(cands);

    rep.best_candidate_index = 0;
    for (size_t i = 1; i < rep.candidates.size(); ++i)
      if (rep.candidates[i].energy_24h_joule >
          rep.candidates[rep.best_candidate_index].energy_24h_joule)
        rep.best_candidate_index = static_cast<int>(i);
    for (const auto& cand : rep.candidates) {
      if (cand.energy_24h_joule >
          rep.candidates[rep.best_candidate_index].energy_24h_joule)
        throw NumericError("best-candidate dominance violated at '" + location + "'");
    }

    const auto& best = rep.candidates[rep.best_candidate_index];
    rep.traffic = build_traffic_table(windows, best.window_energies_joule,
                                      config.windows.duration_s);
    for (auto& w : warnings) rep.warnings.push_back("ingest: " + w);
  } catch (const std::exception& e) {
    rep.status = e.what();
  }
  return rep;
}

// Groups the per-location best designs into global type ids, ordered by
// ascending fundamental frequency.
std::map<std::string, int> assign_types(const std::vector<LocationReport>& locations) {
  std::map<std::string, int> types;
  std::vector<std::pair<std::string, const DesignCandidate*>> best;
  for (const auto& loc : locations)
    if (loc.status == "ok" && loc.best_candidate_index >= 0)
      best.emplace_back(loc.location_id, &loc.candidates[loc.best_candidate_index]);
  if (best.empty()) return types;
  if (best.size() == 1) {
    types[best[0].first] = 0;
    return types;
  }

  const int n = static_cast<int>(best.size());
  Eigen::MatrixXd feats(n, 3);
  for (int i = 0; i < n; ++i) {
    feats(i, 0) = best[i].second->centroid.length;
    feats(i, 1) = best[i].second->centroid.piezo_length_ratio;
    feats(i, 2) = best[i].second->centroid.piezo_thickness_ratio;
  }
  for (int d = 0; d < 3; ++d) {
    const double mean = feats.col(d).mean();
    const double var = (feats.col(d).array() - mean).square().sum() / n;
    feats.col(d) = (feats.col(d).array() - mean) / (var > 0 ? std::sqrt(var) : 1.0);
  }

  int k_best = 1;
  std::vector<int> assign(n, 0);
  double sil_best = -2.0;
  for (int k = 2; k <= std::min<int>(6, n - 1); ++k) {
    KmeansResult run = kmeans(feats, k, 0xbe57);
    const double s = silhouette(feats, run.assignments).mean;
    if (s > sil_best + 1e-15) {
      sil_best = s;
      k_best = k;
      assign = run.assignments;
    }
  }
  if (sil_best < 0.5) {
    k_best = 1;
    std::fill(assign.begin(), assign.end(), 0);
  }

  // Relabel types by mean member fundamental frequency, ascending.
  std::vector<double> mean_freq(k_best, 0.0);
  std::vector<int> count(k_best, 0);
  for (int i = 0; i < n; ++i) {
    mean_freq[assign[i]] += best[i].second->fundamental_frequency_hz;
    ++count[assign[i]];
  }
  for (int c = 0; c < k_best; ++c) mean_freq[c] /= std::max(count[c], 1);
  std::vector<int> order(k_best);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return mean_freq[a] < mean_freq[b]; });
  std::vector<int> relabel(k_best);
  for (int rank = 0; rank < k_best; ++rank) relabel[order[rank]] = rank;

  for (int i = 0; i < n; ++i) types[best[i].first] = relabel[assign[i]];
  return types;
}

}  // namespace

CampaignReport run_campaign(const CampaignConfig& config) {
  config.validate();

  std::vector<std::string> locations = config.locations;
  std::sort(locations.begin(), locations.end());
  locations.erase(std::unique(locations.begin(), locations.end()), locations.end());

  CampaignReport report;
  report.locations.resize(locations.size());
  const bool parallel_locations = locations.size() > 1 && config.threads > 1;
  const int outer = parallel_locations ? config.threads : 1;
  const int inner = parallel_locations ? 1 : config.threads;
  parallel_for(locations.size(), outer, [&](std::size_t i) {
    report.locations[i] = process_location(config, locations[i], inner);
  });

  for (const auto& loc : report.locations)
    if (loc.status == "ok" && loc.best_candidate_index >= 0)
      report.ranking.emplace_back(loc.location_id,
                                  loc.candidates[loc.best_candidate_index].energy_24h_joule);
  std::sort(report.ranking.begin(), report.ranking.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  report.candidate_type = assign_types(report.locations);
  return report;
}

TrafficTable traffic_report(const CampaignConfig& config,
                            const std::vector<AccelerationWindow>& windows) {
  if (windows.empty()) throw ArgumentError("no windows for traffic report");

  // Best device from one swarm run on the most energetic window.
  size_t loudest = 0;
  double best_rms = -1.0;
  for (size_t i = 0; i < windows.size(); ++i) {
    double ms = 0.0;
    for (double s : windows[i].samples) ms += s * s;
    ms /= std::max<size_t>(windows[i].samples.size(), 1);
    if (ms > best_rms) {
      best_rms = ms;
      loudest = i;
    }
  }
  PsoConfig pso = config.pso;
  pso.seed = mix_seed(config.seed, "traffic_report");
  pso.threads = config.threads;
  const OptResult best = optimize(windows[loudest], pso, config.model);
  const ReducedModel red = config.model.reduce(best.best);

  std::vector<double> energies(windows.size());
  parallel_for(windows.size(), config.threads,
               [&](std::size_t i) { energies[i] = energy_spectral(red, windows[i]); });
  return build_traffic_table(windows, energies, windows.front().duration_s());
}

std::string CampaignReport::to_json() const {
  json j;
  j["locations"] = json::array();
  for (const auto& loc : locations) {
    json l;
    l["location_id"] = loc.location_id;
    l["status"] = loc.status;
    l["optima"] = json::array();
    for (const auto& o : loc.optima) l["optima"].push_back(opt_to_json(o));
    l["optimize_failures"] = loc.optimize_failures;
    l["warnings"] = loc.warnings;
    l["candidates"] = json::array();
    for (const auto& c : loc.candidates) l["candidates"].push_back(candidate_to_json(c));
    if (!loc.candidates.empty()) l["clustering"] = clustering_to_json(loc.clustering);
    l["best_candidate_index"] = loc.best_candidate_index;
    l["traffic"] = json::array();
    for (const auto& row : loc.traffic.rows) {
      l["traffic"].push_back(json{{"window_id", row.window_id},
                                  {"start_s", row.start_s},
                                  {"vehicle_count", row.vehicle_count},
                                  {"class", to_string(row.traffic_class)},
                                  {"best_device_energy_joule", row.best_device_energy_joule}});
    }
    l["spearman_count_energy"] = loc.traffic.spearman_count_energy;
    j["locations"].push_back(std::move(l));
  }
  j["ranking"] = json::array();
  for (const auto& [id, e] : ranking) j["ranking"].push_back(json::array({id, e}));
  j["candidate_type"] = json::object();
  for (const auto& [id, t] : candidate_type) j["candidate_type"][id] = t;
  return j.dump(2);
}

std::string optima_traces_csv(const std::vector<OptResult>& optima) {
  std::ostringstream csv;
  csv << "window_id,iteration,best_energy_joule\n";
  for (const auto& o : optima)
    for (size_t i = 0; i < o.trace.size(); ++i)
      csv << o.window_id << ',' << i << ',' << o.trace[i] << '\n';
  return csv.str();
}

std::string optima_to_json(const std::vector<OptResult>& optima,
                           const std::vector<std::string>& failures) {
  json j;
  j["optima"] = json::array();
  for (const auto& o : optima) j["optima"].push_back(opt_to_json(o));
  j["failures"] = failures;
  return j.dump(2);
}

std::pair<std::vector<OptResult>, std::vector<std::string>> optima_from_json(
    const std::string& text) {
  json j = json::parse(text);
  std::vector<OptResult> optima;
  for (const auto& e : j.at("optima")) optima.push_back(opt_from_json(e));
  return {std::move(optima), j.at("failures").get<std::vector<std::string>>()};
}

std::string candidates_to_json(const std::vector<DesignCandidate>& candidates,
                               const ClusteringReport& report) {
  json j;
  j["candidates"] = json::array();
  for (const auto& c : candidates) j["candidates"].push_back(candidate_to_json(c));
  j["clustering"] = clustering_to_json(report);
  return j.dump(2);
}

std::pair<std::vector<DesignCandidate>, ClusteringReport> candidates_from_json(
    const std::string& text) {
  json j = json::parse(text);
  std::vector<DesignCandidate> cands;
  for (const auto& e : j.at("candidates")) cands.push_back(candidate_from_json(e));
  return {std::move(cands), clustering_from_json(j.at("clustering"))};
}

std::string content_hash(const std::string& bytes) {
  const std::uint64_t h = fnv1a_bytes(bytes.data(), bytes.size());
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

namespace {

void write_file(const fs::path& path, const std::string& content,
                std::vector<std::pair<std::string, std::string>>& manifest,
                const fs::path& root) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << content;
  manifest.emplace_back(fs::relative(path, root).generic_string(), content_hash(content));
}

}  // namespace

void write_campaign_outputs(const CampaignReport& report, const CampaignConfig& config) {
  const fs::path root(config.output_dir);
  fs::create_directories(root);
  std::vector<std::pair<std::string, std::string>> manifest;

  write_file(root / "campaign_report.json", report.to_json(), manifest, root);
  write_file(root / "config_echo.json", config.to_json(), manifest, root);

  for (const auto& loc : report.locations) {
    const fs::path dir = root / loc.location_id;
    write_file(dir / "optima.json", optima_to_json(loc.optima, loc.optimize_failures), manifest,
               root);
    if (!loc.candidates.empty())
      write_file(dir / "candidates.json", candidates_to_json(loc.candidates, loc.clustering),
                 manifest, root);

    std::ostringstream traffic_csv;
    traffic_csv << "window_id,start_s,vehicle_count,class,best_device_energy_joule\n";
    for (const auto& row : loc.traffic.rows) {
      traffic_csv << row.window_id << ',' << row.start_s << ',' << row.vehicle_count << ','
                  << to_string(row.traffic_class) << ',' << row.best_device_energy_joule << '\n';
    }
    write_file(dir / "traffic.csv", traffic_csv.str(), manifest, root);

    std::ostringstream sil_csv;
    sil_csv << "k,mean_silhouette\n";
    for (const auto& [k, s] : loc.clustering.silhouette_by_k) sil_csv << k << ',' << s << '\n';
    write_file(dir / "silhouette_vs_k.csv", sil_csv.str(), manifest, root);
  }

  emit_plots(report, (root / "plots").string());
  for (const auto& entry : fs::recursive_directory_iterator(root / "plots")) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    manifest.emplace_back(fs::relative(entry.path(), root).generic_string(),
                          content_hash(ss.str()));
  }

  std::sort(manifest.begin(), manifest.end());
  json m;
  m["files"] = json::object();
  for (const auto& [path, hash] : manifest) m["files"][path] = hash;
  auto stage_hash = [&](const std::string& needle) {
    std::string acc;
    for (const auto& [path, hash] : manifest)
      if (path.find(needle) != std::string::npos) acc += path + ":" + hash + ";";
    return content_hash(acc);
  };
  m["stages"] = {{"optimize", stage_hash("optima.json")},
                 {"cluster", stage_hash("candidates.json")},
                 {"traffic", stage_hash("traffic.csv")},
                 {"report", stage_hash("campaign_report.json")},
                 {"plots", stage_hash("plots/")}};
  std::ofstream out(root / "manifest.json", std::ios::binary);
  out << m.dump(2);
}

}  // namespace peh
