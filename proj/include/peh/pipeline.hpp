#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "peh/cluster.hpp"
#include "peh/excitation.hpp"
#include "peh/optimizer.hpp"

namespace peh {

struct WindowPlan {
  int count = 24;
  double duration_s = 3600.0;
  double sample_rate_hz = 600.0;
  std::string source = "synthetic";              // "synthetic" | "csv"
  std::map<std::string, std::string> csv_paths;  // per location, when source == "csv"
};

struct CampaignConfig {
  std::vector<std::string> locations;  // sensor ids; positions come from bridge.sensors
  WindowPlan windows;
  BridgeModel bridge;
  TrafficSpec traffic;
  std::vector<double> window_rates;  // optional diurnal arrival-rate profile, cycled
  PsoConfig pso;
  ClusterConfig clustering;
  ModelSettings model;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = "out";

  void validate() const;
  static CampaignConfig from_json(const std::string& text);
  static CampaignConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

struct WindowTrafficRow {
  std::string window_id;
  double start_s = 0;
  int vehicle_count = 0;
  TrafficClass traffic_class = TrafficClass::kLow;
  double best_device_energy_joule = 0;
};

struct TrafficTable {
  std::vector<WindowTrafficRow> rows;
  double spearman_count_energy = 0;
};

struct LocationReport {
  std::string location_id;
  std::string status = "ok";  // "ok" or the failure description
  std::vector<OptResult> optima;
  std::vector<std::string> optimize_failures;
  std::vector<std::string> warnings;  // e.g. ingest notes
  std::vector<DesignCandidate> candidates;
  ClusteringReport clustering;
  int best_candidate_index = -1;
  TrafficTable traffic;
};

struct CampaignReport {
  std::vector<LocationReport> locations;  // sorted by location id
  std::vector<std::pair<std::string, double>> ranking;  // best 24-h energy, descending
  std::map<std::string, int> candidate_type;  // location -> global design-type id
  std::string to_json() const;
};

/// Windows for one location per the config plan (synthetic generation or CSV
/// ingestion). Synthetic windows are seeded per (campaign seed, location,
/// window index) and are reproducible.
std::vector<AccelerationWindow> acquire_windows(const CampaignConfig& config,
                                                const std::string& location,
                                                std::vector<std::string>* warnings = nullptr);

/// Full campaign: windows -> per-window optimization -> clustering -> 24-h
/// candidate evaluation -> best design and location ranking. Failures are
/// isolated per location.
CampaignReport run_campaign(const CampaignConfig& config);

/// Vehicle count, traffic class, and best-device energy per window. The best
/// device is found with one swarm run on the highest-RMS window; energies use
/// the spectral surrogate.
TrafficTable traffic_report(const CampaignConfig& config,
                            const std::vector<AccelerationWindow>& windows);

/// Spearman rank correlation with average-rank tie handling.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Writes campaign_report.json, per-location artifacts, plots, and a
/// manifest.json with per-file and per-stage hashes under config.output_dir.
void write_campaign_outputs(const CampaignReport& report, const CampaignConfig& config);

/// Deterministic SVG plots (FRF overlays, silhouette-vs-k, energy bubble
/// chart, parameter scatter) with one CSV sidecar per plot.
void emit_plots(const CampaignReport& report, const std::string& out_dir);

/// Long-format iteration traces: window_id,iteration,best_energy_joule.
std::string optima_traces_csv(const std::vector<OptResult>& optima);

// JSON round-trips used by the CLI stages.
std::string optima_to_json(const std::vector<OptResult>& optima,
                           const std::vector<std::string>& failures);
std::pair<std::vector<OptResult>, std::vector<std::string>> optima_from_json(
    const std::string& text);
std::string candidates_to_json(const std::vector<DesignCandidate>& candidates,
                               const ClusteringReport& report);
std::pair<std::vector<DesignCandidate>, ClusteringReport> candidates_from_json(
    const std::string& text);

/// FNV-1a 64-bit content hash, hex-encoded; used for manifests and design ids.
std::string content_hash(const std::string& bytes);

}  // namespace peh
