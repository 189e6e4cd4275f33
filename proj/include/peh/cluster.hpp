#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "peh/optimizer.hpp"

namespace peh {

struct KmeansResult {
  Eigen::MatrixXd centroids;  // k x dim
  std::vector<int> assignments;
  double inertia = 0;              // within-cluster sum of squares
  std::vector<double> wcss_trace;  // per Lloyd iteration of the winning restart
};

/// Lloyd's algorithm with k-means++ seeding, best of 10 restarts. Empty
/// clusters are reseeded at the point farthest from its centroid.
KmeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

enum class InterClusterDistance {
  kMin,   // standard silhouette: nearest other cluster
  kMean,  // pooled mean distance to every point outside the own cluster
};

struct SilhouetteResult {
  double mean = 0;
  std::vector<double> per_sample;
};

/// Per-sample s = (b - a) / max(a, b). Singletons score 0; coincident points
/// with a = b = 0 score 0; a = 0 < b scores 1.
SilhouetteResult silhouette(const Eigen::MatrixXd& points, const std::vector<int>& assignments,
                            InterClusterDistance mode = InterClusterDistance::kMin);

struct ClusterConfig {
  int max_clusters = 6;
  double single_cluster_floor = 0.5;  // below this mean silhouette, keep one candidate
  bool include_frequency_feature = false;
  InterClusterDistance inter_cluster = InterClusterDistance::kMin;
};

/// Cluster-centroid design with its re-analyzed dynamic signature.
struct DesignCandidate {
  ShapeParams centroid;
  std::vector<std::string> member_window_ids;
  double fundamental_frequency_hz = 0;
  double frf_peak_frequency_hz = 0;
  double frf_peak_magnitude = 0;
  std::vector<double> frf_frequencies_hz;  // dense curve kept for reporting
  std::vector<double> frf_magnitude;
  std::vector<double> window_energies_joule;  // filled during 24-h evaluation
  double energy_24h_joule = 0;                // filled during 24-h evaluation
};

struct ClusteringReport {
  int k_chosen = 1;
  std::vector<std::pair<int, double>> silhouette_by_k;
  std::vector<int> assignments;  // per optimum, in input order
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_std;
};

/// Groups per-window optima by k-means on z-scored (L, l, H), selects k by
/// mean silhouette over 2..min(6, n-1), and falls back to a single mean
/// candidate when separation is weak. Centroids are clamped to the design
/// bounds and re-analyzed for frequency and FRF summary.
std::pair<std::vector<DesignCandidate>, ClusteringReport> select_candidates(
    const std::vector<OptResult>& optima, const ModelSettings& settings,
    const ClusterConfig& config = {});

}  // namespace peh
