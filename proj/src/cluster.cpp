#include "peh/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "peh/errors.hpp"
#include "peh/response.hpp"

namespace peh {

namespace {

double sq_dist(const Eigen::MatrixXd& pts, int i, const Eigen::RowVectorXd& c) {
  return (pts.row(i) - c).squaredNorm();
}

KmeansResult lloyd_once(const Eigen::MatrixXd& points, int k, std::mt19937_64& rng) {
  const int n = static_cast<int>(points.rows());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // k-means++ seeding.
  Eigen::MatrixXd centroids(k, points.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  centroids.row(0) = points.row(static_cast<int>(unit(rng) * n) % n);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(points, i, centroids.row(c - 1)));
      total += d2[i];
    }
    int pick = n - 1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(c) = points.row(pick);
  }

  KmeansResult res;
  res.assignments.assign(n, -1);
  std::vector<int> counts(k, 0);

  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    double wcss = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(points, i, centroids.row(0));
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist(points, i, centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      wcss += best_d;
      if (res.assignments[i] != best) {
        res.assignments[i] = best;
        changed = true;
      }
    }
    res.wcss_trace.push_back(wcss);
    if (!changed && iter > 0) break;

    centroids.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      centroids.row(res.assignments[i]) += points.row(i);
      ++counts[res.assignments[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) /= counts[c];
      } else {
        // Reseed an empty cluster at the point farthest from its centroid.
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = sq_dist(points, i, centroids.row(res.assignments[i]));
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.row(c) = points.row(far);
      }
    }
  }

  res.centroids = std::move(centroids);
  res.inertia = res.wcss_trace.back();
  return res;
}

}  // namespace

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k > n) throw ArgumentError("k must lie in [1, number of points]");

  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < 10; ++restart) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(restart));
    KmeansResult r = lloyd_once(points, k, rng);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

SilhouetteResult silhouette(const Eigen::MatrixXd& points, const std::vector<int>& assignments,
                            InterClusterDistance mode) {
  const int n = static_cast<int>(points.rows());
  if (static_cast<int>(assignments.size()) != n)
    throw ArgumentError("one assignment per point required");
  const int k = assignments.empty() ? 0 : *std::max_element(assignments.begin(), assignments.end()) + 1;
  if (k < 2) throw ArgumentError("silhouette is undefined for a single cluster");

  std::vector<int> counts(k, 0);
  for (int a : assignments) {
    if (a < 0) throw ArgumentError("negative cluster assignment");
    ++counts[a];
  }
  for (int c = 0; c < k; ++c)
    if (counts[c] == 0) throw ArgumentError("cluster " + std::to_string(c) + " is empty");

  SilhouetteResult res;
  res.per_sample.resize(n);
  for (int i = 0; i < n; ++i) {
    const int ci = assignments[i];
    if (counts[ci] == 1) {
      res.per_sample[i] = 0.0;  // singleton convention
      continue;
    }
    std::vector<double> mean_dist(k, 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      mean_dist[assignments[j]] += (points.row(i) - points.row(j)).norm();
    }
    const double a = mean_dist[ci] / (counts[ci] - 1);
    double b;
    if (mode == InterClusterDistance::kMin) {
      b = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c)
        if (c != ci) b = std::min(b, mean_dist[c] / counts[c]);
    } else {
      double sum = 0.0;
      int cnt = 0;
      for (int c = 0; c < k; ++c) {
        if (c == ci) continue;
        sum += mean_dist[c];
        cnt += counts[c];
      }
      b = sum / cnt;
    }
    const double m = std::max(a, b);
    res.per_sample[i] = m > 0.0 ? (b - a) / m : 0.0;  // coincident-data convention
  }
  res.mean = std::accumulate(res.per_sample.begin(), res.per_sample.end(), 0.0) / n;
  return res;
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

DesignCandidate analyze_candidate(const ShapeParams& params, const ModelSettings& settings) {
  DesignCandidate cand;
  cand.centroid = params;
  const ReducedModel red = settings.reduce(params);
  cand.fundamental_frequency_hz = red.omega(0) / (2.0 * M_PI);

  // Dense sweep covering the retained band.
  const double f_top = red.omega(red.num_modes() - 1) / (2.0 * M_PI);
  const double f_max = std::min(1.2 * f_top, std::max(30.0, 3.0 * cand.fundamental_frequency_hz));
  const int n_pts = 800;
  std::vector<double> grid(n_pts);
  for (int i = 0; i < n_pts; ++i) grid[i] = f_max * (i + 1) / n_pts;
  const FrfCurve curve = frf(red, grid);
  cand.frf_frequencies_hz = curve.frequencies_hz;
  cand.frf_magnitude.resize(curve.values.size());
  for (size_t i = 0; i < curve.values.size(); ++i) cand.frf_magnitude[i] = curve.magnitude(i);
  cand.frf_peak_frequency_hz = curve.peak_frequency_hz();
  cand.frf_peak_magnitude = curve.peak_magnitude();
  return cand;
}

ShapeParams clamp_to_bounds(double length, double lratio, double hratio,
                            const ModelSettings& settings) {
  return ShapeParams(
      std::clamp(length, ShapeParams::kLengthLo, ShapeParams::kLengthHi),
      std::clamp(lratio, ShapeParams::kLenRatioLo, ShapeParams::kLenRatioHi),
      std::clamp(hratio, ShapeParams::kThickRatioLo, ShapeParams::kThickRatioHi),
      settings.aspect_ratio, settings.total_thickness_m);
}

}  // namespace

std::pair<std::vector<DesignCandidate>, ClusteringReport> select_candidates(
    const std::vector<OptResult>& optima, const ModelSettings& settings,
    const ClusterConfig& config) {
  const int n = static_cast<int>(optima.size());
  if (n == 0) throw ArgumentError("no optima to cluster");

  ClusteringReport report;
  std::vector<DesignCandidate> candidates;

  if (n == 1) {
    DesignCandidate cand = analyze_candidate(optima[0].best, settings);
    cand.member_window_ids.push_back(optima[0].window_id);
    report.k_chosen = 1;
    report.assignments = {0};
    candidates.push_back(std::move(cand));
    return {std::move(candidates), std::move(report)};
  }

  const int dim = config.include_frequency_feature ? 4 : 3;
  Eigen::MatrixXd raw(n, dim);
  for (int i = 0; i < n; ++i) {
    raw(i, 0) = optima[i].best.length;
    raw(i, 1) = optima[i].best.piezo_length_ratio;
    raw(i, 2) = optima[i].best.piezo_thickness_ratio;
    if (dim == 4) raw(i, 3) = optima[i].fundamental_frequency_hz;
  }

  // z-score standardization; degenerate axes keep unit scale.
  report.feature_mean = raw.colwise().mean();
  report.feature_std.resize(dim);
  for (int d = 0; d < dim; ++d) {
    const double var = (raw.col(d).array() - report.feature_mean(d)).square().sum() / n;
    report.feature_std(d) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  Eigen::MatrixXd feats(n, dim);
  for (int d = 0; d < dim; ++d)
    feats.col(d) = (raw.col(d).array() - report.feature_mean(d)) / report.feature_std(d);

  // Canonical point order so the outcome is invariant under input permutation;
  // the k-means seed comes from the sorted feature bytes.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (int d = 0; d < dim; ++d) {
      if (feats(a, d) < feats(b, d)) return true;
      if (feats(a, d) > feats(b, d)) return false;
    }
    return false;
  });
  Eigen::MatrixXd sorted(n, dim);
  for (int i = 0; i < n; ++i) sorted.row(i) = feats.row(order[i]);
  std::uint64_t seed = 1469598103934665603ull;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) {
      const double v = sorted(i, d);
      seed = fnv1a(&v, sizeof(v), seed);
    }

  const int k_hi = std::min(config.max_clusters, n - 1);
  int best_k = 1;
  double best_sil = -2.0;
  KmeansResult best_run;
  for (int k = 2; k <= k_hi; ++k) {
    KmeansResult run = kmeans(sorted, k, seed);
    // Coincident data can leave k-means with fewer occupied clusters than
    // requested; score that k as 0 so the single-candidate path takes over.
    const int occupied =
        *std::max_element(run.assignments.begin(), run.assignments.end()) + 1;
    const double sil =
        occupied < 2 ? 0.0 : silhouette(sorted, run.assignments, config.inter_cluster).mean;
    report.silhouette_by_k.emplace_back(k, sil);
    if (sil > best_sil + 1e-15) {
      best_sil = sil;
      best_k = k;
      best_run = std::move(run);
    }
  }

  if (best_k == 1 || best_sil < config.single_cluster_floor) {
    // Weak separation: one candidate at the mean design.
    report.k_chosen = 1;
    report.assignments.assign(n, 0);
    DesignCandidate cand = analyze_candidate(
        clamp_to_bounds(report.feature_mean(0), report.feature_mean(1), report.feature_mean(2),
                        settings),
        settings);
    for (const auto& o : optima) cand.member_window_ids.push_back(o.window_id);
    candidates.push_back(std::move(cand));
    return {std::move(candidates), std::move(report)};
  }

  report.k_chosen = best_k;
  report.assignments.assign(n, -1);
  for (int i = 0; i < n; ++i) report.assignments[order[i]] = best_run.assignments[i];

  for (int c = 0; c < best_k; ++c) {
    Eigen::RowVectorXd z = best_run.centroids.row(c);
    const double length = z(0) * report.feature_std(0) + report.feature_mean(0);
    const double lratio = z(1) * report.feature_std(1) + report.feature_mean(1);
    const double hratio = z(2) * report.feature_std(2) + report.feature_mean(2);
    DesignCandidate cand =
        analyze_candidate(clamp_to_bounds(length, lratio, hratio, settings), settings);
    for (int i = 0; i < n; ++i)
      if (report.assignments[i] == c) cand.member_window_ids.push_back(optima[i].window_id);
    if (cand.member_window_ids.empty())
      throw NumericError("cluster " + std::to_string(c) + " lost all members");
    candidates.push_back(std::move(cand));
  }
  return {std::move(candidates), std::move(report)};
}

}  // namespace peh
