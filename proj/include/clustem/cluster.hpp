#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace clustem {

using Point = std::vector<double>;

double squared_distance(const Point& a, const Point& b);

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  // Stop once the summed squared movement of all centers falls below this.
  double tolerance = 1e-4;
};

struct ClusterAssignment {
  std::vector<int> labels;
  std::vector<Point> centers;
  double inertia = 0.0;
  // Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_trace;
  // Number of times an empty cluster was refilled in the winning restart.
  int empty_cluster_repairs = 0;
  int winning_restart = 0;
};

// Lloyd's algorithm from greedy k-means++ seeding, best of `restarts` runs
// by (inertia, restart index). Always returns exactly n_clusters non-empty
// clusters. Throws ArgumentError / ConsistencyError on bad input.
ClusterAssignment kmeans(std::span<const Point> points, int n_clusters, std::uint64_t seed,
                         const KMeansOptions& options = {});

// Ward cost of merging clusters a and b: |A||B|/(|A|+|B|) * ||mu_A - mu_B||^2.
double ward_delta(std::size_t size_a, const Point& mean_a, std::size_t size_b, const Point& mean_b);

struct WardCluster {
  int id = 0;
  std::vector<std::size_t> members;
  Point centroid;
};

struct MergeStep {
  int left = 0;   // smaller cluster id
  int right = 0;  // larger cluster id
  double delta = 0.0;

  bool operator==(const MergeStep&) const = default;
};

// Cheapest Ward merge among the given clusters; ties go to the smallest
// (left, right) id pair. Throws ArgumentError with fewer than two clusters.
MergeStep ward_merge(std::span<const WardCluster> clusters);

// Full Ward merge sequence. Leaves carry ids 0..n-1; the cluster created by
// step s gets id n+s. Deterministic; `seed` is accepted for interface
// symmetry with kmeans and does not influence the result.
std::vector<MergeStep> agglomerate(std::span<const Point> points, std::uint64_t seed = 0);

// Flat labels after applying the first `steps` merges of a sequence to n
// leaves. Labels are renumbered 0.. in order of first appearance.
std::vector<int> cut_merges(std::size_t n, std::span<const MergeStep> merges, std::size_t steps);

}  // namespace clustem
