#include "clustem/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <tuple>

#include "clustem/error.hpp"

namespace clustem {

double squared_distance(const Point& a, const Point& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

namespace {

// Uniform double in [0, 1) built from raw engine bits so the sequence does not
// depend on the standard library's distribution implementations.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

std::size_t sample_weighted(std::mt19937_64& rng, const std::vector<double>& weights,
                            double total) {
  if (!(total > 0.0)) return uniform_index(rng, weights.size());
  double target = uniform01(rng) * total;
  double running = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    running += weights[i];
    if (running > target) return i;
  }
  // Rounding left target past the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

// Greedy k-means++: each new center is the best of 2 + floor(ln k) candidates
// sampled proportionally to the current squared distance.
std::vector<Point> seed_centers(std::span<const Point> points, int k, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));

  std::vector<Point> centers;
  centers.reserve(static_cast<std::size_t>(k));
  centers.push_back(points[uniform_index(rng, n)]);

  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = squared_distance(points[i], centers[0]);

  std::vector<double> candidate_dist(n);
  std::vector<double> best_dist(n);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : closest) total += d;

    double best_potential = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (int t = 0; t < trials; ++t) {
      std::size_t idx = sample_weighted(rng, closest, total);
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        candidate_dist[i] = std::min(closest[i], squared_distance(points[i], points[idx]));
        potential += candidate_dist[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best_index = idx;
        best_dist = candidate_dist;
      }
    }
    centers.push_back(points[best_index]);
    closest = best_dist;
  }
  return centers;
}

void assign(std::span<const Point> points, const std::vector<Point>& centers,
            std::vector<int>& labels, std::vector<double>& dist) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    int best = 0;
    double best_d = squared_distance(points[i], centers[0]);
    for (std::size_t c = 1; c < centers.size(); ++c) {
      double d = squared_distance(points[i], centers[c]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[i] = best;
    dist[i] = best_d;
  }
}

// Moves the point farthest from its center into each empty cluster. Only
// points whose cluster keeps at least one other member are eligible.
int repair_empty(std::span<const Point> points, std::vector<Point>& centers,
                 std::vector<int>& labels, std::vector<double>& dist) {
  int repairs = 0;
  std::vector<std::size_t> counts(centers.size(), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < centers.size(); ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
      if (far == points.size() || dist[i] > dist[far]) far = i;
    }
    --counts[static_cast<std::size_t>(labels[far])];
    ++counts[c];
    labels[far] = static_cast<int>(c);
    centers[c] = points[far];
    dist[far] = 0.0;
    ++repairs;
  }
  return repairs;
}

std::vector<Point> means(std::span<const Point> points, const std::vector<int>& labels, int k,
                         std::size_t dim) {
  std::vector<Point> sums(static_cast<std::size_t>(k), Point(dim, 0.0));
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto c = static_cast<std::size_t>(labels[i]);
    for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    ++counts[c];
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    for (auto& x : sums[c]) x /= static_cast<double>(counts[c]);
  }
  return sums;
}

double total(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

ClusterAssignment lloyd(std::span<const Point> points, int k, std::mt19937_64& rng,
                        const KMeansOptions& options) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();

  ClusterAssignment run;
  run.centers = seed_centers(points, k, rng);
  run.labels.assign(n, 0);
  std::vector<double> dist(n);
  assign(points, run.centers, run.labels, dist);
  run.empty_cluster_repairs += repair_empty(points, run.centers, run.labels, dist);
  run.inertia_trace.push_back(total(dist));

  for (int it = 0; it < options.max_iterations; ++it) {
    auto next_centers = means(points, run.labels, k, dim);
    double shift = 0.0;
    for (std::size_t c = 0; c < next_centers.size(); ++c) {
      shift += squared_distance(next_centers[c], run.centers[c]);
    }
    run.centers = std::move(next_centers);

    std::vector<int> next_labels(n);
    assign(points, run.centers, next_labels, dist);
    run.empty_cluster_repairs += repair_empty(points, run.centers, next_labels, dist);
    run.inertia_trace.push_back(total(dist));

    bool unchanged = next_labels == run.labels;
    run.labels = std::move(next_labels);
    if (unchanged || shift < options.tolerance) break;
  }

  run.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run.inertia += squared_distance(points[i], run.centers[static_cast<std::size_t>(run.labels[i])]);
  }
  return run;
}

}  // namespace

ClusterAssignment kmeans(std::span<const Point> points, int n_clusters, std::uint64_t seed,
                         const KMeansOptions& options) {
  if (n_clusters < 1) throw ArgumentError("kmeans needs at least one cluster");
  if (points.empty() || static_cast<std::size_t>(n_clusters) > points.size()) {
    throw ArgumentError("kmeans: n_clusters=" + std::to_string(n_clusters) + " exceeds " +
                        std::to_string(points.size()) + " points");
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ConsistencyError("kmeans: points differ in dimension");
  }

  ClusterAssignment best;
  bool have_best = false;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    auto run = lloyd(points, n_clusters, rng, options);
    run.winning_restart = r;
    // Strict comparison keeps the lowest restart index on ties.
    if (!have_best || run.inertia < best.inertia) {
      best = std::move(run);
      have_best = true;
    }
  }
  return best;
}

double ward_delta(std::size_t size_a, const Point& mean_a, std::size_t size_b, const Point& mean_b) {
  double na = static_cast<double>(size_a);
  double nb = static_cast<double>(size_b);
  return na * nb / (na + nb) * squared_distance(mean_a, mean_b);
}

namespace {

bool better_merge(double delta, int left, int right, const MergeStep& best) {
  return std::tie(delta, left, right) < std::tie(best.delta, best.left, best.right);
}

}  // namespace

MergeStep ward_merge(std::span<const WardCluster> clusters) {
  if (clusters.size() < 2) throw ArgumentError("ward_merge needs at least two clusters");
  MergeStep best{0, 0, std::numeric_limits<double>::infinity()};
  bool have = false;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (std::size_t j = i + 1; j < clusters.size(); ++j) {
      const auto& a = clusters[i];
      const auto& b = clusters[j];
      if (a.members.empty() || b.members.empty()) {
        throw ArgumentError("ward_merge: cluster without members");
      }
      int left = std::min(a.id, b.id);
      int right = std::max(a.id, b.id);
      double delta = ward_delta(a.members.size(), a.centroid, b.members.size(), b.centroid);
      if (!have || better_merge(delta, left, right, best)) {
        best = {left, right, delta};
        have = true;
      }
    }
  }
  return best;
}

std::vector<MergeStep> agglomerate(std::span<const Point> points, std::uint64_t /*seed*/) {
  const std::size_t n = points.size();
  if (n == 0) throw ArgumentError("agglomerate needs at least one point");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ConsistencyError("agglomerate: points differ in dimension");
  }

  // Slot-indexed Ward costs, updated with the Lance-Williams recurrence.
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      cost[i][j] = cost[j][i] = 0.5 * squared_distance(points[i], points[j]);
    }
  }
  std::vector<int> id(n);
  std::vector<double> size(n, 1.0);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i) id[i] = static_cast<int>(i);

  std::vector<MergeStep> steps;
  steps.reserve(n - 1);
  for (std::size_t s = 0; s + 1 < n; ++s) {
    MergeStep best{0, 0, std::numeric_limits<double>::infinity()};
    std::size_t slot_a = n, slot_b = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        int left = std::min(id[i], id[j]);
        int right = std::max(id[i], id[j]);
        if (slot_a == n || better_merge(cost[i][j], left, right, best)) {
          best = {left, right, cost[i][j]};
          slot_a = i;
          slot_b = j;
        }
      }
    }
    steps.push_back(best);

    const double na = size[slot_a];
    const double nb = size[slot_b];
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == slot_a || c == slot_b) continue;
      const double nc = size[c];
      double updated =
          ((na + nc) * cost[slot_a][c] + (nb + nc) * cost[slot_b][c] - nc * cost[slot_a][slot_b]) /
          (na + nb + nc);
      cost[slot_a][c] = cost[c][slot_a] = updated;
    }
    size[slot_a] = na + nb;
    id[slot_a] = static_cast<int>(n + s);
    active[slot_b] = false;
  }
  return steps;
}

std::vector<int> cut_merges(std::size_t n, std::span<const MergeStep> merges, std::size_t steps) {
  if (steps > merges.size()) throw ArgumentError("cut_merges: more steps than merges");
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  // Some leaf of every cluster id created so far.
  std::vector<std::size_t> representative(n + merges.size());
  for (std::size_t i = 0; i < n; ++i) representative[i] = i;
  for (std::size_t s = 0; s < steps; ++s) {
    auto l = static_cast<std::size_t>(merges[s].left);
    auto r = static_cast<std::size_t>(merges[s].right);
    if (l >= n + s || r >= n + s) throw ArgumentError("cut_merges: merge references unknown id");
    std::size_t a = find(representative[l]);
    std::size_t b = find(representative[r]);
    parent[b] = a;
    representative[n + s] = a;
  }
  std::vector<int> labels(n);
  std::vector<int> relabel(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = find(i);
    if (relabel[root] < 0) relabel[root] = next++;
    labels[i] = relabel[root];
  }
  return labels;
}

}  // namespace clustem
