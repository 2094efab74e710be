#include <doctest.h>

#include <random>

#include "clustem/cluster.hpp"
#include "clustem/error.hpp"
#include "oracles.hpp"

using namespace clustem;

namespace {

std::vector<Point> random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<Point> pts(n, Point(dim));
  for (auto& p : pts) {
    for (auto& x : p) x = u(rng);
  }
  return pts;
}

double recomputed_inertia(const std::vector<Point>& points, const ClusterAssignment& a) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += squared_distance(points[i], a.centers[static_cast<std::size_t>(a.labels[i])]);
  }
  return total;
}

}  // namespace

TEST_CASE("kmeans separates {0,1,10,11}") {
  std::vector<Point> pts{{0}, {1}, {10}, {11}};
  auto a = kmeans(pts, 2, 42);
  CHECK(a.labels[0] == a.labels[1]);
  CHECK(a.labels[2] == a.labels[3]);
  CHECK(a.labels[0] != a.labels[2]);
  std::vector<double> centers{a.centers[0][0], a.centers[1][0]};
  std::sort(centers.begin(), centers.end());
  CHECK(centers == std::vector<double>{0.5, 10.5});
  CHECK(a.inertia == doctest::Approx(1.0));
}

TEST_CASE("kmeans degenerate cluster counts") {
  std::vector<Point> pts{{0, 0}, {2, 0}, {4, 6}};
  auto each = kmeans(pts, 3, 1);
  CHECK(each.inertia == 0.0);
  auto one = kmeans(pts, 1, 1);
  CHECK(one.centers[0][0] == doctest::Approx(2.0));
  CHECK(one.centers[0][1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(kmeans(pts, 0, 1), ArgumentError);
  CHECK_THROWS_AS(kmeans(pts, 4, 1), ArgumentError);
}

TEST_CASE("kmeans with duplicate points keeps every cluster non-empty") {
  std::vector<Point> pts{{1}, {1}, {1}, {1}, {5}};
  auto a = kmeans(pts, 3, 9);
  std::vector<int> sizes(3, 0);
  for (int l : a.labels) ++sizes[static_cast<std::size_t>(l)];
  for (int s : sizes) CHECK(s >= 1);
}

TEST_CASE("kmeans invariants on random fixtures") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    auto pts = random_points(rng, 2 + rng() % 30, 1 + rng() % 3);
    int k = 1 + static_cast<int>(rng() % std::min<std::size_t>(pts.size(), 6));
    auto a = kmeans(pts, k, rng());
    REQUIRE(a.centers.size() == static_cast<std::size_t>(k));
    CHECK(a.inertia == doctest::Approx(recomputed_inertia(pts, a)).epsilon(1e-12));
    for (std::size_t t = 1; t < a.inertia_trace.size(); ++t) {
      CHECK(a.inertia_trace[t] <= a.inertia_trace[t - 1] * (1 + 1e-12) + 1e-12);
    }
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ++sizes[static_cast<std::size_t>(a.labels[i])];
      double own = squared_distance(pts[i], a.centers[static_cast<std::size_t>(a.labels[i])]);
      for (const auto& c : a.centers) CHECK(own <= squared_distance(pts[i], c) + 1e-9);
    }
    for (int s : sizes) CHECK(s >= 1);
  }
}

TEST_CASE("kmeans is deterministic for a seed") {
  std::mt19937_64 rng(8);
  auto pts = random_points(rng, 25, 2);
  auto a = kmeans(pts, 4, 123);
  auto b = kmeans(pts, 4, 123);
  CHECK(a.labels == b.labels);
  CHECK(a.centers == b.centers);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("kmeans returns a Lloyd fixed point no better than the brute-force optimum") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 80; ++trial) {
    auto pts = random_points(rng, 2 + rng() % 7, 1 + rng() % 2);
    int k = 1 + static_cast<int>(rng() % pts.size());
    double best = oracle::best_partition_inertia(pts, k);
    auto a = kmeans(pts, k, static_cast<std::uint64_t>(trial), {10, 300, 0.0});
    CHECK(a.inertia >= best - 1e-9);
    std::vector<std::vector<std::size_t>> blocks(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < pts.size(); ++i) blocks[static_cast<std::size_t>(a.labels[i])].push_back(i);
    double partition = 0.0;
    for (const auto& b : blocks) partition += oracle::sse(pts, b);
    CHECK(a.inertia == doctest::Approx(partition).epsilon(1e-12));
  }
}

TEST_CASE("kmeans finds the optimum on well-separated fixtures") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    int k = 1 + static_cast<int>(rng() % 4);
    std::vector<Point> pts;
    for (int c = 0; c < k; ++c) {
      std::size_t members = 1 + rng() % 2;
      for (std::size_t m = 0; m < members; ++m) pts.push_back({100.0 * c + jitter(rng), jitter(rng)});
    }
    double best = oracle::best_partition_inertia(pts, k);
    CHECK(std::abs(kmeans(pts, k, static_cast<std::uint64_t>(trial)).inertia - best) <= 1e-9);
  }
}

TEST_CASE("ward delta and single merges") {
  CHECK(ward_delta(1, {0.0}, 1, {3.0}) == 4.5);
  CHECK(ward_delta(2, {1.0, 1.0}, 2, {1.0, 1.0}) == 0.0);
  std::vector<WardCluster> clusters{{0, {0}, {0.0}}, {1, {1}, {1.0}}, {2, {2}, {10.0}}};
  auto step = ward_merge(clusters);
  CHECK(step == MergeStep{0, 1, 0.5});
}

TEST_CASE("agglomerate small cases") {
  CHECK(agglomerate(std::vector<Point>{{3.0}}).empty());
  auto two = agglomerate(std::vector<Point>{{0.0}, {2.0}});
  REQUIRE(two.size() == 1);
  CHECK(two[0] == MergeStep{0, 1, 2.0});

  auto four = agglomerate(std::vector<Point>{{0}, {1}, {10}, {11}});
  REQUIRE(four.size() == 3);
  CHECK(four[0].left == 0);
  CHECK(four[0].right == 1);
  CHECK(four[1].left == 2);
  CHECK(four[1].right == 3);
  CHECK(four[2].left == 4);
  CHECK(four[2].right == 5);
  CHECK(four[2].delta == doctest::Approx(100.0));
}

TEST_CASE("agglomerate breaks ties by smallest id pair") {
  // Equally spaced points: every adjacent pair ties at 0.5.
  auto steps = agglomerate(std::vector<Point>{{0}, {1}, {2}, {3}});
  auto expected = oracle::greedy_ward({{0}, {1}, {2}, {3}});
  REQUIRE(steps.size() == expected.size());
  for (std::size_t s = 0; s < steps.size(); ++s) {
    CHECK(steps[s].left == expected[s].left);
    CHECK(steps[s].right == expected[s].right);
  }
  CHECK(steps[0] == MergeStep{0, 1, 0.5});
}

TEST_CASE("agglomerate matches brute-force greedy Ward") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto pts = random_points(rng, 2 + rng() % 9, 1 + rng() % 3);
    auto steps = agglomerate(pts);
    auto expected = oracle::greedy_ward(pts);
    REQUIRE(steps.size() == expected.size());
    for (std::size_t s = 0; s < steps.size(); ++s) {
      CHECK(steps[s].left == expected[s].left);
      CHECK(steps[s].right == expected[s].right);
      CHECK(steps[s].delta == doctest::Approx(expected[s].delta).epsilon(1e-9));
    }
  }
}

TEST_CASE("cut_merges relabels by first appearance") {
  auto merges = agglomerate(std::vector<Point>{{10}, {0}, {11}, {1}});
  CHECK(cut_merges(4, merges, 0) == std::vector<int>{0, 1, 2, 3});
  CHECK(cut_merges(4, merges, 2) == std::vector<int>{0, 1, 0, 1});
  CHECK(cut_merges(4, merges, 3) == std::vector<int>{0, 0, 0, 0});
  CHECK_THROWS_AS(cut_merges(4, merges, 4), ArgumentError);
}
