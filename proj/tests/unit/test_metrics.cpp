#include <doctest.h>

#include <random>

#include "clustem/error.hpp"
#include "clustem/metrics.hpp"

using namespace clustem;

namespace {

Column sa_column(std::vector<std::string> values) { return {"sa", ColumnKind::Nominal, std::move(values)}; }

}  // namespace

TEST_CASE("perc_recs") {
  CHECK(perc_recs(5, 5) == 1.0);
  CHECK(perc_recs(5, 4) == 0.8);
  CHECK(perc_recs(0, 0) == 1.0);
  CHECK_THROWS_AS(perc_recs(3, 4), ArgumentError);
}

TEST_CASE("c_avg") {
  CHECK(c_avg(12, 4, 3) == 1.0);  // four groups of exactly k = 3
  CHECK(c_avg(10, 2, 4) == 1.25);
  CHECK(c_avg(9, 2, 1) == 4.5);   // k = 1 gives the mean group size
  CHECK(c_avg(0, 0, 5) == 0.0);
  CHECK_THROWS_AS(c_avg(3, 1, 0), ArgumentError);
}

TEST_CASE("t_closeness") {
  SUBCASE("single group equals the global distribution") {
    Column sa = sa_column({"x", "y", "y"});
    CHECK(t_closeness({{{"g"}, {0, 1, 2}}}, sa) == 0.0);
  }
  SUBCASE("group (1,0) against global (0.5,0.5)") {
    Column sa = sa_column({"x", "x", "y", "y"});
    std::vector<EquivalenceClass> groups{{{"a"}, {0, 1}}, {{"b"}, {2, 3}}};
    CHECK(t_closeness(groups, sa) == 0.5);
  }
  SUBCASE("bounded on random groupings") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      std::size_t n = 1 + rng() % 30;
      std::vector<std::string> values;
      std::vector<EquivalenceClass> groups(1 + rng() % 4);
      for (std::size_t r = 0; r < n; ++r) {
        values.push_back(std::string(1, static_cast<char>('a' + rng() % 3)));
        groups[rng() % groups.size()].rows.push_back(r);
      }
      double t = t_closeness(groups, sa_column(values));
      CHECK(t >= 0.0);
      CHECK(t <= 1.0);
    }
  }
}

TEST_CASE("achieved privacy") {
  Column sa = sa_column({"x", "x", "y", "x", "x", "y", "z", "x"});
  std::vector<EquivalenceClass> groups{{{"a"}, {0, 1, 2}}, {{"b"}, {3, 4, 5, 6, 7}}};
  auto p = achieved_privacy(groups, &sa);
  CHECK(p.k == 3);
  CHECK(p.l == 2);
  CHECK(achieved_privacy(groups, nullptr).l == 0);
}

TEST_CASE("measure on a suppressed table") {
  Table t({{"q", ColumnKind::Nominal, {"a", "a", "b", "b", "*"}},
           {"sa", ColumnKind::Nominal, {"x", "y", "x", "y", "x"}}});
  QiSpec qi{{"q"}, "sa"};
  auto mask = infer_retained(t, qi);
  CHECK(mask == RetainMask{true, true, true, true, false});
  auto report = measure(t, qi, mask, {2, 2, 0.2});
  CHECK(report.perc_recs == 0.8);
  CHECK(report.achieved_k == 2);
  CHECK(report.achieved_l == 2);
  CHECK(report.c_avg == 1.0);
  CHECK(report.t_closeness == 0.0);
  auto j = to_json(report);
  CHECK(j["retained_rows"] == 4);
  CHECK_FALSE(j.contains("loss"));
}

TEST_CASE("a fully starred table counts as one retained group") {
  Table t({{"q", ColumnKind::Nominal, {"*", "*"}}});
  auto mask = infer_retained(t, {{"q"}, std::nullopt});
  CHECK(mask == RetainMask{true, true});
}
