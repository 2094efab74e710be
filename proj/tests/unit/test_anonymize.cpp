#include <doctest.h>

#include <random>

#include "clustem/anonymize.hpp"
#include "clustem/error.hpp"
#include "oracles.hpp"

using namespace clustem;

namespace {

Vgh ab_hierarchy() {
  return Vgh("q", {"a", "b"}, {{"a", "b"}, {"{a,b}", "{a,b}"}, {"*", "*"}});
}

Table one_column(std::vector<std::string> q, std::vector<std::string> sa = {}) {
  std::vector<Column> cols{{"q", ColumnKind::Nominal, std::move(q)}};
  if (!sa.empty()) cols.push_back({"sa", ColumnKind::Nominal, std::move(sa)});
  return Table(std::move(cols));
}

class FixedSource : public EmbeddingSource {
 public:
  std::vector<Embedding> fetch(std::span<const std::string> values) override {
    std::vector<Embedding> out;
    for (const auto& v : values) out.push_back({v == "a" ? 0.0 : v == "b" ? 1.0 : 10.0});
    return out;
  }
  std::size_t batch_size() const override { return 16; }
  std::string id() const override { return "fixed"; }
};

}  // namespace

TEST_CASE("privacy params validation") {
  CHECK_NOTHROW((PrivacyParams{1, 1, 0.0}.validate()));
  CHECK_THROWS_AS((PrivacyParams{0, 1, 0.0}.validate()), ArgumentError);
  CHECK_THROWS_AS((PrivacyParams{2, 0, 0.0}.validate()), ArgumentError);
  CHECK_THROWS_AS((PrivacyParams{2, 1, 1.5}.validate()), ArgumentError);
  CHECK_THROWS_AS((PrivacyParams{2, 1, -0.1}.validate()), ArgumentError);
}

TEST_CASE("apply_node substitutes level labels") {
  Table t({{"q", ColumnKind::Nominal, {"a", "b"}}, {"n", ColumnKind::Numeric, {"1", "2"}}});
  QiSpec qi{{"q"}, std::nullopt};
  VghSet vghs{{"q", ab_hierarchy()}};
  CHECK(apply_node(t, qi, vghs, {{0}}) == t);
  Table mid = apply_node(t, qi, vghs, {{1}});
  CHECK(mid.column("q").values == std::vector<std::string>{"{a,b}", "{a,b}"});
  CHECK(mid.column("n") == t.column("n"));
  CHECK(apply_node(t, qi, vghs, {{2}}).column("q").values == std::vector<std::string>{"*", "*"});
  CHECK_THROWS_AS(apply_node(t, qi, vghs, {{3}}), ArgumentError);
  CHECK_THROWS_AS(apply_node(one_column({"a", "zzz"}), qi, vghs, {{1}}), CoverageError);
}

TEST_CASE("check_privacy with suppression") {
  Table t = one_column({"a", "a", "b", "b", "c"}, {"x", "y", "x", "y", "x"});
  QiSpec qi{{"q"}, "sa"};
  auto ok = check_privacy(t, qi, {2, 2, 0.2});
  CHECK(ok.satisfied);
  CHECK(ok.suppressed == 1);
  CHECK(ok.retained == RetainMask{true, true, true, true, false});
  CHECK_FALSE(check_privacy(t, qi, {2, 2, 0.1}).satisfied);
  auto trivial = check_privacy(t, qi, {1, 1, 0.0});
  CHECK(trivial.satisfied);
  CHECK(trivial.suppressed == 0);
}

TEST_CASE("loss metric") {
  CHECK(loss({{0, 0}}, {3, 3}) == 0.0);
  CHECK(loss({{2, 2}}, {3, 3}) == 1.0);
  CHECK(loss({{1, 0}}, {3, 3}) == 0.25);
}

TEST_CASE("search on the three-row example") {
  Table t = one_column({"a", "a", "b"});
  QiSpec qi{{"q"}, std::nullopt};
  VghSet vghs{{"q", ab_hierarchy()}};

  auto loose = search(t, qi, vghs, {2, 1, 0.34});
  CHECK(loose.satisfied);
  CHECK(loose.node == LatticeNode{{0}});
  CHECK(loose.loss == 0.0);
  CHECK(loose.retained == RetainMask{true, true, false});
  CHECK(loose.table.column("q").values == std::vector<std::string>{"a", "a", "*"});

  auto strict = search(t, qi, vghs, {2, 1, 0.2});
  CHECK(strict.satisfied);
  CHECK(strict.node == LatticeNode{{1}});
  CHECK(strict.loss == 0.5);
  CHECK(strict.table.column("q").values == std::vector<std::string>{"{a,b}", "{a,b}", "{a,b}"});
}

TEST_CASE("k=1 and l=1 returns the table unchanged") {
  Table t = one_column({"a", "b", "b"}, {"x", "y", "x"});
  auto r = search(t, {{"q"}, "sa"}, {{"q", ab_hierarchy()}}, {1, 1, 0.0});
  CHECK(r.satisfied);
  CHECK(r.node == LatticeNode{{0}});
  CHECK(r.table == t);
}

TEST_CASE("unsatisfiable search reports the top node") {
  Table t = one_column({"a", "b"}, {"x", "x"});
  auto r = search(t, {{"q"}, "sa"}, {{"q", ab_hierarchy()}}, {1, 2, 0.0});
  CHECK_FALSE(r.satisfied);
  CHECK(r.node == LatticeNode{{2}});
  CHECK(r.loss == 1.0);
}

TEST_CASE("l-diversity without a sensitive column is rejected") {
  Table t = one_column({"a", "b"});
  CHECK_THROWS_AS(search(t, {{"q"}, std::nullopt}, {{"q", ab_hierarchy()}}, {1, 2, 0.0}), ArgumentError);
}

TEST_CASE("oversized lattices are refused") {
  std::vector<Column> cols;
  VghSet vghs;
  QiSpec qi;
  std::vector<std::string> leaves;
  std::vector<std::vector<std::string>> levels;
  for (int i = 0; i < 40; ++i) leaves.push_back("v" + std::to_string(i));
  levels.push_back(leaves);
  for (int h = 1; h < 39; ++h) {
    std::vector<std::string> level(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      level[i] = static_cast<int>(i) <= h ? "{low" + std::to_string(h) + "}" : leaves[i];
    }
    levels.push_back(level);
  }
  levels.emplace_back(leaves.size(), "*");
  for (int a = 0; a < 5; ++a) {
    std::string name = "q" + std::to_string(a);
    cols.push_back({name, ColumnKind::Nominal, {"v0"}});
    vghs.emplace(name, Vgh(name, leaves, levels));
    qi.qi.push_back(name);
  }
  CHECK_THROWS_AS(search(Table(cols), qi, vghs, {2, 1, 0.0}), ArgumentError);
}

TEST_CASE("search matches the exhaustive oracle") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = oracle::random_instance(rng);
    auto expected = oracle::exhaustive_search(inst.table, inst.qi, inst.vghs, inst.params);
    auto got = search(inst.table, inst.qi, inst.vghs, inst.params);
    CHECK(got.satisfied == expected.any);
    if (expected.any) {
      CHECK(got.loss == expected.min_loss);
      CHECK(std::find(expected.satisfying.begin(), expected.satisfying.end(), got.node) !=
            expected.satisfying.end());
    }
  }
}

TEST_CASE("satisfaction is monotone upward in the lattice") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = oracle::random_instance(rng);
    auto result = oracle::exhaustive_search(inst.table, inst.qi, inst.vghs, inst.params);
    for (const auto& node : result.satisfying) {
      for (std::size_t a = 0; a < node.levels.size(); ++a) {
        LatticeNode up = node;
        if (up.levels[a] + 1 >= static_cast<int>(inst.vghs.at(inst.qi.qi[a]).level_count())) continue;
        ++up.levels[a];
        CHECK(check_privacy(inst.table, inst.qi, inst.vghs, up, inst.params).satisfied);
      }
    }
  }
}

TEST_CASE("satisfied results hold up when recomputed from the output") {
  std::mt19937_64 rng(808);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = oracle::random_instance(rng);
    auto r = search(inst.table, inst.qi, inst.vghs, inst.params);
    CHECK(r.table.row_count() == inst.table.row_count());
    CHECK(r.table.column("sa") == inst.table.column("sa"));
    if (!r.satisfied) continue;
    std::size_t suppressed = 0;
    for (std::size_t row = 0; row < r.table.row_count(); ++row) {
      if (r.retained[row]) continue;
      for (const auto& q : inst.qi.qi) CHECK(r.table.column(q).values[row] == "*");
      ++suppressed;
    }
    CHECK(static_cast<double>(suppressed) / static_cast<double>(r.table.row_count()) <= inst.params.sup_limit);
    for (const auto& g : group_by_qi(r.table, inst.qi, r.retained)) {
      CHECK(static_cast<int>(g.rows.size()) >= inst.params.k);
      std::set<std::string> sa;
      for (auto row : g.rows) sa.insert(r.table.column("sa").values[row]);
      CHECK(static_cast<int>(sa.size()) >= inst.params.l);
    }
  }
}

TEST_CASE("search does not depend on the thread count") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = oracle::random_instance(rng);
    auto one = search(inst.table, inst.qi, inst.vghs, inst.params, 1);
    auto many = search(inst.table, inst.qi, inst.vghs, inst.params, 8);
    CHECK(one.node == many.node);
    CHECK(one.table == many.table);
  }
}

TEST_CASE("pipeline equals building hierarchies and searching by hand") {
  Table t = one_column({"a", "b", "c"}, {"x", "y", "x"});
  QiSpec qi{{"q"}, "sa"};
  PrivacyParams params{2, 1, 0.34};
  EmbeddingService service(std::make_unique<FixedSource>());
  auto piped = clustem4ano(t, qi, service, ClusterMethod::WardAgglomerative, params, 42);

  std::vector<std::string> values{"a", "b", "c"};
  Vgh manual = build_vgh("q", values, service.embed_all(values), ClusterMethod::WardAgglomerative, 42);
  CHECK(piped.vghs.at("q") == manual);
  auto direct = search(t, qi, {{"q", manual}}, params);
  CHECK(piped.result.node == direct.node);
  CHECK(piped.result.table == direct.table);
  CHECK(piped.result.table.column("q").values == std::vector<std::string>{"{a,b}", "{a,b}", "*"});
}
