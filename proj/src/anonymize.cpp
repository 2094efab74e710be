#include "clustem/anonymize.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "clustem/error.hpp"

namespace clustem {

int LatticeNode::height() const { return std::accumulate(levels.begin(), levels.end(), 0); }

std::string LatticeNode::to_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(levels[i]);
  }
  out.push_back(')');
  return out;
}

void PrivacyParams::validate() const {
  if (k < 1) throw ArgumentError("k must be at least 1");
  if (l < 1) throw ArgumentError("l must be at least 1");
  if (!(sup_limit >= 0.0 && sup_limit <= 1.0)) {
    throw ArgumentError("suppression limit must lie in [0, 1]");
  }
}

namespace {

const Vgh& hierarchy_for(const VghSet& vghs, const std::string& attribute) {
  auto it = vghs.find(attribute);
  if (it == vghs.end()) throw SpecError("no hierarchy for QI attribute '" + attribute + "'");
  return it->second;
}

void check_node(const LatticeNode& node, const QiSpec& qi, const VghSet& vghs) {
  if (node.levels.size() != qi.qi.size()) {
    throw ArgumentError("lattice node " + node.to_string() + " does not match " +
                        std::to_string(qi.qi.size()) + " QI attributes");
  }
  for (std::size_t j = 0; j < qi.qi.size(); ++j) {
    const auto& vgh = hierarchy_for(vghs, qi.qi[j]);
    if (node.levels[j] < 0 || static_cast<std::size_t>(node.levels[j]) >= vgh.level_count()) {
      throw ArgumentError("lattice node " + node.to_string() + " out of range for '" + qi.qi[j] + "'");
    }
  }
}

bool within_limit(std::size_t suppressed, std::size_t rows, double sup_limit) {
  if (rows == 0) return true;
  return static_cast<double>(suppressed) / static_cast<double>(rows) <= sup_limit;
}

// Ordering used to pick among satisfying nodes. Losses closer than this are
// treated as equal so that summation order cannot decide a tie.
constexpr double kLossEpsilon = 1e-12;

bool preferred(double loss_a, const LatticeNode& a, double loss_b, const LatticeNode& b) {
  if (std::abs(loss_a - loss_b) > kLossEpsilon) return loss_a < loss_b;
  int ha = a.height(), hb = b.height();
  if (ha != hb) return ha < hb;
  return a.levels < b.levels;
}

// Integer-coded view of the table used by the lattice search. Rows with the
// same leaves and sensitive value are collapsed into one weighted cell.
class LatticeIndex {
 public:
  LatticeIndex(const Table& table, const QiSpec& qi, const VghSet& vghs, bool need_sa)
      : rows_(table.row_count()) {
    const std::size_t m = qi.qi.size();
    std::vector<const Vgh*> hierarchies;
    for (const auto& name : qi.qi) hierarchies.push_back(&hierarchy_for(vghs, name));

    // class_of_[j][h][leaf] = dense class id of the leaf's label at height h
    class_of_.resize(m);
    class_count_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      const Vgh& vgh = *hierarchies[j];
      level_counts_.push_back(vgh.level_count());
      for (std::size_t h = 0; h < vgh.level_count(); ++h) {
        std::unordered_map<std::string, int> ids;
        std::vector<int> ids_by_leaf(vgh.leaf_count());
        for (std::size_t i = 0; i < vgh.leaf_count(); ++i) {
          auto [it, inserted] = ids.emplace(vgh.label(h, i), static_cast<int>(ids.size()));
          ids_by_leaf[i] = it->second;
        }
        class_of_[j].push_back(std::move(ids_by_leaf));
        class_count_[j].push_back(ids.size());
      }
    }

    std::vector<std::vector<int>> leaf_of_row(m, std::vector<int>(rows_));
    for (std::size_t j = 0; j < m; ++j) {
      const Column& col = table.column(qi.qi[j]);
      for (std::size_t r = 0; r < rows_; ++r) {
        auto leaf = hierarchies[j]->leaf_index(col.values[r]);
        if (!leaf) {
          throw CoverageError("value '" + col.values[r] + "' of column '" + qi.qi[j] +
                              "' is not a leaf of its hierarchy");
        }
        leaf_of_row[j][r] = static_cast<int>(*leaf);
      }
    }

    std::vector<int> sa_of_row(rows_, 0);
    if (need_sa) {
      const Column& sa = table.column(*qi.sa);
      std::unordered_map<std::string, int> ids;
      for (std::size_t r = 0; r < rows_; ++r) {
        sa_of_row[r] = ids.emplace(sa.values[r], static_cast<int>(ids.size())).first->second;
      }
    }

    std::map<std::vector<int>, std::size_t> cell_ids;
    cell_of_row_.resize(rows_);
    std::vector<int> key(m + 1);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t j = 0; j < m; ++j) key[j] = leaf_of_row[j][r];
      key[m] = sa_of_row[r];
      auto [it, inserted] = cell_ids.emplace(key, cells_.size());
      if (inserted) cells_.push_back({key, 0});
      ++cells_[it->second].count;
      cell_of_row_[r] = it->second;
    }
  }

  std::size_t rows() const { return rows_; }
  const std::vector<std::size_t>& level_counts() const { return level_counts_; }

  // Fills `failing` (per cell) and returns the number of suppressed rows.
  std::size_t evaluate(const std::vector<int>& levels, const PrivacyParams& params,
                       std::vector<char>* failing = nullptr) const {
    const std::size_t m = levels.size();
    struct Acc {
      std::size_t count = 0;
      std::vector<int> sa;  // distinct values, capped at l
    };
    std::unordered_map<std::uint64_t, Acc> groups;
    groups.reserve(cells_.size());
    std::vector<std::uint64_t> cell_group(cells_.size());

    for (std::size_t c = 0; c < cells_.size(); ++c) {
      std::uint64_t key = 0;
      for (std::size_t j = 0; j < m; ++j) {
        auto h = static_cast<std::size_t>(levels[j]);
        key = key * class_count_[j][h] +
              static_cast<std::uint64_t>(class_of_[j][h][static_cast<std::size_t>(cells_[c].key[j])]);
      }
      cell_group[c] = key;
      Acc& acc = groups[key];
      acc.count += cells_[c].count;
      if (params.l > 1 && acc.sa.size() < static_cast<std::size_t>(params.l)) {
        int sa = cells_[c].key[m];
        if (std::find(acc.sa.begin(), acc.sa.end(), sa) == acc.sa.end()) acc.sa.push_back(sa);
      }
    }

    std::size_t suppressed = 0;
    if (failing) failing->assign(cells_.size(), 0);
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const Acc& acc = groups[cell_group[c]];
      bool fails = acc.count < static_cast<std::size_t>(params.k) ||
                   (params.l > 1 && acc.sa.size() < static_cast<std::size_t>(params.l));
      if (fails) {
        suppressed += cells_[c].count;
        if (failing) (*failing)[c] = 1;
      }
    }
    return suppressed;
  }

  RetainMask retained_mask(const std::vector<char>& failing) const {
    RetainMask mask(rows_);
    for (std::size_t r = 0; r < rows_; ++r) mask[r] = !failing[cell_of_row_[r]];
    return mask;
  }

  // Product of class counts must fit the 64-bit packed group key.
  bool keys_fit() const {
    long double product = 1;
    for (std::size_t j = 0; j < class_count_.size(); ++j) product *= static_cast<long double>(class_count_[j].front());
    return product < static_cast<long double>(std::numeric_limits<std::uint64_t>::max());
  }

 private:
  struct Cell {
    std::vector<int> key;  // leaf per QI attribute, then sensitive code
    std::size_t count;
  };

  std::size_t rows_;
  std::vector<std::size_t> level_counts_;
  std::vector<std::vector<std::vector<int>>> class_of_;
  std::vector<std::vector<std::size_t>> class_count_;
  std::vector<Cell> cells_;
  std::vector<std::size_t> cell_of_row_;
};

}  // namespace

Table apply_node(const Table& table, const QiSpec& qi, const VghSet& vghs, const LatticeNode& node) {
  check_node(node, qi, vghs);
  Table out = table;
  for (std::size_t j = 0; j < qi.qi.size(); ++j) {
    const auto& vgh = hierarchy_for(vghs, qi.qi[j]);
    const auto h = static_cast<std::size_t>(node.levels[j]);
    const Column& col = table.column(qi.qi[j]);
    std::vector<std::string> values;
    values.reserve(col.values.size());
    for (const auto& v : col.values) {
      auto leaf = vgh.leaf_index(v);
      if (!leaf) {
        throw CoverageError("value '" + v + "' of column '" + qi.qi[j] +
                            "' is not a leaf of its hierarchy");
      }
      values.push_back(vgh.label(h, *leaf));
    }
    out = out.with_values(qi.qi[j], std::move(values));
  }
  return out;
}

PrivacyCheck check_privacy(const Table& generalized, const QiSpec& qi, const PrivacyParams& params) {
  params.validate();
  if (params.l > 1 && !qi.sa) throw ArgumentError("l-diversity needs a sensitive attribute");

  PrivacyCheck out;
  auto groups = group_by_qi(generalized, qi);
  out.retained.assign(generalized.row_count(), true);
  const Column* sa = qi.sa ? &generalized.column(*qi.sa) : nullptr;
  for (const auto& g : groups) {
    bool fails = g.rows.size() < static_cast<std::size_t>(params.k);
    if (!fails && params.l > 1) {
      std::set<std::string_view> distinct;
      for (auto r : g.rows) distinct.insert(sa->values[r]);
      fails = distinct.size() < static_cast<std::size_t>(params.l);
    }
    if (fails) {
      for (auto r : g.rows) out.retained[r] = false;
      out.suppressed += g.rows.size();
    } else {
      out.groups.push_back(g);
    }
  }
  out.satisfied = within_limit(out.suppressed, generalized.row_count(), params.sup_limit);
  return out;
}

PrivacyCheck check_privacy(const Table& table, const QiSpec& qi, const VghSet& vghs,
                           const LatticeNode& node, const PrivacyParams& params) {
  return check_privacy(apply_node(table, qi, vghs, node), qi, params);
}

double loss(const LatticeNode& node, const std::vector<std::size_t>& level_counts) {
  if (node.levels.size() != level_counts.size() || level_counts.empty()) {
    throw ArgumentError("loss: node and hierarchy count differ");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < level_counts.size(); ++j) {
    if (level_counts[j] > 1) {
      sum += static_cast<double>(node.levels[j]) / static_cast<double>(level_counts[j] - 1);
    }
  }
  return sum / static_cast<double>(level_counts.size());
}

double loss(const LatticeNode& node, const QiSpec& qi, const VghSet& vghs) {
  std::vector<std::size_t> counts;
  for (const auto& name : qi.qi) counts.push_back(hierarchy_for(vghs, name).level_count());
  return loss(node, counts);
}

Table suppress_rows(const Table& table, const QiSpec& qi, const RetainMask& retained) {
  Table out = table;
  for (const auto& name : qi.qi) {
    auto values = table.column(name).values;
    for (std::size_t r = 0; r < values.size(); ++r) {
      if (!retained[r]) values[r] = std::string(kSuppressed);
    }
    out = out.with_values(name, std::move(values));
  }
  return out;
}

AnonymizationResult search(const Table& table, const QiSpec& qi, const VghSet& vghs,
                           const PrivacyParams& params, unsigned threads) {
  params.validate();
  qi.validate(table);
  if (params.l > 1 && !qi.sa) throw ArgumentError("l-diversity needs a sensitive attribute");

  LatticeIndex index(table, qi, vghs, params.l > 1);
  if (!index.keys_fit()) throw ArgumentError("too many distinct QI values for the lattice search");
  const auto& counts = index.level_counts();
  const std::size_t m = counts.size();

  std::size_t lattice_size = 1;
  for (auto c : counts) {
    if (lattice_size > kMaxLatticeSize / c) {
      throw ArgumentError("generalization lattice exceeds " + std::to_string(kMaxLatticeSize) + " nodes");
    }
    lattice_size *= c;
  }

  // Mixed-radix node ids, first attribute most significant.
  std::vector<std::size_t> stride(m, 1);
  for (std::size_t j = m - 1; j-- > 0;) stride[j] = stride[j + 1] * counts[j + 1];
  auto decode = [&](std::size_t id) {
    LatticeNode node;
    node.levels.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      node.levels[j] = static_cast<int>(id / stride[j] % counts[j]);
    }
    return node;
  };

  AnonymizationResult result;
  result.stats.lattice_size = lattice_size;

  auto finish = [&](const LatticeNode& node, bool satisfied) {
    std::vector<char> failing;
    index.evaluate(node.levels, params, &failing);
    result.node = node;
    result.retained = index.retained_mask(failing);
    result.table = suppress_rows(apply_node(table, qi, vghs, node), qi, result.retained);
    result.loss = loss(node, counts);
    result.satisfied = satisfied;
    return result;
  };

  LatticeNode top;
  for (auto c : counts) top.levels.push_back(static_cast<int>(c) - 1);
  ++result.stats.checked;
  if (!within_limit(index.evaluate(top.levels, params), index.rows(), params.sup_limit)) {
    return finish(top, false);
  }

  // Bucket node ids by height; ids ascend inside a bucket, which is also
  // lexicographic order of the level vectors.
  std::size_t max_height = 0;
  for (auto c : counts) max_height += c - 1;
  std::vector<std::vector<std::size_t>> by_height(max_height + 1);
  for (std::size_t id = 0; id < lattice_size; ++id) {
    std::size_t h = 0;
    for (std::size_t j = 0; j < m; ++j) h += id / stride[j] % counts[j];
    by_height[h].push_back(id);
  }

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  enum : unsigned char { kUnknown, kChecked, kTagged, kFailed };
  std::vector<unsigned char> status(lattice_size, kUnknown);

  std::optional<LatticeNode> best;
  double best_loss = 0.0;

  for (const auto& bucket : by_height) {
    // Satisfaction is monotone upward, so a node above any satisfying
    // predecessor is tagged without a check.
    std::vector<std::size_t> to_check;
    for (auto id : bucket) {
      bool tagged = false;
      for (std::size_t j = 0; j < m && !tagged; ++j) {
        if (id / stride[j] % counts[j] == 0) continue;
        auto s = status[id - stride[j]];
        tagged = s == kChecked || s == kTagged;
      }
      if (tagged) {
        status[id] = kTagged;
        ++result.stats.tagged;
      } else {
        to_check.push_back(id);
      }
    }

    std::vector<unsigned char> outcome(to_check.size());
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        auto node = decode(to_check[i]);
        bool ok = within_limit(index.evaluate(node.levels, params), index.rows(), params.sup_limit);
        outcome[i] = ok ? kChecked : kFailed;
      }
    };
    const std::size_t workers = std::min<std::size_t>(threads, to_check.size());
    if (workers <= 1 || to_check.size() < 8) {
      work(0, to_check.size());
    } else {
      std::vector<std::future<void>> jobs;
      const std::size_t chunk = (to_check.size() + workers - 1) / workers;
      for (std::size_t begin = 0; begin < to_check.size(); begin += chunk) {
        jobs.push_back(std::async(std::launch::async, work, begin,
                                  std::min(to_check.size(), begin + chunk)));
      }
      for (auto& j : jobs) j.get();
    }
    for (std::size_t i = 0; i < to_check.size(); ++i) status[to_check[i]] = outcome[i];
    result.stats.checked += to_check.size();

    for (auto id : bucket) {
      if (status[id] != kChecked && status[id] != kTagged) continue;
      ++result.stats.satisfying;
      auto node = decode(id);
      double node_loss = loss(node, counts);
      if (!best || preferred(node_loss, node, best_loss, *best)) {
        best = std::move(node);
        best_loss = node_loss;
      }
    }
  }

  return finish(*best, true);
}

VghSet generate_vghs(const Table& table, const QiSpec& qi, EmbeddingService& embeddings,
                     ClusterMethod method, std::uint64_t seed,
                     const std::map<std::string, std::filesystem::path>& overrides) {
  qi.validate(table);
  VghSet out;
  for (const auto& name : qi.qi) {
    if (auto it = overrides.find(name); it != overrides.end()) {
      auto vgh = read_hierarchy(it->second);
      out.emplace(name, Vgh(name, vgh.leaves(), vgh.levels()));
      continue;
    }
    auto values = distinct_values(table.column(name));
    auto vectors = embeddings.embed_all(values);
    out.emplace(name, build_vgh(name, values, vectors, method, seed));
  }
  return out;
}

PipelineResult clustem4ano(const Table& table, const QiSpec& qi, EmbeddingService& embeddings,
                           ClusterMethod method, const PrivacyParams& params, std::uint64_t seed,
                           const std::map<std::string, std::filesystem::path>& overrides) {
  params.validate();
  PipelineResult out;
  out.vghs = generate_vghs(table, qi, embeddings, method, seed, overrides);
  out.result = search(table, qi, out.vghs, params);
  return out;
}

}  // namespace clustem
