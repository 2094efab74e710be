#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clustem/embed.hpp"
#include "clustem/tabular.hpp"
#include "clustem/vgh.hpp"

namespace clustem {

// Hierarchies keyed by attribute name.
using VghSet = std::map<std::string, Vgh>;

// One generalization height per QI attribute, in QI order.
struct LatticeNode {
  std::vector<int> levels;

  int height() const;
  std::string to_string() const;  // e.g. "(1,0,2)"
  auto operator<=>(const LatticeNode&) const = default;
};

struct PrivacyParams {
  int k = 2;
  int l = 1;
  double sup_limit = 0.0;

  // Throws ArgumentError unless k >= 1, l >= 1 and 0 <= sup_limit <= 1.
  void validate() const;
};

struct PrivacyCheck {
  bool satisfied = false;
  RetainMask retained;
  std::size_t suppressed = 0;
  // Equivalence classes over the retained rows at the generalized values.
  std::vector<EquivalenceClass> groups;
};

struct SearchStats {
  std::size_t lattice_size = 0;
  std::size_t checked = 0;
  std::size_t tagged = 0;
  std::size_t satisfying = 0;
};

struct AnonymizationResult {
  Table table;  // QI generalized; suppressed rows carry "*" in every QI cell
  LatticeNode node;
  RetainMask retained;
  double loss = 0.0;
  bool satisfied = false;
  SearchStats stats;
};

inline constexpr std::size_t kMaxLatticeSize = 10'000'000;

// Replaces each QI cell by its label at the node's height. Throws
// CoverageError if a cell is not a leaf of its hierarchy.
Table apply_node(const Table& table, const QiSpec& qi, const VghSet& vghs, const LatticeNode& node);

// Groups an already generalized table and suppresses every class smaller
// than k or with fewer than l distinct sensitive values.
PrivacyCheck check_privacy(const Table& generalized, const QiSpec& qi, const PrivacyParams& params);
PrivacyCheck check_privacy(const Table& table, const QiSpec& qi, const VghSet& vghs,
                           const LatticeNode& node, const PrivacyParams& params);

// Mean over attributes of height / (level count - 1).
double loss(const LatticeNode& node, const std::vector<std::size_t>& level_counts);
double loss(const LatticeNode& node, const QiSpec& qi, const VghSet& vghs);

// Writes "*" into every QI cell of rows that are not retained.
Table suppress_rows(const Table& table, const QiSpec& qi, const RetainMask& retained);

// Globally optimal full-domain generalization with whole-class suppression:
// the satisfying node of minimal loss, ties broken by height then
// lexicographically. Unsatisfiable inputs come back with satisfied=false at
// the top node. `threads` = 0 picks the hardware concurrency.
AnonymizationResult search(const Table& table, const QiSpec& qi, const VghSet& vghs,
                           const PrivacyParams& params, unsigned threads = 0);

// Generates one hierarchy per QI attribute from the embeddings of its
// distinct values. Attributes listed in `overrides` are read from file.
VghSet generate_vghs(const Table& table, const QiSpec& qi, EmbeddingService& embeddings,
                     ClusterMethod method, std::uint64_t seed,
                     const std::map<std::string, std::filesystem::path>& overrides = {});

struct PipelineResult {
  VghSet vghs;
  AnonymizationResult result;
};

// Hierarchy generation followed by the lattice search.
PipelineResult clustem4ano(const Table& table, const QiSpec& qi, EmbeddingService& embeddings,
                           ClusterMethod method, const PrivacyParams& params, std::uint64_t seed,
                           const std::map<std::string, std::filesystem::path>& overrides = {});

}  // namespace clustem
