#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clustem/embed.hpp"

namespace clustem {

enum class ClusterMethod { KMeansIterative, WardAgglomerative };

std::string to_string(ClusterMethod method);
// Accepts "kmeans" and "ward". Throws ArgumentError otherwise.
ClusterMethod parse_method(std::string_view name);

// Value generalization hierarchy of one attribute. levels[h][i] is the label
// of leaves[i] at height h; height 0 is the identity, the last height maps
// every leaf to "*", and each height coarsens the one below it.
class Vgh {
 public:
  Vgh() = default;
  // Validates; throws ValidationError if any invariant is broken.
  Vgh(std::string attribute, std::vector<std::string> leaves,
      std::vector<std::vector<std::string>> levels);

  const std::string& attribute() const noexcept { return attribute_; }
  const std::vector<std::string>& leaves() const noexcept { return leaves_; }
  const std::vector<std::vector<std::string>>& levels() const noexcept { return levels_; }
  std::size_t level_count() const noexcept { return levels_.size(); }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }

  std::optional<std::size_t> leaf_index(std::string_view value) const;
  const std::string& label(std::size_t level, std::size_t leaf) const {
    return levels_[level][leaf];
  }
  // Leaves covered by a label appearing at any level ("*" covers all).
  // Empty if the label is unknown.
  std::vector<std::size_t> leaves_under(std::string_view label) const;

  bool operator==(const Vgh& other) const {
    return attribute_ == other.attribute_ && leaves_ == other.leaves_ && levels_ == other.levels_;
  }

 private:
  void validate() const;

  std::string attribute_;
  std::vector<std::string> leaves_;
  std::vector<std::vector<std::string>> levels_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Label for each value given a flat clustering: singleton clusters keep the
// raw value, larger clusters become "{a,b,...}" with members sorted.
std::vector<std::string> get_categories(std::span<const std::string> values,
                                        std::span<const int> labels);

// Builds a hierarchy by clustering the values' embeddings. Values must be
// distinct; leaves are stored sorted. Levels that repeat the previous
// partition are dropped, and the single-cluster level is written as "*".
Vgh build_vgh(std::string attribute, std::span<const std::string> values,
              const EmbeddingMap& embeddings, ClusterMethod method, std::uint64_t seed);

// Semicolon-separated text, one row per leaf, one column per level.
std::string format_hierarchy(const Vgh& vgh);
Vgh parse_hierarchy(std::string attribute, std::string_view text);
void write_hierarchy(const Vgh& vgh, const std::filesystem::path& path);
// The attribute name is taken from the file stem.
Vgh read_hierarchy(const std::filesystem::path& path);

}  // namespace clustem
