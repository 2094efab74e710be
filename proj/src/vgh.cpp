#include "clustem/vgh.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "clustem/cluster.hpp"
#include "clustem/error.hpp"
#include "clustem/tabular.hpp"

namespace clustem {

std::string to_string(ClusterMethod method) {
  return method == ClusterMethod::WardAgglomerative ? "ward" : "kmeans";
}

ClusterMethod parse_method(std::string_view name) {
  if (name == "ward") return ClusterMethod::WardAgglomerative;
  if (name == "kmeans") return ClusterMethod::KMeansIterative;
  throw ArgumentError("unknown clustering method '" + std::string(name) +
                      "' (expected 'kmeans' or 'ward')");
}

Vgh::Vgh(std::string attribute, std::vector<std::string> leaves,
         std::vector<std::vector<std::string>> levels)
    : attribute_(std::move(attribute)), leaves_(std::move(leaves)), levels_(std::move(levels)) {
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    if (!index_.emplace(leaves_[i], i).second) {
      throw ValidationError("hierarchy '" + attribute_ + "': duplicate leaf '" + leaves_[i] + "'");
    }
  }
  validate();
}

void Vgh::validate() const {
  const std::string where = "hierarchy '" + attribute_ + "': ";
  if (leaves_.empty()) throw ValidationError(where + "no leaves");
  if (levels_.size() < 2) throw ValidationError(where + "needs at least the leaf level and '*'");
  for (const auto& level : levels_) {
    if (level.size() != leaves_.size()) throw ValidationError(where + "level does not cover every leaf");
  }
  if (levels_.front() != leaves_) throw ValidationError(where + "level 0 is not the identity");
  for (const auto& label : levels_.back()) {
    if (label != kSuppressed) throw ValidationError(where + "top level must map every leaf to '*'");
  }
  // Coarsening: leaves sharing a label at h-1 share a label at h.
  for (std::size_t h = 1; h < levels_.size(); ++h) {
    std::map<std::string_view, std::string_view> parent;
    for (std::size_t i = 0; i < leaves_.size(); ++i) {
      auto [it, inserted] = parent.emplace(levels_[h - 1][i], levels_[h][i]);
      if (!inserted && it->second != levels_[h][i]) {
        throw ValidationError(where + "level " + std::to_string(h) + " splits group '" +
                              std::string(levels_[h - 1][i]) + "'");
      }
    }
  }
}

std::optional<std::size_t> Vgh::leaf_index(std::string_view value) const {
  auto it = index_.find(std::string(value));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Vgh::leaves_under(std::string_view label) const {
  std::vector<std::size_t> out;
  if (label == kSuppressed) {
    for (std::size_t i = 0; i < leaves_.size(); ++i) out.push_back(i);
    return out;
  }
  for (const auto& level : levels_) {
    for (std::size_t i = 0; i < level.size(); ++i) {
      if (level[i] == label) out.push_back(i);
    }
    if (!out.empty()) return out;
  }
  return out;
}

std::vector<std::string> get_categories(std::span<const std::string> values,
                                        std::span<const int> labels) {
  if (values.size() != labels.size()) {
    throw ArgumentError("get_categories: values and labels differ in length");
  }
  std::map<int, std::vector<std::string>> members;
  for (std::size_t i = 0; i < values.size(); ++i) members[labels[i]].push_back(values[i]);

  std::map<int, std::string> names;
  for (auto& [label, group] : members) {
    if (group.size() == 1) {
      names[label] = group.front();
      continue;
    }
    std::sort(group.begin(), group.end());
    std::string name = "{";
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (i) name.push_back(',');
      name += group[i];
    }
    name.push_back('}');
    names[label] = std::move(name);
  }

  std::vector<std::string> out;
  out.reserve(values.size());
  for (int l : labels) out.push_back(names[l]);
  return out;
}

namespace {

// Relabels to first-appearance order so equal partitions compare equal.
std::vector<int> canonical(std::span<const int> labels) {
  std::map<int, int> relabel;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = relabel.emplace(l, static_cast<int>(relabel.size()));
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::vector<int>> kmeans_partitions(const std::vector<Point>& points, std::uint64_t seed) {
  std::vector<std::vector<int>> partitions;
  std::vector<int> leaf_cluster(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) leaf_cluster[i] = static_cast<int>(i);

  std::vector<Point> centers = points;
  while (centers.size() > 2) {
    int target = static_cast<int>(centers.size()) - 1;
    auto fit = kmeans(centers, target, seed);
    for (auto& c : leaf_cluster) c = fit.labels[static_cast<std::size_t>(c)];
    centers = std::move(fit.centers);
    partitions.push_back(leaf_cluster);
  }
  return partitions;
}

std::vector<std::vector<int>> ward_partitions(const std::vector<Point>& points, std::uint64_t seed) {
  std::vector<std::vector<int>> partitions;
  auto merges = agglomerate(points, seed);
  // The last merge yields the single cluster, which becomes "*".
  for (std::size_t s = 1; s + 1 < points.size(); ++s) {
    partitions.push_back(cut_merges(points.size(), merges, s));
  }
  return partitions;
}

}  // namespace

Vgh build_vgh(std::string attribute, std::span<const std::string> values,
              const EmbeddingMap& embeddings, ClusterMethod method, std::uint64_t seed) {
  if (values.empty()) throw InputError("build_vgh: attribute '" + attribute + "' has no values");
  std::vector<std::string> leaves(values.begin(), values.end());
  std::sort(leaves.begin(), leaves.end());
  if (std::adjacent_find(leaves.begin(), leaves.end()) != leaves.end()) {
    throw InputError("build_vgh: values of '" + attribute + "' are not distinct");
  }

  std::vector<Point> points;
  points.reserve(leaves.size());
  for (const auto& leaf : leaves) {
    auto it = embeddings.find(leaf);
    if (it == embeddings.end()) {
      throw InputError("build_vgh: no embedding for value '" + leaf + "' of '" + attribute + "'");
    }
    points.push_back(it->second);
  }

  std::vector<std::vector<int>> partitions =
      method == ClusterMethod::WardAgglomerative ? ward_partitions(points, seed)
                                                 : kmeans_partitions(points, seed);

  std::vector<std::vector<std::string>> levels;
  levels.push_back(leaves);
  std::vector<int> previous(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) previous[i] = static_cast<int>(i);
  for (const auto& p : partitions) {
    auto current = canonical(p);
    if (current == previous) continue;
    levels.push_back(get_categories(leaves, current));
    previous = std::move(current);
  }
  levels.emplace_back(leaves.size(), std::string(kSuppressed));
  return Vgh(std::move(attribute), std::move(leaves), std::move(levels));
}

std::string format_hierarchy(const Vgh& vgh) {
  std::string out;
  for (std::size_t i = 0; i < vgh.leaf_count(); ++i) {
    for (std::size_t h = 0; h < vgh.level_count(); ++h) {
      const auto& label = vgh.label(h, i);
      if (label.find_first_of(";\r\n") != std::string::npos) {
        throw FormatError("hierarchy '" + vgh.attribute() + "': label '" + label +
                          "' contains a delimiter");
      }
      if (h) out.push_back(';');
      out += label;
    }
    out.push_back('\n');
  }
  return out;
}

Vgh parse_hierarchy(std::string attribute, std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      auto semi = line.find(';', pos);
      fields.emplace_back(line.substr(pos, semi == std::string_view::npos ? line.size() - pos : semi - pos));
      if (semi == std::string_view::npos) break;
      pos = semi + 1;
    }
    if (!rows.empty() && fields.size() != rows.front().size()) {
      throw FormatError("hierarchy '" + attribute + "' line " + std::to_string(line_no) +
                        ": expected " + std::to_string(rows.front().size()) + " fields, found " +
                        std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw FormatError("hierarchy '" + attribute + "' is empty");

  const std::size_t level_count = rows.front().size();
  std::vector<std::string> leaves;
  std::vector<std::vector<std::string>> levels(level_count);
  for (auto& row : rows) {
    leaves.push_back(row.front());
    for (std::size_t h = 0; h < level_count; ++h) levels[h].push_back(std::move(row[h]));
  }
  return Vgh(std::move(attribute), std::move(leaves), std::move(levels));
}

void write_hierarchy(const Vgh& vgh, const std::filesystem::path& path) {
  auto text = format_hierarchy(vgh);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write hierarchy '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Vgh read_hierarchy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open hierarchy '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_hierarchy(path.stem().string(), buffer.str());
}

}  // namespace clustem
