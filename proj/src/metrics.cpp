#include "clustem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "clustem/error.hpp"

namespace clustem {

double perc_recs(std::size_t original_rows, std::size_t retained_rows) {
  if (retained_rows > original_rows) throw ArgumentError("perc_recs: retained exceeds original");
  if (original_rows == 0) return 1.0;
  return static_cast<double>(retained_rows) / static_cast<double>(original_rows);
}

double c_avg(std::size_t retained_rows, std::size_t group_count, int k) {
  if (k < 1) throw ArgumentError("c_avg: k must be at least 1");
  if (retained_rows == 0) return 0.0;
  if (group_count == 0) throw ArgumentError("c_avg: retained rows but no groups");
  return static_cast<double>(retained_rows) /
         (static_cast<double>(group_count) * static_cast<double>(k));
}

double t_closeness(const std::vector<EquivalenceClass>& groups, const Column& sensitive) {
  std::map<std::string_view, std::size_t> global;
  std::size_t total = 0;
  for (const auto& g : groups) {
    for (auto r : g.rows) ++global[sensitive.values[r]];
    total += g.rows.size();
  }
  if (total == 0) return 0.0;

  double worst = 0.0;
  for (const auto& g : groups) {
    if (g.rows.empty()) continue;
    std::map<std::string_view, std::size_t> local;
    for (auto r : g.rows) ++local[sensitive.values[r]];
    double distance = 0.0;
    for (const auto& [value, count] : global) {
      auto it = local.find(value);
      double p_local = it == local.end()
                           ? 0.0
                           : static_cast<double>(it->second) / static_cast<double>(g.rows.size());
      double p_global = static_cast<double>(count) / static_cast<double>(total);
      distance += std::abs(p_local - p_global);
    }
    worst = std::max(worst, 0.5 * distance);
  }
  return std::min(worst, 1.0);
}

AchievedPrivacy achieved_privacy(const std::vector<EquivalenceClass>& groups,
                                 const Column* sensitive) {
  if (groups.empty()) return {};
  AchievedPrivacy out{std::numeric_limits<int>::max(), sensitive ? std::numeric_limits<int>::max() : 0};
  for (const auto& g : groups) {
    out.k = std::min(out.k, static_cast<int>(g.rows.size()));
    if (sensitive) {
      std::set<std::string_view> distinct;
      for (auto r : g.rows) distinct.insert(sensitive->values[r]);
      out.l = std::min(out.l, static_cast<int>(distinct.size()));
    }
  }
  return out;
}

MetricReport measure(const Table& anonymized, const QiSpec& qi, const RetainMask& retained,
                     const PrivacyParams& requested) {
  MetricReport report;
  report.requested = requested;
  report.rows = anonymized.row_count();
  auto groups = group_by_qi(anonymized, qi, retained);
  report.groups = groups.size();
  for (const auto& g : groups) report.retained += g.rows.size();

  const Column* sa = qi.sa ? &anonymized.column(*qi.sa) : nullptr;
  auto achieved = achieved_privacy(groups, sa);
  report.achieved_k = achieved.k;
  if (sa) {
    report.achieved_l = achieved.l;
    report.t_closeness = t_closeness(groups, *sa);
  }
  report.perc_recs = perc_recs(report.rows, report.retained);
  report.c_avg = c_avg(report.retained, report.groups, requested.k);
  return report;
}

MetricReport measure(const AnonymizationResult& result, const QiSpec& qi,
                     const PrivacyParams& requested) {
  auto report = measure(result.table, qi, result.retained, requested);
  report.node = result.node;
  report.loss = result.loss;
  report.satisfied = result.satisfied;
  return report;
}

RetainMask infer_retained(const Table& anonymized, const QiSpec& qi) {
  std::vector<const Column*> columns;
  for (const auto& name : qi.qi) columns.push_back(&anonymized.column(name));
  RetainMask mask(anonymized.row_count(), true);
  std::size_t starred = 0;
  for (std::size_t r = 0; r < anonymized.row_count(); ++r) {
    bool all = std::all_of(columns.begin(), columns.end(),
                           [&](const Column* c) { return c->values[r] == kSuppressed; });
    if (all) {
      mask[r] = false;
      ++starred;
    }
  }
  if (starred == anonymized.row_count()) mask.assign(anonymized.row_count(), true);
  return mask;
}

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json j;
  j["achieved_k"] = report.achieved_k;
  j["achieved_l"] = report.achieved_l ? nlohmann::json(*report.achieved_l) : nlohmann::json(nullptr);
  j["t_closeness"] =
      report.t_closeness ? nlohmann::json(*report.t_closeness) : nlohmann::json(nullptr);
  j["perc_recs"] = report.perc_recs;
  j["c_avg"] = report.c_avg;
  j["rows"] = report.rows;
  j["retained_rows"] = report.retained;
  j["group_count"] = report.groups;
  j["requested"] = {{"k", report.requested.k},
                    {"l", report.requested.l},
                    {"sup_limit", report.requested.sup_limit}};
  if (report.node) j["node"] = report.node->levels;
  if (report.loss) j["loss"] = *report.loss;
  if (report.satisfied) j["satisfied"] = *report.satisfied;
  return j;
}

}  // namespace clustem
