#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clustem/anonymize.hpp"
#include "clustem/tabular.hpp"

namespace clustem {

// |D'| / |D|; an empty original counts as fully retained.
double perc_recs(std::size_t original_rows, std::size_t retained_rows);

// |D'| / (|groups| * k); zero when nothing was retained.
double c_avg(std::size_t retained_rows, std::size_t group_count, int k);

// Largest total-variation distance between a class's sensitive-value
// distribution and the distribution over all rows in `groups`.
double t_closeness(const std::vector<EquivalenceClass>& groups, const Column& sensitive);

struct AchievedPrivacy {
  int k = 0;
  int l = 0;  // 0 when no sensitive column was given
};

// Smallest class size and smallest distinct-sensitive count; 0/0 for no groups.
AchievedPrivacy achieved_privacy(const std::vector<EquivalenceClass>& groups,
                                 const Column* sensitive);

struct MetricReport {
  int achieved_k = 0;
  std::optional<int> achieved_l;
  std::optional<double> t_closeness;
  double perc_recs = 1.0;
  double c_avg = 0.0;
  std::size_t rows = 0;
  std::size_t retained = 0;
  std::size_t groups = 0;
  PrivacyParams requested;
  std::optional<LatticeNode> node;
  std::optional<double> loss;
  std::optional<bool> satisfied;
};

// Metrics over the retained rows of an anonymized table.
MetricReport measure(const Table& anonymized, const QiSpec& qi, const RetainMask& retained,
                     const PrivacyParams& requested);
MetricReport measure(const AnonymizationResult& result, const QiSpec& qi,
                     const PrivacyParams& requested);

// Recovers the suppression mask from a written table: a row is suppressed when
// every QI cell is "*", unless every row looks like that (top node, nothing
// suppressed).
RetainMask infer_retained(const Table& anonymized, const QiSpec& qi);

nlohmann::json to_json(const MetricReport& report);

}  // namespace clustem
