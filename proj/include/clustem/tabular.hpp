#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clustem {

// Literal used by the Adult dataset (and by us) for a missing cell.
inline constexpr std::string_view kMissing = "?";
// Label of the top hierarchy level and of suppressed QI cells.
inline constexpr std::string_view kSuppressed = "*";

enum class ColumnKind { Nominal, Numeric };

std::string to_string(ColumnKind kind);

// Cells are kept as their original text so that a table survives a
// load/write/load cycle unchanged. Numeric columns guarantee that every
// non-missing cell parses as a finite real.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Nominal;
  std::vector<std::string> values;

  // Parsed value of a Numeric cell; nullopt for the missing marker.
  std::optional<double> number(std::size_t row) const;

  bool operator==(const Column&) const = default;
};

class Table {
 public:
  Table() = default;
  // Throws SchemaError on empty/duplicate names and StructuralError when the
  // columns disagree on length.
  explicit Table(std::vector<Column> columns);

  std::size_t row_count() const noexcept { return row_count_; }
  std::size_t column_count() const noexcept { return columns_.size(); }
  const std::vector<Column>& columns() const noexcept { return columns_; }

  bool has_column(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws SpecError
  const Column& column(std::string_view name) const;  // throws SpecError
  const Column& column(std::size_t index) const { return columns_.at(index); }

  // Copy with one column's values swapped out. Kind is kept.
  Table with_values(std::string_view name, std::vector<std::string> values) const;
  // Copy keeping only the first n rows.
  Table head(std::size_t n) const;

  bool operator==(const Table&) const = default;

 private:
  std::vector<Column> columns_;
  std::size_t row_count_ = 0;
};

struct QiSpec {
  std::vector<std::string> qi;
  std::optional<std::string> sa;

  // Throws SpecError unless qi is non-empty, free of duplicates, every name
  // exists in the table, and sa is present and not part of qi.
  void validate(const Table& table) const;
};

// true = row retained, false = row suppressed.
using RetainMask = std::vector<bool>;

struct EquivalenceClass {
  std::vector<std::string> key;
  std::vector<std::size_t> rows;

  bool operator==(const EquivalenceClass&) const = default;
};

// Partition of the retained rows by exact QI values; classes ordered by key,
// rows ascending inside each class.
std::vector<EquivalenceClass> group_by_qi(const Table& table, const QiSpec& qi,
                                          const RetainMask& mask);
std::vector<EquivalenceClass> group_by_qi(const Table& table, const QiSpec& qi);

using KindOverrides = std::map<std::string, ColumnKind>;

// RFC-4180 reader/writer. Column kinds are inferred (Numeric iff every
// non-missing cell parses as a finite real), then overrides are applied.
Table parse_csv(std::string_view text, const KindOverrides& overrides = {});
Table load_csv(const std::filesystem::path& path, const KindOverrides& overrides = {});
std::string format_csv(const Table& table);
void write_csv(const Table& table, const std::filesystem::path& path);

// Distinct values of a column in lexicographic order.
std::vector<std::string> distinct_values(const Column& column);

}  // namespace clustem
