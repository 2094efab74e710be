#include "clustem/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "clustem/error.hpp"

namespace clustem {

namespace {

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;  // from_chars rejects a leading plus
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

bool infer_numeric(const std::vector<std::string>& values) {
  bool any = false;
  for (const auto& v : values) {
    if (v == kMissing) continue;
    if (!parse_number(v)) return false;
    any = true;
  }
  return any;
}

// Splits RFC-4180 text into records. Tracks the physical line each record
// starts on for error messages.
struct RawRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<RawRecord> split_records(std::string_view text) {
  std::vector<RawRecord> records;
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);
  }

  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    RawRecord record;
    record.line = line;
    std::string field;
    bool end_of_record = false;
    while (!end_of_record) {
      field.clear();
      if (i < n && text[i] == '"') {
        ++i;
        bool closed = false;
        while (i < n) {
          char c = text[i];
          if (c == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              field.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            closed = true;
            break;
          }
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        if (!closed) {
          throw StructuralError("unterminated quoted field starting on line " +
                                std::to_string(record.line));
        }
        if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          throw StructuralError("unexpected character after closing quote on line " +
                                std::to_string(line));
        }
      } else {
        while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          field.push_back(text[i]);
          ++i;
        }
      }
      record.fields.push_back(field);
      if (i >= n) {
        end_of_record = true;
      } else if (text[i] == ',') {
        ++i;
      } else {
        if (text[i] == '\r') ++i;
        if (i < n && text[i] == '\n') ++i;
        ++line;
        end_of_record = true;
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

bool needs_quoting(std::string_view value) {
  return value.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_field(std::string& out, std::string_view value) {
  if (!needs_quoting(value)) {
    out.append(value);
    return;
  }
  out.push_back('"');
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::string to_string(ColumnKind kind) {
  return kind == ColumnKind::Numeric ? "numeric" : "nominal";
}

std::optional<double> Column::number(std::size_t row) const {
  const std::string& v = values.at(row);
  if (v == kMissing) return std::nullopt;
  return parse_number(v);
}

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.name.empty()) throw SchemaError("column name must be non-empty");
    if (!seen.insert(c.name).second) throw SchemaError("duplicate column name '" + c.name + "'");
  }
  row_count_ = columns_.empty() ? 0 : columns_.front().values.size();
  for (const auto& c : columns_) {
    if (c.values.size() != row_count_) {
      throw StructuralError("column '" + c.name + "' has " + std::to_string(c.values.size()) +
                            " values, expected " + std::to_string(row_count_));
    }
  }
}

bool Table::has_column(std::string_view name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const Column& c) { return c.name == name; });
}

std::size_t Table::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  throw SpecError("no column named '" + std::string(name) + "'");
}

const Column& Table::column(std::string_view name) const { return columns_[index_of(name)]; }

Table Table::with_values(std::string_view name, std::vector<std::string> values) const {
  auto columns = columns_;
  columns[index_of(name)].values = std::move(values);
  return Table(std::move(columns));
}

Table Table::head(std::size_t n) const {
  auto columns = columns_;
  for (auto& c : columns) {
    if (c.values.size() > n) c.values.resize(n);
  }
  return Table(std::move(columns));
}

void QiSpec::validate(const Table& table) const {
  if (qi.empty()) throw SpecError("quasi-identifier list is empty");
  std::set<std::string> seen;
  for (const auto& name : qi) {
    if (!table.has_column(name)) throw SpecError("QI column '" + name + "' not found");
    if (!seen.insert(name).second) throw SpecError("QI column '" + name + "' listed twice");
  }
  if (sa) {
    if (!table.has_column(*sa)) throw SpecError("sensitive column '" + *sa + "' not found");
    if (seen.count(*sa)) throw SpecError("sensitive column '" + *sa + "' is also a QI");
  }
}

std::vector<EquivalenceClass> group_by_qi(const Table& table, const QiSpec& qi,
                                          const RetainMask& mask) {
  if (mask.size() != table.row_count()) {
    throw ArgumentError("mask length " + std::to_string(mask.size()) + " != row count " +
                        std::to_string(table.row_count()));
  }
  std::vector<const Column*> columns;
  for (const auto& name : qi.qi) columns.push_back(&table.column(name));

  std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
  std::vector<std::string> key(columns.size());
  for (std::size_t row = 0; row < table.row_count(); ++row) {
    if (!mask[row]) continue;
    for (std::size_t j = 0; j < columns.size(); ++j) key[j] = columns[j]->values[row];
    groups[key].push_back(row);
  }

  std::vector<EquivalenceClass> out;
  out.reserve(groups.size());
  for (auto& [k, rows] : groups) out.push_back({k, std::move(rows)});
  return out;
}

std::vector<EquivalenceClass> group_by_qi(const Table& table, const QiSpec& qi) {
  return group_by_qi(table, qi, RetainMask(table.row_count(), true));
}

Table parse_csv(std::string_view text, const KindOverrides& overrides) {
  auto records = split_records(text);
  if (records.empty()) throw StructuralError("missing header row");

  const auto& header = records.front().fields;
  std::vector<Column> columns(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) {
    columns[j].name = header[j];
    if (header[j].empty()) throw SchemaError("empty column name at position " + std::to_string(j + 1));
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) {
      throw StructuralError("line " + std::to_string(rec.line) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(rec.fields.size()));
    }
    for (std::size_t j = 0; j < header.size(); ++j) columns[j].values.push_back(rec.fields[j]);
  }

  for (auto& c : columns) {
    c.kind = infer_numeric(c.values) ? ColumnKind::Numeric : ColumnKind::Nominal;
  }

  Table table(std::move(columns));  // validates names

  std::vector<Column> finished = table.columns();
  for (const auto& [name, kind] : overrides) {
    auto& c = finished[table.index_of(name)];
    if (kind == ColumnKind::Numeric) {
      for (std::size_t row = 0; row < c.values.size(); ++row) {
        if (c.values[row] != kMissing && !parse_number(c.values[row])) {
          throw SchemaError("column '" + name + "' forced numeric but row " +
                            std::to_string(row + 1) + " holds '" + c.values[row] + "'");
        }
      }
    }
    c.kind = kind;
  }
  return Table(std::move(finished));
}

Table load_csv(const std::filesystem::path& path, const KindOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), overrides);
}

std::string format_csv(const Table& table) {
  std::string out;
  const auto& columns = table.columns();
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (j) out.push_back(',');
    append_field(out, columns[j].name);
  }
  out.push_back('\n');
  for (std::size_t row = 0; row < table.row_count(); ++row) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) out.push_back(',');
      const auto& v = columns[j].values[row];
      // A lone empty field on a one-column row would read back as a blank line.
      if (v.empty() && columns.size() == 1) {
        out.append("\"\"");
      } else {
        append_field(out, v);
      }
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << format_csv(table);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::string> distinct_values(const Column& column) {
  std::set<std::string> unique(column.values.begin(), column.values.end());
  return {unique.begin(), unique.end()};
}

}  // namespace clustem
