#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fimlab {

// One output cell: either a number (formatted to 6 significant digits on
// emission) or a literal label.
struct Cell {
  bool numeric = false;
  double num = 0.0;
  std::string text;

  static Cell number(double v) { return Cell{true, v, {}}; }
  static Cell label(std::string s) { return Cell{false, 0.0, std::move(s)}; }
};

struct ResultTable {
  std::string name;   // slug used in file names
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  // Ordered so emission is byte-stable.
  std::vector<std::pair<std::string, std::string>> metadata;

  void add_metadata(const std::string& key, const std::string& value);
  void add_metadata(const std::string& key, double value);
};

enum class TableFormat { csv, markdown, json };

TableFormat parse_format(const std::string& s);  // "csv" | "md" | "json"

std::string format_sig(double v);  // 6 significant digits

std::string render(const ResultTable& table, TableFormat format);
std::string render_all(const std::vector<ResultTable>& tables, TableFormat format);

// Writes render() output (with trailing newline) to path. Throws IoFailure.
void emit(const ResultTable& table, TableFormat format, const std::string& path);

}  // namespace fimlab
