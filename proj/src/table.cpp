#include "fimlab/table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "fimlab/errors.hpp"

namespace fimlab {

void ResultTable::add_metadata(const std::string& key, const std::string& value) {
  metadata.emplace_back(key, value);
}

void ResultTable::add_metadata(const std::string& key, double value) {
  metadata.emplace_back(key, format_sig(value));
}

TableFormat parse_format(const std::string& s) {
  if (s == "csv") return TableFormat::csv;
  if (s == "md") return TableFormat::markdown;
  if (s == "json") return TableFormat::json;
  throw Error("unknown format: " + s);
}

std::string format_sig(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

namespace {

std::string cell_text(const Cell& c) { return c.numeric ? format_sig(c.num) : c.text; }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string to_csv(const ResultTable& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(t.columns[i]);
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cell_text(row[i]));
    }
    out += '\n';
  }
  return out;
}

std::string to_markdown(const ResultTable& t) {
  std::string out = "## " + t.title + "\n\n|";
  for (const auto& c : t.columns) out += " " + c + " |";
  out += "\n|";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += " --- |";
  out += '\n';
  for (const auto& row : t.rows) {
    out += '|';
    for (const auto& c : row) out += " " + cell_text(c) + " |";
    out += '\n';
  }
  if (!t.metadata.empty()) {
    out += '\n';
    for (const auto& [k, v] : t.metadata) out += "- " + k + ": " + v + "\n";
  }
  return out;
}

nlohmann::ordered_json to_json_obj(const ResultTable& t) {
  nlohmann::ordered_json j;
  j["name"] = t.name;
  j["title"] = t.title;
  j["columns"] = t.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    auto jr = nlohmann::ordered_json::array();
    for (const auto& c : row) {
      if (!c.numeric) {
        jr.push_back(c.text);
      } else if (std::isnan(c.num)) {
        jr.push_back(nullptr);
      } else {
        // Reparse the 6-digit form so json output and text output agree.
        jr.push_back(std::stod(format_sig(c.num)));
      }
    }
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  auto meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : t.metadata) meta[k] = v;
  j["metadata"] = std::move(meta);
  return j;
}

}  // namespace

std::string render(const ResultTable& t, TableFormat format) {
  switch (format) {
    case TableFormat::csv: {
      std::string out;
      for (const auto& [k, v] : t.metadata) out += "# " + k + ": " + v + "\n";
      return out + to_csv(t);
    }
    case TableFormat::markdown:
      return to_markdown(t);
    case TableFormat::json:
      return to_json_obj(t).dump(2) + "\n";
  }
  throw Error("render: bad format");
}

std::string render_all(const std::vector<ResultTable>& tables, TableFormat format) {
  if (format == TableFormat::json) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : tables) arr.push_back(to_json_obj(t));
    return arr.dump(2) + "\n";
  }
  std::string out;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i) out += '\n';
    if (format == TableFormat::csv) out += "# table: " + tables[i].name + "\n";
    out += render(tables[i], format);
  }
  return out;
}

void emit(const ResultTable& table, TableFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("emit: cannot open " + path);
  out << render(table, format);
  if (!out) throw IoFailure("emit: write failed for " + path);
}

}  // namespace fimlab
