#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "panelvuong/panel.hpp"

namespace panelvuong {

struct CsvSchema {
  std::string unit_col = "unit";
  std::string time_col = "time";
  std::string y_col = "y";
  std::vector<std::string> x_cols;  // empty: every column named x<digits>, in header order
  std::vector<std::string> group_cols;
};

struct LabeledGroups {
  GroupMap gmap;
  std::vector<std::string> labels;  // index g -> input label, first-appearance order
};

struct LoadedPanel {
  Panel panel;
  CsvSchema schema;  // with x_cols resolved
  std::vector<std::string> unit_labels;  // index i -> input label, first-appearance order
  std::vector<std::string> time_labels;  // index t -> input label, numeric order when all numeric
  std::map<std::string, LabeledGroups> groups;
};

// Header row, comma separated, no quoting. Throws ParseError (with the
// 1-based line number), GroupDrift, Unbalanced, NonFinite, TooSmall.
LoadedPanel read_csv(std::istream& in, const CsvSchema& schema);
LoadedPanel load_csv(const std::string& path, const CsvSchema& schema);

// Inverse of read_csv: one row per (unit, time) with reals at 17 significant digits.
void write_csv(std::ostream& out, const LoadedPanel& data);

// Strict decimal parse of a whole field; false on any trailing text.
bool parse_double(std::string_view field, double& value);

}  // namespace panelvuong
