#include "panelvuong/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <unordered_map>

#include "panelvuong/error.hpp"

namespace panelvuong {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

// Label -> index in first-appearance order.
struct LabelIndex {
  std::vector<std::string> labels;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t intern(std::string_view label) {
    const auto [it, fresh] = index.try_emplace(std::string(label), labels.size());
    if (fresh) labels.emplace_back(label);
    return it->second;
  }
};

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

bool parse_double(std::string_view field, double& value) {
  if (field.empty()) return false;
  const char* first = field.data();
  if (*first == '+') ++first;  // from_chars rejects a leading plus
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

LoadedPanel read_csv(std::istream& in, const CsvSchema& schema_in) {
  CsvSchema schema = schema_in;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw Error(ErrorCode::ParseError, "line 1: missing header row");
  if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

  const std::vector<std::string_view> header = split(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!col.emplace(std::string(header[c]), c).second) {
      parse_error(lineno, "duplicate column '" + std::string(header[c]) + "'");
    }
  }
  if (schema.x_cols.empty()) {
    static const std::regex covariate("x[0-9]+");
    for (std::string_view h : header) {
      if (std::regex_match(h.begin(), h.end(), covariate)) schema.x_cols.emplace_back(h);
    }
  }
  const auto find = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) parse_error(lineno, "header has no column '" + name + "'");
    return it->second;
  };
  const std::size_t unit_c = find(schema.unit_col), time_c = find(schema.time_col), y_c = find(schema.y_col);
  std::vector<std::size_t> x_c, g_c;
  for (const auto& name : schema.x_cols) x_c.push_back(find(name));
  for (const auto& name : schema.group_cols) g_c.push_back(find(name));

  LabelIndex units, times;
  struct Row {
    std::size_t unit, time, line;
    double y;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  // Per group column: unit index -> (label, line first seen).
  std::vector<std::vector<std::pair<std::string, std::size_t>>> unit_group(g_c.size());

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string_view> f = split(line);
    if (f.size() != header.size()) {
      parse_error(lineno, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    Row r;
    r.line = lineno;
    if (f[unit_c].empty()) parse_error(lineno, "empty unit label");
    if (f[time_c].empty()) parse_error(lineno, "empty time label");
    r.unit = units.intern(f[unit_c]);
    r.time = times.intern(f[time_c]);
    const auto number = [&](std::size_t c) {
      double v = 0.0;
      if (!parse_double(f[c], v)) {
        parse_error(lineno, "column '" + std::string(header[c]) + "': '" + std::string(f[c]) + "' is not a number");
      }
      return v;
    };
    r.y = number(y_c);
    for (std::size_t c : x_c) r.x.push_back(number(c));
    for (std::size_t k = 0; k < g_c.size(); ++k) {
      auto& seen = unit_group[k];
      if (seen.size() <= r.unit) seen.resize(r.unit + 1);
      auto& [label, first_line] = seen[r.unit];
      const std::string_view value = f[g_c[k]];
      if (value.empty()) parse_error(lineno, "empty group label in column '" + schema.group_cols[k] + "'");
      if (first_line == 0) {
        label = std::string(value);
        first_line = lineno;
      } else if (label != value) {
        throw Error(ErrorCode::GroupDrift, "line " + std::to_string(lineno) + ": unit '" + units.labels[r.unit] +
                                               "' has group '" + std::string(value) + "' in column '" +
                                               schema.group_cols[k] + "', but '" + label + "' on line " +
                                               std::to_string(first_line));
      }
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": no data rows");

  // Time order: numeric when every label parses as a number, else first appearance.
  const std::size_t n = units.labels.size(), T = times.labels.size();
  std::vector<std::size_t> time_rank(T);
  std::vector<double> time_value(T);
  const bool numeric = std::all_of(times.labels.begin(), times.labels.end(), [&, k = std::size_t{0}](const std::string& s) mutable {
    return parse_double(s, time_value[k++]);
  });
  std::vector<std::size_t> order(T);
  for (std::size_t t = 0; t < T; ++t) order[t] = t;
  if (numeric) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time_value[a] < time_value[b]; });
  }
  for (std::size_t r = 0; r < T; ++r) time_rank[order[r]] = r;

  PanelInput raw;
  raw.y.assign(n, std::vector<double>(T));
  raw.x.assign(x_c.size(), Rows(n, std::vector<double>(T)));
  std::vector<std::size_t> filled(n * T, 0);
  for (const Row& r : rows) {
    const std::size_t t = time_rank[r.time];
    std::size_t& slot = filled[r.unit * T + t];
    if (slot != 0) {
      parse_error(r.line, "duplicate row for unit '" + units.labels[r.unit] + "', time '" + times.labels[r.time] +
                              "' (first on line " + std::to_string(slot) + ")");
    }
    slot = r.line;
    raw.y[r.unit][t] = r.y;
    for (std::size_t k = 0; k < x_c.size(); ++k) raw.x[k][r.unit][t] = r.x[k];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      if (filled[i * T + t] == 0) {
        throw Error(ErrorCode::Unbalanced, "no row for unit '" + units.labels[i] + "', time '" +
                                               times.labels[order[t]] + "'");
      }
    }
  }

  LoadedPanel out{validate_panel(raw), schema, units.labels, {}, {}};
  for (std::size_t t = 0; t < T; ++t) out.time_labels.push_back(times.labels[order[t]]);
  for (std::size_t k = 0; k < g_c.size(); ++k) {
    LabelIndex glabels;
    std::vector<std::size_t> assign(n);
    for (std::size_t i = 0; i < n; ++i) assign[i] = glabels.intern(unit_group[k][i].first);
    const std::size_t G = glabels.labels.size();
    out.groups.emplace(schema.group_cols[k], LabeledGroups{GroupMap(std::move(assign), G), std::move(glabels.labels)});
  }
  return out;
}

LoadedPanel load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const LoadedPanel& d) {
  const CsvSchema& s = d.schema;
  out << s.unit_col << ',' << s.time_col << ',' << s.y_col;
  for (const auto& x : s.x_cols) out << ',' << x;
  for (const auto& g : s.group_cols) out << ',' << g;
  out << '\n';
  for (std::size_t i = 0; i < d.panel.n(); ++i) {
    for (std::size_t t = 0; t < d.panel.T(); ++t) {
      out << d.unit_labels[i] << ',' << d.time_labels[t] << ',' << fmt17(d.panel.y(i, t));
      for (std::size_t k = 0; k < d.panel.K(); ++k) out << ',' << fmt17(d.panel.x(i, t, k));
      for (const auto& g : s.group_cols) {
        const LabeledGroups& lg = d.groups.at(g);
        out << ',' << lg.labels[lg.gmap.group_of(i)];
      }
      out << '\n';
    }
  }
}

}  // namespace panelvuong
