#include "panelvuong/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

#include "panelvuong/error.hpp"

namespace panelvuong {
namespace {

Json reals(const Eigen::VectorXd& v, bool exact) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(real(v[i], exact));
  return a;
}

template <class T>
Json optional_value(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json optional_real(const std::optional<double>& v, bool exact) { return v ? real(*v, exact) : Json(nullptr); }

Json components_json(const ClassicComponents& c, bool exact) {
  Json j;
  j["L1"] = real(c.L1, exact);
  j["L2"] = real(c.L2, exact);
  j["R1"] = real(c.R1, exact);
  j["R2"] = real(c.R2, exact);
  j["mqlr"] = real(c.mqlr, exact);
  j["sigma2"] = real(c.sigma2, exact);
  j["sigma2_u"] = real(c.sigma2_u, exact);
  j["sigma2_s"] = real(c.sigma2_s, exact);
  j["omega2"] = real(c.omega2, exact);
  j["per_unit"] = {{"sigma2_1", reals(c.sigma2_1, exact)},
                   {"sigma2_2", reals(c.sigma2_2, exact)},
                   {"s2_2", reals(c.s2_2, exact)},
                   {"sigma2_12", reals(c.sigma2_12, exact)}};
  return j;
}

Json components_json(const TwfeComponents& c, bool exact) {
  Json j;
  j["qlr"] = real(c.qlr, exact);
  j["bias"] = real(c.bias, exact);
  j["mqlr"] = real(c.mqlr, exact);
  j["sigma2"] = real(c.sigma2, exact);
  j["sigma2_u"] = real(c.sigma2_u, exact);
  j["omega2"] = real(c.omega2, exact);
  j["per_unit"] = {{"sigma2_1", reals(c.sigma2_1, exact)},
                   {"sigma2_2", reals(c.sigma2_2, exact)},
                   {"sigma12", reals(c.sigma12, exact)}};
  return j;
}

std::string csv_cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_real(v.get<double>());
  return v.dump();
}

void flatten(std::ostream& out, const std::string& section, const std::string& key, const Json& v) {
  if (v.is_object()) {
    for (const auto& [k, sub] : v.items()) flatten(out, section, key.empty() ? k : key + "." + k, sub);
  } else if (v.is_array() && !v.empty() && (v.front().is_object() || v.front().is_array())) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(out, section, key + "." + std::to_string(i), v[i]);
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) out << section << ',' << key << '.' << i << ',' << csv_cell(v[i]) << '\n';
  } else {
    out << section << ',' << key << ',' << csv_cell(v) << '\n';
  }
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json real(double v, bool exact) {
  if (exact) return format_real(v);
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

double read_real(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_null()) return std::nan("");
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw Error(ErrorCode::ParseError, "'" + s + "' is not a real");
  return v;
}

Json report_to_json(const TestReport& r, Json metadata, bool exact) {
  Json doc;
  metadata["float_format"] = exact ? "string-17g" : "native";
  doc["metadata"] = std::move(metadata);

  Json t;
  t["test"] = r.test;
  t["level"] = real(r.level, exact);
  t["statistic"] = optional_real(r.statistic, exact);
  t["mqlr"] = real(r.mqlr, exact);
  t["qlr_raw"] = real(r.qlr_raw, exact);
  t["omega2_hat"] = real(r.omega2_hat, exact);
  t["p_two_sided"] = optional_real(r.p_two_sided, exact);
  t["p_one_sided"] = optional_real(r.p_one_sided, exact);
  t["reject_two"] = optional_value(r.reject_two);
  t["reject_one"] = optional_value(r.reject_one);
  t["degenerate"] = r.degenerate;
  t["degenerate_reason"] = r.degenerate ? Json(r.degenerate_reason) : Json(nullptr);
  t["notes"] = r.notes;
  doc["test"] = std::move(t);

  doc["components"] = std::visit([&](const auto& c) { return components_json(c, exact); }, r.components);

  Json warnings = Json::array();
  if (r.degenerate) warnings.push_back("degenerate comparison: " + r.degenerate_reason);
  for (const auto& w : r.warnings) warnings.push_back(w);
  for (const auto& note : r.notes) warnings.push_back("assumption: " + note);
  doc["warnings"] = std::move(warnings);
  return doc;
}

void write_report_csv(std::ostream& out, const Json& doc) {
  out << "section,key,value\n";
  for (const auto& [section, body] : doc.items()) {
    if (body.is_array()) {
      for (std::size_t i = 0; i < body.size(); ++i) out << section << ',' << i << ',' << csv_cell(body[i]) << '\n';
    } else {
      flatten(out, section, "", body);
    }
  }
}

Json record_to_json(const McResult& mc, const McRecord& rec) {
  Json j;
  j["kind"] = to_string(mc.config.kind);
  j["test"] = to_string(mc.test);
  j["kappa"] = mc.config.kappa;
  j["c"] = mc.config.c;
  j["rep"] = rec.rep;
  j["failed"] = rec.failed;
  j["error"] = rec.failed ? Json(rec.error) : Json(nullptr);
  j["degenerate"] = rec.degenerate;
  const bool usable = !rec.failed && !rec.degenerate;
  j["mqlr"] = rec.failed ? Json(nullptr) : real(rec.mqlr, false);
  j["omega2"] = rec.failed ? Json(nullptr) : real(rec.omega2, false);
  j["statistic"] = usable ? real(rec.statistic, false) : Json(nullptr);
  j["raw_statistic"] = usable ? real(rec.raw_statistic, false) : Json(nullptr);
  Json levels = Json::array();
  for (std::size_t k = 0; k < mc.levels.size(); ++k) {
    levels.push_back({{"level", mc.levels[k]},
                      {"reject_two", usable ? Json(static_cast<bool>(rec.reject_two[k])) : Json(nullptr)},
                      {"reject_one", usable ? Json(static_cast<bool>(rec.reject_one[k])) : Json(nullptr)}});
  }
  j["decisions"] = std::move(levels);
  return j;
}

void write_size_power_rows(std::ostream& out, const DgpConfig& cfg, const McSummary& s) {
  for (const SizePowerRow& row : s.rows) {
    out << to_string(cfg.kind) << ',' << cfg.n << ',' << cfg.T << ',' << cfg.G << ',' << format_real(cfg.kappa) << ','
        << format_real(cfg.c) << ',' << format_real(row.level) << ',' << row.side << ',' << format_real(row.rate)
        << ',' << format_real(row.se) << ',' << row.reps << ',' << row.degenerate_count << '\n';
  }
}

}  // namespace panelvuong
