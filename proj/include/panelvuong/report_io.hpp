#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "panelvuong/montecarlo.hpp"
#include "panelvuong/report.hpp"

namespace panelvuong {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolName = "panelvuong";
inline constexpr const char* kToolVersion = "1.0.0";

// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

// 17 significant digits, "%.17g" in the C locale.
std::string format_real(double v);

// Native number (shortest round-trip form) or, when exact, a 17-digit string.
// Non-finite values become null in native mode.
Json real(double v, bool exact);
// Inverse of real() for either form.
double read_real(const Json& j);

// Document with top-level keys metadata, test, components, warnings.
Json report_to_json(const TestReport& report, Json metadata, bool exact);
// Flat section,key,value rendering of the same document.
void write_report_csv(std::ostream& out, const Json& doc);

// One JSON object per replication; used by replications.jsonl.
Json record_to_json(const McResult& mc, const McRecord& rec);

// Header of size_power.csv.
inline constexpr const char* kSizePowerHeader = "kind,n,T,G,kappa,c,level,side,rate,se,reps,degenerate_count";
void write_size_power_rows(std::ostream& out, const DgpConfig& config, const McSummary& summary);

}  // namespace panelvuong
