#include "panelvuong/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "panelvuong/csv_io.hpp"
#include "panelvuong/error.hpp"
#include "panelvuong/estimation.hpp"
#include "panelvuong/montecarlo.hpp"
#include "panelvuong/report_io.hpp"
#include "panelvuong/vuong_classic.hpp"
#include "panelvuong/vuong_twfe.hpp"

namespace panelvuong {
namespace {

struct TestFlags {
  std::string input;
  std::string schema;
  double level = 0.05;
  std::string model1 = "gaussian-fixed-scale:individual";
  std::string model2;
  std::string group_col;
  std::string out;
  std::string format = "json";
  bool exact_floats = false;
  bool timestamp = false;
};

struct SimFlags {
  std::string kind;
  std::size_t n = 100, T = 100, G = 10, K = 1;
  std::vector<double> kappa{0.0};
  std::vector<double> c{0.0};
  std::size_t reps = 0;
  std::uint64_t seed = 1;
  std::vector<double> levels{0.05};
  std::string out_dir = ".";
  unsigned workers = 0;
  std::string local_base = "D";
  std::string test = "auto";
  double sigma = 1.0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CsvSchema load_schema(const std::string& path) {
  CsvSchema schema;
  if (path.empty()) return schema;
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "schema '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "schema '" + path + "' must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "unit_col") schema.unit_col = value.get<std::string>();
      else if (key == "time_col") schema.time_col = value.get<std::string>();
      else if (key == "y_col") schema.y_col = value.get<std::string>();
      else if (key == "x_cols") schema.x_cols = value.get<std::vector<std::string>>();
      else if (key == "group_cols") schema.group_cols = value.get<std::vector<std::string>>();
      else throw Error(ErrorCode::ConfigError, "schema '" + path + "': unknown key '" + key + "'");
    }
  } catch (const Json::type_error& e) {
    throw Error(ErrorCode::ConfigError, "schema '" + path + "': " + e.what());
  }
  return schema;
}

struct ModelFlag {
  std::string family;
  std::string grouping;  // "individual", "pooled" or a group column
};

ModelFlag parse_model(const std::string& flag, const char* which) {
  const auto colon = flag.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == flag.size()) {
    throw Error(ErrorCode::ConfigError, std::string(which) + " must be FAMILY:GROUPING, got '" + flag + "'");
  }
  return {flag.substr(0, colon), flag.substr(colon + 1)};
}

bool is_column(const ModelFlag& m) { return m.grouping != "individual" && m.grouping != "pooled"; }

GroupMap grouping(const ModelFlag& m, const LoadedPanel& data) {
  if (m.grouping == "individual") return GroupMap::individual(data.panel.n());
  if (m.grouping == "pooled") return GroupMap::pooled(data.panel.n());
  return data.groups.at(m.grouping).gmap;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json base_metadata(const std::string& command, bool timestamp) {
  Json meta;
  meta["tool"] = kToolName;
  meta["version"] = kToolVersion;
  meta["schema_version"] = kSchemaVersion;
  meta["command"] = command;
  if (timestamp) meta["timestamp"] = utc_now();
  return meta;
}

Json label_maps(const LoadedPanel& data) {
  Json groups = Json::object();
  for (const auto& [col, lg] : data.groups) groups[col] = lg.labels;
  return {{"units", data.unit_labels}, {"times", data.time_labels}, {"groups", std::move(groups)}};
}

void emit(const Json& doc, const TestFlags& f, std::ostream& out) {
  std::ostringstream body;
  if (f.format == "json") {
    body << doc.dump(2) << '\n';
  } else {
    write_report_csv(body, doc);
  }
  if (f.out.empty() || f.out == "-") {
    out << body.str();
    return;
  }
  std::ofstream file(f.out, std::ios::binary);
  if (!file) throw Error(ErrorCode::ConfigError, "cannot write '" + f.out + "'");
  file << body.str();
}

int cmd_test(const std::string& which, const TestFlags& f, std::ostream& out) {
  if (!(f.level > 0.0 && f.level < 1.0)) throw Error(ErrorCode::OutOfRange, "--level must lie in (0, 1)");
  CsvSchema schema = load_schema(f.schema);
  std::optional<ModelFlag> m1, m2;
  if (which == "classic") {
    if (f.model2.empty()) throw Error(ErrorCode::ConfigError, "classic test needs --model2");
    m1 = parse_model(f.model1, "--model1");
    m2 = parse_model(f.model2, "--model2");
    for (const ModelFlag* m : {&*m1, &*m2}) {
      if (is_column(*m)) schema.group_cols.push_back(m->grouping);
    }
  } else {
    if (f.group_col.empty()) throw Error(ErrorCode::ConfigError, "twfe test needs --group-col");
    schema.group_cols.push_back(f.group_col);
  }
  {
    std::set<std::string> seen;
    std::vector<std::string> unique;
    for (const auto& g : schema.group_cols) {
      if (seen.insert(g).second) unique.push_back(g);
    }
    schema.group_cols = std::move(unique);
  }

  const std::string bytes = read_file(f.input);
  std::istringstream in(bytes);
  const LoadedPanel data = read_csv(in, schema);

  Json meta = base_metadata("test " + which, f.timestamp);
  meta["input"] = {{"path", f.input}, {"fnv1a64", fnv1a_hex(bytes)}, {"n", data.panel.n()},
                   {"T", data.panel.T()}, {"K", data.panel.K()}, {"x_cols", data.schema.x_cols}};

  TestReport report;
  if (which == "classic") {
    const ModelSpec spec1{family_by_name(m1->family, data.panel.K()), grouping(*m1, data), std::nullopt};
    const ModelSpec spec2{family_by_name(m2->family, data.panel.K()), grouping(*m2, data), std::nullopt};
    meta["models"] = {{"model1", {{"family", m1->family}, {"grouping", m1->grouping}, {"G", spec1.gmap.G()}}},
                      {"model2", {{"family", m2->family}, {"grouping", m2->grouping}, {"G", spec2.gmap.G()}}}};
    report = run_classic_test(data.panel, spec1, spec2, f.level);
  } else {
    const GroupMap& gmap = data.groups.at(f.group_col).gmap;
    meta["models"] = {{"model1", {{"kind", "grouped-time"}, {"grouping", f.group_col}, {"G", gmap.G()}}},
                      {"model2", {{"kind", "two-way"}}}};
    report = run_twfe_test(data.panel, gmap, f.level);
  }
  meta["labels"] = label_maps(data);

  emit(report_to_json(report, std::move(meta), f.exact_floats), f, out);
  return report.degenerate ? kExitDegenerate : kExitOk;
}

DgpKind parse_base(const std::string& s) {
  const DgpKind k = parse_kind(s);
  if (k != DgpKind::B && k != DgpKind::D) throw Error(ErrorCode::ConfigError, "--local-base must be B or D");
  return k;
}

int cmd_simulate(const SimFlags& f, std::ostream& out) {
  if (f.reps == 0) throw Error(ErrorCode::ConfigError, "--reps must be positive");
  DgpConfig base;
  base.kind = parse_kind(f.kind);
  base.n = f.n;
  base.T = f.T;
  base.G = f.G;
  base.K = f.K;
  base.sigma = f.sigma;
  base.master_seed = f.seed;
  base.local_base = parse_base(f.local_base);
  std::optional<TestKind> forced;
  if (f.test == "classic") forced = TestKind::Classic;
  else if (f.test == "twfe") forced = TestKind::Twfe;
  else if (f.test != "auto") throw Error(ErrorCode::ConfigError, "--test must be auto, classic or twfe");

  std::vector<DgpConfig> points;
  for (double kappa : f.kappa) {
    for (double c : f.c) {
      DgpConfig cfg = base;
      cfg.kappa = kappa;
      cfg.c = c;
      validate(cfg);
      points.push_back(cfg);
    }
  }

  const std::filesystem::path dir(f.out_dir);
  std::filesystem::create_directories(dir);
  std::ostringstream table, records;
  table << kSizePowerHeader << '\n';
  Json summary = base_metadata("simulate", false);
  summary["seed"] = f.seed;
  summary["reps"] = f.reps;
  summary["levels"] = f.levels;
  Json rows = Json::array();
  for (const DgpConfig& cfg : points) {
    const TestKind test = forced.value_or(natural_test(cfg));
    const McResult mc = run_replications(cfg, test, f.levels, f.reps, f.workers);
    const McSummary s = summarize(mc);
    write_size_power_rows(table, cfg, s);
    for (const McRecord& rec : mc.records) records << record_to_json(mc, rec).dump() << '\n';
    rows.push_back({{"kind", to_string(cfg.kind)},
                    {"test", to_string(test)},
                    {"n", cfg.n},
                    {"T", cfg.T},
                    {"G", cfg.G},
                    {"K", cfg.K},
                    {"kappa", cfg.kappa},
                    {"c", cfg.c},
                    {"local_base", to_string(cfg.local_base)},
                    {"effective_signal", effective_signal(cfg)},
                    {"used", s.used},
                    {"degenerate", s.degenerate},
                    {"failed", s.failed},
                    {"mean_stat", s.mean_stat},
                    {"sd_stat", s.sd_stat},
                    {"ks", s.ks},
                    {"mean_raw_stat", s.mean_raw_stat},
                    {"var_mqlr", s.var_mqlr},
                    {"mean_omega2", s.mean_omega2}});
  }
  summary["points"] = std::move(rows);

  const auto write = [&](const char* name, const std::string& body) {
    std::ofstream file(dir / name, std::ios::binary);
    if (!file) throw Error(ErrorCode::ConfigError, "cannot write '" + (dir / name).string() + "'");
    file << body;
  };
  write("size_power.csv", table.str());
  write("replications.jsonl", records.str());
  write("summary.json", summary.dump(2) + "\n");
  out << "wrote " << (dir / "size_power.csv").string() << ", " << (dir / "replications.jsonl").string() << ", "
      << (dir / "summary.json").string() << '\n';
  return kExitOk;
}

void add_test_flags(CLI::App& sub, TestFlags& f, bool classic) {
  sub.add_option("--input", f.input, "panel CSV file")->required();
  sub.add_option("--schema", f.schema, "JSON column map: unit_col, time_col, y_col, x_cols, group_cols");
  sub.add_option("--level", f.level, "nominal level")->capture_default_str();
  if (classic) {
    sub.add_option("--model1", f.model1, "FAMILY:GROUPING of the individual-effect model")->capture_default_str();
    sub.add_option("--model2", f.model2, "FAMILY:GROUPING, grouping = individual, pooled or a group column")
        ->required();
  } else {
    sub.add_option("--group-col", f.group_col, "group column of the grouped-time model")->required();
  }
  sub.add_option("--out", f.out, "output file (default: stdout)");
  sub.add_option("--format", f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  sub.add_flag("--exact-floats", f.exact_floats, "emit reals as 17-digit strings");
  sub.add_flag("--timestamp", f.timestamp, "record the wall-clock time in metadata");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feasible Vuong tests for grouped fixed-effect panel models", kToolName};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  CLI::App* test = app.add_subcommand("test", "run a model-selection test on a panel CSV");
  test->require_subcommand(1);
  TestFlags classic_flags, twfe_flags;
  CLI::App* classic = test->add_subcommand("classic", "individual effects against grouped effects");
  add_test_flags(*classic, classic_flags, true);
  CLI::App* twfe = test->add_subcommand("twfe", "grouped time effects against two-way effects");
  add_test_flags(*twfe, twfe_flags, false);

  SimFlags sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo size and power campaign");
  simulate->add_option("--kind", sim.kind, "data-generating process A-E")->required();
  simulate->add_option("--n", sim.n, "units")->capture_default_str();
  simulate->add_option("--T", sim.T, "periods")->capture_default_str();
  simulate->add_option("--G", sim.G, "groups")->capture_default_str();
  simulate->add_option("--K", sim.K, "covariates")->capture_default_str();
  simulate->add_option("--kappa", sim.kappa, "signal sizes in units of sigma (comma list)")->delimiter(',');
  simulate->add_option("--c", sim.c, "local drift constants for kind E (comma list)")->delimiter(',');
  simulate->add_option("--reps", sim.reps, "replications per point")->required();
  simulate->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  simulate->add_option("--levels", sim.levels, "nominal levels (comma list)")->delimiter(',');
  simulate->add_option("--out-dir", sim.out_dir, "output directory")->capture_default_str();
  simulate->add_option("--workers", sim.workers, "threads (0: all cores)")->capture_default_str();
  simulate->add_option("--local-base", sim.local_base, "signal shape for kind E: B or D")->capture_default_str();
  simulate->add_option("--test", sim.test, "auto, classic or twfe")->capture_default_str();
  simulate->add_option("--sigma", sim.sigma, "noise standard deviation")->capture_default_str();

  std::vector<const char*> argv{kToolName};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitError;
  }

  try {
    if (classic->parsed()) return cmd_test("classic", classic_flags, out);
    if (twfe->parsed()) return cmd_test("twfe", twfe_flags, out);
    return cmd_simulate(sim, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace panelvuong
