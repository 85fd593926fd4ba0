#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "panelvuong/panel.hpp"

namespace panelvuong {

// A: additive group + time effects. B: A plus a group-time interaction.
// C: unit effects constant within groups. D: C plus unit deviations.
// E: local alternative, the B or D signal shrunk with the sample size.
enum class DgpKind { A, B, C, D, E };
enum class TestKind { Classic, Twfe };

std::string to_string(DgpKind kind);
DgpKind parse_kind(const std::string& s);  // ConfigError when unknown
std::string to_string(TestKind test);

struct DgpConfig {
  DgpKind kind = DgpKind::A;
  std::size_t n = 100, T = 100, G = 10, K = 1;
  double beta = 1.0;     // common slope on every covariate
  double a_scale = 1.0;  // group effect scale
  double b_scale = 1.0;  // time effect scale
  double sigma = 1.0;    // noise standard deviation
  double kappa = 0.0;    // signal in units of sigma (B, D)
  double c = 0.0;        // local drift constant (E)
  DgpKind local_base = DgpKind::D;  // signal shape for E: B or D
  std::uint64_t master_seed = 1;
};

// Throws ConfigError on invalid settings.
void validate(const DgpConfig& config);

// Test whose null/alternative the kind belongs to.
TestKind natural_test(const DgpConfig& config);

// Signal scale actually applied, in units of the data: kappa sigma for B/D,
// c (nT)^{-1/4} sigma for E, 0 for the nulls.
double effective_signal(const DgpConfig& config);

struct Truth {
  double signal = 0.0;
  Eigen::MatrixXd effects;  // n x T systematic part excluding x'beta
};

struct Draw {
  Panel panel;
  GroupMap gmap;
  Truth truth;
};

// Deterministic in (master_seed, rep).
Draw generate(const DgpConfig& config, std::size_t rep);

struct McRecord {
  std::size_t rep = 0;
  bool failed = false;
  std::string error;
  bool degenerate = false;
  double mqlr = 0.0;
  double omega2 = 0.0;
  double statistic = 0.0;  // mqlr / omega; undefined when degenerate
  double raw_statistic = 0.0;  // uncorrected qlr / omega
  std::vector<bool> reject_two, reject_one;  // per level
};

struct McResult {
  DgpConfig config;
  TestKind test = TestKind::Twfe;
  std::vector<double> levels;
  std::vector<McRecord> records;  // ordered by rep
};

// Runs R replications on `workers` threads (0: hardware concurrency).
// Per-replication failures are recorded; more than 1% failures throws.
McResult run_replications(const DgpConfig& config, TestKind test, std::span<const double> levels, std::size_t R,
                          unsigned workers = 0);

// Sup distance between the empirical cdf of the sample and the standard normal.
double ks_distance_normal(std::span<const double> sample);

struct SizePowerRow {
  double level = 0.0;
  std::string side;  // "two" or "one"
  double rate = 0.0;
  double se = 0.0;
  std::size_t reps = 0;  // non-degenerate, non-failed replications
  std::size_t degenerate_count = 0;
};

struct McSummary {
  std::vector<SizePowerRow> rows;
  std::size_t used = 0, degenerate = 0, failed = 0;
  double mean_stat = 0.0, sd_stat = 0.0, ks = 0.0;
  double mean_raw_stat = 0.0;
  double var_mqlr = 0.0, mean_omega2 = 0.0;
};

// Throws Empty when no replication is usable.
McSummary summarize(const McResult& mc);

}  // namespace panelvuong
