#include "panelvuong/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "panelvuong/error.hpp"
#include "panelvuong/likelihood.hpp"
#include "panelvuong/normal.hpp"
#include "panelvuong/report.hpp"
#include "panelvuong/rng.hpp"
#include "panelvuong/vuong_classic.hpp"
#include "panelvuong/vuong_twfe.hpp"

namespace panelvuong {

std::string to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::A: return "A";
    case DgpKind::B: return "B";
    case DgpKind::C: return "C";
    case DgpKind::D: return "D";
    case DgpKind::E: return "E";
  }
  return "?";
}

DgpKind parse_kind(const std::string& s) {
  if (s == "A" || s == "a") return DgpKind::A;
  if (s == "B" || s == "b") return DgpKind::B;
  if (s == "C" || s == "c") return DgpKind::C;
  if (s == "D" || s == "d") return DgpKind::D;
  if (s == "E" || s == "e") return DgpKind::E;
  throw Error(ErrorCode::ConfigError, "unknown DGP kind '" + s + "' (expected A-E)");
}

std::string to_string(TestKind test) { return test == TestKind::Classic ? "classic" : "twfe"; }

void validate(const DgpConfig& cfg) {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (cfg.n < 2 || cfg.T < 2) fail("need n >= 2 and T >= 2");
  if (cfg.G < 1 || cfg.G > cfg.n) fail("need 1 <= G <= n");
  if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) fail("noise sigma must be positive");
  if (!(cfg.kappa >= 0.0) || !std::isfinite(cfg.kappa)) fail("kappa must be nonnegative");
  if (!(cfg.c >= 0.0) || !std::isfinite(cfg.c)) fail("local drift c must be nonnegative");
  if (!std::isfinite(cfg.beta) || !std::isfinite(cfg.a_scale) || !std::isfinite(cfg.b_scale)) {
    fail("effect scales must be finite");
  }
  if (cfg.kind == DgpKind::E && cfg.local_base != DgpKind::B && cfg.local_base != DgpKind::D) {
    fail("local alternative base must be B or D");
  }
}

namespace {

DgpKind signal_shape(const DgpConfig& cfg) { return cfg.kind == DgpKind::E ? cfg.local_base : cfg.kind; }

}  // namespace

TestKind natural_test(const DgpConfig& cfg) {
  const DgpKind k = signal_shape(cfg);
  return k == DgpKind::A || k == DgpKind::B ? TestKind::Twfe : TestKind::Classic;
}

double effective_signal(const DgpConfig& cfg) {
  switch (cfg.kind) {
    case DgpKind::B:
    case DgpKind::D: return cfg.kappa * cfg.sigma;
    case DgpKind::E: return cfg.c * std::pow(static_cast<double>(cfg.n * cfg.T), -0.25) * cfg.sigma;
    default: return 0.0;
  }
}

Draw generate(const DgpConfig& cfg, std::size_t rep) {
  validate(cfg);
  const std::size_t n = cfg.n, T = cfg.T, G = cfg.G, K = cfg.K;
  GroupMap gmap = GroupMap::balanced(n, G);
  const DgpKind shape = signal_shape(cfg);
  const double signal = effective_signal(cfg);

  // Stream 0: effects, 1: covariates, 2: noise.
  Stream effects(cfg.master_seed, rep, 0);
  Eigen::MatrixXd gamma(n, T);
  if (shape == DgpKind::A || shape == DgpKind::B) {
    Eigen::VectorXd a(G), b(T);
    for (std::size_t g = 0; g < G; ++g) a[g] = cfg.a_scale * effects.normal();
    for (std::size_t t = 0; t < T; ++t) b[t] = cfg.b_scale * effects.normal();
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(G, T);
    if (shape == DgpKind::B) {
      for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t t = 0; t < T; ++t) eta(g, t) = effects.normal();
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t g = gmap.group_of(i);
      for (std::size_t t = 0; t < T; ++t) gamma(i, t) = a[g] + b[t] + signal * eta(g, t);
    }
  } else {
    Eigen::VectorXd a(G), u = Eigen::VectorXd::Zero(n);
    for (std::size_t g = 0; g < G; ++g) a[g] = cfg.a_scale * effects.normal();
    if (shape == DgpKind::D) {
      for (std::size_t i = 0; i < n; ++i) u[i] = effects.normal();
    }
    for (std::size_t i = 0; i < n; ++i) gamma.row(i).setConstant(a[gmap.group_of(i)] + signal * u[i]);
  }

  PanelInput raw;
  raw.x.assign(K, Rows(n, std::vector<double>(T)));
  Stream covariates(cfg.master_seed, rep, 1);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < T; ++t) raw.x[k][i][t] = covariates.normal();
    }
  }
  Stream noise(cfg.master_seed, rep, 2);
  raw.y.assign(n, std::vector<double>(T));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      double v = gamma(i, t) + cfg.sigma * noise.normal();
      for (std::size_t k = 0; k < K; ++k) v += cfg.beta * raw.x[k][i][t];
      raw.y[i][t] = v;
    }
  }
  return Draw{validate_panel(raw), std::move(gmap), Truth{signal, std::move(gamma)}};
}

namespace {

McRecord replicate(const DgpConfig& cfg, TestKind test, std::span<const double> levels, std::size_t rep) {
  McRecord rec;
  rec.rep = rep;
  try {
    const Draw d = generate(cfg, rep);
    TestReport report;
    if (test == TestKind::Twfe) {
      report = run_twfe_test(d.panel, d.gmap, levels.front());
    } else {
      const ModelSpec m1{gaussian_fixed_scale(cfg.K), GroupMap::individual(cfg.n), std::nullopt};
      const ModelSpec m2{gaussian_fixed_scale(cfg.K), d.gmap, std::nullopt};
      report = run_classic_test(d.panel, m1, m2, levels.front());
    }
    rec.mqlr = report.mqlr;
    rec.omega2 = report.omega2_hat;
    rec.degenerate = report.degenerate;
    if (!rec.degenerate) {
      rec.statistic = *report.statistic;
      rec.raw_statistic = report.qlr_raw / std::sqrt(report.omega2_hat);
      for (double level : levels) {
        decide(report, report.mqlr, report.omega2_hat, level);
        rec.reject_two.push_back(*report.reject_two);
        rec.reject_one.push_back(*report.reject_one);
      }
    }
  } catch (const Error& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

McResult run_replications(const DgpConfig& cfg, TestKind test, std::span<const double> levels, std::size_t R,
                          unsigned workers) {
  validate(cfg);
  if (R == 0) throw Error(ErrorCode::ConfigError, "need at least one replication");
  if (levels.empty()) throw Error(ErrorCode::ConfigError, "need at least one level");
  for (double p : levels) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::ConfigError, "levels must lie in (0, 1)");
  }

  McResult mc;
  mc.config = cfg;
  mc.test = test;
  mc.levels.assign(levels.begin(), levels.end());
  mc.records.resize(R);

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, R));
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t rep = next++; rep < R; rep = next++) mc.records[rep] = replicate(cfg, test, mc.levels, rep);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  const auto failed = static_cast<std::size_t>(
      std::count_if(mc.records.begin(), mc.records.end(), [](const McRecord& r) { return r.failed; }));
  if (failed * 100 > R) {
    const auto first = std::find_if(mc.records.begin(), mc.records.end(), [](const McRecord& r) { return r.failed; });
    throw Error(ErrorCode::NoConvergence, std::to_string(failed) + " of " + std::to_string(R) +
                                              " replications failed; first (rep " + std::to_string(first->rep) +
                                              "): " + first->error);
  }
  return mc;
}

double ks_distance_normal(std::span<const double> sample) {
  if (sample.empty()) throw Error(ErrorCode::Empty, "empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double m = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double F = normal_cdf(s[k]);
    d = std::max({d, static_cast<double>(k + 1) / m - F, F - static_cast<double>(k) / m});
  }
  return d;
}

McSummary summarize(const McResult& mc) {
  McSummary out;
  std::vector<const McRecord*> used;
  for (const McRecord& r : mc.records) {
    if (r.failed) {
      ++out.failed;
    } else if (r.degenerate) {
      ++out.degenerate;
    } else {
      used.push_back(&r);
    }
  }
  out.used = used.size();
  if (used.empty()) throw Error(ErrorCode::Empty, "no usable replications to summarize");
  const double m = static_cast<double>(used.size());

  for (std::size_t l = 0; l < mc.levels.size(); ++l) {
    for (const char* side : {"two", "one"}) {
      const bool two = side[0] == 't';
      const auto hits = std::count_if(used.begin(), used.end(), [&](const McRecord* r) {
        return two ? r->reject_two[l] : r->reject_one[l];
      });
      SizePowerRow row;
      row.level = mc.levels[l];
      row.side = side;
      row.rate = static_cast<double>(hits) / m;
      row.se = std::sqrt(row.rate * (1.0 - row.rate) / m);
      row.reps = used.size();
      row.degenerate_count = out.degenerate;
      out.rows.push_back(row);
    }
  }

  std::vector<double> stats;
  stats.reserve(used.size());
  double raw = 0.0, mq = 0.0, om = 0.0;
  for (const McRecord* r : used) {
    stats.push_back(r->statistic);
    raw += r->raw_statistic;
    mq += r->mqlr;
    om += r->omega2;
  }
  out.mean_stat = std::accumulate(stats.begin(), stats.end(), 0.0) / m;
  out.mean_raw_stat = raw / m;
  out.mean_omega2 = om / m;
  const double mq_mean = mq / m;
  double ss = 0.0, vq = 0.0;
  for (const McRecord* r : used) {
    ss += (r->statistic - out.mean_stat) * (r->statistic - out.mean_stat);
    vq += (r->mqlr - mq_mean) * (r->mqlr - mq_mean);
  }
  out.sd_stat = used.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  out.var_mqlr = used.size() > 1 ? vq / (m - 1.0) : 0.0;
  out.ks = ks_distance_normal(stats);
  return out;
}

}  // namespace panelvuong
