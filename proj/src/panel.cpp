#include "panelvuong/panel.hpp"

#include <cmath>
#include <string>

#include "panelvuong/error.hpp"

namespace panelvuong {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Unbalanced: return "Unbalanced";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::GroupingViolation: return "GroupingViolation";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::GroupDrift: return "GroupDrift";
    case ErrorCode::Empty: return "Empty";
  }
  return "Unknown";
}

Panel validate_panel(const PanelInput& raw) {
  const std::size_t n = raw.y.size();
  const std::size_t T = n == 0 ? 0 : raw.y.front().size();
  const std::size_t K = raw.x.size();

  for (std::size_t i = 0; i < n; ++i) {
    if (raw.y[i].size() != T) {
      throw Error(ErrorCode::Unbalanced, "unit " + std::to_string(i + 1) + " has " +
                                             std::to_string(raw.y[i].size()) + " periods, expected " +
                                             std::to_string(T));
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (raw.x[k].size() != n) {
      throw Error(ErrorCode::Unbalanced, "covariate " + std::to_string(k + 1) + " has " +
                                             std::to_string(raw.x[k].size()) + " units, expected " +
                                             std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (raw.x[k][i].size() != T) {
        throw Error(ErrorCode::Unbalanced, "covariate " + std::to_string(k + 1) + ", unit " +
                                               std::to_string(i + 1) + " is not length " +
                                               std::to_string(T));
      }
    }
  }
  if (n < 2 || T < 2) {
    throw Error(ErrorCode::TooSmall, "panel is " + std::to_string(n) + " x " + std::to_string(T) +
                                         "; need n >= 2 and T >= 2");
  }

  Panel p;
  p.n_ = n;
  p.T_ = T;
  p.K_ = K;
  p.y_.resize(static_cast<Eigen::Index>(n * T));
  p.x_.resize(static_cast<Eigen::Index>(n * T), static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = static_cast<Eigen::Index>(i * T + t);
      const double yv = raw.y[i][t];
      if (!std::isfinite(yv)) {
        throw Error(ErrorCode::NonFinite, "y[" + std::to_string(i + 1) + "][" + std::to_string(t + 1) + "]");
      }
      p.y_[o] = yv;
      for (std::size_t k = 0; k < K; ++k) {
        const double xv = raw.x[k][i][t];
        if (!std::isfinite(xv)) {
          throw Error(ErrorCode::NonFinite, "x" + std::to_string(k + 1) + "[" + std::to_string(i + 1) + "][" +
                                                std::to_string(t + 1) + "]");
        }
        p.x_(o, static_cast<Eigen::Index>(k)) = xv;
      }
    }
  }
  return p;
}

Panel validate_panel(const Panel& panel) { return panel; }

PanelInput Panel::to_input() const {
  PanelInput raw;
  raw.y.assign(n_, std::vector<double>(T_));
  raw.x.assign(K_, Rows(n_, std::vector<double>(T_)));
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t t = 0; t < T_; ++t) {
      raw.y[i][t] = y(i, t);
      for (std::size_t k = 0; k < K_; ++k) raw.x[k][i][t] = x(i, t, k);
    }
  }
  return raw;
}

Partition group_partition(std::span<const std::size_t> assignment, std::size_t G, std::size_t n) {
  if (assignment.size() != n) {
    throw Error(ErrorCode::OutOfRange, "assignment covers " + std::to_string(assignment.size()) +
                                           " units, panel has " + std::to_string(n));
  }
  Partition part;
  part.members.resize(G);
  part.sizes.assign(G, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = assignment[i];
    if (g >= G) {
      throw Error(ErrorCode::OutOfRange, "unit " + std::to_string(i + 1) + " assigned to group " +
                                             std::to_string(g + 1) + " of " + std::to_string(G));
    }
    part.members[g].push_back(i);
    ++part.sizes[g];
  }
  for (std::size_t g = 0; g < G; ++g) {
    if (part.sizes[g] == 0) throw Error(ErrorCode::EmptyGroup, "group " + std::to_string(g + 1) + " has no units");
  }
  return part;
}

GroupMap::GroupMap(std::vector<std::size_t> assignment, std::size_t G)
    : assignment_(std::move(assignment)), G_(G), partition_(group_partition(assignment_, G, assignment_.size())) {}

GroupMap GroupMap::individual(std::size_t n) {
  std::vector<std::size_t> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = i;
  return GroupMap(std::move(a), n);
}

GroupMap GroupMap::pooled(std::size_t n) { return GroupMap(std::vector<std::size_t>(n, 0), 1); }

GroupMap GroupMap::balanced(std::size_t n, std::size_t G) {
  if (G == 0 || G > n) throw Error(ErrorCode::OutOfRange, "need 1 <= G <= n");
  std::vector<std::size_t> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = i * G / n;
  return GroupMap(std::move(a), G);
}

TimeGroupMap::TimeGroupMap(std::vector<std::size_t> assignment, std::size_t M)
    : assignment_(std::move(assignment)), M_(M), first_(M, 0), sizes_(M, 0) {
  const std::size_t T = assignment_.size();
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t m = assignment_[t];
    if (m >= M) {
      throw Error(ErrorCode::OutOfRange, "period " + std::to_string(t + 1) + " assigned to block " +
                                             std::to_string(m + 1) + " of " + std::to_string(M));
    }
    if (t > 0 && m < assignment_[t - 1]) {
      throw Error(ErrorCode::OutOfRange, "time blocks must be nondecreasing in t");
    }
    if (sizes_[m] == 0) first_[m] = t;
    ++sizes_[m];
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (sizes_[m] == 0) throw Error(ErrorCode::EmptyGroup, "time block " + std::to_string(m + 1) + " is empty");
  }
}

TimeGroupMap TimeGroupMap::single(std::size_t T) { return TimeGroupMap(std::vector<std::size_t>(T, 0), 1); }

TimeGroupMap TimeGroupMap::identity(std::size_t T) {
  std::vector<std::size_t> a(T);
  for (std::size_t t = 0; t < T; ++t) a[t] = t;
  return TimeGroupMap(std::move(a), T);
}

}  // namespace panelvuong
