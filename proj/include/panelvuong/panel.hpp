#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace panelvuong {

using Rows = std::vector<std::vector<double>>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Unvalidated panel as handed over by a loader or a test: y[i][t] and
// x[k][i][t]. Rows may be ragged; validate_panel rejects that.
struct PanelInput {
  Rows y;
  std::vector<Rows> x;
};

// Balanced n x T panel with K covariates. Observations are stored unit-major,
// obs = i * T + t, so the covariates of one observation are a contiguous row.
class Panel {
 public:
  std::size_t n() const noexcept { return n_; }
  std::size_t T() const noexcept { return T_; }
  std::size_t K() const noexcept { return K_; }
  std::size_t size() const noexcept { return n_ * T_; }

  std::size_t obs(std::size_t i, std::size_t t) const noexcept { return i * T_ + t; }

  double y(std::size_t i, std::size_t t) const noexcept { return y_[obs(i, t)]; }
  double x(std::size_t i, std::size_t t, std::size_t k) const noexcept {
    return x_(static_cast<Eigen::Index>(obs(i, t)), static_cast<Eigen::Index>(k));
  }
  std::span<const double> x_row(std::size_t obs_index) const noexcept {
    return {x_.data() + obs_index * K_, K_};
  }

  const Eigen::VectorXd& y_vector() const noexcept { return y_; }
  const RowMatrix& x_matrix() const noexcept { return x_; }

  PanelInput to_input() const;

  friend bool operator==(const Panel& a, const Panel& b) {
    return a.n_ == b.n_ && a.T_ == b.T_ && a.K_ == b.K_ && a.y_ == b.y_ && a.x_ == b.x_;
  }

 private:
  friend Panel validate_panel(const PanelInput& raw);

  std::size_t n_ = 0;
  std::size_t T_ = 0;
  std::size_t K_ = 0;
  Eigen::VectorXd y_;
  RowMatrix x_;
};

// Throws Error{Unbalanced, TooSmall, NonFinite}.
Panel validate_panel(const PanelInput& raw);
// Re-validation of an already validated panel is the identity.
Panel validate_panel(const Panel& panel);

// Partition of {0..n-1} into G non-empty groups.
struct Partition {
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> sizes;
};

// Assignment is 0-based (g in [0, G)). Throws EmptyGroup / OutOfRange.
Partition group_partition(std::span<const std::size_t> assignment, std::size_t G, std::size_t n);

// Known unit -> group assignment.
class GroupMap {
 public:
  GroupMap(std::vector<std::size_t> assignment, std::size_t G);

  static GroupMap individual(std::size_t n);
  static GroupMap pooled(std::size_t n);
  // Contiguous, near-equal blocks: g(i) = floor(i * G / n).
  static GroupMap balanced(std::size_t n, std::size_t G);

  std::size_t n() const noexcept { return assignment_.size(); }
  std::size_t G() const noexcept { return G_; }
  std::size_t group_of(std::size_t i) const noexcept { return assignment_[i]; }
  std::size_t size_of(std::size_t g) const noexcept { return partition_.sizes[g]; }
  const std::vector<std::size_t>& members(std::size_t g) const noexcept { return partition_.members[g]; }
  const std::vector<std::size_t>& assignment() const noexcept { return assignment_; }
  bool is_individual() const noexcept { return G_ == n(); }

 private:
  std::vector<std::size_t> assignment_;
  std::size_t G_;
  Partition partition_;
};

// Known time -> block assignment; blocks are contiguous and nondecreasing.
class TimeGroupMap {
 public:
  TimeGroupMap(std::vector<std::size_t> assignment, std::size_t M);

  static TimeGroupMap single(std::size_t T);
  static TimeGroupMap identity(std::size_t T);

  std::size_t T() const noexcept { return assignment_.size(); }
  std::size_t M() const noexcept { return M_; }
  std::size_t block_of(std::size_t t) const noexcept { return assignment_[t]; }
  std::size_t first(std::size_t m) const noexcept { return first_[m]; }
  std::size_t size_of(std::size_t m) const noexcept { return sizes_[m]; }
  const std::vector<std::size_t>& assignment() const noexcept { return assignment_; }

 private:
  std::vector<std::size_t> assignment_;
  std::size_t M_;
  std::vector<std::size_t> first_;
  std::vector<std::size_t> sizes_;
};

}  // namespace panelvuong
