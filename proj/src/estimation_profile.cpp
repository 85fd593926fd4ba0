#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "panelvuong/error.hpp"
#include "panelvuong/estimation.hpp"

namespace panelvuong {
namespace {

constexpr double kInfoFloor = 1e-12;
constexpr double kInfoCeiling = 1e12;

struct Cell {
  std::size_t g = 0, m = 0;
  std::vector<std::size_t> obs;
};

class ProfileProblem {
 public:
  ProfileProblem(const Panel& panel, const ModelSpec& spec, const ProfileOptions& opts)
      : panel_(panel), family_(spec.family), opts_(opts), G_(spec.gmap.G()) {
    const TimeGroupMap mmap = spec.time_blocks(panel.T());
    M_ = mmap.M();
    cells_.resize(G_ * M_);
    for (std::size_t g = 0; g < G_; ++g) {
      for (std::size_t m = 0; m < M_; ++m) {
        cells_[g * M_ + m].g = g;
        cells_[g * M_ + m].m = m;
      }
    }
    for (std::size_t i = 0; i < panel.n(); ++i) {
      const std::size_t g = spec.gmap.group_of(i);
      for (std::size_t t = 0; t < panel.T(); ++t) cells_[g * M_ + mmap.block_of(t)].obs.push_back(panel.obs(i, t));
    }
  }

  std::size_t cells() const { return cells_.size(); }
  std::size_t G() const { return G_; }
  std::size_t M() const { return M_; }
  const Cell& cell(std::size_t c) const { return cells_[c]; }

  Observation at(std::size_t o) const { return {panel_.y_vector()[static_cast<Eigen::Index>(o)], panel_.x_row(o)}; }

  std::vector<double> start_gamma(ThetaView theta) const {
    std::vector<double> gamma(cells_.size(), 0.0);
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      double s = 0.0;
      for (std::size_t o : cells_[c].obs) {
        const Observation z = at(o);
        s += family_.working_residual ? family_.working_residual(z, theta) : z.y;
      }
      gamma[c] = s / static_cast<double>(cells_[c].obs.size());
    }
    return gamma;
  }

  // Solves every cell's gamma first-order condition at theta, warm-started from
  // gamma. Returns the total quasi-log-likelihood.
  double solve_cells(ThetaView theta, std::vector<double>& gamma) const {
    double total = 0.0;
    for (std::size_t c = 0; c < cells_.size(); ++c) total += solve_cell(c, theta, gamma[c]);
    return total;
  }

  // Sum of psi_theta over all observations at (theta, gamma).
  Eigen::VectorXd score_theta(ThetaView theta, const std::vector<double>& gamma) const {
    const std::size_t d = family_.d_theta;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    std::vector<double> buf(d);
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      for (std::size_t o : cells_[c].obs) {
        family_.psi_theta(at(o), theta, gamma[c], buf);
        for (std::size_t k = 0; k < d; ++k) s[static_cast<Eigen::Index>(k)] += buf[k];
      }
    }
    if (!s.allFinite()) throw Error(ErrorCode::DomainError, family_.name + ": theta score is not finite");
    return s;
  }

 private:
  double cell_loglik(const Cell& cell, ThetaView theta, double g) const {
    double s = 0.0;
    for (std::size_t o : cell.obs) s += family_.psi(at(o), theta, g);
    return s;
  }

  double solve_cell(std::size_t c, ThetaView theta, double& gamma) const {
    const Cell& cell = cells_[c];
    const double N = static_cast<double>(cell.obs.size());
    double loglik = cell_loglik(cell, theta, gamma);
    for (int it = 0; it <= opts_.max_inner_iter; ++it) {
      double score = 0.0, hess = 0.0, scale = 0.0;
      for (std::size_t o : cell.obs) {
        const Observation z = at(o);
        const double sg = family_.psi_gamma(z, theta, gamma);
        score += sg;
        scale += std::abs(sg);
        hess += family_.psi_gammagamma(z, theta, gamma);
      }
      const double info = std::abs(hess) / N;
      if (!std::isfinite(score) || !std::isfinite(hess) || !std::isfinite(loglik)) {
        throw Error(ErrorCode::DomainError, family_.name + ": non-finite value in group effect update");
      }
      if (info < kInfoFloor || info > kInfoCeiling) {
        throw Error(ErrorCode::SingularInformation, "group-effect information " + std::to_string(info) +
                                                        " in cell (" + std::to_string(cell.g + 1) + ", " +
                                                        std::to_string(cell.m + 1) + ")");
      }
      if (std::abs(score) <= opts_.inner_tol * std::max(1.0, scale)) return loglik;
      if (it == opts_.max_inner_iter) break;

      // Newton direction with the curvature forced negative so the step ascends.
      const double step = score / std::abs(hess);
      double alpha = 1.0;
      bool moved = false;
      for (int h = 0; h <= opts_.max_halvings; ++h, alpha *= 0.5) {
        const double trial = gamma + alpha * step;
        const double ll = cell_loglik(cell, theta, trial);
        if (std::isfinite(ll) && ll >= loglik - 1e-15 * std::max(1.0, std::abs(loglik))) {
          moved = trial != gamma;
          gamma = trial;
          loglik = ll;
          break;
        }
      }
      if (!moved) return loglik;  // at machine precision
    }
    throw Error(ErrorCode::NoConvergence, "group effect in cell (" + std::to_string(cell.g + 1) + ", " +
                                              std::to_string(cell.m + 1) + ") did not converge");
  }

  const Panel& panel_;
  const LikelihoodFamily& family_;
  const ProfileOptions& opts_;
  std::size_t G_, M_ = 1;
  std::vector<Cell> cells_;
};

ThetaView view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

FitResult fit_profile_mle(const Panel& panel, const ModelSpec& spec, const ProfileOptions& opts) {
  const LikelihoodFamily& family = spec.family;
  if (spec.gmap.n() != panel.n()) throw Error(ErrorCode::OutOfRange, "grouping does not cover the panel");
  const ProfileProblem problem(panel, spec, opts);
  const std::size_t d = family.d_theta;
  const auto di = static_cast<Eigen::Index>(d);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(di);
  if (family.initial_theta) {
    const std::vector<double> init = family.initial_theta(panel);
    if (init.size() != d) throw Error(ErrorCode::ConfigError, family.name + ": initial theta has the wrong length");
    theta = Eigen::Map<const Eigen::VectorXd>(init.data(), di);
  }
  if (!family.admissible(view(theta))) {
    throw Error(ErrorCode::DomainError, family.name + ": starting theta is outside the domain");
  }

  std::vector<double> gamma = problem.start_gamma(view(theta));
  double loglik = problem.solve_cells(view(theta), gamma);
  Eigen::VectorXd score = problem.score_theta(view(theta), gamma);

  // Profiled score at a trial theta, re-solving gamma from a warm start.
  const auto profiled_score = [&](const Eigen::VectorXd& th) {
    std::vector<double> g = gamma;
    problem.solve_cells(view(th), g);
    return problem.score_theta(view(th), g);
  };

  int iter = 0;
  bool converged = d == 0 || score.cwiseAbs().maxCoeff() <= opts.tol;
  while (!converged) {
    if (iter == opts.max_iter) {
      throw Error(ErrorCode::NoConvergence, "profile Newton reached " + std::to_string(opts.max_iter) +
                                                " iterations (score " + std::to_string(score.cwiseAbs().maxCoeff()) +
                                                ")");
    }
    ++iter;

    Eigen::MatrixXd hess(di, di);
    for (Eigen::Index k = 0; k < di; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(theta[k]));
      Eigen::VectorXd up = theta, dn = theta;
      up[k] += h;
      dn[k] -= h;
      if (family.admissible(view(dn))) {
        hess.col(k) = (profiled_score(up) - profiled_score(dn)) / (2.0 * h);
      } else {
        hess.col(k) = (profiled_score(up) - score) / h;
      }
    }
    hess = 0.5 * (hess + hess.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    Eigen::VectorXd lambda = eig.eigenvalues();
    const double big = std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index k = 0; k < di; ++k) lambda[k] = std::max(std::abs(lambda[k]), 1e-10 * big);
    const Eigen::MatrixXd& V = eig.eigenvectors();
    const Eigen::VectorXd direction = V * (V.transpose() * score).cwiseQuotient(lambda);

    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, alpha *= 0.5) {
      const Eigen::VectorXd trial = theta + alpha * direction;
      if (!family.admissible(view(trial))) continue;
      std::vector<double> g = gamma;
      double ll = 0.0;
      try {
        ll = problem.solve_cells(view(trial), g);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DomainError) throw;
        continue;
      }
      const Eigen::VectorXd s = problem.score_theta(view(trial), g);
      const bool uphill = ll >= loglik - 1e-13 * std::max(1.0, std::abs(loglik));
      if (uphill || s.cwiseAbs().maxCoeff() < score.cwiseAbs().maxCoeff()) {
        theta = trial;
        gamma = std::move(g);
        loglik = ll;
        score = s;
        accepted = true;
        break;
      }
    }
    converged = score.cwiseAbs().maxCoeff() <= opts.tol;
    if (!accepted && !converged) {
      throw Error(ErrorCode::NoConvergence, "profile Newton line search failed (score " +
                                                std::to_string(score.cwiseAbs().maxCoeff()) + ")");
    }
  }

  // Final re-solve so the reported gamma is the exact profile at the returned theta
  // and the singularity checks run there.
  loglik = problem.solve_cells(view(theta), gamma);
  score = problem.score_theta(view(theta), gamma);

  FitResult fit;
  fit.theta_hat = theta;
  fit.gamma_hat.resize(static_cast<Eigen::Index>(problem.G()), static_cast<Eigen::Index>(problem.M()));
  fit.info_gamma.resize(fit.gamma_hat.rows(), fit.gamma_hat.cols());
  const auto N = static_cast<Eigen::Index>(panel.size());
  fit.psi.resize(N);
  fit.score_gamma.resize(N);
  fit.loglik = 0.0;
  fit.foc_gamma = 0.0;
  for (std::size_t c = 0; c < problem.cells(); ++c) {
    const Cell& cell = problem.cell(c);
    const auto g = static_cast<Eigen::Index>(cell.g), m = static_cast<Eigen::Index>(cell.m);
    fit.gamma_hat(g, m) = gamma[c];
    double foc = 0.0, info = 0.0;
    for (std::size_t o : cell.obs) {
      const Derivatives der = eval_derivatives(family, problem.at(o), view(theta), gamma[c]);
      const auto oi = static_cast<Eigen::Index>(o);
      fit.psi[oi] = eval_psi(family, problem.at(o), view(theta), gamma[c]);
      fit.score_gamma[oi] = der.gamma;
      fit.loglik += fit.psi[oi];
      foc += der.gamma;
      info += der.gammagamma;
    }
    fit.info_gamma(g, m) = info / static_cast<double>(cell.obs.size());
    fit.foc_gamma = std::max(fit.foc_gamma, std::abs(foc));
  }
  fit.foc_theta = d == 0 ? 0.0 : score.cwiseAbs().maxCoeff();
  fit.converged = true;
  fit.iterations = iter;
  return fit;
}

}  // namespace panelvuong
