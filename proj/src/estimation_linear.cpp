#include <cmath>
#include <string>

#include "panelvuong/error.hpp"
#include "panelvuong/estimation.hpp"

namespace panelvuong {

namespace detail {

Eigen::VectorXd solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs, double scale) {
  if (gram.rows() == 0) return Eigen::VectorXd(0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmax > 0.0) || !(lmin > 0.0) || lmax / lmin > 1e12 || lmin / scale < 1e-12) {
    throw Error(ErrorCode::RankDeficient, "demeaned Gram matrix is singular or ill-conditioned (lambda_min = " +
                                              std::to_string(lmin / scale) + ")");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::RankDeficient, "Cholesky factorization failed");
  return llt.solve(rhs);
}

}  // namespace detail

FitResult fit_linear_cells(const Panel& panel, const GroupMap& gmap, const TimeGroupMap& mmap) {
  const std::size_t n = panel.n(), T = panel.T(), K = panel.K();
  if (gmap.n() != n || mmap.T() != T) throw Error(ErrorCode::OutOfRange, "grouping does not cover the panel");
  const std::size_t G = gmap.G(), M = mmap.M();
  const auto Ki = static_cast<Eigen::Index>(K);

  Eigen::MatrixXd ybar = Eigen::MatrixXd::Zero(G, M);
  std::vector<Eigen::VectorXd> xbar(G * M, Eigen::VectorXd::Zero(Ki));
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(G, M);
  const RowMatrix& X = panel.x_matrix();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = gmap.group_of(i);
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t m = mmap.block_of(t);
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      ybar(g, m) += panel.y(i, t);
      xbar[g * M + m] += X.row(o).transpose();
      count(g, m) += 1.0;
    }
  }
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t m = 0; m < M; ++m) {
      ybar(g, m) /= count(g, m);
      xbar[g * M + m] /= count(g, m);
    }
  }

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(Ki, Ki);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Ki);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = gmap.group_of(i);
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      const Eigen::VectorXd xd = X.row(o).transpose() - xbar[g * M + mmap.block_of(t)];
      gram.noalias() += xd * xd.transpose();
      rhs.noalias() += xd * panel.y(i, t);
    }
  }

  FitResult fit;
  fit.theta_hat = detail::solve_gram(gram, rhs, static_cast<double>(n * T));
  fit.gamma_hat.resize(G, M);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t m = 0; m < M; ++m) fit.gamma_hat(g, m) = ybar(g, m) - xbar[g * M + m].dot(fit.theta_hat);
  }

  const auto N = static_cast<Eigen::Index>(n * T);
  fit.psi.resize(N);
  fit.score_gamma.resize(N);
  Eigen::VectorXd foc_theta = Eigen::VectorXd::Zero(Ki);
  Eigen::MatrixXd foc_cell = Eigen::MatrixXd::Zero(G, M);
  fit.loglik = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = gmap.group_of(i);
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t m = mmap.block_of(t);
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      const double r = panel.y(i, t) - X.row(o).dot(fit.theta_hat) - fit.gamma_hat(g, m);
      fit.score_gamma[o] = r;
      fit.psi[o] = -0.5 * r * r;
      fit.loglik += fit.psi[o];
      foc_theta.noalias() += X.row(o).transpose() * r;
      foc_cell(g, m) += r;
    }
  }
  fit.info_gamma = Eigen::MatrixXd::Constant(G, M, -1.0);
  fit.foc_theta = K == 0 ? 0.0 : foc_theta.cwiseAbs().maxCoeff();
  fit.foc_gamma = foc_cell.cwiseAbs().maxCoeff();
  fit.converged = true;
  fit.iterations = 0;
  return fit;
}

GroupedTimeFit fit_grouped_time(const Panel& panel, const GroupMap& gmap) {
  const std::size_t n = panel.n(), T = panel.T(), K = panel.K();
  if (gmap.n() != n) throw Error(ErrorCode::OutOfRange, "grouping does not cover the panel");
  const std::size_t G = gmap.G();
  const auto Ki = static_cast<Eigen::Index>(K);
  const RowMatrix& X = panel.x_matrix();

  // Group-time means ybar_{g,t}, xbar_{g,t}.
  Eigen::MatrixXd ybar = Eigen::MatrixXd::Zero(G, T);
  std::vector<Eigen::VectorXd> xbar(G * T, Eigen::VectorXd::Zero(Ki));
  for (std::size_t g = 0; g < G; ++g) {
    const double inv = 1.0 / static_cast<double>(gmap.size_of(g));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i : gmap.members(g)) {
        const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
        ybar(g, t) += panel.y(i, t);
        xbar[g * T + t] += X.row(o).transpose();
      }
      ybar(g, t) *= inv;
      xbar[g * T + t] *= inv;
    }
  }

  const double nT = static_cast<double>(n * T);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(Ki, Ki);
  Eigen::VectorXd cross = Eigen::VectorXd::Zero(Ki);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = gmap.group_of(i);
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      const Eigen::VectorXd xdot = X.row(o).transpose() - xbar[g * T + t];
      sigma.noalias() += xdot * xdot.transpose();
      cross.noalias() += xdot * panel.y(i, t);
    }
  }
  sigma /= nT;
  cross /= nT;

  GroupedTimeFit fit;
  fit.theta_hat = detail::solve_gram(sigma, cross, 1.0);
  fit.gamma_gt.resize(G, T);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t t = 0; t < T; ++t) fit.gamma_gt(g, t) = ybar(g, t) - xbar[g * T + t].dot(fit.theta_hat);
  }
  fit.residuals.resize(n, T);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = gmap.group_of(i);
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      fit.residuals(i, t) = panel.y(i, t) - X.row(o).dot(fit.theta_hat) - fit.gamma_gt(g, t);
    }
  }
  return fit;
}

TwfeFit fit_twfe(const Panel& panel) {
  const std::size_t n = panel.n(), T = panel.T(), K = panel.K();
  const auto Ki = static_cast<Eigen::Index>(K);
  const RowMatrix& X = panel.x_matrix();

  Eigen::VectorXd ybar_i = Eigen::VectorXd::Zero(n), ybar_t = Eigen::VectorXd::Zero(T);
  Eigen::MatrixXd xbar_i = Eigen::MatrixXd::Zero(n, Ki), xbar_t = Eigen::MatrixXd::Zero(T, Ki);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      ybar_i[i] += panel.y(i, t);
      ybar_t[t] += panel.y(i, t);
      xbar_i.row(i) += X.row(o);
      xbar_t.row(t) += X.row(o);
    }
  }
  ybar_i /= static_cast<double>(T);
  xbar_i /= static_cast<double>(T);
  ybar_t /= static_cast<double>(n);
  xbar_t /= static_cast<double>(n);
  const double ybar = ybar_i.mean();
  const Eigen::RowVectorXd xbar = xbar_i.colwise().mean();

  const double nT = static_cast<double>(n * T);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(Ki, Ki);
  Eigen::VectorXd cross = Eigen::VectorXd::Zero(Ki);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      const Eigen::VectorXd xdd = (X.row(o) - xbar_i.row(i) - xbar_t.row(t) + xbar).transpose();
      sigma.noalias() += xdd * xdd.transpose();
      cross.noalias() += xdd * panel.y(i, t);
    }
  }
  sigma /= nT;
  cross /= nT;

  TwfeFit fit;
  fit.theta_hat = detail::solve_gram(sigma, cross, 1.0);
  fit.alpha = ybar_i - xbar_i * fit.theta_hat;
  fit.delta = (ybar_t.array() - ybar).matrix() - (xbar_t.rowwise() - xbar) * fit.theta_hat;
  fit.residuals.resize(n, T);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      fit.residuals(i, t) = panel.y(i, t) - X.row(o).dot(fit.theta_hat) - fit.alpha[i] - fit.delta[t];
    }
  }
  return fit;
}

}  // namespace panelvuong
