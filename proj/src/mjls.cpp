#include "dncs/mjls.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include <Eigen/Eigenvalues>

#include "dncs/block_matrix.hpp"
#include "dncs/riccati_operators.hpp"

namespace dncs {

namespace {

constexpr int kMaxModes = 9;          // M <= 8
constexpr Eigen::Index kMaxKronDim = 12;  // per-mode state dimension

void check_conformable(const MjlsModel& model,
                       const std::vector<Eigen::MatrixXd>& per_mode,
                       Eigen::Index rows, Eigen::Index cols,
                       const char* label) {
  if (per_mode.size() != static_cast<size_t>(model.modes())) {
    throw std::invalid_argument(std::string(label) +
                                " must have one entry per mode");
  }
  for (const auto& m : per_mode) {
    if (m.rows() != rows || m.cols() != cols) {
      throw std::invalid_argument(std::string(label) +
                                  " has a mode with wrong dimensions");
    }
  }
}

}  // namespace

void MjlsModel::validate() const {
  const int n_modes = modes();
  if (n_modes == 0) {
    throw std::invalid_argument("model needs at least one mode");
  }
  if (b.size() != a.size() || q.size() != a.size() || r.size() != a.size()) {
    throw std::invalid_argument("per-mode matrix counts disagree");
  }
  const Eigen::Index d = a[0].rows();
  const Eigen::Index m_in = b[0].cols();
  for (int m = 0; m < n_modes; ++m) {
    if (a[m].rows() != d || a[m].cols() != d) {
      throw std::invalid_argument("A modes must share one square shape");
    }
    if (b[m].rows() != d || b[m].cols() != m_in) {
      throw std::invalid_argument("B modes must share one shape");
    }
    if (q[m].rows() != d || q[m].cols() != d) {
      throw std::invalid_argument("Q modes must share the state shape");
    }
    if (r[m].rows() != m_in || r[m].cols() != m_in) {
      throw std::invalid_argument("R modes must share the input shape");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_eigs(
        0.5 * (q[m] + q[m].transpose()), Eigen::EigenvaluesOnly);
    if (q_eigs.eigenvalues().minCoeff() <
        -1e-9 * std::max(1.0, q_eigs.eigenvalues().cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("Q mode is not PSD");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> r_eigs(
        0.5 * (r[m] + r[m].transpose()), Eigen::EigenvaluesOnly);
    if (r_eigs.eigenvalues().minCoeff() <=
        1e-12 * std::max(1.0, r_eigs.eigenvalues().cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("R mode is not PD");
    }
  }
  if (theta.rows() != n_modes || theta.cols() != n_modes) {
    throw std::invalid_argument("theta must be (modes x modes)");
  }
  for (int i = 0; i < n_modes; ++i) {
    if (theta.row(i).minCoeff() < 0.0 ||
        std::abs(theta.row(i).sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("theta must be row-stochastic");
    }
  }
}

MjlsModel build_auxiliary_2c(const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b10,
                             const Eigen::MatrixXd& b11,
                             const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                             double p1) {
  // Reuse the spec checks (shapes, PSD/PD, p in range).
  two_controller_spec(a, b10, b11, q, r, p1);

  const Eigen::Index d_u0 = b10.cols();
  const Eigen::Index d_u1 = b11.cols();

  Eigen::MatrixXd b_full(a.rows(), d_u0 + d_u1);
  b_full << b10, b11;
  Eigen::MatrixXd b_local = b_full;
  b_local.leftCols(d_u0).setZero();  // mode 1 loses the remote input

  Eigen::MatrixXd r_local = Eigen::MatrixXd::Zero(d_u0 + d_u1, d_u0 + d_u1);
  r_local.topLeftCorner(d_u0, d_u0).setIdentity();
  r_local.bottomRightCorner(d_u1, d_u1) = r.bottomRightCorner(d_u1, d_u1);

  MjlsModel model;
  model.a = {a, a};
  model.b = {b_full, b_local};
  model.q = {q, q};
  model.r = {r, r_local};
  model.theta.resize(2, 2);
  model.theta << 1.0, 0.0, 1.0 - p1, p1;
  model.validate();
  return model;
}

MjlsModel build_auxiliary_nc(const DncsSpec& spec) {
  spec.validate();
  const int n_sub = spec.subsystems();
  const BlockMatrix a_blk = spec.a();
  const BlockMatrix b_blk = spec.b();
  const BlockMatrix q_blk = spec.q_partitioned();
  const BlockMatrix r_blk = spec.r_partitioned();

  MjlsModel model;
  model.a.push_back(a_blk.data());
  model.b.push_back(b_blk.data());
  model.q.push_back(spec.q);
  model.r.push_back(spec.r);
  for (int n = 0; n < n_sub; ++n) {
    model.a.push_back(l_zero(a_blk, spec.a_blocks[n], n, n).data());
    model.b.push_back(l_zero(b_blk, spec.b_local[n], n, n + 1).data());
    model.q.push_back(l_zero(q_blk, spec.q_sub(n), n, n).data());
    model.r.push_back(l_iden(r_blk, spec.r_local(n), n + 1).data());
  }

  model.theta = Eigen::MatrixXd::Zero(n_sub + 1, n_sub + 1);
  model.theta(0, 0) = 1.0;  // mode 0 is absorbing
  for (int n = 1; n <= n_sub; ++n) {
    model.theta(n, 0) = 1.0 - spec.drop_probs[n - 1];
    model.theta(n, n) = spec.drop_probs[n - 1];
  }
  model.validate();
  return model;
}

MjlsRecursions mjls_finite_recursions(const MjlsModel& model, int horizon) {
  model.validate();
  if (horizon < 0) {
    throw std::invalid_argument("horizon must be nonnegative");
  }
  const int n_modes = model.modes();
  const Eigen::Index d = model.a[0].rows();

  MjlsRecursions rec;
  rec.horizon = horizon;
  rec.p.resize(horizon + 2);
  rec.k.resize(horizon + 1);
  rec.p[horizon + 1].assign(n_modes, Eigen::MatrixXd::Zero(d, d));

  for (int t = horizon; t >= 0; --t) {
    rec.p[t].resize(n_modes);
    rec.k[t].resize(n_modes);
    for (int m = 0; m < n_modes; ++m) {
      const Eigen::MatrixXd mix =
          pi_mix(rec.p[t + 1], model.theta.row(m).transpose());
      rec.p[t][m] = omega(mix, model.q[m], model.r[m], model.a[m], model.b[m]);
      rec.k[t][m] = psi(mix, model.r[m], model.a[m], model.b[m]);
    }
  }
  return rec;
}

DcareSolution dcare_solve(const MjlsModel& model, double tol, int max_iter,
                          double divergence_cap) {
  model.validate();
  if (tol <= 0.0) {
    throw std::invalid_argument("tol must be positive");
  }
  const int n_modes = model.modes();
  const Eigen::Index d = model.a[0].rows();

  DcareSolution sol;
  std::vector<Eigen::MatrixXd> cur(n_modes, Eigen::MatrixXd::Zero(d, d));
  for (int i = 1; i <= max_iter; ++i) {
    std::vector<Eigen::MatrixXd> next(n_modes);
    try {
      for (int m = 0; m < n_modes; ++m) {
        const Eigen::MatrixXd mix =
            pi_mix(cur, model.theta.row(m).transpose());
        next[m] =
            omega(mix, model.q[m], model.r[m], model.a[m], model.b[m]);
      }
    } catch (const std::runtime_error&) {
      sol.status = SolveStatus::kDiverged;
      sol.iterations = i;
      return sol;
    }
    sol.iterations = i;
    double delta = 0.0;
    bool blew_up = false;
    for (int m = 0; m < n_modes; ++m) {
      if (next[m].trace() > divergence_cap) blew_up = true;
      delta = std::max(delta,
                       (next[m] - cur[m]).norm() / (1.0 + next[m].norm()));
    }
    cur = std::move(next);
    if (blew_up) {
      sol.status = SolveStatus::kDiverged;
      return sol;
    }
    if (delta < tol) {
      sol.status = SolveStatus::kConverged;
      break;
    }
  }
  if (sol.status != SolveStatus::kConverged) {
    sol.status = SolveStatus::kIterationLimit;
    return sol;
  }

  sol.p = cur;
  for (int m = 0; m < n_modes; ++m) {
    const Eigen::MatrixXd mix = pi_mix(cur, model.theta.row(m).transpose());
    sol.k.push_back(psi(mix, model.r[m], model.a[m], model.b[m]));
  }
  return sol;
}

Eigen::MatrixXd second_moment_matrix(const Eigen::MatrixXd& theta,
                                     const std::vector<Eigen::MatrixXd>& m) {
  const int n_modes = static_cast<int>(m.size());
  if (n_modes == 0 || theta.rows() != n_modes || theta.cols() != n_modes) {
    throw std::invalid_argument("theta shape must match the mode count");
  }
  const Eigen::Index d = m[0].rows();
  for (const auto& mat : m) {
    if (mat.rows() != d || mat.cols() != d) {
      throw std::invalid_argument("per-mode matrices must share a square shape");
    }
  }
  if (n_modes > kMaxModes || d > kMaxKronDim) {
    throw std::invalid_argument(
        "Kronecker assembly too large; use triangular_shortcut");
  }

  const Eigen::Index dd = d * d;
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n_modes * dd, n_modes * dd);
  for (int i = 0; i < n_modes; ++i) {
    const Eigen::MatrixXd lifted = kron(m[i], m[i]);
    for (int j = 0; j < n_modes; ++j) {
      if (theta(i, j) == 0.0) continue;
      big.block(j * dd, i * dd, dd, dd) = theta(i, j) * lifted;
    }
  }
  return big;
}

StabilityReport ss_test(const MjlsModel& model,
                        const std::vector<Eigen::MatrixXd>& gains) {
  model.validate();
  check_conformable(model, gains, model.b[0].cols(), model.a[0].rows(),
                    "gains");
  std::vector<Eigen::MatrixXd> closed;
  closed.reserve(model.modes());
  for (int m = 0; m < model.modes(); ++m) {
    closed.push_back(model.a[m] + model.b[m] * gains[m]);
  }
  const Eigen::MatrixXd big = second_moment_matrix(model.theta, closed);
  StabilityReport report;
  report.rho = spectral_radius(big);
  report.schur_stable = report.rho < 1.0;
  report.matrix_dim = big.rows();
  return report;
}

StabilityReport sd_test(const MjlsModel& model,
                        const std::vector<Eigen::MatrixXd>& injections) {
  model.validate();
  check_conformable(model, injections, model.a[0].rows(), model.a[0].rows(),
                    "injections");
  std::vector<Eigen::MatrixXd> injected;
  injected.reserve(model.modes());
  for (int m = 0; m < model.modes(); ++m) {
    injected.push_back(model.a[m] + injections[m] * sqrt_psd(model.q[m]));
  }
  const Eigen::MatrixXd big = second_moment_matrix(model.theta, injected);
  StabilityReport report;
  report.rho = spectral_radius(big);
  report.schur_stable = report.rho < 1.0;
  report.matrix_dim = big.rows();
  return report;
}

ShortcutReport triangular_shortcut(const MjlsModel& model,
                                   const std::vector<Eigen::MatrixXd>& closed_loop) {
  model.validate();
  check_conformable(model, closed_loop, model.a[0].rows(), model.a[0].rows(),
                    "closed_loop");
  const Eigen::MatrixXd& theta = model.theta;
  const int n_modes = model.modes();
  auto off_pattern = [&](int i, int j) {
    return std::abs(theta(i, j)) > 1e-12;
  };
  if (std::abs(theta(0, 0) - 1.0) > 1e-12) {
    throw std::invalid_argument("theta mode 0 is not absorbing");
  }
  for (int j = 1; j < n_modes; ++j) {
    if (off_pattern(0, j)) {
      throw std::invalid_argument("theta mode 0 is not absorbing");
    }
  }
  for (int i = 1; i < n_modes; ++i) {
    for (int j = 1; j < n_modes; ++j) {
      if (i != j && off_pattern(i, j)) {
        throw std::invalid_argument(
            "theta is not in the absorbing-mode-0 pattern");
      }
    }
  }

  // rho(M x M) = rho(M)^2, so no Kronecker product is ever formed.
  ShortcutReport report;
  const double rho0 = spectral_radius(closed_loop[0]);
  report.block_radii.push_back(rho0 * rho0);
  for (int n = 1; n < n_modes; ++n) {
    const double rho_n = spectral_radius(closed_loop[n]);
    report.block_radii.push_back(theta(n, n) * rho_n * rho_n);
  }
  report.schur_stable = true;
  for (double radius : report.block_radii) {
    if (!(radius < 1.0)) report.schur_stable = false;
  }
  return report;
}

std::vector<Eigen::MatrixXd> injection_search(const MjlsModel& model,
                                              int restarts,
                                              std::uint64_t seed) {
  model.validate();
  const Eigen::Index d = model.a[0].rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_matrix = [&](double scale) {
    Eigen::MatrixXd h(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) h(i, j) = scale * gauss(rng);
    }
    return h;
  };

  std::vector<Eigen::MatrixXd> result;
  for (int m = 0; m < model.modes(); ++m) {
    const Eigen::MatrixXd root = sqrt_psd(model.q[m]);
    auto objective = [&](const Eigen::MatrixXd& h) {
      return spectral_radius(model.a[m] + h * root);
    };

    Eigen::MatrixXd best = Eigen::MatrixXd::Zero(d, d);
    double best_value = objective(best);
    for (int restart = 0; restart < restarts; ++restart) {
      Eigen::MatrixXd h =
          restart == 0 ? Eigen::MatrixXd::Zero(d, d) : random_matrix(1.0);
      double value = objective(h);
      double radius = 1.0;
      while (radius > 1e-4) {
        const Eigen::MatrixXd candidate = h + random_matrix(radius);
        const double candidate_value = objective(candidate);
        if (candidate_value < value) {
          h = candidate;
          value = candidate_value;
        } else {
          radius *= 0.9;
        }
      }
      if (value < best_value) {
        best = h;
        best_value = value;
      }
    }
    result.push_back(best);
  }
  return result;
}

}  // namespace dncs
