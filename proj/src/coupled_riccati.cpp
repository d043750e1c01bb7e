#include "dncs/coupled_riccati.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "dncs/riccati_operators.hpp"
#include "dncs/thresholds.hpp"

namespace dncs {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kDiverged:
      return "diverged";
    case SolveStatus::kIterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

namespace {

struct Iterate {
  Eigen::MatrixXd p0;
  std::vector<Eigen::MatrixXd> pn;
};

// One backward step of the coupled recursions; also used as the fixed-point map.
Iterate coupled_step(const DncsSpec& spec, const Eigen::MatrixXd& a_full,
                     const Eigen::MatrixXd& b_full, const Iterate& next) {
  Iterate cur;
  cur.p0 = omega(next.p0, spec.q, spec.r, a_full, b_full);
  const BlockMatrix p0_next(next.p0, spec.state_partition(),
                            spec.state_partition());
  cur.pn.reserve(spec.subsystems());
  for (int n = 0; n < spec.subsystems(); ++n) {
    const double p = spec.drop_probs[n];
    const Eigen::MatrixXd mix =
        (1.0 - p) * p0_next.block(n, n) + p * next.pn[n];
    cur.pn.push_back(
        omega(mix, spec.q_sub(n), spec.r_local(n), spec.a_blocks[n],
              spec.b_local[n]));
  }
  return cur;
}

// tr of the per-step cost mixture sum_n ((1-p^n)[P^0]_{n,n} + p^n P^n).
double mixture_trace(const DncsSpec& spec, const Iterate& next) {
  const BlockMatrix p0(next.p0, spec.state_partition(), spec.state_partition());
  double total = 0.0;
  for (int n = 0; n < spec.subsystems(); ++n) {
    const double p = spec.drop_probs[n];
    total += ((1.0 - p) * p0.block(n, n) + p * next.pn[n]).trace();
  }
  return total;
}

Eigen::MatrixXd mixture_lambda(const DncsSpec& spec, const Iterate& fixed) {
  const BlockMatrix p0(fixed.p0, spec.state_partition(),
                       spec.state_partition());
  BlockMatrix lambda =
      BlockMatrix::Zero(spec.state_partition(), spec.state_partition());
  for (int n = 0; n < spec.subsystems(); ++n) {
    const double p = spec.drop_probs[n];
    lambda.set_block(n, n, (1.0 - p) * p0.block(n, n) + p * fixed.pn[n]);
  }
  return lambda.data();
}

Iterate zero_iterate(const DncsSpec& spec) {
  Iterate it;
  it.p0 = Eigen::MatrixXd::Zero(spec.state_dim(), spec.state_dim());
  for (int n = 0; n < spec.subsystems(); ++n) {
    it.pn.push_back(
        Eigen::MatrixXd::Zero(spec.state_dims[n], spec.state_dims[n]));
  }
  return it;
}

double max_relative_change(const Iterate& prev, const Iterate& cur) {
  auto change = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (b - a).norm() / (1.0 + b.norm());
  };
  double delta = change(prev.p0, cur.p0);
  for (size_t n = 0; n < cur.pn.size(); ++n) {
    delta = std::max(delta, change(prev.pn[n], cur.pn[n]));
  }
  return delta;
}

bool trace_exceeds(const Iterate& it, double cap) {
  if (it.p0.trace() > cap) return true;
  for (const auto& p : it.pn) {
    if (p.trace() > cap) return true;
  }
  return false;
}

std::vector<std::string> assumption_warnings(const DncsSpec& spec) {
  std::vector<std::string> warnings;
  const Eigen::MatrixXd a_full = spec.a().data();
  if (!is_detectable(a_full, sqrt_psd(spec.q))) {
    warnings.push_back("(A, Q^{1/2}) is not detectable");
  }
  if (!is_stabilizable(a_full, spec.b().data())) {
    warnings.push_back("(A, B) is not stabilizable");
  }
  for (int n = 0; n < spec.subsystems(); ++n) {
    if (!is_detectable(spec.a_blocks[n], sqrt_psd(spec.q_sub(n)))) {
      warnings.push_back("(A^" + std::to_string(n + 1) + std::to_string(n + 1) +
                         ", (Q^" + std::to_string(n + 1) +
                         std::to_string(n + 1) + ")^{1/2}) is not detectable");
    }
  }
  return warnings;
}

}  // namespace

FiniteSolution finite_horizon_solve(const DncsSpec& spec, int horizon) {
  spec.validate();
  if (horizon < 0) {
    throw std::invalid_argument("horizon must be nonnegative");
  }
  const Eigen::MatrixXd a_full = spec.a().data();
  const Eigen::MatrixXd b_full = spec.b().data();

  FiniteSolution sol;
  sol.horizon = horizon;
  sol.p0.resize(horizon + 2);
  sol.pn.resize(horizon + 2);
  sol.k0.resize(horizon + 1);
  sol.kn.resize(horizon + 1);

  Iterate next = zero_iterate(spec);
  sol.p0[horizon + 1] = next.p0;
  sol.pn[horizon + 1] = next.pn;

  for (int t = horizon; t >= 0; --t) {
    sol.cost += mixture_trace(spec, next);
    sol.k0[t] = psi(next.p0, spec.r, a_full, b_full);
    const BlockMatrix p0_next(next.p0, spec.state_partition(),
                              spec.state_partition());
    sol.kn[t].resize(spec.subsystems());
    for (int n = 0; n < spec.subsystems(); ++n) {
      const double p = spec.drop_probs[n];
      const Eigen::MatrixXd mix =
          (1.0 - p) * p0_next.block(n, n) + p * next.pn[n];
      sol.kn[t][n] =
          psi(mix, spec.r_local(n), spec.a_blocks[n], spec.b_local[n]);
    }
    next = coupled_step(spec, a_full, b_full, next);
    sol.p0[t] = next.p0;
    sol.pn[t] = next.pn;
  }
  return sol;
}

SteadySolution steady_solve(const DncsSpec& spec, double tol, int max_iter,
                            double divergence_cap) {
  spec.validate();
  if (tol <= 0.0) {
    throw std::invalid_argument("tol must be positive");
  }
  const Eigen::MatrixXd a_full = spec.a().data();
  const Eigen::MatrixXd b_full = spec.b().data();

  SteadySolution sol;
  sol.warnings = assumption_warnings(spec);

  Iterate cur = zero_iterate(spec);
  for (int i = 1; i <= max_iter; ++i) {
    Iterate next;
    try {
      next = coupled_step(spec, a_full, b_full, cur);
    } catch (const std::runtime_error&) {
      // With a validated spec the input-cost factorization can only fail once
      // the iterates have blown up, so classify as divergence.
      sol.status = SolveStatus::kDiverged;
      sol.iterations = i;
      return sol;
    }
    sol.iterations = i;
    if (trace_exceeds(next, divergence_cap)) {
      sol.status = SolveStatus::kDiverged;
      return sol;
    }
    const double delta = max_relative_change(cur, next);
    cur = std::move(next);
    if (delta < tol) {
      sol.status = SolveStatus::kConverged;
      break;
    }
  }
  if (sol.status != SolveStatus::kConverged) {
    sol.status = SolveStatus::kIterationLimit;
    return sol;
  }

  sol.p0 = cur.p0;
  sol.pn = cur.pn;
  sol.k0 = psi(cur.p0, spec.r, a_full, b_full);
  const BlockMatrix p0(cur.p0, spec.state_partition(), spec.state_partition());
  for (int n = 0; n < spec.subsystems(); ++n) {
    const double p = spec.drop_probs[n];
    const Eigen::MatrixXd mix = (1.0 - p) * p0.block(n, n) + p * cur.pn[n];
    sol.kn.push_back(
        psi(mix, spec.r_local(n), spec.a_blocks[n], spec.b_local[n]));
  }
  sol.lambda = mixture_lambda(spec, cur);
  sol.avg_cost = sol.lambda.trace();
  return sol;
}

SteadySolution two_controller_solve(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b10,
                                    const Eigen::MatrixXd& b11,
                                    const Eigen::MatrixXd& q,
                                    const Eigen::MatrixXd& r, double p1,
                                    double tol, int max_iter,
                                    double divergence_cap) {
  const DncsSpec spec = two_controller_spec(a, b10, b11, q, r, p1);
  if (tol <= 0.0) {
    throw std::invalid_argument("tol must be positive");
  }
  Eigen::MatrixXd b_full(a.rows(), b10.cols() + b11.cols());
  b_full << b10, b11;
  const Eigen::MatrixXd r11 =
      r.bottomRightCorner(b11.cols(), b11.cols());

  SteadySolution sol;
  sol.warnings = assumption_warnings(spec);

  Eigen::MatrixXd p0 = Eigen::MatrixXd::Zero(a.rows(), a.rows());
  Eigen::MatrixXd pl = p0;
  for (int i = 1; i <= max_iter; ++i) {
    Eigen::MatrixXd p0_next, pl_next;
    try {
      p0_next = omega(p0, q, r, a, b_full);
      pl_next = omega((1.0 - p1) * p0 + p1 * pl, q, r11, a, b11);
    } catch (const std::runtime_error&) {
      sol.status = SolveStatus::kDiverged;
      sol.iterations = i;
      return sol;
    }
    sol.iterations = i;
    if (p0_next.trace() > divergence_cap || pl_next.trace() > divergence_cap) {
      sol.status = SolveStatus::kDiverged;
      return sol;
    }
    const double delta =
        std::max((p0_next - p0).norm() / (1.0 + p0_next.norm()),
                 (pl_next - pl).norm() / (1.0 + pl_next.norm()));
    p0 = std::move(p0_next);
    pl = std::move(pl_next);
    if (delta < tol) {
      sol.status = SolveStatus::kConverged;
      break;
    }
  }
  if (sol.status != SolveStatus::kConverged) {
    sol.status = SolveStatus::kIterationLimit;
    return sol;
  }

  sol.p0 = p0;
  sol.pn = {pl};
  sol.k0 = psi(p0, r, a, b_full);
  sol.kn = {psi((1.0 - p1) * p0 + p1 * pl, r11, a, b11)};
  sol.lambda = (1.0 - p1) * p0 + p1 * pl;
  sol.avg_cost = sol.lambda.trace();
  return sol;
}

BarRepresentation bar_representation(const DncsSpec& spec, int horizon) {
  spec.validate();
  if (horizon < 0) {
    throw std::invalid_argument("horizon must be nonnegative");
  }
  const BlockMatrix a_blk = spec.a();
  const BlockMatrix b_blk = spec.b();
  const BlockMatrix q_blk = spec.q_partitioned();
  const BlockMatrix r_blk = spec.r_partitioned();
  const Eigen::MatrixXd a_full = a_blk.data();
  const Eigen::MatrixXd b_full = b_blk.data();

  // Lifted per-subsystem matrices, constant over the horizon.
  std::vector<Eigen::MatrixXd> q_bar, r_bar, a_bar, b_bar;
  for (int n = 0; n < spec.subsystems(); ++n) {
    q_bar.push_back(l_zero(q_blk, spec.q_sub(n), n, n).data());
    r_bar.push_back(l_iden(r_blk, spec.r_local(n), n + 1).data());
    a_bar.push_back(l_zero(a_blk, spec.a_blocks[n], n, n).data());
    b_bar.push_back(l_zero(b_blk, spec.b_local[n], n, n + 1).data());
  }

  BarRepresentation rep;
  rep.horizon = horizon;
  rep.p0.resize(horizon + 2);
  rep.pn.resize(horizon + 2);

  const Eigen::Index d = spec.state_dim();
  rep.p0[horizon + 1] = Eigen::MatrixXd::Zero(d, d);
  rep.pn[horizon + 1].assign(spec.subsystems(), Eigen::MatrixXd::Zero(d, d));

  for (int t = horizon; t >= 0; --t) {
    rep.p0[t] = omega(rep.p0[t + 1], spec.q, spec.r, a_full, b_full);
    rep.pn[t].resize(spec.subsystems());
    for (int n = 0; n < spec.subsystems(); ++n) {
      const double p = spec.drop_probs[n];
      const Eigen::MatrixXd mix =
          (1.0 - p) * rep.p0[t + 1] + p * rep.pn[t + 1][n];
      rep.pn[t][n] = omega(mix, q_bar[n], r_bar[n], a_bar[n], b_bar[n]);
    }
  }
  return rep;
}

}  // namespace dncs
