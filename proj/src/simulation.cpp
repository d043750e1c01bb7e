#include "dncs/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace dncs {

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
constexpr double kBlowUpGuard = 1e9;

double draw_noise(SplitMix64& stream, NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kStandardNormal:
      return stream.standard_normal();
    case NoiseKind::kRademacher:
      return stream.rademacher();
    case NoiseKind::kZero:
      return 0.0;
  }
  throw std::invalid_argument("unknown noise kind");
}

// Order-independent reduction, so the aggregate does not depend on how runs
// were scheduled.
double pairwise_sum(const std::vector<double>& values, size_t lo, size_t hi) {
  if (hi - lo <= 8) {
    double total = 0.0;
    for (size_t i = lo; i < hi; ++i) total += values[i];
    return total;
  }
  const size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(values, lo, mid) + pairwise_sum(values, mid, hi);
}

double pairwise_mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return pairwise_sum(values, 0, values.size()) /
         static_cast<double>(values.size());
}

}  // namespace

SplitMix64::result_type SplitMix64::operator()() {
  state_ += kGoldenGamma;
  return mix(state_);
}

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform01() {
  // 53-bit mantissa, shifted into (0, 1] so log() is safe.
  return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
}

double SplitMix64::standard_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double SplitMix64::rademacher() {
  return ((*this)() >> 63) ? 1.0 : -1.0;
}

SplitMix64 run_stream(std::uint64_t seed, std::int64_t run_index) {
  const std::uint64_t counter =
      seed + (static_cast<std::uint64_t>(run_index) + 1) * kGoldenGamma;
  return SplitMix64(SplitMix64::mix(counter));
}

const char* to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kStandardNormal:
      return "standard_normal";
    case NoiseKind::kRademacher:
      return "rademacher";
    case NoiseKind::kZero:
      return "zero";
  }
  return "unknown";
}

ClosedLoop::ClosedLoop(const DncsSpec& spec, const Eigen::MatrixXd& k0,
                       const std::vector<Eigen::MatrixXd>& kn)
    : spec_(spec),
      a_(spec.a().data()),
      b_(spec.b().data()),
      k0_(k0),
      kn_(kn) {
  spec_.validate();
  if (k0_.rows() != spec_.input_dim() || k0_.cols() != spec_.state_dim()) {
    throw std::invalid_argument("remote gain has wrong dimensions");
  }
  if (kn_.size() != static_cast<size_t>(spec_.subsystems())) {
    throw std::invalid_argument("need one local gain per subsystem");
  }
  drop_propagator_ = a_ + b_ * k0_;
  Eigen::Index state_offset = 0;
  Eigen::Index input_offset = spec_.remote_input_dim;
  for (int n = 0; n < spec_.subsystems(); ++n) {
    if (kn_[n].rows() != spec_.local_input_dims[n] ||
        kn_[n].cols() != spec_.state_dims[n]) {
      throw std::invalid_argument("local gain has wrong dimensions");
    }
    a_s_.push_back(spec_.a_blocks[n] + spec_.b_local[n] * kn_[n]);
    state_offsets_.push_back(state_offset);
    local_input_offsets_.push_back(input_offset);
    state_offset += spec_.state_dims[n];
    input_offset += spec_.local_input_dims[n];
  }
}

SimState ClosedLoop::initial_state() const {
  SimState state;
  state.x = Eigen::VectorXd::Zero(spec_.state_dim());
  state.x_hat = state.x;
  for (int n = 0; n < spec_.subsystems(); ++n) {
    state.sigma.push_back(
        Eigen::MatrixXd::Zero(spec_.state_dims[n], spec_.state_dims[n]));
  }
  return state;
}

Eigen::VectorXd ClosedLoop::control(const SimState& state) const {
  Eigen::VectorXd u = k0_ * state.x_hat;
  for (int n = 0; n < spec_.subsystems(); ++n) {
    const auto error = state.x.segment(state_offsets_[n], spec_.state_dims[n]) -
                       state.x_hat.segment(state_offsets_[n], spec_.state_dims[n]);
    u.segment(local_input_offsets_[n], spec_.local_input_dims[n]) +=
        kn_[n] * error;
  }
  return u;
}

double ClosedLoop::step(SimState& state,
                        const std::vector<std::uint8_t>& link_success,
                        const Eigen::VectorXd& noise) const {
  if (link_success.size() != static_cast<size_t>(spec_.subsystems())) {
    throw std::invalid_argument("need one link outcome per subsystem");
  }
  if (noise.size() != spec_.state_dim()) {
    throw std::invalid_argument("noise has wrong dimension");
  }
  const Eigen::VectorXd u = control(state);
  const double cost = state.x.dot(spec_.q * state.x) + u.dot(spec_.r * u);

  const Eigen::VectorXd x_next = a_ * state.x + b_ * u + noise;
  const Eigen::VectorXd x_hat_drop = drop_propagator_ * state.x_hat;
  for (int n = 0; n < spec_.subsystems(); ++n) {
    const Eigen::Index lo = state_offsets_[n];
    const Eigen::Index len = spec_.state_dims[n];
    if (link_success[n]) {
      state.x_hat.segment(lo, len) = x_next.segment(lo, len);
      state.sigma[n].setZero();
    } else {
      state.x_hat.segment(lo, len) = x_hat_drop.segment(lo, len);
      state.sigma[n] =
          Eigen::MatrixXd::Identity(len, len) +
          a_s_[n] * state.sigma[n] * a_s_[n].transpose();
    }
  }
  state.x = x_next;
  state.t += 1;
  state.accumulated_cost += cost;
  if (!state.x.allFinite() || !std::isfinite(state.accumulated_cost)) {
    throw std::runtime_error("simulation state became non-finite at t = " +
                             std::to_string(state.t));
  }
  return cost;
}

namespace {

void write_trace_header(std::ostream& trace, const DncsSpec& spec) {
  trace << "t,run";
  for (Eigen::Index i = 0; i < spec.state_dim(); ++i) trace << ",x_" << i;
  for (Eigen::Index i = 0; i < spec.state_dim(); ++i) trace << ",xhat_" << i;
  for (int n = 1; n <= spec.subsystems(); ++n) trace << ",gamma_" << n;
  for (Eigen::Index j = 0; j < spec.input_dim(); ++j) trace << ",u_" << j;
  trace << ",cost\n";
}

void write_trace_row(std::ostream& trace, long t, int run,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat,
                     const std::vector<std::uint8_t>& links,
                     const Eigen::VectorXd& u, double cost) {
  trace << t << ',' << run;
  for (Eigen::Index i = 0; i < x.size(); ++i) trace << ',' << x[i];
  for (Eigen::Index i = 0; i < x_hat.size(); ++i) trace << ',' << x_hat[i];
  for (std::uint8_t g : links) trace << ',' << static_cast<int>(g);
  for (Eigen::Index j = 0; j < u.size(); ++j) trace << ',' << u[j];
  trace << ',' << cost << '\n';
}

}  // namespace

SimReport run_monte_carlo(const SimConfig& config, std::ostream* trace) {
  config.spec.validate();
  if (!config.solution.converged()) {
    throw std::invalid_argument(
        "refusing to simulate a non-converged solution");
  }
  if (config.horizon < 1 || config.num_runs < 1) {
    throw std::invalid_argument("horizon and num_runs must be positive");
  }
  if (config.record_every < 0) {
    throw std::invalid_argument("record_every must be nonnegative");
  }
  const ClosedLoop loop(config.spec, config.solution.k0, config.solution.kn);
  const int n_sub = config.spec.subsystems();
  const Eigen::Index d = config.spec.state_dim();

  const bool tracing = trace != nullptr && config.record_every >= 1;
  if (tracing) {
    trace->precision(17);
    write_trace_header(*trace, config.spec);
  }

  SimReport report;
  report.horizon = config.horizon;
  report.num_runs = config.num_runs;
  report.seed = config.seed;
  report.noise = to_string(config.noise);
  report.predicted_avg_cost = config.solution.avg_cost;
  report.run_avg_cost.resize(config.num_runs, 0.0);

  std::vector<double> sum_sq_state(config.horizon, 0.0);
  std::vector<double> sum_sq_error(config.horizon, 0.0);
  std::vector<int> runs_at_step(config.horizon, 0);

  std::vector<std::uint8_t> links(n_sub, 0);
  Eigen::VectorXd noise(d);
  for (int run = 0; run < config.num_runs; ++run) {
    SplitMix64 stream = run_stream(config.seed, run);
    SimState state = loop.initial_state();
    int steps_taken = 0;
    for (int t = 0; t < config.horizon; ++t) {
      for (int n = 0; n < n_sub; ++n) {
        links[n] = stream.uniform01() > config.spec.drop_probs[n] ? 1 : 0;
      }
      for (Eigen::Index i = 0; i < d; ++i) {
        noise[i] = draw_noise(stream, config.noise);
      }
      if (tracing && t % config.record_every == 0) {
        const Eigen::VectorXd u = loop.control(state);
        const double cost = state.x.dot(config.spec.q * state.x) +
                            u.dot(config.spec.r * u);
        write_trace_row(*trace, t, run, state.x, state.x_hat, links, u, cost);
      }
      loop.step(state, links, noise);
      ++steps_taken;
      sum_sq_state[t] += state.x.squaredNorm();
      sum_sq_error[t] += (state.x - state.x_hat).squaredNorm();
      runs_at_step[t] += 1;
      if (state.x.cwiseAbs().maxCoeff() > kBlowUpGuard) {
        report.aborted_runs.push_back(run);
        break;
      }
    }
    report.run_avg_cost[run] =
        state.accumulated_cost / static_cast<double>(steps_taken);
  }

  report.mean_sq_state.resize(config.horizon, 0.0);
  report.mean_sq_error.resize(config.horizon, 0.0);
  for (int t = 0; t < config.horizon; ++t) {
    if (runs_at_step[t] == 0) break;
    report.mean_sq_state[t] = sum_sq_state[t] / runs_at_step[t];
    report.mean_sq_error[t] = sum_sq_error[t] / runs_at_step[t];
    report.max_mean_sq_state =
        std::max(report.max_mean_sq_state, report.mean_sq_state[t]);
    report.max_mean_sq_error =
        std::max(report.max_mean_sq_error, report.mean_sq_error[t]);
  }

  report.mean_avg_cost = pairwise_mean(report.run_avg_cost);
  if (config.num_runs > 1) {
    std::vector<double> sq_dev(config.num_runs);
    for (int run = 0; run < config.num_runs; ++run) {
      const double dev = report.run_avg_cost[run] - report.mean_avg_cost;
      sq_dev[run] = dev * dev;
    }
    const double variance =
        pairwise_sum(sq_dev, 0, sq_dev.size()) / (config.num_runs - 1);
    report.std_error = std::sqrt(variance / config.num_runs);
  }
  return report;
}

IdentityCheck verify_step_identity(const DncsSpec& spec,
                                   const SteadySolution& solution,
                                   const Eigen::VectorXd& x_hat,
                                   const std::vector<Eigen::MatrixXd>& sigma,
                                   double tol) {
  spec.validate();
  if (!solution.converged()) {
    throw std::invalid_argument("identity check needs a converged solution");
  }
  if (x_hat.size() != spec.state_dim() ||
      sigma.size() != static_cast<size_t>(spec.subsystems())) {
    throw std::invalid_argument("estimator state has wrong dimensions");
  }
  const ClosedLoop loop(spec, solution.k0, solution.kn);
  const BlockMatrix p0(solution.p0, spec.state_partition(),
                       spec.state_partition());

  // E[c | H^0]: quadratic in x_hat plus per-subsystem error traces.
  double expected_cost =
      x_hat.dot((spec.q + solution.k0.transpose() * spec.r * solution.k0) *
                x_hat);
  for (int n = 0; n < spec.subsystems(); ++n) {
    const Eigen::MatrixXd weight =
        spec.q_sub(n) +
        solution.kn[n].transpose() * spec.r_local(n) * solution.kn[n];
    expected_cost += (weight * sigma[n]).trace();
  }

  // E[V_{t+1} | H^0] through the predicted covariance I + A_s Sigma A_s'.
  const Eigen::VectorXd x_hat_next = loop.a_closed_remote() * x_hat;
  double expected_value_next = x_hat_next.dot(solution.p0 * x_hat_next);
  for (int n = 0; n < spec.subsystems(); ++n) {
    const Eigen::MatrixXd& a_s = loop.a_closed_local(n);
    const Eigen::MatrixXd sigma_pred =
        Eigen::MatrixXd::Identity(spec.state_dims[n], spec.state_dims[n]) +
        a_s * sigma[n] * a_s.transpose();
    const double p = spec.drop_probs[n];
    expected_value_next += (1.0 - p) * (p0.block(n, n) * sigma_pred).trace() +
                           p * (solution.pn[n] * sigma_pred).trace();
  }

  double value_now = x_hat.dot(solution.p0 * x_hat);
  for (int n = 0; n < spec.subsystems(); ++n) {
    value_now += (solution.pn[n] * sigma[n]).trace();
  }

  IdentityCheck check;
  check.lhs = expected_cost + expected_value_next;
  check.rhs = solution.lambda.trace() + value_now;
  check.residual = std::abs(check.lhs - check.rhs);
  check.pass = check.residual <= tol * (1.0 + std::abs(check.rhs));
  return check;
}

FiniteCostCheck finite_horizon_cost_check(const DncsSpec& spec, int horizon,
                                          int num_runs, std::uint64_t seed,
                                          NoiseKind noise_kind) {
  if (num_runs < 1) {
    throw std::invalid_argument("num_runs must be positive");
  }
  const FiniteSolution fin = finite_horizon_solve(spec, horizon);
  const Eigen::MatrixXd a_full = spec.a().data();
  const Eigen::MatrixXd b_full = spec.b().data();
  const int n_sub = spec.subsystems();
  const Eigen::Index d = spec.state_dim();

  // Per-step closed loops around the time-varying gains.
  std::vector<ClosedLoop> loops;
  loops.reserve(horizon + 1);
  for (int t = 0; t <= horizon; ++t) {
    loops.emplace_back(spec, fin.k0[t], fin.kn[t]);
  }

  std::vector<double> totals(num_runs, 0.0);
  std::vector<std::uint8_t> links(n_sub, 0);
  Eigen::VectorXd noise(d);
  for (int run = 0; run < num_runs; ++run) {
    SplitMix64 stream = run_stream(seed, run);
    SimState state = loops[0].initial_state();
    for (int t = 0; t <= horizon; ++t) {
      if (t < horizon) {
        for (int n = 0; n < n_sub; ++n) {
          links[n] = stream.uniform01() > spec.drop_probs[n] ? 1 : 0;
        }
        for (Eigen::Index i = 0; i < d; ++i) {
          noise[i] = draw_noise(stream, noise_kind);
        }
        loops[t].step(state, links, noise);
      } else {
        const Eigen::VectorXd u = loops[t].control(state);
        state.accumulated_cost +=
            state.x.dot(spec.q * state.x) + u.dot(spec.r * u);
      }
    }
    totals[run] = state.accumulated_cost;
  }

  FiniteCostCheck check;
  check.dp_cost = fin.cost;
  check.mc_cost = pairwise_mean(totals);
  if (num_runs > 1) {
    std::vector<double> sq_dev(num_runs);
    for (int run = 0; run < num_runs; ++run) {
      const double dev = totals[run] - check.mc_cost;
      sq_dev[run] = dev * dev;
    }
    const double variance =
        pairwise_sum(sq_dev, 0, sq_dev.size()) / (num_runs - 1);
    check.std_error = std::sqrt(variance / num_runs);
  }
  if (check.std_error > 0.0) {
    check.z_score = (check.mc_cost - check.dp_cost) / check.std_error;
  } else {
    check.z_score =
        check.mc_cost == check.dp_cost
            ? 0.0
            : std::numeric_limits<double>::infinity();
  }
  return check;
}

}  // namespace dncs
