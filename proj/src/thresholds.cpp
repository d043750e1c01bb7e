#include "dncs/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace dncs {

namespace {

constexpr double kClusterTol = 1e-7;
constexpr double kInf = std::numeric_limits<double>::infinity();

using Complex = std::complex<double>;

// rank([A - lambda*I | B]) via singular values, threshold rank_tol * sigma_max.
Eigen::Index pbh_rank(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      Complex lambda, double rank_tol) {
  const Eigen::Index d = a.rows();
  Eigen::MatrixXcd pencil(d, d + b.cols());
  pencil.leftCols(d) =
      a.cast<Complex>() - lambda * Eigen::MatrixXcd::Identity(d, d);
  pencil.rightCols(b.cols()) = b.cast<Complex>();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
  const auto& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma[0] == 0.0) return 0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > rank_tol * sigma[0]) ++rank;
  }
  return rank;
}

}  // namespace

std::vector<Complex> uncontrollable_modes(const Eigen::MatrixXd& a,
                                          const Eigen::MatrixXd& b,
                                          double rank_tol) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("uncontrollable_modes requires square A");
  }
  if (b.rows() != a.rows()) {
    throw std::invalid_argument("B row count must match A");
  }
  const Eigen::Index d = a.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigensolver failed to converge");
  }

  // Group computed eigenvalues into clusters so a repeated root is PBH-tested
  // once, at the cluster mean, and reported with its multiplicity.
  std::vector<std::vector<Complex>> clusters;
  for (Eigen::Index i = 0; i < d; ++i) {
    const Complex ev = solver.eigenvalues()[i];
    bool placed = false;
    for (auto& cluster : clusters) {
      Complex mean{0.0, 0.0};
      for (const Complex& c : cluster) mean += c;
      mean /= static_cast<double>(cluster.size());
      if (std::abs(ev - mean) <= kClusterTol * std::max(1.0, std::abs(mean))) {
        cluster.push_back(ev);
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({ev});
  }

  std::vector<Complex> modes;
  for (const auto& cluster : clusters) {
    Complex mean{0.0, 0.0};
    for (const Complex& c : cluster) mean += c;
    mean /= static_cast<double>(cluster.size());
    if (pbh_rank(a, b, mean, rank_tol) < d) {
      modes.insert(modes.end(), cluster.begin(), cluster.end());
    }
  }
  return modes;
}

double min_achievable_radius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             double rank_tol) {
  double radius = 0.0;
  for (const Complex& ev : uncontrollable_modes(a, b, rank_tol)) {
    radius = std::max(radius, std::abs(ev));
  }
  return radius;
}

bool is_stabilizable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     double rank_tol) {
  for (const Complex& ev : uncontrollable_modes(a, b, rank_tol)) {
    if (std::abs(ev) >= 1.0) return false;
  }
  return true;
}

bool is_detectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                   double rank_tol) {
  return is_stabilizable(a.transpose(), c.transpose(), rank_tol);
}

bool ThresholdReport::assumption3() const {
  return std::all_of(local_q_detectable.begin(), local_q_detectable.end(),
                     [](bool flag) { return flag; });
}

ThresholdReport critical_probs(const DncsSpec& spec, double rank_tol) {
  spec.validate();
  ThresholdReport report;
  const int n_sub = spec.subsystems();

  report.q_detectable = is_detectable(spec.a().data(), sqrt_psd(spec.q), rank_tol);
  report.b_stabilizable =
      is_stabilizable(spec.a().data(), spec.b().data(), rank_tol);

  for (int n = 0; n < n_sub; ++n) {
    const Eigen::MatrixXd& a_nn = spec.a_blocks[n];
    const Eigen::MatrixXd q_root = sqrt_psd(spec.q_sub(n));
    report.local_q_detectable.push_back(is_detectable(a_nn, q_root, rank_tol));
    report.uncontrollable.push_back(
        uncontrollable_modes(a_nn, spec.b_local[n], rank_tol));

    double radius = 0.0;
    for (const Complex& ev : report.uncontrollable.back()) {
      radius = std::max(radius, std::abs(ev));
    }
    report.p_s.push_back(radius > 0.0 ? 1.0 / (radius * radius) : kInf);

    const double dual_radius =
        min_achievable_radius(a_nn.transpose(), q_root.transpose(), rank_tol);
    report.p_d.push_back(dual_radius > 0.0 ? 1.0 / (dual_radius * dual_radius)
                                           : kInf);
  }

  const bool assumption3 = report.assumption3();
  for (int n = 0; n < n_sub; ++n) {
    const double p_c =
        assumption3 ? report.p_s[n] : std::min(report.p_s[n], report.p_d[n]);
    report.p_c.push_back(p_c);
    report.p_c_effective.push_back(std::min(p_c, 1.0));
  }
  return report;
}

FeasibilityVerdict feasibility_verdict(const DncsSpec& spec, double rank_tol) {
  const ThresholdReport report = critical_probs(spec, rank_tol);
  FeasibilityVerdict verdict;
  for (int n = 0; n < spec.subsystems(); ++n) {
    if (!(spec.drop_probs[n] < report.p_c[n])) {
      verdict.binding.push_back(n);
    }
  }
  verdict.feasible = verdict.binding.empty();
  return verdict;
}

}  // namespace dncs
