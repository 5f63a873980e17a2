#include "dsqn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsqn {

namespace rc = rate_constants;

TheoryParams TheoryParams::make(double alpha, double T, double B, double L, double mu, double sigma, double M1,
                                double M2) {
  if (!(L > 0.0) || !(mu > 0.0) || mu > L) throw std::invalid_argument("smoothness constants require 0 < mu <= L");
  if (!(M1 > 0.0) || !(M2 > 0.0) || M1 > M2)
    throw std::invalid_argument("curvature bounds require 0 < M1 <= M2");
  if (!(sigma >= 0.0) || sigma >= 1.0) throw std::invalid_argument("mixing rate must lie in [0, 1)");
  if (!(alpha > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!(T >= 1.0)) throw std::invalid_argument("snapshot period must be at least 1");
  if (!(B >= 0.0)) throw std::invalid_argument("non-sampling rate must be nonnegative");

  TheoryParams p;
  p.alpha = alpha;
  p.T = T;
  p.B = B;
  p.L = L;
  p.mu = mu;
  p.sigma = sigma;
  p.M1 = M1;
  p.M2 = M2;
  p.kappa_F = L / mu;
  p.kappa_H = M2 / M1;
  const double r = (mu / L) * (M1 / M2);
  p.zeta = r * r;
  p.gamma = 1.0 - M1 / M2;
  p.alpha_tilde = (M2 * M2 * L * L) / (M1 * mu) * alpha;
  p.beta = rc::kBetaPerRate * B;
  const double one_minus_s2 = 1.0 - sigma * sigma;
  p.c = rc::kCConsensusTerm * one_minus_s2 * p.zeta * p.alpha_tilde + rc::kCBetaTerm * p.beta;
  return p;
}

double max_step_size(double L, double mu, double sigma, double M1, double M2) {
  const double one_minus_s2 = 1.0 - sigma * sigma;
  return one_minus_s2 * one_minus_s2 * mu * M1 / (rc::kStepGateDivisor * L * L * M2 * M2);
}

double min_period(const TheoryParams& p) {
  const double one_minus_s2 = 1.0 - p.sigma * p.sigma;
  return 2.0 * std::log(rc::kPeriodGateNumerator / (p.zeta * one_minus_s2 * one_minus_s2)) /
         (p.zeta * p.alpha_tilde);
}

GateReport check_parameter_gate(const TheoryParams& p) {
  GateReport r;
  const double one_minus_s2 = 1.0 - p.sigma * p.sigma;

  r.alpha.bound = max_step_size(p.L, p.mu, p.sigma, p.M1, p.M2);
  r.alpha.actual = p.alpha;
  r.alpha.pass = p.alpha <= r.alpha.bound;

  // gamma = 0 removes the ratio clause: the min is then over {1} alone.
  double ratio_clause = 1.0;
  if (p.gamma > 0.0) {
    ratio_clause = p.zeta * one_minus_s2 * one_minus_s2 / (p.gamma * p.gamma);
  }
  r.B.bound = std::min(1.0, ratio_clause) / rc::kBGateDivisor;
  r.B.actual = p.B;
  r.B.pass = p.B <= r.B.bound;

  r.T.bound = min_period(p);
  r.T.actual = p.T;
  r.T.pass = p.T >= r.T.bound;
  return r;
}

ContractionSystem contraction_matrices(const TheoryParams& p) {
  const double s2 = p.sigma * p.sigma;
  const double one_minus_s2 = 1.0 - s2;
  const double za = p.zeta * p.alpha_tilde;
  const double g2 = p.gamma * p.gamma;

  ContractionSystem sys;
  sys.J(0, 0) = 1.0 - rc::kConsensusDecay * one_minus_s2 / 2.0;
  sys.J(0, 1) = rc::kCrossOptGap * one_minus_s2 * za * g2;
  sys.J(0, 2) = rc::kCrossTracking * za;
  sys.J(1, 0) = rc::kGapFromConsensus * p.alpha_tilde;
  sys.J(1, 1) = 1.0 - rc::kGapSelfDecay * za;
  sys.J(1, 2) = rc::kGapFromTracking * p.alpha_tilde * g2 / one_minus_s2;
  sys.J(2, 0) = rc::kTrackingFromConsensus;
  sys.J(2, 1) = p.c;
  sys.J(2, 2) = 1.0 - rc::kConsensusDecay * one_minus_s2 / 2.0;

  const double snap_row1 = rc::kSnapConsensus * p.alpha_tilde * p.beta * g2 * one_minus_s2;
  const double snap_row2 = rc::kSnapGap * p.alpha_tilde * p.zeta * one_minus_s2 * one_minus_s2;
  const double snap_row3 = rc::kSnapTracking * p.beta;
  sys.Hmat(0, 0) = snap_row1;
  sys.Hmat(0, 1) = snap_row1;
  sys.Hmat(0, 2) = 0.0;
  sys.Hmat(1, 0) = snap_row2;
  sys.Hmat(1, 1) = snap_row2;
  sys.Hmat(1, 2) = 0.0;
  sys.Hmat(2, 0) = snap_row3;
  sys.Hmat(2, 1) = snap_row3;
  sys.Hmat(2, 2) = 0.0;

  const double z3 = rc::kZTracking * (p.zeta + p.beta) / (p.zeta * one_minus_s2);
  sys.z(0) = 1.0;
  sys.z(1) = rc::kZGap / p.zeta + rc::kZGapCross * g2 * z3 / (p.zeta * one_minus_s2);
  sys.z(2) = z3;

  sys.q(0) = 1.0;
  sys.q(1) = rc::kZGap;
  sys.q(2) = rc::kZTracking * (p.zeta + p.beta) / one_minus_s2;
  return sys;
}

double weighted_inf_norm(const Eigen::Vector3d& a, const Eigen::Vector3d& w) {
  double best = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (!(w(i) > 0.0)) throw std::invalid_argument("weight vector entries must be positive");
    best = std::max(best, std::abs(a(i)) / w(i));
  }
  return best;
}

RateCertificate certify_rate(const TheoryParams& p) {
  RateCertificate cert;
  cert.gate_pass = check_parameter_gate(p).pass();

  const ContractionSystem sys = contraction_matrices(p);
  const double one_minus_s2 = 1.0 - p.sigma * p.sigma;
  const double za = p.zeta * p.alpha_tilde;

  // (i) weighted-norm contraction of J: J z <= (1 - zeta alpha~/2) z entrywise.
  cert.rho_bound = 1.0 - za / 2.0;
  const Eigen::Vector3d Jz = sys.J * sys.z;
  cert.check_weighted_norm = true;
  for (int i = 0; i < 3; ++i) {
    if (!(Jz(i) <= cert.rho_bound * sys.z(i))) cert.check_weighted_norm = false;
  }

  // (ii) determinant lower bound for I - J.
  const Eigen::Matrix3d ImJ = Eigen::Matrix3d::Identity() - sys.J;
  cert.det_value = ImJ.determinant();
  cert.det_bound = one_minus_s2 * one_minus_s2 * za / rc::kDetDivisor;
  cert.check_determinant = cert.det_value >= cert.det_bound;

  // (iii) Neumann-series bound: (I-J)^{-1} Hmat q <= 0.8 q entrywise.
  const Eigen::Vector3d resolvent = ImJ.fullPivLu().solve(sys.Hmat * sys.q);
  cert.neumann_max_ratio = 0.0;
  for (int i = 0; i < 3; ++i) {
    cert.neumann_max_ratio = std::max(cert.neumann_max_ratio, resolvent(i) / sys.q(i));
  }
  cert.check_neumann = cert.neumann_max_ratio <= rc::kNeumannBound;

  // (iv) epoch factor: transient decay over one period plus the steady 0.8
  // stays within 0.9 (a hair of slack admits the exact period floor).
  cert.epoch_factor = rc::kEpochTransient / (p.zeta * one_minus_s2 * one_minus_s2) * std::exp(-za * p.T / 2.0) +
                      rc::kNeumannBound;
  cert.check_epoch_factor = cert.epoch_factor <= rc::kEpochFactor + 1e-12;

  if (!cert.gate_pass) {
    cert.violation = "parameter gate";
  } else if (!cert.check_weighted_norm) {
    cert.violation = "weighted-norm contraction";
  } else if (!cert.check_determinant) {
    cert.violation = "determinant lower bound";
  } else if (!cert.check_neumann) {
    cert.violation = "Neumann-series bound";
  } else if (!cert.check_epoch_factor) {
    cert.violation = "epoch factor";
  }
  return cert;
}

ErrorVector error_vector(const std::vector<Vec>& x, const std::vector<Vec>& g, const FiniteSumProblem& problem,
                         const ReferenceOptimum& ref, double sigma) {
  const int n = problem.n();
  if (static_cast<int>(x.size()) != n || static_cast<int>(g.size()) != n)
    throw std::invalid_argument("error_vector: state size does not match node count");

  Vec xbar = Vec::Zero(problem.d());
  Vec gbar = Vec::Zero(problem.d());
  for (int i = 0; i < n; ++i) {
    xbar += x[i];
    gbar += g[i];
  }
  xbar /= static_cast<double>(n);
  gbar /= static_cast<double>(n);

  ErrorVector u;
  for (int i = 0; i < n; ++i) {
    u.consensus_err += (x[i] - xbar).squaredNorm();
    u.tracking_err += (g[i] - gbar).squaredNorm();
  }
  const double L = problem.L();
  u.opt_gap = 2.0 * n / L * (problem.global_objective(xbar) - ref.F_star);
  u.tracking_err *= (1.0 - sigma * sigma) / (L * L);
  return u;
}

std::vector<EpochRatio> epoch_contraction(const std::vector<double>& u_norms, int T, double threshold) {
  if (T < 1) throw std::invalid_argument("epoch_contraction: period must be positive");
  std::vector<EpochRatio> out;
  for (std::size_t t = 0; (t + 1) * static_cast<std::size_t>(T) < u_norms.size(); ++t) {
    const double prev = u_norms[t * T];
    const double next = u_norms[(t + 1) * T];
    EpochRatio r;
    r.epoch = static_cast<int>(t);
    if (prev == 0.0) {
      r.converged = next == 0.0;
      r.ratio = r.converged ? 0.0 : std::numeric_limits<double>::infinity();
      r.flagged = !r.converged;
    } else {
      r.ratio = next / prev;
      r.flagged = !(r.ratio <= threshold);
    }
    out.push_back(r);
  }
  return out;
}

std::vector<EpochRatio> epoch_contraction(const std::vector<ErrorVector>& u, int T, const Eigen::Vector3d& q,
                                          double threshold) {
  std::vector<double> norms(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) norms[i] = weighted_inf_norm(u[i].as_vec(), q);
  return epoch_contraction(norms, T, threshold);
}

}  // namespace dsqn
