#pragma once

#include <string>
#include <vector>

#include "dsqn/problems.hpp"
#include "dsqn/scalar.hpp"

namespace dsqn {

// Every printed decimal constant of the convergence-rate analysis, in one
// place with role names, so transcription drift is auditable.
namespace rate_constants {
inline constexpr double kConsensusDecay = 0.99;        // rows 1 and 3 diagonal: 1 - 0.99(1-sigma^2)/2
inline constexpr double kCrossOptGap = 0.011;          // J(1,2) coefficient
inline constexpr double kCrossTracking = 0.02;         // J(1,3) coefficient
inline constexpr double kGapFromConsensus = 4.1;       // J(2,1) coefficient
inline constexpr double kGapSelfDecay = 0.96;          // J(2,2): 1 - 0.96 zeta alpha~
inline constexpr double kGapFromTracking = 0.51;       // J(2,3) coefficient
inline constexpr double kTrackingFromConsensus = 33.0; // J(3,1), constant entry
inline constexpr double kCConsensusTerm = 0.162;       // c = 0.162(1-sigma^2) zeta alpha~ + 2.01 beta
inline constexpr double kCBetaTerm = 2.01;
inline constexpr double kSnapConsensus = 0.01;         // Hmat rows 1
inline constexpr double kSnapGap = 0.03;               // Hmat rows 2
inline constexpr double kSnapTracking = 2.03;          // Hmat rows 3
inline constexpr double kBetaPerRate = 16.0;           // beta = 16 B
inline constexpr double kBGateDivisor = 160.0;         // B <= (1/160) min{1, zeta(1-sigma^2)^2/gamma^2}
inline constexpr double kStepGateDivisor = 200.0;      // alpha <= (1-sigma^2)^2 mu M1 / (200 L^2 M2^2)
inline constexpr double kPeriodGateNumerator = 280.0;  // T >= 2 log(280/(zeta(1-sigma^2)^2)) / (zeta alpha~)
inline constexpr double kZGap = 10.0;                  // z2 = 10/zeta + 1.2 gamma^2 z3/(zeta(1-sigma^2))
inline constexpr double kZGapCross = 1.2;
inline constexpr double kZTracking = 200.0;            // z3 = 200(zeta+beta)/(zeta(1-sigma^2)); q3 likewise
inline constexpr double kDetDivisor = 6.0;             // det(I-J) >= (1-sigma^2)^2 zeta alpha~ / 6
inline constexpr double kNeumannBound = 0.8;           // (I-J)^-1 Hmat q <= 0.8 q
inline constexpr double kEpochTransient = 28.0;        // 28/(zeta(1-sigma^2)^2) e^{-zeta alpha~ T/2} + 0.8 <= 0.9
inline constexpr double kEpochFactor = 0.9;
}  // namespace rate_constants

// Step size, schedule, and problem constants plus every derived quantity the
// rate analysis uses.
struct TheoryParams {
  double alpha = 0.0;
  double T = 0.0;
  double B = 0.0;
  double L = 1.0, mu = 1.0, sigma = 0.0, M1 = 1.0, M2 = 1.0;
  // derived
  double kappa_F = 1.0, kappa_H = 1.0;
  double zeta = 1.0;         // (mu/L)^2 (M1/M2)^2, in (0,1]
  double gamma = 0.0;        // 1 - M1/M2, in [0,1)
  double alpha_tilde = 0.0;  // (M2^2 L^2 / (M1 mu)) alpha
  double beta = 0.0;         // 16 B
  double c = 0.0;            // 0.162 (1-sigma^2) zeta alpha~ + 2.01 beta

  static TheoryParams make(double alpha, double T, double B, double L, double mu, double sigma, double M1, double M2);
};

// Largest step size the rate theory admits.
double max_step_size(double L, double mu, double sigma, double M1, double M2);

struct GateCondition {
  bool pass = false;
  double bound = 0.0;   // the binding value
  double actual = 0.0;  // the configured value
};

// Parameter gate: alpha below the step bound, B below the batch bound
// (gamma = 0 relaxes it to 1/160), T above the period floor.
struct GateReport {
  GateCondition alpha;  // actual <= bound
  GateCondition B;      // actual <= bound
  GateCondition T;      // actual >= bound
  bool pass() const { return alpha.pass && B.pass && T.pass; }
};

GateReport check_parameter_gate(const TheoryParams& p);

// Period floor: smallest admissible snapshot period for these parameters.
double min_period(const TheoryParams& p);

// The 3x3 contraction system: per-epoch error recursion
//   u^{k+1} <= J u^k + Hmat u(snapshot), with weight vectors z (for the
//   spectral bound on J) and q (for the epoch contraction).
struct ContractionSystem {
  Eigen::Matrix3d J;
  Eigen::Matrix3d Hmat;
  Eigen::Vector3d z;
  Eigen::Vector3d q;
};

ContractionSystem contraction_matrices(const TheoryParams& p);

// Weighted infinity norm max_i |a_i| / w_i.
double weighted_inf_norm(const Eigen::Vector3d& a, const Eigen::Vector3d& w);

// Numerical certificate for the linear-rate machinery. With gate-passing
// parameters all four checks must hold; a failure under a passing gate is a
// theory-implementation discrepancy and is reported with the violated entry.
struct RateCertificate {
  bool gate_pass = false;
  bool check_weighted_norm = false;  // (i)  J z <= (1 - zeta alpha~/2) z entrywise
  bool check_determinant = false;    // (ii) det(I-J) >= (1-sigma^2)^2 zeta alpha~ / 6
  bool check_neumann = false;        // (iii) (I-J)^-1 Hmat q <= 0.8 q entrywise
  bool check_epoch_factor = false;   // (iv) transient + 0.8 <= 0.9
  double rho_bound = 0.0;            // 1 - zeta alpha~/2
  double det_value = 0.0, det_bound = 0.0;
  double neumann_max_ratio = 0.0;
  double epoch_factor = 0.0;
  std::string violation;  // first violated check, empty when certified

  bool pass() const {
    return gate_pass && check_weighted_norm && check_determinant && check_neumann && check_epoch_factor;
  }
};

RateCertificate certify_rate(const TheoryParams& p);

// Error vector u = (consensus, scaled optimality gap, scaled tracking):
//   u1 = sum_i ||x_i - xbar||^2
//   u2 = (2n/L) (F(xbar) - F*)
//   u3 = ((1-sigma^2)/L^2) sum_i ||g_i - gbar||^2
struct ErrorVector {
  double consensus_err = 0.0;
  double opt_gap = 0.0;
  double tracking_err = 0.0;
  Eigen::Vector3d as_vec() const { return {consensus_err, opt_gap, tracking_err}; }
};

ErrorVector error_vector(const std::vector<Vec>& x, const std::vector<Vec>& g, const FiniteSumProblem& problem,
                         const ReferenceOptimum& ref, double sigma);

// Epoch-boundary contraction ratios of a per-iteration weighted-norm stream.
struct EpochRatio {
  int epoch = 0;       // ratio ||u^{(t+1)T}|| / ||u^{tT}||
  double ratio = 0.0;
  bool converged = false;  // 0/0 sentinel: both norms exactly zero
  bool flagged = false;    // exceeded the threshold
};

std::vector<EpochRatio> epoch_contraction(const std::vector<double>& u_norms, int T,
                                          double threshold = rate_constants::kEpochFactor);
std::vector<EpochRatio> epoch_contraction(const std::vector<ErrorVector>& u, int T, const Eigen::Vector3d& q,
                                          double threshold = rate_constants::kEpochFactor);

}  // namespace dsqn
