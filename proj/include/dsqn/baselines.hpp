#pragma once

#include "dsqn/engine.hpp"
#include "dsqn/problems.hpp"
#include "dsqn/topology.hpp"

namespace dsqn {

// Comparison methods implemented independently of the main engine (no shared
// update code; only the problem oracles, the mixing matrix, and the summation
// conventions — dense ordered neighbor sums, step applied after the mix —
// are common, so full-batch identity-curvature runs are bit-comparable).
struct BaselineConfig {
  double alpha = 0.01;
  long max_iters = 1000;
  InitMode init = InitMode::zeros;
  double init_scale = 1.0;
  std::vector<Vec> x0;  // explicit warm start (one vector per node); overrides init when non-empty
  std::uint64_t seed = 1;
  std::uint64_t replication = 0;
  double target_gap = 0.0;        // stop once gap AND consensus reach targets; 0 disables
  double target_consensus = 0.0;
  bool record_iterates = false;
  double divergence_norm = 1e12;
};

// Decentralized gradient descent: each node mixes neighbors' iterates and
// steps along its own local full gradient. With a constant step it stalls at
// a heterogeneity-proportional plateau instead of reaching the optimum.
RunResult run_dgd(const FiniteSumProblem& problem, const MixingMatrix& mix, const BaselineConfig& cfg,
                  const ReferenceOptimum& ref);

// Gradient tracking with full local gradients: the tracker g mixes over the
// network and absorbs successive gradient differences.
RunResult run_gradient_tracking(const FiniteSumProblem& problem, const MixingMatrix& mix, const BaselineConfig& cfg,
                                const ReferenceOptimum& ref);

// Centralized gradient descent on the global objective, used to solve and to
// refine reference optima. Stops when ||grad F|| <= tol_grad.
template <class S>
struct DescentResult {
  VecX<S> x;
  S objective{0};
  double grad_norm = 0.0;
  long iterations = 0;
  bool converged = false;
};

template <class S>
DescentResult<S> centralized_descent(const FiniteSumProblem& problem, VecX<S> x, double step, double tol_grad,
                                     long budget) {
  using std::sqrt;
  DescentResult<S> res;
  const S step_s{step};
  VecX<S> grad(problem.d());
  for (long t = 0; t <= budget; ++t) {
    problem.global_gradient_s<S>(x, grad);
    S sq{0};
    for (Eigen::Index c = 0; c < grad.size(); ++c) sq += grad[c] * grad[c];
    res.grad_norm = to_double(sqrt(sq));
    res.iterations = t;
    if (res.grad_norm <= tol_grad) {
      res.converged = true;
      break;
    }
    if (!(res.grad_norm < 1e300)) break;  // divergence or NaN
    for (Eigen::Index c = 0; c < grad.size(); ++c) x[c] -= step_s * grad[c];
  }
  res.x = std::move(x);
  res.objective = problem.global_objective_s<S>(res.x);
  return res;
}

}  // namespace dsqn
