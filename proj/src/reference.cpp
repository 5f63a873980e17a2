#include <stdexcept>

#include "dsqn/baselines.hpp"
#include "dsqn/problems.hpp"
#include "dsqn/scalar.hpp"

namespace dsqn {

namespace {
constexpr long kDescentBudget = 200000;

template <class S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> promote_matrix(const Mat& A) {
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> out(A.rows(), A.cols());
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index c = 0; c < A.cols(); ++c) out(r, c) = S(A(r, c));
  return out;
}

template <class S>
constexpr double refine_tolerance() {
  return std::is_same_v<S, double> ? 1e-13 : 1e-30;
}
}  // namespace

ReferenceOptimum solve_reference(const FiniteSumProblem& problem) {
  ReferenceOptimum ref;
  if (problem.has_quadratic_structure()) {
    const Mat& A = problem.mean_hessian();
    const Vec& b = problem.mean_linear();
    Eigen::LLT<Mat> llt(A);
    if (llt.info() != Eigen::Success) throw std::runtime_error("reference solve: mean Hessian is not positive definite");
    Vec x = llt.solve(b);
    // One Newton polish pass absorbs the solve's rounding.
    for (int it = 0; it < 2; ++it) {
      const Vec grad = problem.global_gradient(x);
      x -= llt.solve(grad);
    }
    ref.x_star = x;
    ref.F_star = problem.global_objective(x);
    ref.grad_norm_at_star = problem.global_gradient(x).norm();
    return ref;
  }
  const double step = 2.0 / (problem.L() + problem.mu());
  DescentResult<double> res =
      centralized_descent<double>(problem, Vec::Zero(problem.d()), step, refine_tolerance<double>(), kDescentBudget);
  if (!res.converged)
    throw std::runtime_error("reference solve did not converge within the descent budget (gradient norm " +
                             std::to_string(res.grad_norm) + ")");
  ref.x_star = res.x;
  ref.F_star = res.objective;
  ref.grad_norm_at_star = res.grad_norm;
  return ref;
}

template <class S>
RefinedReference<S> refine_reference(const FiniteSumProblem& problem, const ReferenceOptimum& ref) {
  RefinedReference<S> out;
  if (problem.has_quadratic_structure()) {
    using MatS = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    const MatS A = promote_matrix<S>(problem.mean_hessian());
    const VecX<S> b = promote<S>(problem.mean_linear());
    Eigen::LLT<MatS> llt(A);
    if (llt.info() != Eigen::Success) throw std::runtime_error("reference refine: mean Hessian is not positive definite");
    VecX<S> x = llt.solve(b);
    VecX<S> grad(problem.d());
    for (int it = 0; it < 2; ++it) {
      problem.global_gradient_s<S>(x, grad);
      x -= llt.solve(grad);
    }
    out.x_star = std::move(x);
    out.F_star = problem.global_objective_s<S>(out.x_star);
    return out;
  }
  const double step = 2.0 / (problem.L() + problem.mu());
  DescentResult<S> res =
      centralized_descent<S>(problem, promote<S>(ref.x_star), step, refine_tolerance<S>(), kDescentBudget);
  if (!res.converged)
    throw std::runtime_error("reference refine did not converge within the descent budget (gradient norm " +
                             std::to_string(res.grad_norm) + ")");
  out.x_star = std::move(res.x);
  out.F_star = res.objective;
  return out;
}

template RefinedReference<double> refine_reference<double>(const FiniteSumProblem&, const ReferenceOptimum&);
template RefinedReference<float128> refine_reference<float128>(const FiniteSumProblem&, const ReferenceOptimum&);

template <class S>
GapEvaluator<S>::GapEvaluator(const FiniteSumProblem& problem, const ReferenceOptimum& ref)
    : problem_(&problem), refined_(refine_reference<S>(problem, ref)) {}

template <class S>
S GapEvaluator<S>::operator()(const VecX<S>& xbar) const {
  if (problem_->has_quadratic_structure()) {
    // Deviation form 0.5 (xbar - x*)' Abar (xbar - x*): nonnegative by
    // construction and free of the cancellation that the direct difference
    // of two nearly equal objective values would suffer.
    const Mat& A = problem_->mean_hessian();
    const VecX<S>& xs = refined_.x_star;
    S val{0};
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      const S dr = xbar[r] - xs[r];
      for (Eigen::Index c = 0; c < A.cols(); ++c) {
        const S dc = xbar[c] - xs[c];
        val += dr * S(A(r, c)) * dc;
      }
    }
    return S{0.5} * val;
  }
  return problem_->global_objective_s<S>(xbar) - refined_.F_star;
}

template class GapEvaluator<double>;
template class GapEvaluator<float128>;

}  // namespace dsqn
