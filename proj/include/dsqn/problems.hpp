#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsqn/scalar.hpp"

namespace dsqn {

enum class Family { quadratic, ridge_least_squares, l2_logistic };

Family parse_family(const std::string& name);
std::string family_name(Family f);

struct ProblemSpec {
  Family family = Family::quadratic;
  int n = 0;
  int d = 0;
  std::vector<int> m;  // samples per node
  std::uint64_t seed = 1;
  double regularizer = 0.1;  // l2 weight for least-squares / logistic
  double eig_min = 0.5;      // per-sample curvature range, quadratic family
  double eig_max = 2.0;      // eig_min == eig_max synthesizes exact scaled-identity curvature
  double hetero = 1.0;       // scale of per-node data shifts
};

// Finite-sum objective F(x) = (1/n) sum_i f_i(x), f_i = (1/m_i) sum_l f_{i,l}(x).
// Families:
//   quadratic:           f_{i,l}(x) = 0.5 x'A x - b'x + c,  A symmetric PSD
//   ridge_least_squares: f_{i,l}(x) = 0.5 (a'x - y)^2 + (reg/2)||x||^2
//   l2_logistic:         f_{i,l}(x) = log(1 + exp(-y a'x)) + (reg/2)||x||^2, y in {-1,+1}
// All per-sample costs are convex and L-smooth; F is mu-strongly convex.
class FiniteSumProblem {
 public:
  // quadratic storage (family == quadratic)
  std::vector<std::vector<Mat>> qA;
  std::vector<std::vector<Vec>> qb;
  std::vector<std::vector<double>> qc;
  // regression storage (least-squares / logistic): per-node m_i x d feature rows + targets
  std::vector<Mat> features;
  std::vector<Vec> targets;
  double regularizer = 0.0;

  Family family() const { return family_; }
  int n() const { return n_; }
  int d() const { return d_; }
  int m(int i) const { return m_.at(i); }
  const std::vector<int>& m_all() const { return m_; }
  double L() const { return L_; }
  double mu() const { return mu_; }

  // Assembled average Hessian/linear term of F; defined for the two
  // quadratic-structure families (throws for logistic).
  const Mat& mean_hessian() const;
  const Vec& mean_linear() const;
  bool has_quadratic_structure() const { return family_ != Family::l2_logistic; }

  double sample_cost(int i, int l, const Vec& x) const;
  Vec sample_gradient(int i, int l, const Vec& x) const;
  Vec local_full_gradient(int i, const Vec& x) const;
  double local_cost(int i, const Vec& x) const;
  double global_objective(const Vec& x) const;
  Vec global_gradient(const Vec& x) const;

  // Scalar-templated oracles used by the extended-precision engine path.
  template <class S>
  void sample_gradient_into(int i, int l, const VecX<S>& x, VecX<S>& out) const;
  template <class S>
  void local_full_gradient_into(int i, const VecX<S>& x, VecX<S>& out) const;
  template <class S>
  S global_objective_s(const VecX<S>& x) const;
  template <class S>
  void global_gradient_s(const VecX<S>& x, VecX<S>& out) const;

  void check_index(int i, int l) const;

  // Construction: synthesized from a spec, or assembled from explicit data.
  static FiniteSumProblem synthesize(const ProblemSpec& spec);
  static FiniteSumProblem from_quadratic(std::vector<std::vector<Mat>> A, std::vector<std::vector<Vec>> b,
                                         std::vector<std::vector<double>> c);
  static FiniteSumProblem from_regression(Family family, std::vector<Mat> features, std::vector<Vec> targets,
                                          double regularizer);

 private:
  Family family_ = Family::quadratic;
  int n_ = 0, d_ = 0;
  std::vector<int> m_;
  double L_ = 0.0, mu_ = 0.0;
  Mat mean_hessian_;
  Vec mean_linear_;

  void finalize();  // validates convexity, computes L, mu, assembled system
};

struct ReferenceOptimum {
  Vec x_star;
  double F_star = 0.0;
  double grad_norm_at_star = 0.0;
};

// High-accuracy minimizer of F: exact linear solve for quadratic-structure
// families, centralized descent to ||grad|| <= 1e-13 otherwise.
// Throws std::runtime_error on nonconvergence within the iteration budget.
ReferenceOptimum solve_reference(const FiniteSumProblem& problem);

// Reference refined in scalar type S (exact re-solve or descent polish), so
// optimality gaps remain meaningful below double rounding.
template <class S>
struct RefinedReference {
  VecX<S> x_star;
  S F_star{0};
};

template <class S>
RefinedReference<S> refine_reference(const FiniteSumProblem& problem, const ReferenceOptimum& ref);

// Cancellation-safe optimality gap F(xbar) - F*: deviation form
// 0.5 (xbar-x*)' Abar (xbar-x*) for quadratic-structure families, direct
// difference against the refined F* for logistic.
template <class S>
class GapEvaluator {
 public:
  GapEvaluator(const FiniteSumProblem& problem, const ReferenceOptimum& ref);
  S operator()(const VecX<S>& xbar) const;
  const VecX<S>& x_star() const { return refined_.x_star; }
  S F_star() const { return refined_.F_star; }

 private:
  const FiniteSumProblem* problem_;
  RefinedReference<S> refined_;
};

// Dataset round-trip: one row per sample under a self-describing header.
void export_dataset_csv(const FiniteSumProblem& problem, std::ostream& os);
FiniteSumProblem import_dataset_csv(std::istream& is);

// --- templated oracle definitions -----------------------------------------

template <class S>
void FiniteSumProblem::sample_gradient_into(int i, int l, const VecX<S>& x, VecX<S>& out) const {
  check_index(i, l);
  out.resize(d_);
  switch (family_) {
    case Family::quadratic: {
      const Mat& A = qA[i][l];
      const Vec& b = qb[i][l];
      for (int r = 0; r < d_; ++r) {
        S acc{0};
        for (int c = 0; c < d_; ++c) acc += S(A(r, c)) * x[c];
        out[r] = acc - S(b[r]);
      }
      break;
    }
    case Family::ridge_least_squares: {
      const auto a = features[i].row(l);
      S r{0};
      for (int c = 0; c < d_; ++c) r += S(a[c]) * x[c];
      r -= S(targets[i][l]);
      const S lam{regularizer};
      for (int c = 0; c < d_; ++c) out[c] = r * S(a[c]) + lam * x[c];
      break;
    }
    case Family::l2_logistic: {
      const auto a = features[i].row(l);
      const S y{targets[i][l]};
      S z{0};
      for (int c = 0; c < d_; ++c) z += S(a[c]) * x[c];
      z *= y;
      // s = sigmoid(-z), computed on the stable branch
      using std::exp;
      S s;
      if (z >= S{0}) {
        const S e = exp(-z);
        s = e / (S{1} + e);
      } else {
        s = S{1} / (S{1} + exp(z));
      }
      const S coef = -y * s;
      const S lam{regularizer};
      for (int c = 0; c < d_; ++c) out[c] = coef * S(a[c]) + lam * x[c];
      break;
    }
  }
}

template <class S>
void FiniteSumProblem::local_full_gradient_into(int i, const VecX<S>& x, VecX<S>& out) const {
  check_index(i, 0);
  out = VecX<S>::Zero(d_);
  VecX<S> tmp(d_);
  const int mi = m_[i];
  for (int l = 0; l < mi; ++l) {
    sample_gradient_into<S>(i, l, x, tmp);
    for (int c = 0; c < d_; ++c) out[c] += tmp[c];
  }
  const S inv_m = S{1} / S(mi);
  for (int c = 0; c < d_; ++c) out[c] *= inv_m;
}

template <class S>
S FiniteSumProblem::global_objective_s(const VecX<S>& x) const {
  using std::exp;
  S total{0};
  for (int i = 0; i < n_; ++i) {
    S local{0};
    const int mi = m_[i];
    for (int l = 0; l < mi; ++l) {
      switch (family_) {
        case Family::quadratic: {
          const Mat& A = qA[i][l];
          const Vec& b = qb[i][l];
          S quad{0}, lin{0};
          for (int r = 0; r < d_; ++r) {
            S acc{0};
            for (int c = 0; c < d_; ++c) acc += S(A(r, c)) * x[c];
            quad += x[r] * acc;
            lin += S(b[r]) * x[r];
          }
          local += S{0.5} * quad - lin + S(qc[i][l]);
          break;
        }
        case Family::ridge_least_squares: {
          const auto a = features[i].row(l);
          S r{0};
          for (int c = 0; c < d_; ++c) r += S(a[c]) * x[c];
          r -= S(targets[i][l]);
          S sq{0};
          for (int c = 0; c < d_; ++c) sq += x[c] * x[c];
          local += S{0.5} * r * r + S{0.5} * S(regularizer) * sq;
          break;
        }
        case Family::l2_logistic: {
          const auto a = features[i].row(l);
          S z{0};
          for (int c = 0; c < d_; ++c) z += S(a[c]) * x[c];
          z *= S(targets[i][l]);
          // softplus(-z) = log(1+exp(-z)) on the stable branch
          const S loss = (z >= S{0}) ? log1p_s(exp(-z)) : (-z + log1p_s(exp(z)));
          S sq{0};
          for (int c = 0; c < d_; ++c) sq += x[c] * x[c];
          local += loss + S{0.5} * S(regularizer) * sq;
          break;
        }
      }
    }
    total += local / S(mi);
  }
  return total / S(n_);
}

template <class S>
void FiniteSumProblem::global_gradient_s(const VecX<S>& x, VecX<S>& out) const {
  out = VecX<S>::Zero(d_);
  VecX<S> g(d_);
  for (int i = 0; i < n_; ++i) {
    local_full_gradient_into<S>(i, x, g);
    for (int c = 0; c < d_; ++c) out[c] += g[c];
  }
  const S inv_n = S{1} / S(n_);
  for (int c = 0; c < d_; ++c) out[c] *= inv_n;
}

}  // namespace dsqn
