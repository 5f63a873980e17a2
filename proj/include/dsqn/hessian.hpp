#pragma once

#include <memory>
#include <string>

#include "dsqn/scalar.hpp"

namespace dsqn {

// One node's current curvature operator H (the direction is d = H g).
// Identity and scaled forms apply exactly; the dense form holds a symmetric
// matrix whose eigenvalues were clipped into the strategy's bounds.
struct HessianOperator {
  enum class Kind { identity, scaled, dense };
  Kind kind = Kind::identity;
  double scale = 1.0;
  Mat dense;

  template <class S>
  void apply(const VecX<S>& g, VecX<S>& out) const {
    switch (kind) {
      case Kind::identity:
        out = g;  // exact copy: with the identity strategy, d == g bit for bit
        return;
      case Kind::scaled: {
        out.resize(g.size());
        const S s{scale};
        for (Eigen::Index c = 0; c < g.size(); ++c) out[c] = s * g[c];
        return;
      }
      case Kind::dense: {
        out.resize(g.size());
        for (Eigen::Index r = 0; r < dense.rows(); ++r) {
          S acc{0};
          for (Eigen::Index c = 0; c < dense.cols(); ++c) acc += S(dense(r, c)) * g[c];
          out[r] = acc;
        }
        return;
      }
    }
  }

  Mat materialize(int d) const;
};

struct HessianConfig {
  std::string strategy = "identity";  // identity | scaled_identity | clipped_secant
  double M1 = 0.1;                    // curvature bounds M1 I <= H <= M2 I
  double M2 = 10.0;
  double scale = 1.0;                 // scaled_identity coefficient, must lie in [M1, M2]
};

// Projects a symmetric candidate onto the set {M1 I <= H <= M2 I} by
// clamping its eigenvalues (eigenvectors preserved). Candidates already in
// bounds are returned unchanged. Throws on asymmetric input.
Mat eigenvalue_clip(const Mat& Hcand, double M1, double M2);

// True iff H is symmetric with eigenvalues in [M1 - tol, M2 + tol].
bool verify_curvature_bounds(const Mat& H, double M1, double M2, double tol = 1e-10);

// Per-node curvature strategy. update() sees only the owning node's current
// iterate and tracked gradient (locality contract) and must always return an
// operator within the reported bounds -- strategies project, never fail.
class HessianStrategy {
 public:
  virtual ~HessianStrategy() = default;
  virtual const std::string& name() const = 0;
  virtual HessianOperator update(const Vec& x, const Vec& g) = 0;
  // Tightest certified eigenvalue bounds for every operator this strategy
  // produces; the theory gate consumes these.
  double M1() const { return m1_; }
  double M2() const { return m2_; }

 protected:
  double m1_ = 1.0, m2_ = 1.0;
};

std::unique_ptr<HessianStrategy> make_hessian_strategy(const HessianConfig& cfg);

}  // namespace dsqn
