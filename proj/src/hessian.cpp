#include "dsqn/hessian.hpp"

#include <stdexcept>

namespace dsqn {

Mat HessianOperator::materialize(int d) const {
  switch (kind) {
    case Kind::identity: return Mat::Identity(d, d);
    case Kind::scaled: return scale * Mat::Identity(d, d);
    case Kind::dense: return dense;
  }
  return Mat::Identity(d, d);
}

namespace {

void require_symmetric(const Mat& H, const char* who) {
  if (H.rows() != H.cols()) throw std::invalid_argument(std::string(who) + ": matrix must be square");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument(std::string(who) + ": matrix must be symmetric");
}

}  // namespace

Mat eigenvalue_clip(const Mat& Hcand, double M1, double M2) {
  if (!(0.0 < M1 && M1 <= M2)) throw std::invalid_argument("eigenvalue_clip: need 0 < M1 <= M2");
  require_symmetric(Hcand, "eigenvalue_clip");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Hcand + Hcand.transpose()));
  const Vec& ev = es.eigenvalues();
  if (ev.minCoeff() >= M1 && ev.maxCoeff() <= M2) return Hcand;  // already feasible: bit-identical
  Vec clipped = ev.cwiseMax(M1).cwiseMin(M2);
  Mat out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

bool verify_curvature_bounds(const Mat& H, double M1, double M2, double tol) {
  if (H.rows() != H.cols() || H.rows() == 0) return false;
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()));
  return es.eigenvalues().minCoeff() >= M1 - tol && es.eigenvalues().maxCoeff() <= M2 + tol;
}

namespace {

class IdentityStrategy final : public HessianStrategy {
 public:
  IdentityStrategy() {
    m1_ = 1.0;
    m2_ = 1.0;
  }
  const std::string& name() const override {
    static const std::string n = "identity";
    return n;
  }
  HessianOperator update(const Vec&, const Vec&) override {
    HessianOperator op;
    op.kind = HessianOperator::Kind::identity;
    return op;
  }
};

class ScaledIdentityStrategy final : public HessianStrategy {
 public:
  explicit ScaledIdentityStrategy(double c, double lo, double hi) : c_(c) {
    if (!(lo <= c && c <= hi)) throw std::invalid_argument("scaled_identity: scale must lie in [M1, M2]");
    if (!(c > 0.0)) throw std::invalid_argument("scaled_identity: scale must be positive");
    m1_ = c;
    m2_ = c;
  }
  const std::string& name() const override {
    static const std::string n = "scaled_identity";
    return n;
  }
  HessianOperator update(const Vec&, const Vec&) override {
    HessianOperator op;
    op.kind = HessianOperator::Kind::scaled;
    op.scale = c_;
    return op;
  }

 private:
  double c_;
};

// Symmetric-rank-one secant candidate on the inverse-curvature estimate
// (solve H y = s for the latest displacement pair), clipped into bounds.
// The candidate is plumbing for bound-enforcing quasi-Newton plug-ins; the
// skip guard drops updates with tiny curvature denominators.
class ClippedSecantStrategy final : public HessianStrategy {
 public:
  ClippedSecantStrategy(double lo, double hi) {
    if (!(0.0 < lo && lo <= hi)) throw std::invalid_argument("clipped_secant: need 0 < M1 <= M2");
    m1_ = lo;
    m2_ = hi;
  }
  const std::string& name() const override {
    static const std::string n = "clipped_secant";
    return n;
  }
  HessianOperator update(const Vec& x, const Vec& g) override {
    const auto d = x.size();
    if (H_.rows() != d) H_ = eigenvalue_clip(Mat::Identity(d, d), m1_, m2_);
    if (has_prev_) {
      const Vec s = x - prev_x_;
      const Vec y = g - prev_g_;
      const Vec r = s - H_ * y;
      const double denom = r.dot(y);
      const double floor = 1e-8 * r.norm() * y.norm();
      if (std::abs(denom) > floor && floor > 0.0) {
        Mat cand = H_ + (r * r.transpose()) / denom;
        H_ = eigenvalue_clip(0.5 * (cand + cand.transpose()), m1_, m2_);
      }
    }
    prev_x_ = x;
    prev_g_ = g;
    has_prev_ = true;
    HessianOperator op;
    op.kind = HessianOperator::Kind::dense;
    op.dense = H_;
    return op;
  }

 private:
  Mat H_;
  Vec prev_x_, prev_g_;
  bool has_prev_ = false;
};

}  // namespace

std::unique_ptr<HessianStrategy> make_hessian_strategy(const HessianConfig& cfg) {
  if (cfg.strategy == "identity") return std::make_unique<IdentityStrategy>();
  if (cfg.strategy == "scaled_identity") return std::make_unique<ScaledIdentityStrategy>(cfg.scale, cfg.M1, cfg.M2);
  if (cfg.strategy == "clipped_secant") return std::make_unique<ClippedSecantStrategy>(cfg.M1, cfg.M2);
  throw std::invalid_argument("unknown hessian strategy: " + cfg.strategy);
}

}  // namespace dsqn
