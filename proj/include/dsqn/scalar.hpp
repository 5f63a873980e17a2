#pragma once

#include <cmath>

#include <Eigen/Dense>
#include <boost/multiprecision/float128.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace dsqn {

// Extended-precision scalar for runs whose metrics decay below what double
// can resolve (the gradient tracker integrates rounding error like a random
// walk, so long runs at large iterate scale stall near 1e-16 * scale * sqrt(K)).
using float128 = boost::multiprecision::float128;

template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double to_double(double v) { return v; }
inline double to_double(const float128& v) { return static_cast<double>(v); }

// log(1+u) shim: the library log1p overload for the quad type does not
// compile on this toolchain, and below u ~ 1e-34 the difference from
// log(1+u) is beneath quad rounding anyway.
inline double log1p_s(double u) { return std::log1p(u); }
inline float128 log1p_s(const float128& u) { return log(float128(1) + u); }

template <class S>
VecX<S> promote(const Vec& v) {
  VecX<S> out(v.size());
  for (Eigen::Index t = 0; t < v.size(); ++t) out[t] = S(v[t]);
  return out;
}

template <class S>
Vec demote(const VecX<S>& v) {
  Vec out(v.size());
  for (Eigen::Index t = 0; t < v.size(); ++t) out[t] = to_double(v[t]);
  return out;
}

}  // namespace dsqn
