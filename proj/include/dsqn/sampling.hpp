#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dsqn/problems.hpp"
#include "dsqn/rng.hpp"
#include "dsqn/scalar.hpp"

namespace dsqn {

// Non-sampling rate B = max_i (m_i - b_i) / ((m_i - 1) b_i); zero exactly
// when every node runs full batches (the deterministic limit).
double non_sampling_rate(const std::vector<int>& m, const std::vector<int>& b);

// Uniform without-replacement batch via partial Fisher-Yates; indices are
// returned in draw order. b == m returns a permutation of all indices.
std::vector<int> draw_batch(Rng& rng, int m, int b);

// Tracks fresh per-sample gradient evaluations per node (cache hits free).
struct GradEvalCounter {
  std::vector<long long> per_node;
  explicit GradEvalCounter(int n = 0) : per_node(n, 0) {}
  void add(int i, long long k) {
    if (i >= 0 && i < static_cast<int>(per_node.size())) per_node[i] += k;
  }
  long long total() const { return std::accumulate(per_node.begin(), per_node.end(), 0LL); }
};

// Per-node snapshot state for the variance-reduced gradient estimator:
// anchor point tau, its local full gradient, the cached per-sample gradients
// at tau (so a batch correction costs exactly b fresh evaluations), and the
// previous estimate. Version tags catch use of a stale cached gradient.
template <class S>
struct SvrgState {
  VecX<S> tau;
  VecX<S> full_grad_at_tau;
  VecX<S> last_v;
  std::vector<VecX<S>> sample_grads_at_tau;
  std::uint64_t tau_version = 0;
  std::uint64_t grad_version = 0;
};

// Recomputes the snapshot cache at x_new (m_i fresh evaluations).
template <class S>
void refresh_snapshot(const FiniteSumProblem& problem, int i, const VecX<S>& x_new, SvrgState<S>& st,
                      GradEvalCounter* counter = nullptr) {
  const int mi = problem.m(i);
  const int d = problem.d();
  st.tau = x_new;
  st.sample_grads_at_tau.resize(mi);
  VecX<S> acc = VecX<S>::Zero(d);
  for (int l = 0; l < mi; ++l) {
    problem.sample_gradient_into<S>(i, l, x_new, st.sample_grads_at_tau[l]);
    for (int c = 0; c < d; ++c) acc[c] += st.sample_grads_at_tau[l][c];
  }
  const S inv_m = S{1} / S(mi);
  for (int c = 0; c < d; ++c) acc[c] *= inv_m;
  st.full_grad_at_tau = std::move(acc);
  ++st.tau_version;
  st.grad_version = st.tau_version;
  if (counter) counter->add(i, mi);
}

// Snapshot schedule: replace tau with x_new exactly when (k+1) mod T == 0.
template <class S>
void advance_snapshot(const FiniteSumProblem& problem, int i, long k_plus_1, int T, const VecX<S>& x_new,
                      SvrgState<S>& st, GradEvalCounter* counter = nullptr) {
  if (k_plus_1 < 1) throw std::invalid_argument("advance_snapshot: iteration index must be >= 1");
  if (T <= 0) throw std::invalid_argument("advance_snapshot: period must be positive");
  if (k_plus_1 % T == 0) refresh_snapshot<S>(problem, i, x_new, st, counter);
}

// Variance-reduced estimate
//   v = (1/b) sum_{l in S} (grad f_{i,l}(x) - grad f_{i,l}(tau)) + grad f_i(tau);
// unbiased for the local full gradient, exact when x == tau or b == m.
// Throws std::logic_error if the cached snapshot gradient is stale.
template <class S>
VecX<S> svrg_gradient(const FiniteSumProblem& problem, int i, const VecX<S>& x, const SvrgState<S>& st,
                      const std::vector<int>& batch, GradEvalCounter* counter = nullptr) {
  if (st.tau_version == 0 || st.grad_version != st.tau_version)
    throw std::logic_error("svrg_gradient: snapshot gradient is stale for the current tau");
  const int d = problem.d();
  const int mi = problem.m(i);
  if (batch.empty() || static_cast<int>(batch.size()) > mi)
    throw std::invalid_argument("svrg_gradient: batch size out of range");
  VecX<S> corr = VecX<S>::Zero(d);
  VecX<S> fresh(d);
  for (int l : batch) {
    if (l < 0 || l >= mi) throw std::out_of_range("svrg_gradient: sample index out of range");
    problem.sample_gradient_into<S>(i, l, x, fresh);
    const VecX<S>& cached = st.sample_grads_at_tau[l];
    for (int c = 0; c < d; ++c) corr[c] += fresh[c] - cached[c];
  }
  if (counter) counter->add(i, static_cast<long long>(batch.size()));
  const S inv_b = S{1} / S(static_cast<int>(batch.size()));
  VecX<S> v(d);
  for (int c = 0; c < d; ++c) v[c] = corr[c] * inv_b + st.full_grad_at_tau[c];
  return v;
}

}  // namespace dsqn
