#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dsqn/analysis.hpp"
#include "dsqn/hessian.hpp"
#include "dsqn/metrics.hpp"
#include "dsqn/problems.hpp"
#include "dsqn/rng.hpp"
#include "dsqn/sampling.hpp"
#include "dsqn/scalar.hpp"
#include "dsqn/topology.hpp"

namespace dsqn {

enum class InitMode { zeros, consensus_random, per_node_random };
InitMode parse_init_mode(const std::string& name);
std::string init_mode_name(InitMode mode);

enum class Precision { fp64, fp128 };
Precision parse_precision(const std::string& name);
std::string precision_name(Precision p);

struct EngineConfig {
  double alpha = 0.01;
  int T = 100;    // snapshot period
  int b = 0;      // per-node batch size; 0 means full batch (b_i = m_i)
  HessianConfig hessian;
  InitMode init = InitMode::zeros;
  double init_scale = 1.0;
  std::vector<Vec> x0;  // explicit warm start (one vector per node); overrides init when non-empty
  long max_iters = 1000;
  double target_gap = 0.0;        // stop once gap AND consensus reach targets; 0 disables
  double target_consensus = 0.0;  // 0 means the gap target alone decides
  std::uint64_t seed = 1;
  std::uint64_t replication = 0;  // distinct RNG stream per repeated run
  int threads = 1;
  bool record_iterates = false;   // keep per-iteration x/g state (doubles)
  bool verify_curvature = false;  // assert every H stays within the strategy's bounds
  double divergence_norm = 1e12;  // |x| beyond this (or non-finite) aborts
};

enum class RunStatus { completed, target_reached, diverged };
std::string run_status_name(RunStatus s);

struct RunResult {
  RunStatus status = RunStatus::completed;
  long iterations = 0;  // update steps performed; metrics has iterations+1 rows
  std::vector<MetricsRecord> metrics;
  double final_gap = 0.0;
  double final_consensus = 0.0;
  // Largest value over all k of ||gbar - vbar|| / (1 + ||vbar||), measured in
  // the working precision: the tracker mean must follow the estimator mean.
  double max_tracking_residual = 0.0;
  std::vector<Vec> x_final, g_final;
  std::vector<long long> grad_evals_per_node;
  long long grad_evals_total = 0;
  // Populated only when record_iterates is set; entry k holds the state
  // after k update steps (entry 0 is the initial state).
  std::vector<std::vector<Vec>> x_history, g_history;
};

namespace detail {

// Static-chunk parallel loop; result is independent of the thread count
// because every index writes only its own slots.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  for (int w = 0; w < workers; ++w) {
    const int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline std::uint64_t init_stream_tag() { return 0x696E6974ULL; }  // distinct from node indices

template <class S>
double max_abs_entry(const VecX<S>& v) {
  double best = 0.0;
  for (Eigen::Index c = 0; c < v.size(); ++c) {
    const double a = std::fabs(to_double(v[c]));
    if (!(a <= best)) best = a;  // NaN propagates to the caller's check
  }
  return best;
}

}  // namespace detail

// One simulation of the decentralized variance-reduced quasi-Newton update.
// Per iteration each node mixes iterates with its neighbors' (dense ordered
// sum over all j, zero weights included, so the arithmetic is reproducible
// and thread-count independent), steps along d = H g, refreshes its snapshot
// on schedule, draws a fresh batch for the variance-reduced estimate v, and
// mixes the tracker g with the v-increment. Full-batch nodes (b == m) take
// the local full gradient through the same oracle the baselines use, so the
// identity-H full-batch configuration reproduces gradient tracking bit for
// bit while still paying the scheduled snapshot refreshes.
template <class S>
RunResult run_engine(const FiniteSumProblem& problem, const MixingMatrix& mix, const EngineConfig& cfg,
                     const ReferenceOptimum& ref) {
  const int n = problem.n();
  const int d = problem.d();
  if (mix.n() != n) throw std::invalid_argument("run_engine: mixing matrix size does not match node count");
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument("run_engine: step size must be positive");
  if (cfg.T < 1) throw std::invalid_argument("run_engine: snapshot period must be >= 1");
  if (cfg.max_iters < 0) throw std::invalid_argument("run_engine: negative iteration budget");

  std::vector<int> batch_sizes(n);
  for (int i = 0; i < n; ++i) {
    const int mi = problem.m(i);
    const int bi = (cfg.b == 0) ? mi : cfg.b;
    if (bi < 1 || bi > mi) throw std::invalid_argument("run_engine: batch size must lie in [1, m_i] for every node");
    batch_sizes[i] = bi;
  }

  // Per-node strategies, RNG streams, and snapshot state.
  std::vector<std::unique_ptr<HessianStrategy>> strategies;
  strategies.reserve(n);
  for (int i = 0; i < n; ++i) strategies.push_back(make_hessian_strategy(cfg.hessian));
  std::vector<Rng> rng;
  rng.reserve(n);
  for (int i = 0; i < n; ++i) rng.emplace_back(mix_seed(cfg.seed, static_cast<std::uint64_t>(i), cfg.replication));
  std::vector<SvrgState<S>> snap(n);
  GradEvalCounter evals(n);

  // Weight vector for the analysis norm, from the strategy-certified
  // curvature bounds and the schedule's non-sampling rate.
  const double B = non_sampling_rate(problem.m_all(), batch_sizes);
  const TheoryParams theory = TheoryParams::make(cfg.alpha, static_cast<double>(cfg.T), B, problem.L(), problem.mu(),
                                                 mix.sigma, strategies.front()->M1(), strategies.front()->M2());
  const Eigen::Vector3d q = contraction_matrices(theory).q;

  GapEvaluator<S> gap_eval(problem, ref);

  // Initial iterates.
  std::vector<VecX<S>> xs(n), gs(n), vs(n), ds(n);
  if (!cfg.x0.empty()) {
    if (static_cast<int>(cfg.x0.size()) != n)
      throw std::invalid_argument("run_engine: explicit warm start must give one vector per node");
    for (int i = 0; i < n; ++i) {
      if (cfg.x0[i].size() != d) throw std::invalid_argument("run_engine: warm-start dimension mismatch");
      xs[i] = promote<S>(cfg.x0[i]);
    }
  } else {
    Vec shared = Vec::Zero(d);
    if (cfg.init == InitMode::consensus_random) {
      Rng init_rng(mix_seed(cfg.seed, detail::init_stream_tag(), cfg.replication));
      for (int c = 0; c < d; ++c) shared[c] = cfg.init_scale * init_rng.normal();
    }
    for (int i = 0; i < n; ++i) {
      Vec x0 = shared;
      if (cfg.init == InitMode::per_node_random) {
        Rng init_rng(mix_seed(cfg.seed, detail::init_stream_tag() + static_cast<std::uint64_t>(i), cfg.replication));
        for (int c = 0; c < d; ++c) x0[c] = cfg.init_scale * init_rng.normal();
      }
      xs[i] = promote<S>(x0);
    }
  }
  const auto check_curvature = [&](const HessianOperator& H, int i) {
    if (!cfg.verify_curvature) return;
    if (!verify_curvature_bounds(H.materialize(d), strategies[i]->M1(), strategies[i]->M2(), 1e-9))
      throw std::logic_error("curvature operator left the strategy's certified bounds");
  };

  for (int i = 0; i < n; ++i) {
    refresh_snapshot<S>(problem, i, xs[i], snap[i], &evals);  // tau^0 = x^0, m_i evaluations
    vs[i] = snap[i].full_grad_at_tau;                         // v^0 = local full gradient at x^0
    gs[i] = vs[i];                                            // g^0 = v^0
    const HessianOperator H0 = strategies[i]->update(demote(xs[i]), demote(gs[i]));
    check_curvature(H0, i);
    ds[i].resize(d);
    H0.apply(gs[i], ds[i]);
  }

  RunResult res;
  res.metrics.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);

  const double L = problem.L();
  const double inv_n = 1.0 / static_cast<double>(n);
  const S alpha_s{cfg.alpha};

  VecX<S> xbar(d), gbar(d), vbar(d);
  const auto record_row = [&](long k) -> MetricsRecord {
    xbar.setZero();
    gbar.setZero();
    vbar.setZero();
    for (int i = 0; i < n; ++i) {
      xbar += xs[i];
      gbar += gs[i];
      vbar += vs[i];
    }
    const S inv_n_s{inv_n};
    xbar *= inv_n_s;
    gbar *= inv_n_s;
    vbar *= inv_n_s;

    MetricsRecord row;
    row.k = k;
    S cons{0}, track{0}, resid{0}, vnorm{0};
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        const S dx = xs[i][c] - xbar[c];
        const S dg = gs[i][c] - gbar[c];
        cons += dx * dx;
        track += dg * dg;
      }
    }
    for (int c = 0; c < d; ++c) {
      const S dr = gbar[c] - vbar[c];
      resid += dr * dr;
      vnorm += vbar[c] * vbar[c];
    }
    using std::sqrt;
    const double resid_rel = to_double(sqrt(resid)) / (1.0 + to_double(sqrt(vnorm)));
    if (resid_rel > res.max_tracking_residual) res.max_tracking_residual = resid_rel;

    row.consensus_err = to_double(cons);
    row.opt_gap_raw = to_double(gap_eval(xbar));
    row.opt_gap_scaled = 2.0 * n / L * row.opt_gap_raw;
    row.tracking_err = (1.0 - mix.sigma * mix.sigma) / (L * L) * to_double(track);
    row.u_inf_q = weighted_inf_norm(Eigen::Vector3d(row.consensus_err, row.opt_gap_scaled, row.tracking_err), q);
    row.grad_evals_cumulative = evals.total();
    return row;
  };

  const auto snapshot_state = [&]() {
    if (!cfg.record_iterates) return;
    std::vector<Vec> xrow(n), grow(n);
    for (int i = 0; i < n; ++i) {
      xrow[i] = demote(xs[i]);
      grow[i] = demote(gs[i]);
    }
    res.x_history.push_back(std::move(xrow));
    res.g_history.push_back(std::move(grow));
  };

  MetricsRecord row0 = record_row(0);
  res.metrics.push_back(row0);
  snapshot_state();

  res.status = RunStatus::completed;
  const bool use_targets = cfg.target_gap > 0.0;
  if (use_targets && row0.opt_gap_raw <= cfg.target_gap &&
      (cfg.target_consensus <= 0.0 || row0.consensus_err <= cfg.target_consensus)) {
    res.status = RunStatus::target_reached;
  }

  std::vector<VecX<S>> x_new(n), g_new(n), v_new(n);
  for (int i = 0; i < n; ++i) {
    x_new[i].resize(d);
    g_new[i].resize(d);
    v_new[i].resize(d);
  }

  long k = 0;
  while (k < cfg.max_iters && res.status == RunStatus::completed) {
    const long k_next = k + 1;
    detail::parallel_for(n, cfg.threads, [&](int i) {
      // Mix iterates over every j in index order (zero weights included),
      // then step along the curvature-scaled direction.
      for (int c = 0; c < d; ++c) {
        S acc{0};
        for (int j = 0; j < n; ++j) acc += S(mix.W(i, j)) * xs[j][c];
        x_new[i][c] = acc - alpha_s * ds[i][c];
      }

      advance_snapshot<S>(problem, i, k_next, cfg.T, x_new[i], snap[i], &evals);

      if (batch_sizes[i] == problem.m(i)) {
        problem.local_full_gradient_into<S>(i, x_new[i], v_new[i]);
        evals.add(i, problem.m(i));
      } else {
        const std::vector<int> batch = draw_batch(rng[i], problem.m(i), batch_sizes[i]);
        v_new[i] = svrg_gradient<S>(problem, i, x_new[i], snap[i], batch, &evals);
      }

      // Tracker mixing plus the estimator increment, same summation shape.
      for (int c = 0; c < d; ++c) {
        S acc{0};
        for (int j = 0; j < n; ++j) acc += S(mix.W(i, j)) * gs[j][c];
        g_new[i][c] = acc + v_new[i][c] - vs[i][c];
      }

      const HessianOperator H = strategies[i]->update(demote(x_new[i]), demote(g_new[i]));
      check_curvature(H, i);
      H.apply(g_new[i], ds[i]);
    });

    xs.swap(x_new);
    gs.swap(g_new);
    vs.swap(v_new);
    k = k_next;

    MetricsRecord row = record_row(k);
    res.metrics.push_back(row);
    snapshot_state();

    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = detail::max_abs_entry(xs[i]);
      if (!(a <= worst)) worst = a;
    }
    if (!(worst <= cfg.divergence_norm)) {
      res.status = RunStatus::diverged;
    } else if (use_targets && row.opt_gap_raw <= cfg.target_gap &&
               (cfg.target_consensus <= 0.0 || row.consensus_err <= cfg.target_consensus)) {
      res.status = RunStatus::target_reached;
    }
  }

  res.iterations = k;
  res.final_gap = res.metrics.back().opt_gap_raw;
  res.final_consensus = res.metrics.back().consensus_err;
  res.x_final.resize(n);
  res.g_final.resize(n);
  for (int i = 0; i < n; ++i) {
    res.x_final[i] = demote(xs[i]);
    res.g_final[i] = demote(gs[i]);
  }
  res.grad_evals_per_node = evals.per_node;
  res.grad_evals_total = evals.total();
  return res;
}

// Precision dispatcher used by the CLI and tests.
RunResult run_engine_precision(const FiniteSumProblem& problem, const MixingMatrix& mix, const EngineConfig& cfg,
                               const ReferenceOptimum& ref, Precision precision);

}  // namespace dsqn
