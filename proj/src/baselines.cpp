#include "dsqn/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "dsqn/analysis.hpp"
#include "dsqn/metrics.hpp"
#include "dsqn/rng.hpp"

namespace dsqn {

namespace {

std::vector<Vec> initial_iterates(const FiniteSumProblem& problem, const BaselineConfig& cfg) {
  const int n = problem.n();
  const int d = problem.d();
  std::vector<Vec> xs(n);
  if (!cfg.x0.empty()) {
    if (static_cast<int>(cfg.x0.size()) != n)
      throw std::invalid_argument("baseline warm start must give one vector per node");
    for (int i = 0; i < n; ++i) {
      if (cfg.x0[i].size() != d) throw std::invalid_argument("baseline warm-start dimension mismatch");
      xs[i] = cfg.x0[i];
    }
    return xs;
  }
  Vec shared = Vec::Zero(d);
  if (cfg.init == InitMode::consensus_random) {
    Rng init_rng(mix_seed(cfg.seed, detail::init_stream_tag(), cfg.replication));
    for (int c = 0; c < d; ++c) shared[c] = cfg.init_scale * init_rng.normal();
  }
  for (int i = 0; i < n; ++i) {
    xs[i] = shared;
    if (cfg.init == InitMode::per_node_random) {
      Rng init_rng(mix_seed(cfg.seed, detail::init_stream_tag() + static_cast<std::uint64_t>(i), cfg.replication));
      for (int c = 0; c < d; ++c) xs[i][c] = cfg.init_scale * init_rng.normal();
    }
  }
  return xs;
}

// Shared telemetry for the two decentralized baselines; `grads` is whatever
// per-node gradient-like quantity the method carries (tracker or raw local
// gradient), reported in the tracker columns.
struct BaselineRecorder {
  const FiniteSumProblem& problem;
  const MixingMatrix& mix;
  GapEvaluator<double> gap_eval;
  Eigen::Vector3d q;
  RunResult* res;

  BaselineRecorder(const FiniteSumProblem& p, const MixingMatrix& m, const ReferenceOptimum& ref, double alpha,
                   RunResult* r)
      : problem(p), mix(m), gap_eval(p, ref), res(r) {
    // The weight vector q does not depend on the step size, so a zero step
    // (stationary stream) can borrow any positive placeholder here.
    const double alpha_q = (alpha > 0.0) ? alpha : 1.0;
    const TheoryParams theory =
        TheoryParams::make(alpha_q, 1.0, 0.0, p.L(), p.mu(), m.sigma, 1.0, 1.0);
    q = contraction_matrices(theory).q;
  }

  MetricsRecord record(long k, const std::vector<Vec>& xs, const std::vector<Vec>& grads, long long evals) {
    const int n = problem.n();
    const int d = problem.d();
    Vec xbar = Vec::Zero(d), gbar = Vec::Zero(d);
    for (int i = 0; i < n; ++i) {
      xbar += xs[i];
      gbar += grads[i];
    }
    xbar /= n;
    gbar /= n;
    MetricsRecord row;
    row.k = k;
    for (int i = 0; i < n; ++i) {
      row.consensus_err += (xs[i] - xbar).squaredNorm();
      row.tracking_err += (grads[i] - gbar).squaredNorm();
    }
    const double L = problem.L();
    row.opt_gap_raw = gap_eval(xbar);
    row.opt_gap_scaled = 2.0 * n / L * row.opt_gap_raw;
    row.tracking_err *= (1.0 - mix.sigma * mix.sigma) / (L * L);
    row.u_inf_q = weighted_inf_norm(Eigen::Vector3d(row.consensus_err, row.opt_gap_scaled, row.tracking_err), q);
    row.grad_evals_cumulative = evals;
    res->metrics.push_back(row);
    return row;
  }
};

bool targets_met(const BaselineConfig& cfg, const MetricsRecord& row) {
  return cfg.target_gap > 0.0 && row.opt_gap_raw <= cfg.target_gap &&
         (cfg.target_consensus <= 0.0 || row.consensus_err <= cfg.target_consensus);
}

bool state_diverged(const std::vector<Vec>& xs, double bound) {
  double worst = 0.0;
  for (const Vec& x : xs) {
    const double a = x.cwiseAbs().maxCoeff();
    if (!(a <= worst)) worst = a;
  }
  return !(worst <= bound);
}

void finalize_result(RunResult& res, long k, const std::vector<Vec>& xs, const std::vector<Vec>& grads,
                     const GradEvalCounter& evals) {
  res.iterations = k;
  res.final_gap = res.metrics.back().opt_gap_raw;
  res.final_consensus = res.metrics.back().consensus_err;
  res.x_final = xs;
  res.g_final = grads;
  res.grad_evals_per_node = evals.per_node;
  res.grad_evals_total = evals.total();
}

}  // namespace

RunResult run_dgd(const FiniteSumProblem& problem, const MixingMatrix& mix, const BaselineConfig& cfg,
                  const ReferenceOptimum& ref) {
  const int n = problem.n();
  const int d = problem.d();
  if (mix.n() != n) throw std::invalid_argument("run_dgd: mixing matrix size does not match node count");
  if (cfg.alpha < 0.0) throw std::invalid_argument("run_dgd: step size must be nonnegative");

  std::vector<Vec> xs = initial_iterates(problem, cfg);
  std::vector<Vec> grads(n);
  GradEvalCounter evals(n);
  for (int i = 0; i < n; ++i) {
    grads[i] = problem.local_full_gradient(i, xs[i]);
    evals.add(i, problem.m(i));
  }

  RunResult res;
  BaselineRecorder rec(problem, mix, ref, cfg.alpha, &res);
  MetricsRecord row = rec.record(0, xs, grads, evals.total());
  if (cfg.record_iterates) {
    res.x_history.push_back(xs);
    res.g_history.push_back(grads);
  }
  res.status = targets_met(cfg, row) ? RunStatus::target_reached : RunStatus::completed;

  std::vector<Vec> x_new(n, Vec(d));
  long k = 0;
  while (k < cfg.max_iters && res.status == RunStatus::completed) {
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += mix.W(i, j) * xs[j][c];
        x_new[i][c] = acc - cfg.alpha * grads[i][c];
      }
    }
    xs.swap(x_new);
    ++k;
    for (int i = 0; i < n; ++i) {
      grads[i] = problem.local_full_gradient(i, xs[i]);
      evals.add(i, problem.m(i));
    }
    row = rec.record(k, xs, grads, evals.total());
    if (cfg.record_iterates) {
      res.x_history.push_back(xs);
      res.g_history.push_back(grads);
    }
    if (state_diverged(xs, cfg.divergence_norm)) {
      res.status = RunStatus::diverged;
    } else if (targets_met(cfg, row)) {
      res.status = RunStatus::target_reached;
    }
  }
  finalize_result(res, k, xs, grads, evals);
  return res;
}

RunResult run_gradient_tracking(const FiniteSumProblem& problem, const MixingMatrix& mix, const BaselineConfig& cfg,
                                const ReferenceOptimum& ref) {
  const int n = problem.n();
  const int d = problem.d();
  if (mix.n() != n) throw std::invalid_argument("run_gradient_tracking: mixing matrix size mismatch");
  if (cfg.alpha < 0.0) throw std::invalid_argument("run_gradient_tracking: step size must be nonnegative");

  std::vector<Vec> xs = initial_iterates(problem, cfg);
  std::vector<Vec> gs(n), vs(n);
  GradEvalCounter evals(n);
  for (int i = 0; i < n; ++i) {
    vs[i] = problem.local_full_gradient(i, xs[i]);
    gs[i] = vs[i];
    evals.add(i, problem.m(i));
  }

  RunResult res;
  BaselineRecorder rec(problem, mix, ref, cfg.alpha, &res);
  MetricsRecord row = rec.record(0, xs, gs, evals.total());
  if (cfg.record_iterates) {
    res.x_history.push_back(xs);
    res.g_history.push_back(gs);
  }
  res.status = targets_met(cfg, row) ? RunStatus::target_reached : RunStatus::completed;

  std::vector<Vec> x_new(n, Vec(d)), g_new(n, Vec(d)), v_new(n, Vec(d));
  long k = 0;
  while (k < cfg.max_iters && res.status == RunStatus::completed) {
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += mix.W(i, j) * xs[j][c];
        x_new[i][c] = acc - cfg.alpha * gs[i][c];
      }
      v_new[i] = problem.local_full_gradient(i, x_new[i]);
      evals.add(i, problem.m(i));
      for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += mix.W(i, j) * gs[j][c];
        g_new[i][c] = acc + v_new[i][c] - vs[i][c];
      }
    }
    xs.swap(x_new);
    gs.swap(g_new);
    vs.swap(v_new);
    ++k;
    row = rec.record(k, xs, gs, evals.total());
    if (cfg.record_iterates) {
      res.x_history.push_back(xs);
      res.g_history.push_back(gs);
    }
    if (state_diverged(xs, cfg.divergence_norm)) {
      res.status = RunStatus::diverged;
    } else if (targets_met(cfg, row)) {
      res.status = RunStatus::target_reached;
    }
  }
  finalize_result(res, k, xs, gs, evals);
  return res;
}

}  // namespace dsqn
