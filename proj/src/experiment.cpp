#include "dsqn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "dsqn/baselines.hpp"
#include "dsqn/metrics.hpp"

namespace dsqn {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json gate_json(const GateReport& g) {
  return json{
      {"pass", g.pass()},
      {"step_size", {{"pass", g.alpha.pass}, {"bound", g.alpha.bound}, {"actual", g.alpha.actual}}},
      {"non_sampling_rate", {{"pass", g.B.pass}, {"bound", g.B.bound}, {"actual", g.B.actual}}},
      {"snapshot_period", {{"pass", g.T.pass}, {"bound", g.T.bound}, {"actual", g.T.actual}}},
  };
}

json certificate_json(const RateCertificate& c) {
  return json{
      {"pass", c.pass()},
      {"gate_pass", c.gate_pass},
      {"weighted_norm_contraction", {{"pass", c.check_weighted_norm}, {"rho_bound", c.rho_bound}}},
      {"determinant_bound", {{"pass", c.check_determinant}, {"value", c.det_value}, {"bound", c.det_bound}}},
      {"neumann_bound",
       {{"pass", c.check_neumann}, {"max_ratio", c.neumann_max_ratio}, {"bound", rate_constants::kNeumannBound}}},
      {"epoch_factor",
       {{"pass", c.check_epoch_factor}, {"value", c.epoch_factor}, {"bound", rate_constants::kEpochFactor}}},
      {"violation", c.violation},
  };
}

json theory_json(const TheoryParams& p) {
  return json{
      {"alpha", p.alpha}, {"T", p.T},         {"B", p.B},
      {"L", p.L},         {"mu", p.mu},       {"sigma", p.sigma},
      {"M1", p.M1},       {"M2", p.M2},       {"kappa_F", p.kappa_F},
      {"kappa_H", p.kappa_H}, {"zeta", p.zeta}, {"gamma", p.gamma},
      {"alpha_tilde", p.alpha_tilde}, {"beta", p.beta}, {"c", p.c},
  };
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

std::string version_string() {
#ifdef DSQN_VERSION
  return DSQN_VERSION;
#else
  return "unknown";
#endif
}

BaselineConfig baseline_from(const EngineConfig& e) {
  BaselineConfig b;
  b.alpha = e.alpha;
  b.max_iters = e.max_iters;
  b.init = e.init;
  b.init_scale = e.init_scale;
  b.x0 = e.x0;
  b.seed = e.seed;
  b.replication = e.replication;
  b.target_gap = e.target_gap;
  b.target_consensus = e.target_consensus;
  b.divergence_norm = e.divergence_norm;
  return b;
}

}  // namespace

AssembledExperiment assemble(const ExperimentConfig& cfg, bool need_reference) {
  AssembledExperiment ax;
  ax.problem = FiniteSumProblem::synthesize(cfg.problem);

  if (cfg.problem.n == 1) {
    // Single node: trivial topology, W = [1]. The graph builders require
    // n >= 2, so construct directly.
    ax.graph.n = 1;
    ax.graph.connected = true;
  } else {
    GraphSpec gs = cfg.graph;
    gs.n = cfg.problem.n;
    ax.graph = make_graph(gs);
  }
  ax.mix = metropolis_weights(ax.graph);
  if (cfg.lazy_weights) ax.mix = lazy_variant(ax.mix, &ax.graph);

  if (need_reference) {
    ax.ref = solve_reference(ax.problem);
    ax.has_reference = true;
  }

  // Strategy-certified curvature bounds feed the analysis.
  const auto probe = make_hessian_strategy(cfg.hessian);
  const double M1 = probe->M1();
  const double M2 = probe->M2();
  const double L = ax.problem.L();
  const double mu = ax.problem.mu();

  std::vector<int> batch_sizes(ax.problem.n());
  for (int i = 0; i < ax.problem.n(); ++i) batch_sizes[i] = (cfg.b == 0) ? ax.problem.m(i) : cfg.b;
  ax.B = non_sampling_rate(ax.problem.m_all(), batch_sizes);

  const double alpha = cfg.alpha_auto ? max_step_size(L, mu, ax.mix.sigma, M1, M2) : cfg.alpha;
  int T = cfg.T;
  if (cfg.T_auto) {
    const TheoryParams probe_params = TheoryParams::make(alpha, 1.0, ax.B, L, mu, ax.mix.sigma, M1, M2);
    const double floor_T = min_period(probe_params);
    if (!(floor_T < 2e9)) throw std::runtime_error("auto snapshot period exceeds the integer range; raise alpha");
    T = std::max(1, static_cast<int>(std::ceil(floor_T)));
  }

  ax.theory = TheoryParams::make(alpha, static_cast<double>(T), ax.B, L, mu, ax.mix.sigma, M1, M2);
  ax.gate = check_parameter_gate(ax.theory);
  ax.certificate = certify_rate(ax.theory);

  ax.engine.alpha = alpha;
  ax.engine.T = T;
  ax.engine.b = cfg.b;
  ax.engine.hessian = cfg.hessian;
  ax.engine.init = cfg.init;
  ax.engine.init_scale = cfg.init_scale;
  ax.engine.max_iters = cfg.max_iters;
  ax.engine.target_gap = cfg.target_gap;
  ax.engine.target_consensus = cfg.target_consensus;
  ax.engine.seed = cfg.seed;
  ax.engine.threads = cfg.threads;
  ax.engine.verify_curvature = cfg.verify_curvature;
  ax.engine.divergence_norm = cfg.divergence_norm;
  ax.precision = cfg.precision;
  return ax;
}

std::string resolve_output_dir(const std::string& out_dir) {
  const char* root = std::getenv("DSQN_OUTPUT_ROOT");
  if (root == nullptr || *root == '\0') return out_dir;
  return (fs::path(root) / out_dir).string();
}

int run_experiment(const ExperimentConfig& cfg) {
  AssembledExperiment ax = assemble(cfg);

  const fs::path dir = resolve_output_dir(cfg.out_dir);
  fs::create_directories(dir);

  json meta;
  meta["version"] = version_string();
  meta["resolved"] = theory_json(ax.theory);
  meta["resolved"]["b"] = cfg.b == 0 ? json("full") : json(cfg.b);
  meta["resolved"]["hessian"] = cfg.hessian.strategy;
  meta["resolved"]["init"] = init_mode_name(cfg.init);
  meta["resolved"]["init_scale"] = cfg.init_scale;
  meta["resolved"]["precision"] = precision_name(cfg.precision);
  meta["resolved"]["weights"] = cfg.lazy_weights ? "lazy_metropolis" : "metropolis";
  meta["resolved"]["family"] = family_name(cfg.problem.family);
  meta["resolved"]["n"] = cfg.problem.n;
  meta["resolved"]["d"] = cfg.problem.d;
  meta["resolved"]["m"] = cfg.problem.m;
  meta["resolved"]["topology"] = graph_kind_name(cfg.graph.kind);
  meta["resolved"]["max_iters"] = cfg.max_iters;
  meta["resolved"]["replications"] = cfg.replications;
  meta["resolved"]["base_seed"] = cfg.seed;
  meta["resolved"]["strict_gate"] = cfg.strict_gate;
  meta["gate"] = gate_json(ax.gate);

  write_json_file(dir / "certificate.json", json{{"parameters", theory_json(ax.theory)},
                                                 {"gate", gate_json(ax.gate)},
                                                 {"certificate", certificate_json(ax.certificate)}});

  if (cfg.strict_gate && !ax.gate.pass()) {
    meta["status"] = "gate_failed";
    meta["exit_code"] = kExitGateFailure;
    write_json_file(dir / "run_meta.json", meta);
    return kExitGateFailure;
  }

  bool any_diverged = false;
  json reps = json::array();
  std::vector<std::vector<MetricsRecord>> all_metrics;
  std::vector<std::string> files;

  for (int r = 0; r < cfg.replications; ++r) {
    EngineConfig ecfg = ax.engine;
    ecfg.seed = cfg.seed + static_cast<std::uint64_t>(r);  // each replication owns its RNG lineage
    const RunResult res = run_engine_precision(ax.problem, ax.mix, ecfg, ax.ref, ax.precision);

    const std::string name =
        cfg.replications == 1 ? "metrics.csv" : "metrics_seed" + std::to_string(ecfg.seed) + ".csv";
    write_metrics_csv((dir / name).string(), res.metrics);
    files.push_back(name);
    all_metrics.push_back(res.metrics);

    reps.push_back(json{{"seed", ecfg.seed},
                        {"status", run_status_name(res.status)},
                        {"iterations", res.iterations},
                        {"final_gap", res.final_gap},
                        {"final_consensus", res.final_consensus},
                        {"max_tracking_residual", res.max_tracking_residual},
                        {"grad_evals_total", res.grad_evals_total}});
    if (res.status == RunStatus::diverged) any_diverged = true;
  }

  if (cfg.replications > 1) {
    // Replications that stopped at different iterations are averaged over the
    // common prefix.
    std::size_t min_len = all_metrics.front().size();
    for (const auto& mrows : all_metrics) min_len = std::min(min_len, mrows.size());
    std::vector<std::vector<MetricsRecord>> trimmed;
    trimmed.reserve(all_metrics.size());
    for (auto& mrows : all_metrics) trimmed.emplace_back(mrows.begin(), mrows.begin() + min_len);
    write_metrics_csv((dir / "metrics_mean.csv").string(), average_metrics(trimmed));
    files.push_back("metrics_mean.csv");
  }

  meta["replication_results"] = reps;
  meta["files"] = files;
  meta["status"] = any_diverged ? "diverged" : "ok";
  meta["exit_code"] = any_diverged ? kExitDivergence : kExitOk;
  write_json_file(dir / "run_meta.json", meta);
  return any_diverged ? kExitDivergence : kExitOk;
}

int run_compare(const ExperimentConfig& cfg, const std::vector<std::string>& methods) {
  if (methods.empty()) throw std::runtime_error("compare: method list is empty");
  for (const std::string& m : methods) {
    if (m != "framework" && m != "gt_svrg" && m != "dgd" && m != "gradient_tracking")
      throw std::runtime_error("compare: unknown method '" + m +
                               "' (expected framework, gt_svrg, dgd, or gradient_tracking)");
  }

  AssembledExperiment ax = assemble(cfg);
  if (cfg.strict_gate && !ax.gate.pass()) return kExitGateFailure;

  const fs::path dir = resolve_output_dir(cfg.out_dir);
  fs::create_directories(dir);

  bool any_diverged = false;
  std::vector<std::vector<MetricsRecord>> streams;
  json meta;
  meta["version"] = version_string();
  meta["methods"] = methods;
  json per_method = json::object();

  for (const std::string& m : methods) {
    RunResult res;
    if (m == "framework") {
      res = run_engine_precision(ax.problem, ax.mix, ax.engine, ax.ref, ax.precision);
    } else if (m == "gt_svrg") {
      EngineConfig ecfg = ax.engine;
      ecfg.hessian = HessianConfig{};  // identity curvature, same schedule and batches
      res = run_engine_precision(ax.problem, ax.mix, ecfg, ax.ref, ax.precision);
    } else if (m == "dgd") {
      res = run_dgd(ax.problem, ax.mix, baseline_from(ax.engine), ax.ref);
    } else {
      res = run_gradient_tracking(ax.problem, ax.mix, baseline_from(ax.engine), ax.ref);
    }
    write_metrics_csv((dir / ("metrics_" + m + ".csv")).string(), res.metrics);
    per_method[m] = json{{"status", run_status_name(res.status)},
                         {"iterations", res.iterations},
                         {"final_gap", res.final_gap},
                         {"final_consensus", res.final_consensus},
                         {"grad_evals_total", res.grad_evals_total}};
    if (res.status == RunStatus::diverged) any_diverged = true;
    streams.push_back(std::move(res.metrics));
  }

  // Combined table: per-method cumulative evaluations and optimality gap,
  // one row per iteration index, blank once a method has stopped.
  {
    std::ofstream out(dir / "compare.csv");
    if (!out) throw std::runtime_error("cannot open compare.csv for writing");
    out << "k";
    for (const std::string& m : methods) out << ',' << m << "_evals," << m << "_opt_gap";
    out << "\n";
    std::size_t rows = 0;
    for (const auto& s : streams) rows = std::max(rows, s.size());
    for (std::size_t r = 0; r < rows; ++r) {
      out << r;
      for (const auto& s : streams) {
        if (r < s.size()) {
          out << ',' << s[r].grad_evals_cumulative << ',' << format_double(s[r].opt_gap_raw);
        } else {
          out << ",,";
        }
      }
      out << "\n";
    }
  }

  meta["per_method"] = per_method;
  meta["status"] = any_diverged ? "diverged" : "ok";
  write_json_file(dir / "compare_meta.json", meta);
  return any_diverged ? kExitDivergence : kExitOk;
}

int run_certify(const CertifyParams& params, std::ostream& os) {
  const double alpha =
      params.alpha_auto ? max_step_size(params.L, params.mu, params.sigma, params.M1, params.M2) : params.alpha;
  double T = params.T;
  if (params.T_auto) {
    const TheoryParams probe = TheoryParams::make(alpha, 1.0, params.B, params.L, params.mu, params.sigma, params.M1,
                                                  params.M2);
    T = min_period(probe);  // exact real-valued floor
  }
  const TheoryParams p = TheoryParams::make(alpha, T, params.B, params.L, params.mu, params.sigma, params.M1,
                                            params.M2);
  const GateReport gate = check_parameter_gate(p);
  const RateCertificate cert = certify_rate(p);
  os << json{{"parameters", theory_json(p)}, {"gate", gate_json(gate)}, {"certificate", certificate_json(cert)}}
            .dump(2)
     << "\n";
  return cert.pass() ? kExitOk : kExitGateFailure;
}

int run_certify(const ExperimentConfig& cfg, std::ostream& os) {
  AssembledExperiment ax = assemble(cfg, /*need_reference=*/false);
  os << json{{"parameters", theory_json(ax.theory)},
             {"gate", gate_json(ax.gate)},
             {"certificate", certificate_json(ax.certificate)}}
            .dump(2)
     << "\n";
  return ax.certificate.pass() ? kExitOk : kExitGateFailure;
}

int run_validate(const ExperimentConfig& cfg, std::ostream& os) {
  AssembledExperiment ax = assemble(cfg, /*need_reference=*/false);
  const MixingValidationReport& rep = ax.mix.report;
  json j;
  j["topology"] = json{{"kind", graph_kind_name(cfg.graph.kind)},
                       {"n", ax.graph.n},
                       {"edges", ax.graph.edges.size()},
                       {"connected", ax.graph.connected},
                       {"sigma", ax.mix.sigma},
                       {"mixing", json{{"pass", rep.pass()},
                                       {"nonnegative", rep.nonnegative},
                                       {"symmetric", rep.symmetric},
                                       {"doubly_stochastic", rep.doubly_stochastic},
                                       {"support_pattern", rep.support_pattern},
                                       {"single_nullspace", rep.single_nullspace},
                                       {"detail", rep.detail}}}};
  j["problem"] = json{{"family", family_name(ax.problem.family())},
                      {"n", ax.problem.n()},
                      {"d", ax.problem.d()},
                      {"m", ax.problem.m_all()},
                      {"L", ax.problem.L()},
                      {"mu", ax.problem.mu()},
                      {"convex_and_smooth", true}};  // synthesis validates; failures throw
  j["pass"] = rep.pass();
  os << j.dump(2) << "\n";
  return rep.pass() ? kExitOk : kExitConfigError;
}

}  // namespace dsqn
