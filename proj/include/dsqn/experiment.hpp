#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dsqn/analysis.hpp"
#include "dsqn/config.hpp"
#include "dsqn/engine.hpp"
#include "dsqn/problems.hpp"
#include "dsqn/topology.hpp"

namespace dsqn {

// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitGateFailure = 3,
  kExitDivergence = 4,
};

// Everything resolved from a parsed config: the synthesized problem, the
// mixing matrix, auto-resolved step size and period, the analysis parameters,
// and the gate/certificate verdicts.
struct AssembledExperiment {
  FiniteSumProblem problem;
  Graph graph;
  MixingMatrix mix;
  ReferenceOptimum ref;  // empty when assembled without a reference solve
  bool has_reference = false;
  EngineConfig engine;
  Precision precision = Precision::fp64;
  double B = 0.0;
  TheoryParams theory;
  GateReport gate;
  RateCertificate certificate;
};

// Builds the experiment; auto step-size/period resolution happens here,
// before gating. need_reference=false skips the (possibly iterative)
// reference solve for analysis-only commands.
AssembledExperiment assemble(const ExperimentConfig& cfg, bool need_reference = true);

// Output directory: DSQN_OUTPUT_ROOT environment variable (when set)
// prefixes the config's out_dir.
std::string resolve_output_dir(const std::string& out_dir);

// `run`: executes the configured run (replicated over consecutive seeds),
// writes metrics CSV(s), certificate.json, and run_meta.json into the output
// directory. Returns an ExitCode.
int run_experiment(const ExperimentConfig& cfg);

// `compare`: runs the listed methods on the shared instance and writes
// per-method metric files plus a combined evaluations-vs-gap table.
// Methods: framework, gt_svrg, dgd, gradient_tracking.
int run_compare(const ExperimentConfig& cfg, const std::vector<std::string>& methods);

// `certify`: analysis only — no simulation. Either from a config (resolving
// alpha/T exactly as `run` would) or from an explicit parameter set.
struct CertifyParams {
  double L = 1.0, mu = 1.0, sigma = 0.0;
  double M1 = 1.0, M2 = 1.0;
  double B = 0.0;
  bool alpha_auto = true;
  double alpha = 0.0;
  bool T_auto = true;
  double T = 0.0;  // real-valued here; auto uses the exact period floor
};

int run_certify(const CertifyParams& params, std::ostream& os);
int run_certify(const ExperimentConfig& cfg, std::ostream& os);

// `validate`: builds topology and problem, prints their validation reports.
int run_validate(const ExperimentConfig& cfg, std::ostream& os);

}  // namespace dsqn
