#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsqn/engine.hpp"
#include "dsqn/hessian.hpp"
#include "dsqn/problems.hpp"
#include "dsqn/topology.hpp"

namespace dsqn {

// Parsed experiment description. Grammar: INI-style sections [problem],
// [topology], [algorithm], [run]; `key = value` lines; '#' or ';' comments.
// Unknown sections or keys are rejected with the offending line number.
struct ExperimentConfig {
  // [problem] — synthesized finite-sum instance
  ProblemSpec problem;

  // [topology]
  GraphSpec graph;
  bool lazy_weights = false;  // W <- (I + W)/2 after Metropolis

  // [algorithm]
  bool alpha_auto = true;  // "auto" resolves to the step-size bound
  double alpha = 0.0;
  bool T_auto = true;  // "auto" resolves to the smallest admissible period
  int T = 0;
  int b = 0;  // 0 = full batch on every node ("full")
  HessianConfig hessian;
  InitMode init = InitMode::zeros;
  double init_scale = 1.0;

  // [run]
  long max_iters = 1000;
  double target_gap = 0.0;
  double target_consensus = 0.0;
  std::uint64_t seed = 1;
  int replications = 1;
  bool strict_gate = true;
  Precision precision = Precision::fp64;
  int threads = 1;
  bool verify_curvature = false;
  double divergence_norm = 1e12;
  std::string out_dir = "out";
};

// Strict parse; throws std::runtime_error with "line N:" context on unknown
// keys, malformed values, or failed cross-field validation.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace dsqn
