#include "dsqn/engine.hpp"

#include <stdexcept>

namespace dsqn {

InitMode parse_init_mode(const std::string& name) {
  if (name == "zeros") return InitMode::zeros;
  if (name == "consensus_random") return InitMode::consensus_random;
  if (name == "per_node_random") return InitMode::per_node_random;
  throw std::invalid_argument("unknown init mode: " + name);
}

std::string init_mode_name(InitMode mode) {
  switch (mode) {
    case InitMode::zeros: return "zeros";
    case InitMode::consensus_random: return "consensus_random";
    case InitMode::per_node_random: return "per_node_random";
  }
  return "?";
}

Precision parse_precision(const std::string& name) {
  if (name == "double") return Precision::fp64;
  if (name == "quad") return Precision::fp128;
  throw std::invalid_argument("unknown precision: " + name + " (use double or quad)");
}

std::string precision_name(Precision p) { return p == Precision::fp64 ? "double" : "quad"; }

std::string run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::target_reached: return "target_reached";
    case RunStatus::diverged: return "diverged";
  }
  return "?";
}

RunResult run_engine_precision(const FiniteSumProblem& problem, const MixingMatrix& mix, const EngineConfig& cfg,
                               const ReferenceOptimum& ref, Precision precision) {
  if (precision == Precision::fp64) return run_engine<double>(problem, mix, cfg, ref);
  return run_engine<float128>(problem, mix, cfg, ref);
}

}  // namespace dsqn
