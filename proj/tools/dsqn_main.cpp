// dsqn: decentralized variance-reduced quasi-Newton simulation toolkit.
//
// Subcommands:
//   run       execute a configured experiment, write metrics + reports
//   compare   run several methods on one instance, write combined table
//   certify   analysis-only rate certificate for a parameter set or config
//   validate  topology / problem validation report
//
// Exit codes: 0 ok, 2 config error, 3 gate/certificate failure, 4 divergence.

#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsqn/config.hpp"
#include "dsqn/experiment.hpp"

namespace {

double parse_flag_number(const std::string& flag, const std::string& value) {
  std::size_t pos = 0;
  const double out = std::stod(value, &pos);
  if (pos != value.size()) throw std::runtime_error(flag + " expects a number or 'auto', got '" + value + "'");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized variance-reduced quasi-Newton simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> methods;

  CLI::App* cmd_run = app.add_subcommand("run", "execute a configured experiment");
  cmd_run->add_option("-c,--config", config_path, "experiment config file")->required();

  CLI::App* cmd_compare = app.add_subcommand("compare", "run several methods on one instance");
  cmd_compare->add_option("-c,--config", config_path, "experiment config file")->required();
  cmd_compare
      ->add_option("-m,--method", methods,
                   "method to include (repeatable): framework, gt_svrg, dgd, gradient_tracking")
      ->required();

  CLI::App* cmd_certify = app.add_subcommand("certify", "rate certificate for a parameter set");
  std::string cert_alpha = "auto", cert_T = "auto";
  dsqn::CertifyParams cp;
  cmd_certify->add_option("-c,--config", config_path, "derive parameters from a config file");
  cmd_certify->add_option("--L", cp.L, "smoothness constant");
  cmd_certify->add_option("--mu", cp.mu, "strong convexity constant");
  cmd_certify->add_option("--sigma", cp.sigma, "mixing rate in [0,1)");
  cmd_certify->add_option("--M1", cp.M1, "curvature lower bound");
  cmd_certify->add_option("--M2", cp.M2, "curvature upper bound");
  cmd_certify->add_option("--B", cp.B, "non-sampling rate");
  cmd_certify->add_option("--alpha", cert_alpha, "step size, or 'auto' for the admissible bound");
  cmd_certify->add_option("--T", cert_T, "snapshot period, or 'auto' for the admissible floor");

  CLI::App* cmd_validate = app.add_subcommand("validate", "topology / problem validation report");
  cmd_validate->add_option("-c,--config", config_path, "experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? dsqn::kExitOk : dsqn::kExitConfigError;
  }

  try {
    if (cmd_run->parsed()) {
      return dsqn::run_experiment(dsqn::load_config_file(config_path));
    }
    if (cmd_compare->parsed()) {
      return dsqn::run_compare(dsqn::load_config_file(config_path), methods);
    }
    if (cmd_certify->parsed()) {
      if (!config_path.empty()) {
        return dsqn::run_certify(dsqn::load_config_file(config_path), std::cout);
      }
      cp.alpha_auto = (cert_alpha == "auto");
      if (!cp.alpha_auto) cp.alpha = parse_flag_number("--alpha", cert_alpha);
      cp.T_auto = (cert_T == "auto");
      if (!cp.T_auto) cp.T = parse_flag_number("--T", cert_T);
      return dsqn::run_certify(cp, std::cout);
    }
    if (cmd_validate->parsed()) {
      return dsqn::run_validate(dsqn::load_config_file(config_path), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dsqn::kExitConfigError;
  }
  return dsqn::kExitConfigError;
}
