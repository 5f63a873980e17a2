#include "dsqn/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dsqn {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw std::runtime_error("line " + std::to_string(line) + ": " + msg);
}

long parse_int(int line, const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long out = 0;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    fail(line, key + " expects an integer, got '" + v + "'");
  }
  if (pos != v.size()) fail(line, key + " expects an integer, got '" + v + "'");
  return out;
}

double parse_float(int line, const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    fail(line, key + " expects a number, got '" + v + "'");
  }
  if (pos != v.size()) fail(line, key + " expects a number, got '" + v + "'");
  return out;
}

bool parse_bool(int line, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(line, key + " expects a boolean, got '" + v + "'");
}

std::vector<int> parse_int_list(int line, const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(line, key + " has an empty list entry");
    out.push_back(static_cast<int>(parse_int(line, key, item)));
  }
  if (out.empty()) fail(line, key + " expects at least one integer");
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  bool m_was_scalar = false;
  int m_scalar = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "topology" && section != "algorithm" && section != "run")
        fail(line_no, "unknown section [" + section + "]");
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "missing key before '='");
    if (value.empty()) fail(line_no, "missing value for key '" + key + "'");
    if (section.empty()) fail(line_no, "key '" + key + "' appears before any section header");

    if (section == "problem") {
      if (key == "family") {
        try {
          cfg.problem.family = parse_family(value);
        } catch (const std::exception& e) {
          fail(line_no, e.what());
        }
      } else if (key == "n") {
        cfg.problem.n = static_cast<int>(parse_int(line_no, key, value));
      } else if (key == "d") {
        cfg.problem.d = static_cast<int>(parse_int(line_no, key, value));
      } else if (key == "m") {
        if (value.find(',') == std::string::npos) {
          m_was_scalar = true;
          m_scalar = static_cast<int>(parse_int(line_no, key, value));
        } else {
          m_was_scalar = false;
          cfg.problem.m = parse_int_list(line_no, key, value);
        }
      } else if (key == "seed") {
        cfg.problem.seed = static_cast<std::uint64_t>(parse_int(line_no, key, value));
      } else if (key == "regularizer") {
        cfg.problem.regularizer = parse_float(line_no, key, value);
      } else if (key == "eig_min") {
        cfg.problem.eig_min = parse_float(line_no, key, value);
      } else if (key == "eig_max") {
        cfg.problem.eig_max = parse_float(line_no, key, value);
      } else if (key == "hetero") {
        cfg.problem.hetero = parse_float(line_no, key, value);
      } else {
        fail(line_no, "unknown key '" + key + "' in [problem]");
      }
    } else if (section == "topology") {
      if (key == "kind") {
        try {
          cfg.graph.kind = parse_graph_kind(value);
        } catch (const std::exception& e) {
          fail(line_no, e.what());
        }
      } else if (key == "p") {
        cfg.graph.p = parse_float(line_no, key, value);
      } else if (key == "seed") {
        cfg.graph.seed = static_cast<std::uint64_t>(parse_int(line_no, key, value));
      } else if (key == "rows") {
        cfg.graph.rows = static_cast<int>(parse_int(line_no, key, value));
      } else if (key == "cols") {
        cfg.graph.cols = static_cast<int>(parse_int(line_no, key, value));
      } else if (key == "weights") {
        if (value == "metropolis") {
          cfg.lazy_weights = false;
        } else if (value == "lazy_metropolis") {
          cfg.lazy_weights = true;
        } else {
          fail(line_no, "weights must be metropolis or lazy_metropolis, got '" + value + "'");
        }
      } else {
        fail(line_no, "unknown key '" + key + "' in [topology]");
      }
    } else if (section == "algorithm") {
      if (key == "alpha") {
        if (value == "auto") {
          cfg.alpha_auto = true;
        } else {
          cfg.alpha_auto = false;
          cfg.alpha = parse_float(line_no, key, value);
          if (!(cfg.alpha > 0.0)) fail(line_no, "alpha must be positive");
        }
      } else if (key == "T") {
        if (value == "auto") {
          cfg.T_auto = true;
        } else {
          cfg.T_auto = false;
          cfg.T = static_cast<int>(parse_int(line_no, key, value));
          if (cfg.T < 1) fail(line_no, "T must be >= 1");
        }
      } else if (key == "b") {
        if (value == "full") {
          cfg.b = 0;
        } else {
          cfg.b = static_cast<int>(parse_int(line_no, key, value));
          if (cfg.b < 1) fail(line_no, "b must be >= 1 (or 'full')");
        }
      } else if (key == "hessian") {
        if (value != "identity" && value != "scaled_identity" && value != "clipped_secant")
          fail(line_no, "hessian must be identity, scaled_identity, or clipped_secant");
        cfg.hessian.strategy = value;
      } else if (key == "M1") {
        cfg.hessian.M1 = parse_float(line_no, key, value);
      } else if (key == "M2") {
        cfg.hessian.M2 = parse_float(line_no, key, value);
      } else if (key == "scale") {
        cfg.hessian.scale = parse_float(line_no, key, value);
      } else if (key == "init") {
        try {
          cfg.init = parse_init_mode(value);
        } catch (const std::exception& e) {
          fail(line_no, e.what());
        }
      } else if (key == "init_scale") {
        cfg.init_scale = parse_float(line_no, key, value);
      } else {
        fail(line_no, "unknown key '" + key + "' in [algorithm]");
      }
    } else {  // [run]
      if (key == "max_iters") {
        cfg.max_iters = parse_int(line_no, key, value);
        if (cfg.max_iters < 0) fail(line_no, "max_iters must be >= 0");
      } else if (key == "target_gap") {
        cfg.target_gap = parse_float(line_no, key, value);
      } else if (key == "target_consensus") {
        cfg.target_consensus = parse_float(line_no, key, value);
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(line_no, key, value));
      } else if (key == "replications") {
        cfg.replications = static_cast<int>(parse_int(line_no, key, value));
        if (cfg.replications < 1) fail(line_no, "replications must be >= 1");
      } else if (key == "strict_gate") {
        cfg.strict_gate = parse_bool(line_no, key, value);
      } else if (key == "precision") {
        try {
          cfg.precision = parse_precision(value);
        } catch (const std::exception& e) {
          fail(line_no, e.what());
        }
      } else if (key == "threads") {
        cfg.threads = static_cast<int>(parse_int(line_no, key, value));
        if (cfg.threads < 1) fail(line_no, "threads must be >= 1");
      } else if (key == "verify_curvature") {
        cfg.verify_curvature = parse_bool(line_no, key, value);
      } else if (key == "divergence_norm") {
        cfg.divergence_norm = parse_float(line_no, key, value);
        if (!(cfg.divergence_norm > 0.0)) fail(line_no, "divergence_norm must be positive");
      } else if (key == "out_dir") {
        cfg.out_dir = value;
      } else {
        fail(line_no, "unknown key '" + key + "' in [run]");
      }
    }
  }

  // Cross-field validation and defaults.
  if (cfg.problem.n < 1) throw std::runtime_error("config error: [problem] n must be >= 1");
  if (cfg.problem.d < 1) throw std::runtime_error("config error: [problem] d must be >= 1");
  if (m_was_scalar) cfg.problem.m.assign(cfg.problem.n, m_scalar);
  if (cfg.problem.m.empty()) cfg.problem.m.assign(cfg.problem.n, 10);  // default samples per node
  if (static_cast<int>(cfg.problem.m.size()) != cfg.problem.n)
    throw std::runtime_error("config error: [problem] m list length must equal n");
  for (int mi : cfg.problem.m)
    if (mi < 1) throw std::runtime_error("config error: [problem] every m_i must be >= 1");
  if (cfg.b > 0) {
    for (int mi : cfg.problem.m)
      if (cfg.b > mi)
        throw std::runtime_error("config error: [algorithm] b = " + std::to_string(cfg.b) +
                                 " exceeds a node's sample count m_i = " + std::to_string(mi));
  }
  if (!(cfg.hessian.M1 > 0.0) || !(cfg.hessian.M2 > 0.0) || cfg.hessian.M1 > cfg.hessian.M2)
    throw std::runtime_error("config error: [algorithm] curvature bounds require 0 < M1 <= M2");
  if (cfg.graph.n == 0) cfg.graph.n = cfg.problem.n;
  if (cfg.graph.n != cfg.problem.n)
    throw std::runtime_error("config error: topology size does not match [problem] n");
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace dsqn
