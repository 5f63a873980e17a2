#include "dsqn/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dsqn {

namespace {
constexpr const char* kHeader = "k,consensus_err,opt_gap_raw,opt_gap_scaled,tracking_err,u_inf_q,grad_evals_cumulative";
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open metrics file for writing: " + path);
  out << kHeader << "\n";
  for (const MetricsRecord& r : rows) {
    out << r.k << ',' << format_double(r.consensus_err) << ',' << format_double(r.opt_gap_raw) << ','
        << format_double(r.opt_gap_scaled) << ',' << format_double(r.tracking_err) << ','
        << format_double(r.u_inf_q) << ',' << r.grad_evals_cumulative << "\n";
  }
  if (!out) throw std::runtime_error("write failed for metrics file: " + path);
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty metrics file: " + path);
  if (line != kHeader) throw std::runtime_error("unexpected metrics header in " + path + ": " + line);

  std::vector<MetricsRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    MetricsRecord r;
    char comma;
    ss >> r.k >> comma >> r.consensus_err >> comma >> r.opt_gap_raw >> comma >> r.opt_gap_scaled >> comma >>
        r.tracking_err >> comma >> r.u_inf_q >> comma >> r.grad_evals_cumulative;
    if (ss.fail()) throw std::runtime_error("malformed metrics row in " + path + ": " + line);
    rows.push_back(r);
  }
  return rows;
}

std::vector<MetricsRecord> average_metrics(const std::vector<std::vector<MetricsRecord>>& runs) {
  if (runs.empty()) throw std::invalid_argument("average_metrics: no runs");
  const std::size_t len = runs.front().size();
  for (const auto& run : runs) {
    if (run.size() != len) throw std::invalid_argument("average_metrics: runs differ in length");
  }
  std::vector<MetricsRecord> mean(len);
  const double inv = 1.0 / static_cast<double>(runs.size());
  for (std::size_t i = 0; i < len; ++i) {
    const MetricsRecord& first = runs.front()[i];
    MetricsRecord& m = mean[i];
    m.k = first.k;
    m.grad_evals_cumulative = first.grad_evals_cumulative;
    for (const auto& run : runs) {
      const MetricsRecord& r = run[i];
      if (r.k != m.k) throw std::invalid_argument("average_metrics: iteration columns disagree");
      if (r.grad_evals_cumulative != m.grad_evals_cumulative)
        throw std::invalid_argument("average_metrics: evaluation counts disagree");
      m.consensus_err += r.consensus_err;
      m.opt_gap_raw += r.opt_gap_raw;
      m.opt_gap_scaled += r.opt_gap_scaled;
      m.tracking_err += r.tracking_err;
      m.u_inf_q += r.u_inf_q;
    }
    m.consensus_err *= inv;
    m.opt_gap_raw *= inv;
    m.opt_gap_scaled *= inv;
    m.tracking_err *= inv;
    m.u_inf_q *= inv;
  }
  return mean;
}

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("fit_line: need >= 2 matched points");
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy == 0.0) {
    f.r2 = 1.0;  // constant data perfectly matched by the horizontal fit
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = ys[i] - (f.intercept + f.slope * xs[i]);
      ss_res += e * e;
    }
    f.r2 = 1.0 - ss_res / syy;
  }
  return f;
}

}  // namespace dsqn
