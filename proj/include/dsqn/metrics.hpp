#pragma once

#include <string>
#include <vector>

namespace dsqn {

// One per-iteration telemetry row. opt_gap_raw is F(xbar) - F*;
// opt_gap_scaled, tracking_err, and u_inf_q are the weighted error
// coordinates used by the rate analysis. grad_evals_cumulative counts
// component-gradient evaluations summed over the whole network.
struct MetricsRecord {
  long long k = 0;
  double consensus_err = 0.0;
  double opt_gap_raw = 0.0;
  double opt_gap_scaled = 0.0;
  double tracking_err = 0.0;
  double u_inf_q = 0.0;
  long long grad_evals_cumulative = 0;
};

// CSV I/O. Doubles are printed with %.17g so a re-read reproduces the exact
// bits; the header row is fixed and checked on read.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& rows);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

// Entrywise mean across replications. All runs must agree on length and on
// the k column; gradient-evaluation counts must agree exactly (they are
// schedule-determined) and are carried through unchanged.
std::vector<MetricsRecord> average_metrics(const std::vector<std::vector<MetricsRecord>>& runs);

// Least-squares line fit with coefficient of determination.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

// %.17g formatting used by every CSV writer (shortest round-trippable form).
std::string format_double(double v);

}  // namespace dsqn
