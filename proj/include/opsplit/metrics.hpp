#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "opsplit/operators.hpp"

namespace opsplit {

// One trace row per iteration. residual and relative_error use NaN as the
// "not available" sentinel (k = 0 has no previous z; relative error needs a
// ground truth); NaN serializes as an empty CSV field.
struct TraceRecord {
  std::string run_id;
  std::string algorithm;
  std::string problem;
  std::string graph_kind;
  int n_agents = 0;
  std::uint64_t seed = 0;
  int k = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double relative_error = std::numeric_limits<double>::quiet_NaN();
  double consensus_gap = 0.0;
  double elapsed_ms = 0.0;
};

// ||x^k - (x*, ..., x*)|| / ||(x*, ..., x*)||. When ||x*|| = 0 the absolute
// error is returned instead and *absolute_flag (if given) is set.
double relative_error(const StackedPoint& xk, const Eigen::VectorXd& xstar,
                      bool* absolute_flag = nullptr);

// ||z_cur - z_prev|| in the Lambda^{-1} norm (weights 1/alpha_i per agent).
double normalized_residual(const StackedPoint& z_cur, const StackedPoint& z_prev,
                           const Eigen::VectorXd& alphas);

// max_i ||x_i - mean_j(x_j)||.
double consensus_gap(const StackedPoint& x);

// CSV persistence. Column order is fixed:
// run_id, algorithm, problem, graph_kind, n_agents, seed, k, residual,
// relative_error, consensus_gap, elapsed_ms
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace_csv(std::istream& in);

}  // namespace opsplit
