#include "opsplit/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "opsplit/numerics.hpp"

namespace opsplit {

double relative_error(const StackedPoint& xk, const Eigen::VectorXd& xstar, bool* absolute_flag) {
  if (xk.rows() != xstar.size())
    throw std::invalid_argument("relative_error: dimension mismatch");
  double diff = 0.0;
  for (Eigen::Index i = 0; i < xk.cols(); ++i) diff += (xk.col(i) - xstar).squaredNorm();
  diff = std::sqrt(diff);
  const double denom = xstar.norm() * std::sqrt(static_cast<double>(xk.cols()));
  if (denom == 0.0) {
    if (absolute_flag) *absolute_flag = true;
    return diff;
  }
  if (absolute_flag) *absolute_flag = false;
  return diff / denom;
}

double normalized_residual(const StackedPoint& z_cur, const StackedPoint& z_prev,
                           const Eigen::VectorXd& alphas) {
  if (z_cur.rows() != z_prev.rows() || z_cur.cols() != z_prev.cols())
    throw std::invalid_argument("normalized_residual: shape mismatch");
  return weighted_norm(z_cur - z_prev, alphas.cwiseInverse());
}

double consensus_gap(const StackedPoint& x) {
  if (x.cols() == 0) return 0.0;
  const Eigen::VectorXd mean = x.rowwise().mean();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) worst = std::max(worst, (x.col(i) - mean).norm());
  return worst;
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "run_id,algorithm,problem,graph_kind,n_agents,seed,k,residual,relative_error,"
         "consensus_gap,elapsed_ms\n";
  for (const auto& r : trace) {
    out << r.run_id << ',' << r.algorithm << ',' << r.problem << ',' << r.graph_kind << ','
        << r.n_agents << ',' << r.seed << ',' << r.k << ',' << format_double(r.residual) << ','
        << format_double(r.relative_error) << ',' << format_double(r.consensus_gap) << ','
        << format_double(r.elapsed_ms) << '\n';
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::vector<TraceRecord> trace;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace csv: missing header");
  if (line.rfind("run_id,algorithm,problem,graph_kind", 0) != 0)
    throw std::runtime_error("trace csv: unexpected header");
  int prev_k = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 11) throw std::runtime_error("trace csv: wrong field count");
    TraceRecord r;
    r.run_id = fields[0];
    r.algorithm = fields[1];
    r.problem = fields[2];
    r.graph_kind = fields[3];
    r.n_agents = std::stoi(fields[4]);
    r.seed = std::stoull(fields[5]);
    r.k = std::stoi(fields[6]);
    r.residual = parse_double(fields[7]);
    r.relative_error = parse_double(fields[8]);
    r.consensus_gap = parse_double(fields[9]);
    r.elapsed_ms = parse_double(fields[10]);
    if (r.k <= prev_k) throw std::runtime_error("trace csv: iteration counter not increasing");
    prev_k = r.k;
    trace.push_back(std::move(r));
  }
  return trace;
}

}  // namespace opsplit
