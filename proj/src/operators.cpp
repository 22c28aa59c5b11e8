#include "opsplit/operators.hpp"

#include <stdexcept>

#include "opsplit/numerics.hpp"

namespace opsplit {

StepMode parse_step_mode(const std::string& name) {
  if (name == "heterogeneous") return StepMode::heterogeneous;
  if (name == "homogeneous") return StepMode::homogeneous;
  throw std::invalid_argument("unknown step mode: " + name);
}

BetaRule parse_beta_rule(const std::string& name) {
  if (name == "beta_max") return BetaRule::beta_max;
  if (name == "beta_norm") return BetaRule::beta_norm;
  throw std::invalid_argument("unknown beta rule: " + name);
}

std::string to_string(StepMode mode) {
  return mode == StepMode::heterogeneous ? "heterogeneous" : "homogeneous";
}

std::string to_string(BetaRule rule) {
  return rule == BetaRule::beta_max ? "beta_max" : "beta_norm";
}

Eigen::VectorXd compute_step_sizes(const AgentProblem& problem, StepMode mode, double safety) {
  if (!(safety > 0.0 && safety < 1.0))
    throw std::invalid_argument("compute_step_sizes: safety must lie in (0,1)");
  const int n = problem.num_agents();
  Eigen::VectorXd ls(n);
  for (int i = 0; i < n; ++i) {
    ls[i] = problem.lipschitz(i);
    if (ls[i] < 0.0) throw std::invalid_argument("compute_step_sizes: negative Lipschitz constant");
  }
  const double lmax = ls.maxCoeff();
  const double floor = lmax > 0.0 ? lmax : 1.0;
  Eigen::VectorXd alphas(n);
  for (int i = 0; i < n; ++i) {
    const double li = (mode == StepMode::homogeneous || ls[i] == 0.0) ? floor : ls[i];
    alphas[i] = safety / (8.0 * li);
  }
  return alphas;
}

double compute_beta(const Eigen::VectorXd& alphas, const MixingMatrix& mix, BetaRule rule,
                    double safety) {
  if (alphas.size() != mix.n) throw std::invalid_argument("compute_beta: alpha count mismatch");
  if (alphas.minCoeff() <= 0.0) throw std::invalid_argument("compute_beta: alphas must be positive");
  if (rule == BetaRule::beta_max) return safety / alphas.maxCoeff();
  const Eigen::MatrixXd half_gap =
      0.5 * (Eigen::MatrixXd::Identity(mix.n, mix.n) - mix.w);
  const Eigen::VectorXd root = alphas.cwiseSqrt();
  const double norm = spectral_norm(root.asDiagonal() * half_gap * root.asDiagonal());
  if (norm <= 0.0) return safety / alphas.maxCoeff();  // W = I degenerate case
  return safety / norm;
}

Eigen::MatrixXd half_gap_sqrt(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  const Eigen::MatrixXd half_gap = 0.5 * (Eigen::MatrixXd::Identity(n, n) - w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(half_gap);
  Eigen::VectorXd evals = es.eigenvalues();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (evals[i] < 0.0) {
      if (evals[i] < -1e-12)
        throw std::runtime_error("half_gap_sqrt: (I-W)/2 is not positive semidefinite");
      evals[i] = 0.0;
    }
  }
  return es.eigenvectors() * evals.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

bool check_beta_pd(const Eigen::VectorXd& alphas, const MixingMatrix& mix, double beta) {
  if (alphas.size() != mix.n) throw std::invalid_argument("check_beta_pd: alpha count mismatch");
  if (beta <= 0.0) throw std::invalid_argument("check_beta_pd: beta must be positive");
  const Eigen::MatrixXd k = half_gap_sqrt(mix.w);
  const Eigen::MatrixXd m = (1.0 / beta) * Eigen::MatrixXd::Identity(mix.n, mix.n) -
                            k * alphas.asDiagonal() * k;
  return lambda_min(m) > 1e-12;
}

double estimate_lipschitz_linear(const Eigen::MatrixXd& m) { return spectral_norm(m); }

StepConfig make_step_config(const AgentProblem& problem, const MixingMatrix& mix, StepMode mode,
                            BetaRule rule, double safety) {
  StepConfig cfg;
  cfg.alphas = compute_step_sizes(problem, mode, safety);
  cfg.beta = compute_beta(cfg.alphas, mix, rule, safety);
  cfg.beta_rule = rule;
  cfg.safety = safety;
  return cfg;
}

}  // namespace opsplit
