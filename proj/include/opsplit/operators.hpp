#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "opsplit/graph.hpp"

namespace opsplit {

// A stacked point keeps one agent block per column (dim x n).
using StackedPoint = Eigen::MatrixXd;

// Per-agent problem data: the maximally monotone pair (A_i, B_i).
//   resolvent(i, alpha, u) = J_{alpha A_i}(u)
//   forward(i, u)          = B_i(u)
//   lipschitz(i)           = Lipschitz constant of B_i
// Implementations must be reentrant across distinct agents.
class AgentProblem {
 public:
  virtual ~AgentProblem() = default;

  virtual int num_agents() const = 0;
  virtual int dim() const = 0;

  virtual Eigen::VectorXd resolvent(int i, double alpha, const Eigen::VectorXd& u) const = 0;
  virtual Eigen::VectorXd forward(int i, const Eigen::VectorXd& u) const = 0;
  virtual double lipschitz(int i) const = 0;
};

// Aggregative split: B_i depends on the local block and the sum of all blocks.
// Exposed by problems that support the memory-efficient iteration.
class AggregativeView {
 public:
  virtual ~AggregativeView() = default;

  virtual Eigen::VectorXd forward_block(int i, const Eigen::VectorXd& local,
                                        const Eigen::VectorXd& aggregate) const = 0;
};

enum class StepMode { heterogeneous, homogeneous };
enum class BetaRule { beta_max, beta_norm };

StepMode parse_step_mode(const std::string& name);
BetaRule parse_beta_rule(const std::string& name);
std::string to_string(StepMode mode);
std::string to_string(BetaRule rule);

struct StepConfig {
  Eigen::VectorXd alphas;  // per-agent, positive
  double beta = 0.0;       // positive
  BetaRule beta_rule = BetaRule::beta_norm;
  double safety = 0.9;     // in (0,1)
};

// alpha_i = safety/(8 L_i) (heterogeneous) or safety/(8 max_j L_j) (homogeneous).
// Agents with L_i = 0 use max_j L_j as a floor (or 1.0 if all constants vanish).
Eigen::VectorXd compute_step_sizes(const AgentProblem& problem, StepMode mode,
                                   double safety = 0.9);

// beta_max:  safety * (max_i alpha_i)^{-1}
// beta_norm: safety * || Lambda^{1/2} ((I-W)/2) Lambda^{1/2} ||^{-1}
double compute_beta(const Eigen::VectorXd& alphas, const MixingMatrix& mix, BetaRule rule,
                    double safety = 0.9);

// Positive definiteness of (1/beta) I - K diag(alpha) K with K = ((I-W)/2)^{1/2}:
// true iff the smallest eigenvalue exceeds 1e-12.
bool check_beta_pd(const Eigen::VectorXd& alphas, const MixingMatrix& mix, double beta);

// Lipschitz constant of an affine map with linear part m.
double estimate_lipschitz_linear(const Eigen::MatrixXd& m);

// Symmetric PSD square root of (I-W)/2; eigenvalues in [-1e-12, 0) clamp to 0.
Eigen::MatrixXd half_gap_sqrt(const Eigen::MatrixXd& w);

// Bundle alphas + beta; the produced config always passes check_beta_pd.
StepConfig make_step_config(const AgentProblem& problem, const MixingMatrix& mix, StepMode mode,
                            BetaRule rule, double safety = 0.9);

}  // namespace opsplit
