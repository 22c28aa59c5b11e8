#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "opsplit/graph.hpp"
#include "opsplit/metrics.hpp"
#include "opsplit/operators.hpp"
#include "opsplit/problems.hpp"

namespace opsplit {

enum class Algorithm { alg1, alg2, pg_extra, pdtr, nids };

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm alg);

// I - (beta/2) Lambda (I - W); the mixing applied to resolvent/forward combinations.
Eigen::MatrixXd make_w_tilde(const MixingMatrix& mix, const Eigen::VectorXd& alphas, double beta);

// ---------------------------------------------------------------------------
// Main scheme: extragradient forward evaluations at y, heterogeneous steps.
// ---------------------------------------------------------------------------
struct Alg1State {
  StackedPoint x_prev, x_cur;    // x^{k-1}, x^k
  StackedPoint y_prev, y_cur;    // y^{k-1}, y^k
  StackedPoint z_prev, z_cur;    // z^{k-1}, z^k
  StackedPoint by_prev;          // B(y^{k-1})
  StackedPoint v_prev;           // v^{k-1}
  int k = 0;
};

Alg1State alg1_init(const AgentProblem& problem, const Eigen::MatrixXd& w_tilde,
                    const Eigen::VectorXd& alphas, const StackedPoint& y0,
                    const StackedPoint& z0);
void alg1_step(Alg1State& state, const AgentProblem& problem, const Eigen::MatrixXd& w_tilde,
               const Eigen::VectorXd& alphas);

// z-update in matrix form and in the per-agent local-sum form; both take the
// same inputs and must agree.
StackedPoint alg1_z_update_matrix(const StackedPoint& z, const StackedPoint& x_cur,
                                  const StackedPoint& x_prev, const StackedPoint& v_cur,
                                  const StackedPoint& v_prev, const Eigen::MatrixXd& w_tilde,
                                  const Eigen::VectorXd& alphas);
StackedPoint alg1_z_update_local(const StackedPoint& z, const StackedPoint& x_cur,
                                 const StackedPoint& x_prev, const StackedPoint& v_cur,
                                 const StackedPoint& v_prev, const CommGraph& graph,
                                 const MixingMatrix& mix, const Eigen::VectorXd& alphas,
                                 double beta);

// ---------------------------------------------------------------------------
// Baselines. Shared state layout; the step functions differ in the forward
// evaluation and the z-update shape.
// ---------------------------------------------------------------------------
struct BaselineState {
  StackedPoint x_prev, x_cur;
  StackedPoint z_prev, z_cur;
  StackedPoint bx_prev;  // B(x^{k-1})
  StackedPoint v_prev;   // v^{k-1}
  int k = 0;
};

// x^{-1} = x^0 = J(z^0), B(x^{-1}) = B(x^0), v^{-1} = 0: the first step
// reduces to a plain forward-backward step.
BaselineState baseline_init_homogeneous(const AgentProblem& problem, double alpha,
                                        const StackedPoint& z0);
BaselineState baseline_init_weighted(const AgentProblem& problem, const Eigen::VectorXd& alphas,
                                     const StackedPoint& z0);

void pg_extra_step(BaselineState& state, const AgentProblem& problem, const Eigen::MatrixXd& w,
                   double alpha);
void pdtr_step(BaselineState& state, const AgentProblem& problem, const Eigen::MatrixXd& w,
               double alpha);
void nids_step(BaselineState& state, const AgentProblem& problem, const Eigen::MatrixXd& w_tilde,
               const Eigen::VectorXd& alphas);

// Homogeneous step size for the extragradient baseline: safety*(1+lambda_min(W))/(4 max L).
double pdtr_step_size(const AgentProblem& problem, const MixingMatrix& mix, double safety = 0.9);

// ---------------------------------------------------------------------------
// Memory-efficient engine for aggregative problems. Agent i stores the
// diagonal blocks (x_ii, z_ii, v_ii), the out-of-neighborhood sum mu_i, the
// running aggregate ybar_i, and y_ij only for j in the two-hop neighborhood.
// ---------------------------------------------------------------------------
class Alg2Engine {
 public:
  // y0/z0 are full product-space points as used by the naive run
  // (block_dim*N rows, one column per agent).
  Alg2Engine(const VPPProblem& problem, const CommGraph& graph, const MixingMatrix& mix,
             const Eigen::VectorXd& alphas, double beta, const StackedPoint& y0,
             const StackedPoint& z0);

  void step();

  int k() const { return k_; }
  Eigen::MatrixXd x_blocks() const;     // block_dim x N, columns x_ii
  Eigen::MatrixXd z_blocks() const;     // block_dim x N, columns z_ii
  Eigen::MatrixXd ybar_blocks() const;  // block_dim x N
  double residual(const Eigen::VectorXd& alphas) const;  // diag-block z residual

  // memory accounting (block counts per agent)
  static int local_block_count() { return 4; }  // x, z, v, mu
  int y_block_count(int i) const { return static_cast<int>(two_hop_[i].size()); }

 private:
  int idx(int i, int j) const;  // position of j within agent i's y storage

  const VPPProblem& problem_;
  int n_;
  int bd_;
  Eigen::VectorXd alphas_;
  Eigen::MatrixXd w_tilde_;
  std::vector<std::vector<int>> one_hop_, two_hop_;
  std::vector<std::vector<char>> is_neighbor_;

  Eigen::MatrixXd x_prev_, x_cur_;  // diagonal blocks
  Eigen::MatrixXd z_prev_, z_cur_;
  Eigen::MatrixXd v_prev_;          // v^{k-1}
  Eigen::MatrixXd mu_prev_, mu_cur_;
  Eigen::MatrixXd ybar_prev_, ybar_cur_;
  std::vector<std::vector<Eigen::VectorXd>> y_prev_, y_cur_;
  int k_ = 0;
};

// ---------------------------------------------------------------------------
// Runner: init + K steps with metric recording.
// ---------------------------------------------------------------------------
struct RunOptions {
  Algorithm algorithm = Algorithm::alg1;
  StepMode mode = StepMode::heterogeneous;
  BetaRule rule = BetaRule::beta_norm;
  double safety = 0.9;
  int iterations = 1000;
  StackedPoint z0, y0;
  std::optional<Eigen::VectorXd> xstar;  // ground truth for relative error
  std::string run_id = "run";
  std::string problem_name;
  std::uint64_t seed = 0;
  int record_every = 1;  // always records k=0,1 and the final iterate

  // When set, receives the final resolvent iterate (for the memory-efficient
  // engine: its diagonal blocks, block_dim x N).
  StackedPoint* final_x = nullptr;
};

std::vector<TraceRecord> run(const AgentProblem& problem, const CommGraph& graph,
                             const MixingMatrix& mix, const RunOptions& options);

}  // namespace opsplit
