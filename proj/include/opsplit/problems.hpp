#pragma once

#include <Eigen/Dense>
#include <memory>
#include <json.hpp>
#include <string>
#include <vector>

#include "opsplit/operators.hpp"

namespace opsplit {

// ---------------------------------------------------------------------------
// Robust least squares: min_u max_v sum_i ||M_i u - v_i||^2 - lambda ||v_i - vt_i||^2
// over z = (u, v) in R^p x R^d, with the data rows partitioned across agents.
// ---------------------------------------------------------------------------
struct RobustLSInstance {
  int n_agents = 0;
  int p = 0;  // feature dimension
  int d = 0;  // total number of rows
  double lambda = 3.0;
  std::vector<Eigen::MatrixXd> m_blocks;  // d_i x p
  std::vector<Eigen::VectorXd> v_blocks;  // d_i (noisy targets)
  std::vector<int> row_offsets;           // block start within the stacked d rows

  Eigen::MatrixXd stacked_m() const;
  Eigen::VectorXd stacked_v() const;
};

// Synthetic generation: M entries N(0,1), target vt = M ut + eps.
// Rank-deficient draws are rejected and regenerated (at most 5 attempts).
RobustLSInstance gen_robust_ls(int d, int p, int n_agents, std::uint64_t seed,
                               double lambda = 3.0);

// CSV ingestion: d rows, p+1 columns, last column is the target. Columns are
// standardized to zero mean / unit variance when standardize is set.
RobustLSInstance robust_ls_from_csv(const std::string& path, int n_agents, double lambda,
                                    bool standardize = true);

std::unique_ptr<AgentProblem> robust_ls_problem(const RobustLSInstance& inst);

// Unique saddle point (u*, v*) as one stacked vector of length p+d, obtained by
// solving the first-order optimality conditions as a linear system.
Eigen::VectorXd robust_ls_solution(const RobustLSInstance& inst);

// ---------------------------------------------------------------------------
// Zero-sum matrix game between two teams: min_{u in simplex} max_{v in simplex}
// sum_i <M_i u, v>, with M_i = s_i I - K_i chosen so the game is completely mixed.
// ---------------------------------------------------------------------------
struct MatrixGameInstance {
  int n_agents = 0;
  int p = 0;  // strategy dimension (p = d)
  std::vector<Eigen::MatrixXd> m;  // p x p payoff blocks
};

MatrixGameInstance gen_matrix_game(int p, int n_agents, std::uint64_t seed);

std::unique_ptr<AgentProblem> matrix_game_problem(const MatrixGameInstance& inst);

// Completely-mixed equilibrium (u*, v*) of length 2p, from the payoff-equalizing
// linear system; throws if the equilibrium is not strictly interior.
Eigen::VectorXd matrix_game_solution(const MatrixGameInstance& inst);

// ---------------------------------------------------------------------------
// Virtual power plant coordination as an aggregative game. Each player picks a
// charge/discharge schedule u_i = (u_i^+, u_i^-) in R^{2p}; the shared coupling
// constraint bounds the aggregate net draw per period. The primal-dual variable
// per player is z_i = (u_i, v_i) in R^{4p}.
// ---------------------------------------------------------------------------
struct VPPInstance {
  int n_players = 0;
  int horizon = 0;                        // p
  std::vector<Eigen::VectorXd> q_diag;    // 2p, degradation quadratic (diagonal)
  std::vector<Eigen::VectorXd> p_cost;    // 2p, degradation linear term
  std::vector<Eigen::VectorXd> u_cap;     // 2p, throughput caps (u+ caps; u- caps)
  std::vector<double> e_plus, e_minus;    // charge/discharge efficiencies in (0,1)
  std::vector<Eigen::VectorXd> l_low, l_up;  // p, state-of-charge limits
  std::vector<Eigen::VectorXd> c_plus, c_minus;  // p, sampled but unused by the model
  Eigen::VectorXd demand;                 // p, non-VPP demand m(t)
  Eigen::VectorXd capacity;               // p, grid capacity K(t)
  bool l_low_relaxed = false;             // feasibility guard kicked in

  int block_dim() const { return 4 * horizon; }
  // Coupling data: M = [[I,-I],[-I,I]] in R^{2p x 2p}, b = (K - m; m).
  Eigen::MatrixXd coupling_m() const;
  Eigen::VectorXd coupling_b() const;
  // State-of-charge map S_i = [e+ R, -(1/e-) R] with R lower-triangular ones.
  Eigen::MatrixXd soc_map(int i) const;
};

VPPInstance gen_vpp(int n_players, int horizon, std::uint64_t seed);

// The built-in normalized 24-point demand curve, resampled linearly to p points.
Eigen::VectorXd demand_profile(int horizon);
Eigen::VectorXd demand_profile_from_csv(const std::string& path, int horizon);

// Product-space problem for the naive run: each agent column holds a full copy
// of all N player blocks (dim = 4p*N). Also exposes the aggregative split.
class VPPProblem : public AgentProblem, public AggregativeView {
 public:
  VPPProblem(VPPInstance inst, double qp_tol = 1e-10);

  int num_agents() const override { return inst_.n_players; }
  int dim() const override { return inst_.block_dim() * inst_.n_players; }
  Eigen::VectorXd resolvent(int i, double alpha, const Eigen::VectorXd& u) const override;
  Eigen::VectorXd forward(int i, const Eigen::VectorXd& u) const override;
  double lipschitz(int i) const override;

  Eigen::VectorXd forward_block(int i, const Eigen::VectorXd& local,
                                const Eigen::VectorXd& aggregate) const override;
  // Resolvent of the single diagonal block A_ii (QP over Omega_i + clamp).
  Eigen::VectorXd resolvent_block(int i, double alpha, const Eigen::VectorXd& zeta) const;

  const VPPInstance& instance() const { return inst_; }
  double qp_tol() const { return qp_tol_; }

 private:
  VPPInstance inst_;
  double qp_tol_;
  Eigen::MatrixXd coupling_m_;
  Eigen::VectorXd coupling_b_;
  std::vector<Eigen::MatrixXd> soc_;
  std::vector<double> lipschitz_;
};

std::unique_ptr<VPPProblem> vpp_problem(const VPPInstance& inst, double qp_tol = 1e-10);

// Max over players of the stationarity, dual-feasibility, and complementarity
// residuals of the equilibrium inclusion at (u, v); u and v hold one column per
// player (2p x N each).
double vpp_kkt_residual(const VPPInstance& inst, const Eigen::MatrixXd& u,
                        const Eigen::MatrixXd& v, double qp_tol = 1e-10);

// JSON round-trip for reproducibility (all sampled parameters persisted).
nlohmann::json to_json(const RobustLSInstance& inst);
nlohmann::json to_json(const MatrixGameInstance& inst);
nlohmann::json to_json(const VPPInstance& inst);
RobustLSInstance robust_ls_from_json(const nlohmann::json& j);
MatrixGameInstance matrix_game_from_json(const nlohmann::json& j);
VPPInstance vpp_from_json(const nlohmann::json& j);

}  // namespace opsplit
