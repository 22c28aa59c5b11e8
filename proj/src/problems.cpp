#include "opsplit/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "opsplit/numerics.hpp"

namespace opsplit {

namespace {

using json = nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from_json(const json& j) {
  std::vector<double> vals = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return {};
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

std::vector<int> partition_rows(int d, int n) {
  // contiguous blocks, as equal as possible, larger blocks first
  std::vector<int> sizes(n, d / n);
  for (int i = 0; i < d % n; ++i) ++sizes[i];
  return sizes;
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> row;
    double val;
    while (ss >> val) row.push_back(val);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty csv file: " + path);
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Robust least squares
// ---------------------------------------------------------------------------

Eigen::MatrixXd RobustLSInstance::stacked_m() const {
  Eigen::MatrixXd m(d, p);
  for (int i = 0; i < n_agents; ++i)
    m.middleRows(row_offsets[i], static_cast<int>(m_blocks[i].rows())) = m_blocks[i];
  return m;
}

Eigen::VectorXd RobustLSInstance::stacked_v() const {
  Eigen::VectorXd v(d);
  for (int i = 0; i < n_agents; ++i)
    v.segment(row_offsets[i], static_cast<int>(v_blocks[i].size())) = v_blocks[i];
  return v;
}

namespace {

RobustLSInstance partition_robust_ls(const Eigen::MatrixXd& m, const Eigen::VectorXd& vt,
                                     int n_agents, double lambda) {
  RobustLSInstance inst;
  inst.n_agents = n_agents;
  inst.d = static_cast<int>(m.rows());
  inst.p = static_cast<int>(m.cols());
  inst.lambda = lambda;
  const std::vector<int> sizes = partition_rows(inst.d, n_agents);
  int off = 0;
  for (int i = 0; i < n_agents; ++i) {
    if (sizes[i] == 0) throw std::invalid_argument("robust ls: more agents than data rows");
    inst.row_offsets.push_back(off);
    inst.m_blocks.push_back(m.middleRows(off, sizes[i]));
    inst.v_blocks.push_back(vt.segment(off, sizes[i]));
    off += sizes[i];
  }
  return inst;
}

}  // namespace

RobustLSInstance gen_robust_ls(int d, int p, int n_agents, std::uint64_t seed, double lambda) {
  if (d < p) throw std::invalid_argument("gen_robust_ls: requires d >= p");
  for (int attempt = 0; attempt < 5; ++attempt) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> n01(0.0, 1.0);
    std::normal_distribution<double> n_sig(0.0, 0.1);
    std::normal_distribution<double> n_eps(0.0, 0.01);
    Eigen::MatrixXd m(d, p);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < p; ++c) m(r, c) = n01(rng);
    Eigen::VectorXd ut(p);
    for (int c = 0; c < p; ++c) ut[c] = n_sig(rng);
    Eigen::VectorXd vt = m * ut;
    for (int r = 0; r < d; ++r) vt[r] += n_eps(rng);
    RobustLSInstance inst = partition_robust_ls(m, vt, n_agents, lambda);
    try {
      robust_ls_solution(inst);  // rank / solvability check
      return inst;
    } catch (const std::exception&) {
      continue;
    }
  }
  throw std::runtime_error("gen_robust_ls: no solvable instance after 5 attempts");
}

RobustLSInstance robust_ls_from_csv(const std::string& path, int n_agents, double lambda,
                                    bool standardize) {
  const auto rows = read_csv(path);
  const int d = static_cast<int>(rows.size());
  const int cols = static_cast<int>(rows[0].size());
  if (cols < 2) throw std::runtime_error("robust_ls_from_csv: need features plus a target column");
  Eigen::MatrixXd data(d, cols);
  for (int r = 0; r < d; ++r) {
    if (static_cast<int>(rows[r].size()) != cols)
      throw std::runtime_error("robust_ls_from_csv: ragged rows");
    for (int c = 0; c < cols; ++c) data(r, c) = rows[r][c];
  }
  if (standardize) {
    for (int c = 0; c < cols; ++c) {
      const double mean = data.col(c).mean();
      data.col(c).array() -= mean;
      const double sd = std::sqrt(data.col(c).squaredNorm() / d);
      if (sd > 0.0) data.col(c) /= sd;
    }
  }
  return partition_robust_ls(data.leftCols(cols - 1), data.col(cols - 1), n_agents, lambda);
}

Eigen::VectorXd robust_ls_solution(const RobustLSInstance& inst) {
  // stationarity: 2 M^T (M u - v) = 0 and -2(M u - v) - 2 lambda (v - vt) = 0
  const Eigen::MatrixXd m = inst.stacked_m();
  const Eigen::VectorXd vt = inst.stacked_v();
  const int p = inst.p, d = inst.d;
  Eigen::MatrixXd g(p + d, p + d);
  g.topLeftCorner(p, p) = 2.0 * m.transpose() * m;
  g.topRightCorner(p, d) = -2.0 * m.transpose();
  g.bottomLeftCorner(d, p) = -2.0 * m;
  g.bottomRightCorner(d, d) = 2.0 * (1.0 - inst.lambda) * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(p + d);
  h.tail(d) = -2.0 * inst.lambda * vt;
  return solve_linear(g, h);
}

namespace {

class RobustLSProblem : public AgentProblem {
 public:
  explicit RobustLSProblem(RobustLSInstance inst) : inst_(std::move(inst)) {
    for (int i = 0; i < inst_.n_agents; ++i) {
      // spectral norm of the linear part, restricted to (u, v_i) coordinates
      const Eigen::MatrixXd& mi = inst_.m_blocks[i];
      const int di = static_cast<int>(mi.rows());
      Eigen::MatrixXd g(inst_.p + di, inst_.p + di);
      g.topLeftCorner(inst_.p, inst_.p) = 2.0 * mi.transpose() * mi;
      g.topRightCorner(inst_.p, di) = -2.0 * mi.transpose();
      g.bottomLeftCorner(di, inst_.p) = 2.0 * mi;
      g.bottomRightCorner(di, di) =
          2.0 * (inst_.lambda - 1.0) * Eigen::MatrixXd::Identity(di, di);
      lipschitz_.push_back(spectral_norm(g));
    }
  }

  int num_agents() const override { return inst_.n_agents; }
  int dim() const override { return inst_.p + inst_.d; }

  Eigen::VectorXd resolvent(int, double, const Eigen::VectorXd& u) const override { return u; }

  Eigen::VectorXd forward(int i, const Eigen::VectorXd& z) const override {
    const Eigen::MatrixXd& mi = inst_.m_blocks[i];
    const int di = static_cast<int>(mi.rows());
    const int off = inst_.row_offsets[i];
    const Eigen::VectorXd u = z.head(inst_.p);
    const Eigen::VectorXd vi = z.segment(inst_.p + off, di);
    const Eigen::VectorXd miu = mi * u;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
    out.head(inst_.p) = 2.0 * mi.transpose() * (miu - vi);
    out.segment(inst_.p + off, di) =
        2.0 * miu + 2.0 * (inst_.lambda - 1.0) * vi - 2.0 * inst_.lambda * inst_.v_blocks[i];
    return out;
  }

  double lipschitz(int i) const override { return lipschitz_[i]; }

 private:
  RobustLSInstance inst_;
  std::vector<double> lipschitz_;
};

}  // namespace

std::unique_ptr<AgentProblem> robust_ls_problem(const RobustLSInstance& inst) {
  return std::make_unique<RobustLSProblem>(inst);
}

// ---------------------------------------------------------------------------
// Zero-sum matrix game
// ---------------------------------------------------------------------------

MatrixGameInstance gen_matrix_game(int p, int n_agents, std::uint64_t seed) {
  if (p < 2) throw std::invalid_argument("gen_matrix_game: requires p >= 2");
  MatrixGameInstance inst;
  inst.n_agents = n_agents;
  inst.p = p;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < n_agents; ++i) {
    Eigen::MatrixXd k(p, p);
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) k(r, c) = u01(rng);
    k *= static_cast<double>(i + 1);  // K_j = j L_j for agent j = 1..N
    const double s = 1.1 * spectral_norm(k);
    inst.m.push_back(s * Eigen::MatrixXd::Identity(p, p) - k);
  }
  return inst;
}

namespace {

class MatrixGameProblem : public AgentProblem {
 public:
  explicit MatrixGameProblem(MatrixGameInstance inst) : inst_(std::move(inst)) {
    for (const auto& mi : inst_.m) lipschitz_.push_back(spectral_norm(mi));
  }

  int num_agents() const override { return inst_.n_agents; }
  int dim() const override { return 2 * inst_.p; }

  Eigen::VectorXd resolvent(int, double, const Eigen::VectorXd& z) const override {
    Eigen::VectorXd out(dim());
    out.head(inst_.p) = project_simplex(z.head(inst_.p));
    out.tail(inst_.p) = project_simplex(z.tail(inst_.p));
    return out;
  }

  Eigen::VectorXd forward(int i, const Eigen::VectorXd& z) const override {
    Eigen::VectorXd out(dim());
    out.head(inst_.p) = inst_.m[i].transpose() * z.tail(inst_.p);
    out.tail(inst_.p) = -inst_.m[i] * z.head(inst_.p);
    return out;
  }

  double lipschitz(int i) const override { return lipschitz_[i]; }

 private:
  MatrixGameInstance inst_;
  std::vector<double> lipschitz_;
};

}  // namespace

std::unique_ptr<AgentProblem> matrix_game_problem(const MatrixGameInstance& inst) {
  return std::make_unique<MatrixGameProblem>(inst);
}

Eigen::VectorXd matrix_game_solution(const MatrixGameInstance& inst) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(inst.p, inst.p);
  for (const auto& mi : inst.m) m += mi;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(inst.p);
  // completely mixed equilibrium: M u* = value 1 and M^T v* = value 1
  const Eigen::VectorXd u0 = solve_linear(m, ones);
  const Eigen::VectorXd v0 = solve_linear(m.transpose(), ones);
  if (std::abs(u0.sum()) < 1e-14 || std::abs(v0.sum()) < 1e-14)
    throw std::runtime_error("matrix_game_solution: degenerate game value");
  const Eigen::VectorXd us = u0 / u0.sum();
  const Eigen::VectorXd vs = v0 / v0.sum();
  if (us.minCoeff() <= 1e-10 || vs.minCoeff() <= 1e-10)
    throw std::runtime_error("matrix_game_solution: game is not completely mixed");
  const double value = 1.0 / u0.sum();
  if ((m * us - value * ones).norm() > 1e-8 || (m.transpose() * vs - value * ones).norm() > 1e-8)
    throw std::runtime_error("matrix_game_solution: payoff equalization failed");
  Eigen::VectorXd z(2 * inst.p);
  z.head(inst.p) = us;
  z.tail(inst.p) = vs;
  return z;
}

// ---------------------------------------------------------------------------
// Virtual power plant
// ---------------------------------------------------------------------------

Eigen::MatrixXd VPPInstance::coupling_m() const {
  const int p = horizon;
  Eigen::MatrixXd m(2 * p, 2 * p);
  m.topLeftCorner(p, p) = Eigen::MatrixXd::Identity(p, p);
  m.topRightCorner(p, p) = -Eigen::MatrixXd::Identity(p, p);
  m.bottomLeftCorner(p, p) = -Eigen::MatrixXd::Identity(p, p);
  m.bottomRightCorner(p, p) = Eigen::MatrixXd::Identity(p, p);
  return m;
}

Eigen::VectorXd VPPInstance::coupling_b() const {
  Eigen::VectorXd b(2 * horizon);
  b.head(horizon) = capacity - demand;
  b.tail(horizon) = demand;
  return b;
}

Eigen::MatrixXd VPPInstance::soc_map(int i) const {
  const int p = horizon;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b <= a; ++b) r(a, b) = 1.0;
  Eigen::MatrixXd s(p, 2 * p);
  s.leftCols(p) = e_plus[i] * r;
  s.rightCols(p) = -(1.0 / e_minus[i]) * r;
  return s;
}

Eigen::VectorXd demand_profile(int horizon) {
  // normalized daily demand curve, 24 hourly points
  static const double kProfile[24] = {0.62, 0.58, 0.55, 0.54, 0.55, 0.60, 0.72, 0.85,
                                      0.92, 0.94, 0.93, 0.91, 0.90, 0.89, 0.88, 0.90,
                                      0.95, 1.00, 0.98, 0.93, 0.86, 0.78, 0.70, 0.65};
  if (horizon < 1) throw std::invalid_argument("demand_profile: horizon must be positive");
  Eigen::VectorXd m(horizon);
  if (horizon == 1) {
    double acc = 0.0;
    for (double v : kProfile) acc += v;
    m[0] = acc / 24.0;
    return m;
  }
  for (int t = 0; t < horizon; ++t) {
    const double pos = 23.0 * t / (horizon - 1);
    const int lo = static_cast<int>(pos);
    const int hi = std::min(lo + 1, 23);
    const double frac = pos - lo;
    m[t] = (1.0 - frac) * kProfile[lo] + frac * kProfile[hi];
  }
  return m;
}

Eigen::VectorXd demand_profile_from_csv(const std::string& path, int horizon) {
  const auto rows = read_csv(path);
  std::vector<double> vals;
  for (const auto& row : rows)
    for (double v : row) vals.push_back(v);
  const int n = static_cast<int>(vals.size());
  if (n < 2) throw std::runtime_error("demand profile csv needs at least 2 values");
  Eigen::VectorXd m(horizon);
  for (int t = 0; t < horizon; ++t) {
    const double pos = horizon > 1 ? static_cast<double>(n - 1) * t / (horizon - 1) : 0.0;
    const int lo = static_cast<int>(pos);
    const int hi = std::min(lo + 1, n - 1);
    const double frac = pos - lo;
    m[t] = (1.0 - frac) * vals[lo] + frac * vals[hi];
  }
  return m;
}

namespace {

// Charge-state interval reachability: can the box + state-of-charge band be
// satisfied simultaneously?
bool soc_feasible(const Eigen::VectorXd& cap, double ep, double em, const Eigen::VectorXd& llow,
                  const Eigen::VectorXd& lup) {
  const int p = static_cast<int>(llow.size());
  double lo = 0.0, hi = 0.0;
  for (int t = 0; t < p; ++t) {
    lo -= (1.0 / em) * cap[p + t];
    hi += ep * cap[t];
    lo = std::max(lo, llow[t]);
    hi = std::min(hi, lup[t]);
    if (lo > hi + 1e-12) return false;
  }
  return true;
}

}  // namespace

VPPInstance gen_vpp(int n_players, int horizon, std::uint64_t seed) {
  if (n_players < 2 || horizon < 2)
    throw std::invalid_argument("gen_vpp: requires N >= 2 and horizon >= 2");
  VPPInstance inst;
  inst.n_players = n_players;
  inst.horizon = horizon;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> q_dist(0.1, 4.0);
  std::uniform_real_distribution<double> p_dist(0.2, 2.0);
  std::uniform_real_distribution<double> cap_dist(1.0, 5.0);
  std::uniform_real_distribution<double> eff_dist(0.5, 1.0);
  std::uniform_real_distribution<double> low_dist(0.0, 1.0);
  std::uniform_real_distribution<double> up_dist(1.0, 3.0);
  std::uniform_real_distribution<double> cp_dist(0.0, 2.0);
  std::uniform_real_distribution<double> cm_dist(-2.0, 0.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const int p = horizon;
  for (int i = 0; i < n_players; ++i) {
    Eigen::VectorXd q(2 * p), pc(2 * p), cap(2 * p), llow(p), lup(p), cp(p), cm(p);
    for (int t = 0; t < 2 * p; ++t) q[t] = q_dist(rng);
    for (int t = 0; t < 2 * p; ++t) pc[t] = p_dist(rng);
    for (int t = 0; t < 2 * p; ++t) cap[t] = u01(rng) < 0.8 ? cap_dist(rng) : 0.0;
    const double ep = eff_dist(rng);
    const double em = eff_dist(rng);
    for (int t = 0; t < p; ++t) llow[t] = low_dist(rng);
    for (int t = 0; t < p; ++t) lup[t] = up_dist(rng);
    for (int t = 0; t < p; ++t) cp[t] = cp_dist(rng);
    for (int t = 0; t < p; ++t) cm[t] = cm_dist(rng);
    if (!soc_feasible(cap, ep, em, llow, lup)) {
      llow.setZero();  // feasibility repair: zero state of charge is then reachable
      inst.l_low_relaxed = true;
    }
    inst.q_diag.push_back(q);
    inst.p_cost.push_back(pc);
    inst.u_cap.push_back(cap);
    inst.e_plus.push_back(ep);
    inst.e_minus.push_back(em);
    inst.l_low.push_back(llow);
    inst.l_up.push_back(lup);
    inst.c_plus.push_back(cp);
    inst.c_minus.push_back(cm);
  }
  inst.demand = demand_profile(p);
  inst.capacity = Eigen::VectorXd::Constant(p, 0.55 + inst.demand.maxCoeff());

  // Joint feasibility of the shared grid constraint. Each player's cheapest
  // way to honor its charge-state lower bounds is just-in-time charging of
  // the running maximum of l_low; if the aggregate of those mandatory draws
  // cannot fit well inside the per-period grid margin K - m, the duals of
  // the coupling constraint have no finite equilibrium value. Scale every
  // l_low down uniformly so the mandatory draw uses at most half the margin.
  Eigen::VectorXd mandatory = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < n_players; ++i) {
    double reached = 0.0;
    for (int t = 0; t < p; ++t) {
      const double need = std::max(reached, inst.l_low[i][t]);
      mandatory[t] += (need - reached) / inst.e_plus[i];
      reached = need;
    }
  }
  double worst_ratio = 0.0;
  for (int t = 0; t < p; ++t)
    worst_ratio = std::max(worst_ratio, mandatory[t] / (inst.capacity[t] - inst.demand[t]));
  if (worst_ratio > 0.5) {
    const double scale = 0.5 / worst_ratio;
    for (auto& l : inst.l_low) l *= scale;
    inst.l_low_relaxed = true;
  }
  return inst;
}

VPPProblem::VPPProblem(VPPInstance inst, double qp_tol)
    : inst_(std::move(inst)), qp_tol_(qp_tol) {
  coupling_m_ = inst_.coupling_m();
  coupling_b_ = inst_.coupling_b();
  const int n = inst_.n_players;
  const int twop = 2 * inst_.horizon;
  for (int i = 0; i < n; ++i) soc_.push_back(inst_.soc_map(i));
  // linear part of B_i over one agent's full copy (all N blocks of (u_j, v_j))
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * twop, 2 * twop * n);
    for (int j = 0; j < n; ++j) {
      g.block(0, 4 * inst_.horizon * j, twop, twop) += coupling_m_;            // aggregate term
      g.block(twop, 4 * inst_.horizon * j, twop, twop) -= coupling_m_;         // b - M s
    }
    g.block(0, 4 * inst_.horizon * i, twop, twop) += coupling_m_;              // own-block term
    g.block(0, 4 * inst_.horizon * i + twop, twop, twop) += coupling_m_;       // dual term
    lipschitz_.push_back(spectral_norm(g));
  }
}

Eigen::VectorXd VPPProblem::resolvent_block(int i, double alpha,
                                            const Eigen::VectorXd& zeta) const {
  const int twop = 2 * inst_.horizon;
  QPProblem qp;
  qp.p = Eigen::MatrixXd::Identity(twop, twop);
  qp.p.diagonal() += 2.0 * alpha * inst_.q_diag[i];
  qp.q = alpha * inst_.p_cost[i] - zeta.head(twop);
  qp.lower = Eigen::VectorXd::Zero(twop);
  qp.upper = inst_.u_cap[i];
  qp.s = soc_[i];
  qp.band_lower = inst_.l_low[i];
  qp.band_upper = inst_.l_up[i];
  QPResult res = qp_solve(qp, qp_tol_);
  if (!res.converged) throw std::runtime_error("vpp resolvent: inner qp did not converge");
  Eigen::VectorXd out(4 * inst_.horizon);
  out.head(twop) = res.x;
  out.tail(twop) = zeta.tail(twop).cwiseMax(0.0);
  return out;
}

Eigen::VectorXd VPPProblem::resolvent(int i, double alpha, const Eigen::VectorXd& u) const {
  Eigen::VectorXd out = u;
  const int bd = inst_.block_dim();
  out.segment(bd * i, bd) = resolvent_block(i, alpha, u.segment(bd * i, bd));
  return out;
}

Eigen::VectorXd VPPProblem::forward_block(int i, const Eigen::VectorXd& local,
                                          const Eigen::VectorXd& aggregate) const {
  const int p = inst_.horizon;
  const int twop = 2 * p;
  const Eigen::VectorXd ui = local.head(twop);
  const Eigen::VectorXd vi = local.tail(twop);
  const Eigen::VectorXd s = aggregate.head(twop);
  Eigen::VectorXd out(4 * p);
  Eigen::VectorXd top = coupling_m_ * (s + ui + vi);
  top.head(p) += inst_.demand;
  top.tail(p) -= inst_.demand;
  out.head(twop) = top;
  out.tail(twop) = coupling_b_ - coupling_m_ * s;
  return out;
}

Eigen::VectorXd VPPProblem::forward(int i, const Eigen::VectorXd& z) const {
  const int bd = inst_.block_dim();
  Eigen::VectorXd aggregate = Eigen::VectorXd::Zero(bd);
  for (int j = 0; j < inst_.n_players; ++j) aggregate += z.segment(bd * j, bd);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
  out.segment(bd * i, bd) = forward_block(i, z.segment(bd * i, bd), aggregate);
  return out;
}

double VPPProblem::lipschitz(int i) const { return lipschitz_[i]; }

std::unique_ptr<VPPProblem> vpp_problem(const VPPInstance& inst, double qp_tol) {
  return std::make_unique<VPPProblem>(inst, qp_tol);
}

double vpp_kkt_residual(const VPPInstance& inst, const Eigen::MatrixXd& u,
                        const Eigen::MatrixXd& v, double qp_tol) {
  const int p = inst.horizon;
  const int twop = 2 * p;
  if (u.rows() != twop || v.rows() != twop || u.cols() != inst.n_players ||
      v.cols() != inst.n_players)
    throw std::invalid_argument("vpp_kkt_residual: shape mismatch");
  const Eigen::MatrixXd m = inst.coupling_m();
  const Eigen::VectorXd b = inst.coupling_b();
  const Eigen::VectorXd s = u.rowwise().sum();
  const Eigen::VectorXd ms_b = m * s - b;

  double worst = 0.0;
  for (int i = 0; i < inst.n_players; ++i) {
    Eigen::VectorXd grad = 2.0 * inst.q_diag[i].cwiseProduct(u.col(i)) + inst.p_cost[i] +
                           m * (s + u.col(i) + v.col(i));
    grad.head(p) += inst.demand;
    grad.tail(p) -= inst.demand;
    // projected-gradient residual over Omega_i
    QPProblem qp;
    qp.p = Eigen::MatrixXd::Identity(twop, twop);
    qp.q = -(u.col(i) - grad);
    qp.lower = Eigen::VectorXd::Zero(twop);
    qp.upper = inst.u_cap[i];
    qp.s = inst.soc_map(i);
    qp.band_lower = inst.l_low[i];
    qp.band_upper = inst.l_up[i];
    QPResult proj = qp_solve(qp, qp_tol);
    const double r1 = (u.col(i) - proj.x).norm();
    const double r2 = (v.col(i) - (v.col(i) + ms_b).cwiseMax(0.0)).norm();
    const double comp = std::abs(v.col(i).dot(ms_b));
    worst = std::max({worst, r1, r2, comp});
  }
  return worst;
}

// ---------------------------------------------------------------------------
// JSON round-trips
// ---------------------------------------------------------------------------

json to_json(const RobustLSInstance& inst) {
  json j;
  j["kind"] = "robust_ls";
  j["n_agents"] = inst.n_agents;
  j["p"] = inst.p;
  j["d"] = inst.d;
  j["lambda"] = inst.lambda;
  j["row_offsets"] = inst.row_offsets;
  j["m_blocks"] = json::array();
  j["v_blocks"] = json::array();
  for (int i = 0; i < inst.n_agents; ++i) {
    j["m_blocks"].push_back(mat_to_json(inst.m_blocks[i]));
    j["v_blocks"].push_back(vec_to_json(inst.v_blocks[i]));
  }
  return j;
}

RobustLSInstance robust_ls_from_json(const json& j) {
  RobustLSInstance inst;
  inst.n_agents = j.at("n_agents").get<int>();
  inst.p = j.at("p").get<int>();
  inst.d = j.at("d").get<int>();
  inst.lambda = j.at("lambda").get<double>();
  inst.row_offsets = j.at("row_offsets").get<std::vector<int>>();
  for (const auto& b : j.at("m_blocks")) inst.m_blocks.push_back(mat_from_json(b));
  for (const auto& b : j.at("v_blocks")) inst.v_blocks.push_back(vec_from_json(b));
  return inst;
}

json to_json(const MatrixGameInstance& inst) {
  json j;
  j["kind"] = "matrix_game";
  j["n_agents"] = inst.n_agents;
  j["p"] = inst.p;
  j["m"] = json::array();
  for (const auto& mi : inst.m) j["m"].push_back(mat_to_json(mi));
  return j;
}

MatrixGameInstance matrix_game_from_json(const json& j) {
  MatrixGameInstance inst;
  inst.n_agents = j.at("n_agents").get<int>();
  inst.p = j.at("p").get<int>();
  for (const auto& mi : j.at("m")) inst.m.push_back(mat_from_json(mi));
  return inst;
}

json to_json(const VPPInstance& inst) {
  json j;
  j["kind"] = "vpp";
  j["n_players"] = inst.n_players;
  j["horizon"] = inst.horizon;
  j["e_plus"] = inst.e_plus;
  j["e_minus"] = inst.e_minus;
  j["demand"] = vec_to_json(inst.demand);
  j["capacity"] = vec_to_json(inst.capacity);
  j["l_low_relaxed"] = inst.l_low_relaxed;
  for (const char* key : {"q_diag", "p_cost", "u_cap", "l_low", "l_up", "c_plus", "c_minus"})
    j[key] = json::array();
  for (int i = 0; i < inst.n_players; ++i) {
    j["q_diag"].push_back(vec_to_json(inst.q_diag[i]));
    j["p_cost"].push_back(vec_to_json(inst.p_cost[i]));
    j["u_cap"].push_back(vec_to_json(inst.u_cap[i]));
    j["l_low"].push_back(vec_to_json(inst.l_low[i]));
    j["l_up"].push_back(vec_to_json(inst.l_up[i]));
    j["c_plus"].push_back(vec_to_json(inst.c_plus[i]));
    j["c_minus"].push_back(vec_to_json(inst.c_minus[i]));
  }
  return j;
}

VPPInstance vpp_from_json(const json& j) {
  VPPInstance inst;
  inst.n_players = j.at("n_players").get<int>();
  inst.horizon = j.at("horizon").get<int>();
  inst.e_plus = j.at("e_plus").get<std::vector<double>>();
  inst.e_minus = j.at("e_minus").get<std::vector<double>>();
  inst.demand = vec_from_json(j.at("demand"));
  inst.capacity = vec_from_json(j.at("capacity"));
  inst.l_low_relaxed = j.value("l_low_relaxed", false);
  for (int i = 0; i < inst.n_players; ++i) {
    inst.q_diag.push_back(vec_from_json(j.at("q_diag")[i]));
    inst.p_cost.push_back(vec_from_json(j.at("p_cost")[i]));
    inst.u_cap.push_back(vec_from_json(j.at("u_cap")[i]));
    inst.l_low.push_back(vec_from_json(j.at("l_low")[i]));
    inst.l_up.push_back(vec_from_json(j.at("l_up")[i]));
    inst.c_plus.push_back(vec_from_json(j.at("c_plus")[i]));
    inst.c_minus.push_back(vec_from_json(j.at("c_minus")[i]));
  }
  return inst;
}

}  // namespace opsplit
