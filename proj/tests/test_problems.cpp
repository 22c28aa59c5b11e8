#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "opsplit/numerics.hpp"
#include "opsplit/problems.hpp"

using namespace opsplit;

namespace {

Eigen::VectorXd random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// robust least squares
// ---------------------------------------------------------------------------

TEST_CASE("robust ls generation is reproducible and partitions evenly") {
  const RobustLSInstance a = gen_robust_ls(20, 6, 10, 77);
  const RobustLSInstance b = gen_robust_ls(20, 6, 10, 77);
  REQUIRE(a.n_agents == 10);
  CHECK(a.d == 20);
  CHECK(a.p == 6);
  for (int i = 0; i < 10; ++i) {
    CHECK(a.m_blocks[i].rows() == 2);  // 20 rows over 10 agents
    CHECK((a.m_blocks[i] - b.m_blocks[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.v_blocks[i] - b.v_blocks[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  const RobustLSInstance c = gen_robust_ls(10, 3, 7, 1);
  for (const auto& blk : c.m_blocks) CHECK(blk.rows() >= 1);
}

TEST_CASE("robust ls operators: identity resolvent and affine forward") {
  const RobustLSInstance inst = gen_robust_ls(12, 4, 3, 5);
  const auto problem = robust_ls_problem(inst);
  const int dim = inst.p + inst.d;
  REQUIRE(problem->dim() == dim);

  const Eigen::VectorXd z = random_vec(dim, 3);
  CHECK((problem->resolvent(1, 0.37, z) - z).cwiseAbs().maxCoeff() == 0.0);

  // constant term: value at zero is (0, -2*lambda*E_i^T vt_i)
  for (int i = 0; i < inst.n_agents; ++i) {
    const Eigen::VectorXd b0 = problem->forward(i, Eigen::VectorXd::Zero(dim));
    CHECK(b0.head(inst.p).cwiseAbs().maxCoeff() == 0.0);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(inst.d);
    expected.segment(inst.row_offsets[i], inst.m_blocks[i].rows()) =
        -2.0 * inst.lambda * inst.v_blocks[i];
    CHECK((b0.tail(inst.d) - expected).cwiseAbs().maxCoeff() < 1e-14);
  }

  // affinity + Lipschitz bound on random pairs
  for (int i = 0; i < inst.n_agents; ++i) {
    const double li = problem->lipschitz(i);
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd za = random_vec(dim, 100 + t);
      const Eigen::VectorXd zb = random_vec(dim, 200 + t);
      const Eigen::VectorXd diff = problem->forward(i, za) - problem->forward(i, zb);
      CHECK(diff.norm() <= li * (za - zb).norm() + 1e-10);
      // monotonicity of the affine map
      CHECK((za - zb).dot(diff) >= -1e-10);
    }
  }
}

TEST_CASE("robust ls oracle solves the stationarity system") {
  {
    RobustLSInstance inst;
    inst.n_agents = 1;
    inst.p = 1;
    inst.d = 1;
    inst.lambda = 3.0;
    inst.m_blocks = {Eigen::MatrixXd::Identity(1, 1)};
    inst.v_blocks = {Eigen::VectorXd::Ones(1)};
    inst.row_offsets = {0};
    const Eigen::VectorXd sol = robust_ls_solution(inst);
    CHECK(sol[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    RobustLSInstance inst;
    inst.n_agents = 1;
    inst.p = 3;
    inst.d = 3;
    inst.lambda = 3.0;
    inst.m_blocks = {Eigen::MatrixXd::Identity(3, 3)};
    inst.v_blocks = {Eigen::VectorXd::Zero(3)};
    inst.row_offsets = {0};
    CHECK(robust_ls_solution(inst).cwiseAbs().maxCoeff() < 1e-14);
  }
  {
    const RobustLSInstance inst = gen_robust_ls(15, 5, 4, 11);
    const Eigen::VectorXd zstar = robust_ls_solution(inst);
    const auto problem = robust_ls_problem(inst);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(inst.p + inst.d);
    for (int i = 0; i < inst.n_agents; ++i) sum += problem->forward(i, zstar);
    CHECK(sum.cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("robust ls symmetric part is positive semidefinite for lambda >= 1") {
  const RobustLSInstance inst = gen_robust_ls(10, 4, 2, 21);
  const auto problem = robust_ls_problem(inst);
  const int dim = inst.p + inst.d;
  for (int i = 0; i < inst.n_agents; ++i) {
    // recover the linear part by finite differencing the affine map
    Eigen::MatrixXd g(dim, dim);
    const Eigen::VectorXd b0 = problem->forward(i, Eigen::VectorXd::Zero(dim));
    for (int c = 0; c < dim; ++c)
      g.col(c) = problem->forward(i, Eigen::VectorXd::Unit(dim, c)) - b0;
    const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("robust ls csv ingestion standardizes columns") {
  const char* path = "rls_test_data.csv";
  {
    std::ofstream out(path);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ud(-3.0, 7.0);
    for (int r = 0; r < 12; ++r) {
      for (int c = 0; c < 4; ++c) out << ud(rng) << (c == 3 ? '\n' : ',');
    }
  }
  const RobustLSInstance inst = robust_ls_from_csv(path, 3, 3.0, true);
  std::remove(path);
  REQUIRE(inst.d == 12);
  REQUIRE(inst.p == 3);
  const Eigen::MatrixXd m = inst.stacked_m();
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(m.col(c).mean()) < 1e-12);
    CHECK(m.col(c).squaredNorm() / 12.0 == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(std::abs(inst.stacked_v().mean()) < 1e-12);
}

// ---------------------------------------------------------------------------
// matrix game
// ---------------------------------------------------------------------------

TEST_CASE("matrix game generation: diagonally-shifted positive blocks") {
  const MatrixGameInstance a = gen_matrix_game(8, 10, 13);
  const MatrixGameInstance b = gen_matrix_game(8, 10, 13);
  REQUIRE(a.n_agents == 10);
  REQUIRE(a.p == 8);
  for (int j = 0; j < 10; ++j) {
    CHECK((a.m[j] - b.m[j]).cwiseAbs().maxCoeff() == 0.0);
    // M_j = s_j I - K_j with K_j entrywise positive (entries scaled by j+1)
    // and s_j = 1.1 ||K_j||: off-diagonals are -K_j entries, and the shift
    // strictly dominates the norm, so the symmetric part is positive definite
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        if (r == c) continue;
        CHECK(a.m[j](r, c) < 0.0);
        CHECK(a.m[j](r, c) > -(j + 1.0));
      }
    const Eigen::MatrixXd sym = 0.5 * (a.m[j] + a.m[j].transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("matrix game operators: simplex resolvent and skew forward") {
  const MatrixGameInstance inst = gen_matrix_game(5, 3, 2);
  const auto problem = matrix_game_problem(inst);
  const int dim = 2 * inst.p;
  const Eigen::VectorXd z = random_vec(dim, 17);
  const Eigen::VectorXd r1 = problem->resolvent(0, 0.1, z);
  const Eigen::VectorXd r2 = problem->resolvent(0, 5.0, z);
  CHECK((r1 - r2).cwiseAbs().maxCoeff() == 0.0);  // independent of the step size
  CHECK(r1.head(inst.p).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r1.tail(inst.p).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r1.minCoeff() >= 0.0);

  for (int i = 0; i < inst.n_agents; ++i) {
    const double li = problem->lipschitz(i);
    CHECK(li == doctest::Approx(spectral_norm(inst.m[i])).epsilon(1e-9));
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd za = random_vec(dim, 300 + t);
      CHECK(std::abs(za.dot(problem->forward(i, za))) < 1e-10);  // skew
      const Eigen::VectorXd zb = random_vec(dim, 400 + t);
      const Eigen::VectorXd diff = problem->forward(i, za) - problem->forward(i, zb);
      CHECK(diff.norm() <= li * (za - zb).norm() + 1e-10);
    }
  }
}

TEST_CASE("matrix game equilibrium oracle") {
  {
    MatrixGameInstance inst;
    inst.n_agents = 1;
    inst.p = 2;
    Eigen::MatrixXd m(2, 2);
    m << 2.0, -1.0, -1.0, 2.0;
    inst.m = {m};
    const Eigen::VectorXd sol = matrix_game_solution(inst);
    CHECK(sol[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol[3] == doctest::Approx(0.5).epsilon(1e-12));
  }
  {
    const MatrixGameInstance inst = gen_matrix_game(8, 10, 4);
    const Eigen::VectorXd sol = matrix_game_solution(inst);
    const Eigen::VectorXd u = sol.head(8), v = sol.tail(8);
    CHECK(u.sum() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(u.minCoeff() > 1e-10);
    CHECK(v.minCoeff() > 1e-10);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(8, 8);
    for (const auto& mi : inst.m) m += mi;
    const Eigen::VectorXd mu = m * u;          // column player payoffs equalized
    const Eigen::VectorXd mtv = m.transpose() * v;  // row player payoffs equalized
    CHECK(mu.maxCoeff() - mu.minCoeff() <= 1e-8);
    CHECK(mtv.maxCoeff() - mtv.minCoeff() <= 1e-8);
  }
}

// ---------------------------------------------------------------------------
// power-bank coordination game
// ---------------------------------------------------------------------------

TEST_CASE("vpp generation: reproducible, capacity margin, parameter ranges") {
  const VPPInstance a = gen_vpp(6, 8, 31);
  const VPPInstance b = gen_vpp(6, 8, 31);
  REQUIRE(a.n_players == 6);
  REQUIRE(a.horizon == 8);
  for (int i = 0; i < 6; ++i) {
    CHECK((a.q_diag[i] - b.q_diag[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.q_diag[i].minCoeff() >= 0.1);
    CHECK(a.q_diag[i].maxCoeff() <= 4.0);
    CHECK(a.e_plus[i] > 0.5);
    CHECK(a.e_plus[i] < 1.0);
    CHECK(a.e_minus[i] > 0.5);
    CHECK(a.e_minus[i] < 1.0);
    CHECK(a.l_low[i].minCoeff() >= 0.0);
    CHECK((a.l_up[i] - a.l_low[i]).minCoeff() >= 0.0);
  }
  CHECK((a.capacity - a.demand).minCoeff() >= 0.55 - 1e-12);
  CHECK((a.demand - b.demand).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vpp forward block matches a hand-computed instance") {
  VPPInstance inst;
  inst.n_players = 2;
  inst.horizon = 1;
  inst.q_diag = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
  inst.p_cost = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
  inst.u_cap = {Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2)};
  inst.e_plus = {0.9, 0.9};
  inst.e_minus = {0.9, 0.9};
  inst.l_low = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  inst.l_up = {Eigen::VectorXd::Ones(1) * 10.0, Eigen::VectorXd::Ones(1) * 10.0};
  inst.c_plus = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  inst.c_minus = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  inst.demand = Eigen::VectorXd::Constant(1, 2.0);
  inst.capacity = Eigen::VectorXd::Constant(1, 5.0);
  const auto problem = vpp_problem(inst);

  const Eigen::VectorXd out =
      problem->forward_block(0, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4));
  CHECK(out[0] == doctest::Approx(2.0));   // demand enters the buy leg
  CHECK(out[1] == doctest::Approx(-2.0));  // and leaves the sell leg
  CHECK(out[2] == doctest::Approx(3.0));   // capacity minus demand
  CHECK(out[3] == doctest::Approx(2.0));   // demand

  // coupling blocks
  const Eigen::MatrixXd m = inst.coupling_m();
  Eigen::MatrixXd expected_m(2, 2);
  expected_m << 1.0, -1.0, -1.0, 1.0;
  CHECK((m - expected_m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vpp resolvent reduces to a clamp when the quadratic vanishes") {
  VPPInstance inst;
  inst.n_players = 1;
  inst.horizon = 1;
  inst.q_diag = {Eigen::VectorXd::Zero(2)};
  inst.p_cost = {Eigen::VectorXd::Zero(2)};
  inst.u_cap = {Eigen::VectorXd::Ones(2)};
  inst.e_plus = {1.0};
  inst.e_minus = {1.0};
  inst.l_low = {Eigen::VectorXd::Zero(1)};
  inst.l_up = {Eigen::VectorXd::Constant(1, 100.0)};
  inst.c_plus = {Eigen::VectorXd::Zero(1)};
  inst.c_minus = {Eigen::VectorXd::Zero(1)};
  inst.demand = Eigen::VectorXd::Ones(1);
  inst.capacity = Eigen::VectorXd::Constant(1, 2.0);
  const auto problem = vpp_problem(inst, 1e-12);

  Eigen::VectorXd zeta(4);
  zeta << 2.0, 0.3, -1.5, 0.7;  // u+ above cap, u- interior, v mixed signs
  const Eigen::VectorXd r = problem->resolvent_block(0, 0.5, zeta);
  CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r[1] == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(r[2] == doctest::Approx(0.0));  // dual block clamps at zero
  CHECK(r[3] == doctest::Approx(0.7));
}

TEST_CASE("vpp saddle-gradient coupling is 2*sqrt(2)-Lipschitz in (u, s)") {
  VPPInstance inst = gen_vpp(3, 4, 8);
  const Eigen::MatrixXd m = inst.coupling_m();
  Eigen::MatrixXd joint(2 * inst.horizon, 4 * inst.horizon);
  joint << m, m;  // map (u_i, s) -> M u_i + M s
  CHECK(spectral_norm(joint) <= 2.0 * std::sqrt(2.0) + 1e-9);
}

TEST_CASE("vpp kkt residual is positive away from equilibrium") {
  const VPPInstance inst = gen_vpp(4, 3, 12);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Zero(2 * inst.horizon, inst.n_players);
  const Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2 * inst.horizon, inst.n_players);
  CHECK(vpp_kkt_residual(inst, u, v) > 1e-6);
}

TEST_CASE("demand profile resampling") {
  const Eigen::VectorXd d24 = demand_profile(24);
  CHECK(d24.size() == 24);
  CHECK(d24.minCoeff() > 0.0);
  const Eigen::VectorXd d8 = demand_profile(8);
  CHECK(d8.size() == 8);
  // endpoints are preserved by linear resampling
  CHECK(d8[0] == doctest::Approx(d24[0]).epsilon(1e-12));
  CHECK(d8[7] == doctest::Approx(d24[23]).epsilon(1e-12));
}

TEST_CASE("instance json round-trips preserve every field") {
  {
    const RobustLSInstance a = gen_robust_ls(14, 5, 4, 42);
    const RobustLSInstance b = robust_ls_from_json(to_json(a));
    CHECK(a.lambda == b.lambda);
    CHECK(a.row_offsets == b.row_offsets);
    CHECK((a.stacked_m() - b.stacked_m()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.stacked_v() - b.stacked_v()).cwiseAbs().maxCoeff() == 0.0);
  }
  {
    const MatrixGameInstance a = gen_matrix_game(6, 4, 42);
    const MatrixGameInstance b = matrix_game_from_json(to_json(a));
    REQUIRE(b.m.size() == a.m.size());
    for (size_t i = 0; i < a.m.size(); ++i)
      CHECK((a.m[i] - b.m[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  {
    const VPPInstance a = gen_vpp(3, 5, 42);
    const VPPInstance b = vpp_from_json(to_json(a));
    CHECK(a.l_low_relaxed == b.l_low_relaxed);
    CHECK((a.demand - b.demand).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.capacity - b.capacity).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 3; ++i) {
      CHECK((a.q_diag[i] - b.q_diag[i]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a.p_cost[i] - b.p_cost[i]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a.u_cap[i] - b.u_cap[i]).cwiseAbs().maxCoeff() == 0.0);
      CHECK(a.e_plus[i] == b.e_plus[i]);
      CHECK(a.e_minus[i] == b.e_minus[i]);
      CHECK((a.l_low[i] - b.l_low[i]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a.l_up[i] - b.l_up[i]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a.c_plus[i] - b.c_plus[i]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a.c_minus[i] - b.c_minus[i]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("vpp resolvents stay feasible across seeds") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    const VPPInstance inst = gen_vpp(3, 4, seed);
    const auto problem = vpp_problem(inst);
    for (int i = 0; i < inst.n_players; ++i) {
      const Eigen::VectorXd zeta = random_vec(4 * inst.horizon, 1000 + seed * 10 + i);
      const Eigen::VectorXd r = problem->resolvent_block(i, 0.05, zeta);
      const Eigen::VectorXd u = r.head(2 * inst.horizon);
      CHECK(u.minCoeff() >= -1e-8);
      CHECK((inst.u_cap[i] - u).minCoeff() >= -1e-8);
      const Eigen::VectorXd soc = inst.soc_map(i) * u;
      CHECK((soc - inst.l_low[i]).minCoeff() >= -1e-7);
      CHECK((inst.l_up[i] - soc).minCoeff() >= -1e-7);
      CHECK(r.tail(2 * inst.horizon).minCoeff() >= 0.0);
    }
  }
}
