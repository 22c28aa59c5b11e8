#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "opsplit/metrics.hpp"

using namespace opsplit;

TEST_CASE("relative error against a replicated ground truth") {
  Eigen::VectorXd xstar(2);
  xstar << 3.0, 4.0;  // norm 5
  StackedPoint x(2, 2);
  x.col(0) = xstar;
  x.col(1) = xstar;
  CHECK(relative_error(x, xstar) == 0.0);

  x.col(1) << 3.0, 4.0 + 5.0;  // one agent off by norm 5
  // ||diff|| = 5 over denominator 5*sqrt(2)
  CHECK(relative_error(x, xstar) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));

  bool absolute = false;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  StackedPoint y(2, 1);
  y.col(0) << 0.6, 0.8;
  CHECK(relative_error(y, zero, &absolute) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(absolute);
}

TEST_CASE("weighted residual uses inverse step sizes per agent") {
  StackedPoint a(1, 2), b(1, 2);
  a << 1.0, 2.0;
  b << 0.0, 0.0;
  Eigen::VectorXd alphas(2);
  alphas << 0.25, 0.5;
  // sum_i (1/alpha_i) |dz_i|^2 = 4*1 + 2*4 = 12
  CHECK(normalized_residual(a, b, alphas) == doctest::Approx(std::sqrt(12.0)).epsilon(1e-14));
  CHECK_THROWS(normalized_residual(a, StackedPoint::Zero(1, 3), alphas));
}

TEST_CASE("consensus gap is the worst deviation from the mean") {
  StackedPoint x(2, 3);
  x.col(0) << 0.0, 0.0;
  x.col(1) << 3.0, 0.0;
  x.col(2) << 0.0, 3.0;
  // mean (1,1); deviations sqrt(2), sqrt(5), sqrt(5)
  CHECK(consensus_gap(x) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
  CHECK(consensus_gap(StackedPoint::Constant(3, 4, 2.5)) == 0.0);
}

TEST_CASE("trace csv round-trip with missing-value sentinels") {
  std::vector<TraceRecord> trace(3);
  for (int k = 0; k < 3; ++k) {
    auto& r = trace[k];
    r.run_id = "r1";
    r.algorithm = "alg1";
    r.problem = "robust_ls";
    r.graph_kind = "cycle";
    r.n_agents = 10;
    r.seed = 123456789ull;
    r.k = k;
    r.residual = k == 0 ? std::numeric_limits<double>::quiet_NaN() : 0.5 / k;
    r.relative_error = k == 0 ? std::numeric_limits<double>::quiet_NaN() : 1e-3 * k;
    r.consensus_gap = 0.25 * k;
    r.elapsed_ms = 10.0 * k;
  }
  std::stringstream ss;
  write_trace_csv(ss, trace);

  std::string header;
  std::getline(ss, header);
  CHECK(header ==
        "run_id,algorithm,problem,graph_kind,n_agents,seed,k,residual,relative_error,"
        "consensus_gap,elapsed_ms");
  std::string row0;
  std::getline(ss, row0);
  CHECK(row0 == "r1,alg1,robust_ls,cycle,10,123456789,0,,,0,0");

  ss.clear();
  ss.seekg(0);
  const auto back = read_trace_csv(ss);
  REQUIRE(back.size() == 3);
  CHECK(std::isnan(back[0].residual));
  CHECK(std::isnan(back[0].relative_error));
  CHECK(back[1].residual == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(back[2].relative_error == doctest::Approx(2e-3).epsilon(1e-15));
  CHECK(back[2].seed == 123456789ull);
  CHECK(back[2].elapsed_ms == 20.0);
}

TEST_CASE("trace csv readback keeps full double precision") {
  std::vector<TraceRecord> trace(1);
  trace[0].run_id = "r";
  trace[0].algorithm = "nids";
  trace[0].problem = "p";
  trace[0].graph_kind = "grid2d";
  trace[0].k = 7;
  trace[0].residual = 0.1234567890123456789;
  trace[0].consensus_gap = 1e-300;
  std::stringstream ss;
  write_trace_csv(ss, trace);
  const auto back = read_trace_csv(ss);
  REQUIRE(back.size() == 1);
  CHECK(back[0].residual == trace[0].residual);
  CHECK(back[0].consensus_gap == trace[0].consensus_gap);
}

TEST_CASE("trace csv rejects malformed input") {
  {
    std::stringstream ss("not,a,header\n");
    CHECK_THROWS(read_trace_csv(ss));
  }
  {
    std::stringstream ss(
        "run_id,algorithm,problem,graph_kind,n_agents,seed,k,residual,relative_error,"
        "consensus_gap,elapsed_ms\n"
        "r,a,p,cycle,2,0,5,,,0,0\n"
        "r,a,p,cycle,2,0,3,,,0,0\n");
    CHECK_THROWS(read_trace_csv(ss));  // iteration counter must increase
  }
  {
    std::stringstream ss(
        "run_id,algorithm,problem,graph_kind,n_agents,seed,k,residual,relative_error,"
        "consensus_gap,elapsed_ms\n"
        "r,a,p,cycle,2,0,1,,0\n");
    CHECK_THROWS(read_trace_csv(ss));  // wrong field count
  }
}
