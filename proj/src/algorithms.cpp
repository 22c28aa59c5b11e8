#include "opsplit/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "opsplit/numerics.hpp"

namespace opsplit {

Algorithm parse_algorithm(const std::string& name) {
  if (name == "alg1") return Algorithm::alg1;
  if (name == "alg2") return Algorithm::alg2;
  if (name == "pg_extra") return Algorithm::pg_extra;
  if (name == "pdtr") return Algorithm::pdtr;
  if (name == "nids") return Algorithm::nids;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string to_string(Algorithm alg) {
  switch (alg) {
    case Algorithm::alg1: return "alg1";
    case Algorithm::alg2: return "alg2";
    case Algorithm::pg_extra: return "pg_extra";
    case Algorithm::pdtr: return "pdtr";
    case Algorithm::nids: return "nids";
  }
  return "alg1";
}

Eigen::MatrixXd make_w_tilde(const MixingMatrix& mix, const Eigen::VectorXd& alphas,
                             double beta) {
  if (alphas.size() != mix.n) throw std::invalid_argument("make_w_tilde: alpha count mismatch");
  const Eigen::MatrixXd gap = Eigen::MatrixXd::Identity(mix.n, mix.n) - mix.w;
  return Eigen::MatrixXd::Identity(mix.n, mix.n) -
         (beta / 2.0) * (alphas.asDiagonal() * gap);
}

namespace {

StackedPoint apply_resolvent(const AgentProblem& problem, const Eigen::VectorXd& alphas,
                             const StackedPoint& z) {
  StackedPoint x(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.cols(); ++i)
    x.col(i) = problem.resolvent(static_cast<int>(i), alphas[i], z.col(i));
  return x;
}

StackedPoint apply_forward(const AgentProblem& problem, const StackedPoint& y) {
  StackedPoint b(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.cols(); ++i)
    b.col(i) = problem.forward(static_cast<int>(i), y.col(i));
  return b;
}

void check_shape(const AgentProblem& problem, const StackedPoint& pt, const char* what) {
  if (pt.rows() != problem.dim() || pt.cols() != problem.num_agents())
    throw std::invalid_argument(std::string(what) + ": expected dim x n_agents stacked point");
}

}  // namespace

// ---------------------------------------------------------------------------
// Main scheme
// ---------------------------------------------------------------------------

Alg1State alg1_init(const AgentProblem& problem, const Eigen::MatrixXd& w_tilde,
                    const Eigen::VectorXd& alphas, const StackedPoint& y0,
                    const StackedPoint& z0) {
  (void)w_tilde;
  check_shape(problem, y0, "alg1_init y0");
  check_shape(problem, z0, "alg1_init z0");
  if (alphas.size() != problem.num_agents() || alphas.minCoeff() <= 0.0)
    throw std::invalid_argument("alg1_init: invalid step sizes");

  Alg1State s;
  const StackedPoint by0 = apply_forward(problem, y0);  // v^0 = B(y^0)
  const StackedPoint x0 = apply_resolvent(problem, alphas, z0);
  const StackedPoint y1 = 2.0 * x0 - z0 - by0 * alphas.asDiagonal();
  const StackedPoint z1 = y1 + z0 - x0;
  s.x_prev = x0;
  s.x_cur = apply_resolvent(problem, alphas, z1);
  s.y_prev = y0;
  s.y_cur = y1;
  s.z_prev = z0;
  s.z_cur = z1;
  s.by_prev = by0;
  s.v_prev = by0;
  s.k = 1;
  return s;
}

StackedPoint alg1_z_update_matrix(const StackedPoint& z, const StackedPoint& x_cur,
                                  const StackedPoint& x_prev, const StackedPoint& v_cur,
                                  const StackedPoint& v_prev, const Eigen::MatrixXd& w_tilde,
                                  const Eigen::VectorXd& alphas) {
  const StackedPoint inner = 2.0 * x_cur - x_prev - (v_cur - v_prev) * alphas.asDiagonal();
  return z - x_cur + inner * w_tilde.transpose();
}

StackedPoint alg1_z_update_local(const StackedPoint& z, const StackedPoint& x_cur,
                                 const StackedPoint& x_prev, const StackedPoint& v_cur,
                                 const StackedPoint& v_prev, const CommGraph& graph,
                                 const MixingMatrix& mix, const Eigen::VectorXd& alphas,
                                 double beta) {
  StackedPoint out(z.rows(), z.cols());
  for (int i = 0; i < graph.n; ++i) {
    // each agent needs only alpha_i, row i of W, and its neighbours' values
    Eigen::VectorXd acc = z.col(i) - x_cur.col(i);
    const double wii = 1.0 - (beta / 2.0) * alphas[i] * (1.0 - mix.w(i, i));
    acc += wii * (2.0 * x_cur.col(i) - x_prev.col(i) - alphas[i] * (v_cur.col(i) - v_prev.col(i)));
    for (int j : graph.adj[i]) {
      const double wij = (beta / 2.0) * alphas[i] * mix.w(i, j);
      acc += wij * (2.0 * x_cur.col(j) - x_prev.col(j) - alphas[j] * (v_cur.col(j) - v_prev.col(j)));
    }
    out.col(i) = acc;
  }
  return out;
}

void alg1_step(Alg1State& s, const AgentProblem& problem, const Eigen::MatrixXd& w_tilde,
               const Eigen::VectorXd& alphas) {
  const StackedPoint by_cur = apply_forward(problem, s.y_cur);
  const StackedPoint v_cur = 2.0 * by_cur - s.by_prev;
  StackedPoint z_next =
      alg1_z_update_matrix(s.z_cur, s.x_cur, s.x_prev, v_cur, s.v_prev, w_tilde, alphas);
  StackedPoint x_next = apply_resolvent(problem, alphas, z_next);
  StackedPoint y_next = s.x_cur + z_next - s.z_cur;

  s.x_prev = std::move(s.x_cur);
  s.x_cur = std::move(x_next);
  s.y_prev = std::move(s.y_cur);
  s.y_cur = std::move(y_next);
  s.z_prev = std::move(s.z_cur);
  s.z_cur = std::move(z_next);
  s.by_prev = by_cur;
  s.v_prev = v_cur;
  ++s.k;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

BaselineState baseline_init_weighted(const AgentProblem& problem, const Eigen::VectorXd& alphas,
                                     const StackedPoint& z0) {
  check_shape(problem, z0, "baseline init z0");
  BaselineState s;
  s.x_cur = apply_resolvent(problem, alphas, z0);
  s.x_prev = s.x_cur;
  s.z_prev = z0;
  s.z_cur = z0;
  s.bx_prev = apply_forward(problem, s.x_cur);
  // v^{-1} = 0 so the first z-update applies the full -alpha*B(x^0) forward
  // term; with v^{-1} = v^0 the forward contribution would cancel and every
  // consensus initial point would be a spurious fixed point.
  s.v_prev = StackedPoint::Zero(z0.rows(), z0.cols());
  s.k = 0;
  return s;
}

BaselineState baseline_init_homogeneous(const AgentProblem& problem, double alpha,
                                        const StackedPoint& z0) {
  return baseline_init_weighted(
      problem, Eigen::VectorXd::Constant(problem.num_agents(), alpha), z0);
}

namespace {

void baseline_shift(BaselineState& s, StackedPoint z_next, StackedPoint x_next,
                    StackedPoint bx_cur, StackedPoint v_cur) {
  s.x_prev = std::move(s.x_cur);
  s.x_cur = std::move(x_next);
  s.z_prev = std::move(s.z_cur);
  s.z_cur = std::move(z_next);
  s.bx_prev = std::move(bx_cur);
  s.v_prev = std::move(v_cur);
  ++s.k;
}

void extra_style_step(BaselineState& s, const AgentProblem& problem, const Eigen::MatrixXd& w,
                      double alpha, bool extragradient) {
  const Eigen::Index n = w.rows();
  const Eigen::MatrixXd w_bar = 0.5 * (Eigen::MatrixXd::Identity(n, n) + w);
  StackedPoint bx_cur = apply_forward(problem, s.x_cur);
  StackedPoint v_cur = extragradient ? StackedPoint(2.0 * bx_cur - s.bx_prev) : bx_cur;
  StackedPoint z_next = s.z_cur + s.x_cur * w.transpose() - s.x_prev * w_bar.transpose() -
                        alpha * (v_cur - s.v_prev);
  StackedPoint x_next = apply_resolvent(
      problem, Eigen::VectorXd::Constant(problem.num_agents(), alpha), z_next);
  baseline_shift(s, std::move(z_next), std::move(x_next), std::move(bx_cur), std::move(v_cur));
}

}  // namespace

void pg_extra_step(BaselineState& s, const AgentProblem& problem, const Eigen::MatrixXd& w,
                   double alpha) {
  extra_style_step(s, problem, w, alpha, false);
}

void pdtr_step(BaselineState& s, const AgentProblem& problem, const Eigen::MatrixXd& w,
               double alpha) {
  extra_style_step(s, problem, w, alpha, true);
}

void nids_step(BaselineState& s, const AgentProblem& problem, const Eigen::MatrixXd& w_tilde,
               const Eigen::VectorXd& alphas) {
  StackedPoint bx_cur = apply_forward(problem, s.x_cur);
  StackedPoint v_cur = bx_cur;
  StackedPoint z_next =
      alg1_z_update_matrix(s.z_cur, s.x_cur, s.x_prev, v_cur, s.v_prev, w_tilde, alphas);
  StackedPoint x_next = apply_resolvent(problem, alphas, z_next);
  baseline_shift(s, std::move(z_next), std::move(x_next), std::move(bx_cur), std::move(v_cur));
}

double pdtr_step_size(const AgentProblem& problem, const MixingMatrix& mix, double safety) {
  double lmax = 0.0;
  for (int i = 0; i < problem.num_agents(); ++i) lmax = std::max(lmax, problem.lipschitz(i));
  if (lmax <= 0.0) lmax = 1.0;
  return safety * (1.0 + lambda_min(mix.w)) / (4.0 * lmax);
}

// ---------------------------------------------------------------------------
// Memory-efficient engine
// ---------------------------------------------------------------------------

int Alg2Engine::idx(int i, int j) const {
  const auto& row = two_hop_[i];
  const auto it = std::lower_bound(row.begin(), row.end(), j);
  if (it == row.end() || *it != j)
    throw std::logic_error("alg2: y-block outside the two-hop neighborhood requested");
  return static_cast<int>(it - row.begin());
}

Alg2Engine::Alg2Engine(const VPPProblem& problem, const CommGraph& graph,
                       const MixingMatrix& mix, const Eigen::VectorXd& alphas, double beta,
                       const StackedPoint& y0, const StackedPoint& z0)
    : problem_(problem), n_(problem.num_agents()), bd_(problem.instance().block_dim()),
      alphas_(alphas) {
  if (graph.n != n_ || mix.n != n_) throw std::invalid_argument("alg2: size mismatch");
  check_shape(problem, y0, "alg2 y0");
  check_shape(problem, z0, "alg2 z0");
  const NeighborSets ns = neighbor_sets(graph);
  one_hop_ = ns.one_hop;
  two_hop_ = ns.two_hop;
  is_neighbor_.assign(n_, std::vector<char>(n_, 0));
  for (int i = 0; i < n_; ++i)
    for (int j : one_hop_[i]) is_neighbor_[i][j] = 1;
  // The three-case update reads y_{lj} from neighbours l for every stored
  // target j; that block must itself be stored by l.
  for (int i = 0; i < n_; ++i)
    for (int j : two_hop_[i]) {
      if (is_neighbor_[i][j]) continue;
      for (int l : one_hop_[i])
        if (l != i && !ns.in_two_hop(l, j))
          throw std::invalid_argument(
              "alg2: graph not supported; a required y-block falls outside a "
              "neighbour's two-hop storage");
    }
  w_tilde_ = make_w_tilde(mix, alphas, beta);

  auto block = [this](const StackedPoint& pt, int i, int j) {
    return Eigen::VectorXd(pt.col(i).segment(bd_ * j, bd_));
  };

  // v^0 = B(y^0) diagonal blocks
  Eigen::MatrixXd v0(bd_, n_), x0(bd_, n_), y1_ii(bd_, n_), z1(bd_, n_), x1(bd_, n_);
  for (int i = 0; i < n_; ++i) {
    Eigen::VectorXd agg = Eigen::VectorXd::Zero(bd_);
    for (int j = 0; j < n_; ++j) agg += block(y0, i, j);
    v0.col(i) = problem_.forward_block(i, block(y0, i, i), agg);
    x0.col(i) = problem_.resolvent_block(i, alphas_[i], block(z0, i, i));
    y1_ii.col(i) = 2.0 * x0.col(i) - block(z0, i, i) - alphas_[i] * v0.col(i);
    z1.col(i) = block(z0, i, i) + y1_ii.col(i) - x0.col(i);
    x1.col(i) = problem_.resolvent_block(i, alphas_[i], z1.col(i));
  }

  // y^1_{ij} = z^0_{ij} off the diagonal. The initial y^0 enters the
  // iteration only through the forward evaluation (diagonal block and the
  // aggregate ybar^0); the mixing sums at k = 1 read x^0 = z^0 off the
  // diagonal, so the k-1 recursion slots are seeded with z^0 blocks.
  y_prev_.resize(n_);
  y_cur_.resize(n_);
  mu_prev_.setZero(bd_, n_);
  mu_cur_.setZero(bd_, n_);
  ybar_prev_.setZero(bd_, n_);
  ybar_cur_.setZero(bd_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j : two_hop_[i]) {
      y_prev_[i].push_back(j == i ? block(y0, i, i) : block(z0, i, j));
      y_cur_[i].push_back(j == i ? Eigen::VectorXd(y1_ii.col(i)) : block(z0, i, j));
    }
    for (int j = 0; j < n_; ++j) {
      const Eigen::VectorXd yj1 = j == i ? Eigen::VectorXd(y1_ii.col(i)) : block(z0, i, j);
      ybar_prev_.col(i) += block(y0, i, j);
      ybar_cur_.col(i) += yj1;
      if (!is_neighbor_[i][j]) {
        mu_prev_.col(i) += block(z0, i, j);
        mu_cur_.col(i) += yj1;
      }
    }
  }

  x_prev_ = x0;
  x_cur_ = x1;
  z_prev_.resize(bd_, n_);
  for (int i = 0; i < n_; ++i) z_prev_.col(i) = block(z0, i, i);
  z_cur_ = z1;
  v_prev_ = v0;
  k_ = 1;
}

void Alg2Engine::step() {
  // v^k
  Eigen::MatrixXd v_k(bd_, n_);
  for (int i = 0; i < n_; ++i) {
    const Eigen::VectorXd& yii_cur = y_cur_[i][idx(i, i)];
    const Eigen::VectorXd& yii_prev = y_prev_[i][idx(i, i)];
    v_k.col(i) = 2.0 * problem_.forward_block(i, yii_cur, ybar_cur_.col(i)) -
                 problem_.forward_block(i, yii_prev, ybar_prev_.col(i));
  }

  // z^{k+1} diagonal blocks
  Eigen::MatrixXd z_next(bd_, n_);
  for (int i = 0; i < n_; ++i) {
    Eigen::VectorXd acc = z_cur_.col(i) - x_cur_.col(i);
    acc += w_tilde_(i, i) * (2.0 * x_cur_.col(i) - x_prev_.col(i) -
                             alphas_[i] * (v_k.col(i) - v_prev_.col(i)));
    for (int l : one_hop_[i])
      if (l != i) acc += w_tilde_(i, l) * (2.0 * y_cur_[l][idx(l, i)] - y_prev_[l][idx(l, i)]);
    z_next.col(i) = acc;
  }

  // x^{k+1}
  Eigen::MatrixXd x_next(bd_, n_);
  for (int i = 0; i < n_; ++i)
    x_next.col(i) = problem_.resolvent_block(i, alphas_[i], z_next.col(i));

  // y^{k+1}, three cases
  std::vector<std::vector<Eigen::VectorXd>> y_next(n_);
  for (int i = 0; i < n_; ++i) {
    y_next[i].reserve(two_hop_[i].size());
    for (int j : two_hop_[i]) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(bd_);
      if (j == i) {
        acc = x_cur_.col(i) + z_next.col(i) - z_cur_.col(i);
      } else if (is_neighbor_[i][j]) {
        acc = w_tilde_(i, j) * (2.0 * x_cur_.col(j) - x_prev_.col(j) -
                                alphas_[j] * (v_k.col(j) - v_prev_.col(j)));
        for (int l : one_hop_[i])
          if (l != j) acc += w_tilde_(i, l) * (2.0 * y_cur_[l][idx(l, j)] - y_prev_[l][idx(l, j)]);
      } else {
        for (int l : one_hop_[i])
          acc += w_tilde_(i, l) * (2.0 * y_cur_[l][idx(l, j)] - y_prev_[l][idx(l, j)]);
      }
      y_next[i].push_back(std::move(acc));
    }
  }

  // mu^{k+1} from neighbours' mu and boundary y-blocks
  Eigen::MatrixXd mu_next(bd_, n_);
  for (int i = 0; i < n_; ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(bd_);
    for (int l : one_hop_[i]) {
      Eigen::VectorXd inner = 2.0 * mu_cur_.col(l) - mu_prev_.col(l);
      for (int j : one_hop_[l])
        if (!is_neighbor_[i][j]) inner += 2.0 * y_cur_[l][idx(l, j)] - y_prev_[l][idx(l, j)];
      for (int j : one_hop_[i])
        if (!is_neighbor_[l][j]) inner -= 2.0 * y_cur_[l][idx(l, j)] - y_prev_[l][idx(l, j)];
      acc += w_tilde_(i, l) * inner;
    }
    mu_next.col(i) = acc;
  }

  // ybar^{k+1}
  Eigen::MatrixXd ybar_next = mu_next;
  for (int i = 0; i < n_; ++i)
    for (int j : one_hop_[i]) ybar_next.col(i) += y_next[i][idx(i, j)];

  x_prev_ = std::move(x_cur_);
  x_cur_ = std::move(x_next);
  z_prev_ = std::move(z_cur_);
  z_cur_ = std::move(z_next);
  v_prev_ = std::move(v_k);
  mu_prev_ = std::move(mu_cur_);
  mu_cur_ = std::move(mu_next);
  ybar_prev_ = std::move(ybar_cur_);
  ybar_cur_ = std::move(ybar_next);
  y_prev_ = std::move(y_cur_);
  y_cur_ = std::move(y_next);
  ++k_;
}

Eigen::MatrixXd Alg2Engine::x_blocks() const { return x_cur_; }
Eigen::MatrixXd Alg2Engine::z_blocks() const { return z_cur_; }
Eigen::MatrixXd Alg2Engine::ybar_blocks() const { return ybar_cur_; }

double Alg2Engine::residual(const Eigen::VectorXd& alphas) const {
  return normalized_residual(z_cur_, z_prev_, alphas);
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

std::vector<TraceRecord> run(const AgentProblem& problem, const CommGraph& graph,
                             const MixingMatrix& mix, const RunOptions& opt) {
  if (opt.iterations < 0) throw std::invalid_argument("run: negative iteration count");
  const int n = problem.num_agents();
  const Eigen::VectorXd alphas = compute_step_sizes(problem, opt.mode, opt.safety);
  // homogeneous residual weighting for the single-step-size baselines
  const Eigen::VectorXd alpha_max_vec = Eigen::VectorXd::Constant(n, alphas.maxCoeff());

  std::vector<TraceRecord> trace;
  auto base_record = [&](int k) {
    TraceRecord r;
    r.run_id = opt.run_id;
    r.algorithm = to_string(opt.algorithm);
    r.problem = opt.problem_name;
    r.graph_kind = to_string(graph.kind);
    r.n_agents = n;
    r.seed = opt.seed;
    r.k = k;
    return r;
  };
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  auto want = [&](int k) {
    return k <= 1 || k == opt.iterations || (opt.record_every > 0 && k % opt.record_every == 0);
  };
  auto fill_metrics = [&](TraceRecord& r, const StackedPoint& x) {
    if (opt.xstar) r.relative_error = relative_error(x, *opt.xstar);
    r.consensus_gap = consensus_gap(x);
    r.elapsed_ms = elapsed_ms();
  };

  switch (opt.algorithm) {
    case Algorithm::alg1: {
      const double beta = compute_beta(alphas, mix, opt.rule, opt.safety);
      const Eigen::MatrixXd w_tilde = make_w_tilde(mix, alphas, beta);
      // row k = 0 reflects the initial resolvent point
      {
        TraceRecord r = base_record(0);
        const StackedPoint x0 = apply_resolvent(problem, alphas, opt.z0);
        if (opt.final_x) *opt.final_x = x0;
        fill_metrics(r, x0);
        trace.push_back(std::move(r));
      }
      if (opt.iterations == 0) break;
      Alg1State s = alg1_init(problem, w_tilde, alphas, opt.y0, opt.z0);
      {
        TraceRecord r = base_record(1);
        r.residual = normalized_residual(s.z_cur, s.z_prev, alphas);
        fill_metrics(r, s.x_cur);
        trace.push_back(std::move(r));
      }
      for (int k = 2; k <= opt.iterations; ++k) {
        alg1_step(s, problem, w_tilde, alphas);
        if (!want(k)) continue;
        TraceRecord r = base_record(k);
        r.residual = normalized_residual(s.z_cur, s.z_prev, alphas);
        fill_metrics(r, s.x_cur);
        trace.push_back(std::move(r));
      }
      if (opt.final_x) *opt.final_x = s.x_cur;
      break;
    }
    case Algorithm::alg2: {
      const auto* vpp = dynamic_cast<const VPPProblem*>(&problem);
      if (!vpp) throw std::invalid_argument("run: alg2 requires an aggregative problem");
      const double beta = compute_beta(alphas, mix, opt.rule, opt.safety);
      {
        TraceRecord r = base_record(0);
        r.elapsed_ms = elapsed_ms();
        trace.push_back(std::move(r));
      }
      if (opt.iterations == 0) {
        if (opt.final_x) {
          const int bd = vpp->instance().block_dim();
          opt.final_x->resize(bd, n);
          for (int i = 0; i < n; ++i)
            opt.final_x->col(i) =
                vpp->resolvent_block(i, alphas[i], opt.z0.col(i).segment(bd * i, bd));
        }
        break;
      }
      Alg2Engine engine(*vpp, graph, mix, alphas, beta, opt.y0, opt.z0);
      {
        TraceRecord r = base_record(1);
        r.residual = engine.residual(alphas);
        r.elapsed_ms = elapsed_ms();
        trace.push_back(std::move(r));
      }
      for (int k = 2; k <= opt.iterations; ++k) {
        engine.step();
        if (!want(k)) continue;
        TraceRecord r = base_record(k);
        r.residual = engine.residual(alphas);
        r.elapsed_ms = elapsed_ms();
        trace.push_back(std::move(r));
      }
      if (opt.final_x) *opt.final_x = engine.x_blocks();
      break;
    }
    case Algorithm::pg_extra:
    case Algorithm::pdtr: {
      double lmax = 0.0;
      for (int i = 0; i < n; ++i) lmax = std::max(lmax, problem.lipschitz(i));
      if (lmax <= 0.0) lmax = 1.0;
      const double alpha = opt.algorithm == Algorithm::pdtr
                               ? pdtr_step_size(problem, mix, opt.safety)
                               : opt.safety * (1.0 + lambda_min(mix.w)) / lmax;
      BaselineState s = baseline_init_homogeneous(problem, alpha, opt.z0);
      const Eigen::VectorXd res_weights = Eigen::VectorXd::Constant(n, alpha);
      {
        TraceRecord r = base_record(0);
        fill_metrics(r, s.x_cur);
        trace.push_back(std::move(r));
      }
      for (int k = 1; k <= opt.iterations; ++k) {
        if (opt.algorithm == Algorithm::pdtr)
          pdtr_step(s, problem, mix.w, alpha);
        else
          pg_extra_step(s, problem, mix.w, alpha);
        if (!want(k)) continue;
        TraceRecord r = base_record(k);
        r.residual = normalized_residual(s.z_cur, s.z_prev, res_weights);
        fill_metrics(r, s.x_cur);
        trace.push_back(std::move(r));
      }
      if (opt.final_x) *opt.final_x = s.x_cur;
      break;
    }
    case Algorithm::nids: {
      // NIDS needs beta <= 1/max alpha; the scaled max rule guarantees it
      const double beta = compute_beta(alphas, mix, BetaRule::beta_max, opt.safety);
      const Eigen::MatrixXd w_tilde = make_w_tilde(mix, alphas, beta);
      BaselineState s = baseline_init_weighted(problem, alphas, opt.z0);
      {
        TraceRecord r = base_record(0);
        fill_metrics(r, s.x_cur);
        trace.push_back(std::move(r));
      }
      for (int k = 1; k <= opt.iterations; ++k) {
        nids_step(s, problem, w_tilde, alphas);
        if (!want(k)) continue;
        TraceRecord r = base_record(k);
        r.residual = normalized_residual(s.z_cur, s.z_prev, alphas);
        fill_metrics(r, s.x_cur);
        trace.push_back(std::move(r));
      }
      if (opt.final_x) *opt.final_x = s.x_cur;
      break;
    }
  }
  return trace;
}

}  // namespace opsplit
