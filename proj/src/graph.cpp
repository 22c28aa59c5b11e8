#include "opsplit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

#include "opsplit/numerics.hpp"

namespace opsplit {

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "cycle") return GraphKind::cycle;
  if (name == "barbell") return GraphKind::barbell;
  if (name == "grid2d") return GraphKind::grid2d;
  if (name == "custom") return GraphKind::custom;
  throw std::invalid_argument("unknown graph kind: " + name);
}

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::cycle: return "cycle";
    case GraphKind::barbell: return "barbell";
    case GraphKind::grid2d: return "grid2d";
    case GraphKind::custom: return "custom";
  }
  return "custom";
}

bool CommGraph::has_edge(int i, int j) const {
  const auto& row = adj.at(i);
  return std::binary_search(row.begin(), row.end(), j);
}

int CommGraph::edge_count() const {
  long deg = 0;
  for (const auto& row : adj) deg += static_cast<long>(row.size());
  return static_cast<int>(deg / 2);
}

bool CommGraph::is_connected() const {
  if (n <= 0) return false;
  std::vector<char> seen(n, 0);
  std::queue<int> bfs;
  bfs.push(0);
  seen[0] = 1;
  int count = 1;
  while (!bfs.empty()) {
    const int u = bfs.front();
    bfs.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        bfs.push(v);
      }
    }
  }
  return count == n;
}

namespace {

CommGraph from_edges(int n, GraphKind kind, const std::set<std::pair<int, int>>& edges) {
  CommGraph g;
  g.n = n;
  g.kind = kind;
  g.adj.assign(n, {});
  for (const auto& [a, b] : edges) {
    if (a == b) throw std::invalid_argument("graph: self-loop rejected");
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("graph: node out of range");
    g.adj[a].push_back(b);
    g.adj[b].push_back(a);
  }
  for (auto& row : g.adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  if (!g.is_connected()) throw std::invalid_argument("graph: not connected");
  return g;
}

}  // namespace

CommGraph build_graph(GraphKind kind, int n, bool allow_path) {
  std::set<std::pair<int, int>> edges;
  switch (kind) {
    case GraphKind::cycle: {
      if (n < 3) throw std::invalid_argument("cycle graph requires n >= 3");
      for (int i = 0; i < n; ++i) edges.insert({std::min(i, (i + 1) % n), std::max(i, (i + 1) % n)});
      break;
    }
    case GraphKind::barbell: {
      if (n < 4 || n % 2 != 0) throw std::invalid_argument("barbell graph requires even n >= 4");
      const int half = n / 2;
      for (int i = 0; i < half; ++i)
        for (int j = i + 1; j < half; ++j) {
          edges.insert({i, j});
          edges.insert({half + i, half + j});
        }
      edges.insert({half - 1, half});  // bridge
      break;
    }
    case GraphKind::grid2d: {
      if (n < 4) throw std::invalid_argument("grid2d graph requires n >= 4");
      // rows = largest divisor of n that is <= sqrt(n)
      int rows = 1;
      for (int r = 2; r * r <= n; ++r)
        if (n % r == 0) rows = r;
      if (rows == 1 && !allow_path)
        throw std::invalid_argument("grid2d: n has no r x c factorization with r,c >= 2");
      const int cols = n / std::max(rows, 1);
      auto id = [cols](int r, int c) { return r * cols + c; };
      const int rr = std::max(rows, 1);
      for (int r = 0; r < rr; ++r)
        for (int c = 0; c < cols; ++c) {
          if (c + 1 < cols) edges.insert({id(r, c), id(r, c + 1)});
          if (r + 1 < rr) edges.insert({id(r, c), id(r + 1, c)});
        }
      break;
    }
    case GraphKind::custom:
      throw std::invalid_argument("custom graphs need an explicit edge list");
  }
  return from_edges(n, kind, edges);
}

CommGraph make_custom_graph(int n, const std::vector<std::pair<int, int>>& edge_list) {
  std::set<std::pair<int, int>> edges;
  for (auto [a, b] : edge_list) edges.insert({std::min(a, b), std::max(a, b)});
  return from_edges(n, GraphKind::custom, edges);
}

Eigen::MatrixXd laplacian(const CommGraph& g) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(g.n, g.n);
  for (int i = 0; i < g.n; ++i) {
    l(i, i) = static_cast<double>(g.adj[i].size());
    for (int j : g.adj[i]) l(i, j) = -1.0;
  }
  return l;
}

MixingMatrix build_mixing_matrix(const CommGraph& g, double tau_factor) {
  if (!(tau_factor > 0.5 && tau_factor <= 1.0))
    throw std::invalid_argument("build_mixing_matrix: tau_factor must lie in (0.5, 1]");
  const Eigen::MatrixXd l = laplacian(g);
  MixingMatrix mix;
  mix.n = g.n;
  mix.lambda_max_laplacian = lambda_max(l);
  mix.tau = tau_factor * mix.lambda_max_laplacian;
  mix.w = Eigen::MatrixXd::Identity(g.n, g.n) - l / mix.tau;
  mix.w = 0.5 * (mix.w + mix.w.transpose().eval());  // symmetric by construction, exact
  mix.tau_two_thirds_bound = mix.tau < (2.0 / 3.0) * mix.lambda_max_laplacian;
  return mix;
}

MixingReport validate_mixing(const CommGraph& g, const MixingMatrix& mix) {
  const double tol = 1e-8;
  const Eigen::MatrixXd& w = mix.w;
  MixingReport rep;

  rep.sparsity_slack = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j && !g.has_edge(i, j)) rep.sparsity_slack = std::max(rep.sparsity_slack, std::abs(w(i, j)));
  rep.sparsity_ok = rep.sparsity_slack <= tol;

  rep.symmetry_slack = (w - w.transpose()).cwiseAbs().maxCoeff();
  rep.symmetric_ok = rep.symmetry_slack == 0.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd::Identity(g.n, g.n) - w);
  Eigen::VectorXd mags = es.eigenvalues().cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size());
  const bool one_zero = mags[0] <= tol && (g.n == 1 || mags[1] > tol);
  // The kernel must also actually contain the ones vector.
  const double row_sum_slack = ((w * Eigen::VectorXd::Ones(g.n)) - Eigen::VectorXd::Ones(g.n))
                                   .cwiseAbs()
                                   .maxCoeff();
  rep.kernel_ok = one_zero && row_sum_slack <= tol;
  rep.kernel_slack = g.n > 1 ? mags[1] : mags[0];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(w);
  rep.lambda_min_w = ew.eigenvalues().minCoeff();
  rep.lambda_max_w = ew.eigenvalues().maxCoeff();
  const double low_viol = std::max(0.0, -1.0 - rep.lambda_min_w + tol);  // strict at -1
  const double high_viol = std::max(0.0, rep.lambda_max_w - 1.0);
  rep.spectrum_ok = rep.lambda_min_w > -1.0 + tol && rep.lambda_max_w <= 1.0 + tol;
  rep.spectrum_slack = std::max(low_viol, high_viol);
  return rep;
}

NeighborSets neighbor_sets(const CommGraph& g) {
  NeighborSets ns;
  ns.one_hop.assign(g.n, {});
  ns.two_hop.assign(g.n, {});
  for (int i = 0; i < g.n; ++i) {
    std::set<int> one(g.adj[i].begin(), g.adj[i].end());
    one.insert(i);
    std::set<int> two;
    for (int j : one) {
      two.insert(j);
      for (int k : g.adj[j]) two.insert(k);
    }
    ns.one_hop[i].assign(one.begin(), one.end());
    ns.two_hop[i].assign(two.begin(), two.end());
  }
  return ns;
}

bool NeighborSets::in_one_hop(int i, int j) const {
  const auto& row = one_hop.at(i);
  return std::binary_search(row.begin(), row.end(), j);
}

bool NeighborSets::in_two_hop(int i, int j) const {
  const auto& row = two_hop.at(i);
  return std::binary_search(row.begin(), row.end(), j);
}

MemoryCondition memory_condition(const CommGraph& g) {
  const NeighborSets ns = neighbor_sets(g);
  MemoryCondition cond;
  cond.per_agent_all = true;
  for (int i = 0; i < g.n; ++i) {
    const long size = static_cast<long>(ns.two_hop[i].size());
    cond.sum_two_hop += size;
    if (!(size < g.n - 1)) cond.per_agent_all = false;
  }
  cond.aggregate = cond.sum_two_hop < g.n - 1;
  return cond;
}

}  // namespace opsplit
