#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace opsplit {

enum class GraphKind { cycle, barbell, grid2d, custom };

GraphKind parse_graph_kind(const std::string& name);
std::string to_string(GraphKind kind);

// Undirected connected communication graph over agents {0..n-1}.
// No self-loops; adjacency lists are sorted.
struct CommGraph {
  int n = 0;
  GraphKind kind = GraphKind::custom;
  std::vector<std::vector<int>> adj;

  bool has_edge(int i, int j) const;
  int edge_count() const;
  bool is_connected() const;  // BFS from node 0
};

// Build a named graph family. Preconditions:
//   cycle:   n >= 3
//   barbell: n even, n >= 4 (two K_{n/2} cliques joined by one bridge edge)
//   grid2d:  n = r*c with r,c >= 2; r is the largest divisor of n with r <= sqrt(n).
//            Primes >= 5 are rejected unless allow_path permits a 1xn path.
CommGraph build_graph(GraphKind kind, int n, bool allow_path = false);

// Custom graph from an explicit edge list (validated: undirected, no self-loops,
// connected).
CommGraph make_custom_graph(int n, const std::vector<std::pair<int, int>>& edges);

// Graph Laplacian L = D - A.
Eigen::MatrixXd laplacian(const CommGraph& g);

struct MixingMatrix {
  int n = 0;
  Eigen::MatrixXd w;
  double tau = 0.0;
  double lambda_max_laplacian = 0.0;
  bool tau_two_thirds_bound = false;  // tau < (2/3) * lambda_max(L)
};

// Laplacian-based constant edge weight matrix W = I - (1/tau) L with
// tau = tau_factor * lambda_max(L). Requires tau_factor in (0.5, 1].
MixingMatrix build_mixing_matrix(const CommGraph& g, double tau_factor);

// Pass/fail report for the four mixing-matrix properties, with measured slack.
struct MixingReport {
  bool sparsity_ok = false;   // (i) w_ij = 0 off the edge set
  bool symmetric_ok = false;  // (ii) W = W^T
  bool kernel_ok = false;     // (iii) ker(I-W) = span(1)
  bool spectrum_ok = false;   // (iv) -I < W <= I
  double sparsity_slack = 0.0;
  double symmetry_slack = 0.0;
  double kernel_slack = 0.0;   // second-smallest |eigenvalue| of I-W (should be away from 0)
  double spectrum_slack = 0.0; // max(violation of lambda > -1, violation of lambda <= 1)
  double lambda_min_w = 0.0;
  double lambda_max_w = 0.0;

  bool all_ok() const { return sparsity_ok && symmetric_ok && kernel_ok && spectrum_ok; }
};

MixingReport validate_mixing(const CommGraph& g, const MixingMatrix& mix);

// One-hop and two-hop neighborhoods; both include the node itself.
struct NeighborSets {
  std::vector<std::vector<int>> one_hop;
  std::vector<std::vector<int>> two_hop;

  bool in_one_hop(int i, int j) const;
  bool in_two_hop(int i, int j) const;
};

NeighborSets neighbor_sets(const CommGraph& g);

// Memory-saving condition for the aggregative-game variant, in both readings:
// the aggregate inequality exactly as printed, and the per-agent alternative.
struct MemoryCondition {
  bool aggregate = false;      // sum_i |N^2(i)| < n - 1
  bool per_agent_all = false;  // for all i: |N^2(i)| < n - 1
  long sum_two_hop = 0;
};

MemoryCondition memory_condition(const CommGraph& g);

}  // namespace opsplit
