#pragma once

#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "opsplit/algorithms.hpp"
#include "opsplit/graph.hpp"
#include "opsplit/operators.hpp"

namespace opsplit {

// Initial-point policy: all-zero, or entrywise U(0,1) rescaled to a target norm.
struct InitSpec {
  enum class Kind { zero, random_normalized };
  Kind kind = Kind::zero;
  double norm = 10.0;
};

struct ProblemSpec {
  std::string kind;  // robust_ls | matrix_game | vpp
  int n_agents = 0;
  int p = 0;          // feature dim / strategy dim / horizon
  int d = 0;          // robust_ls row count
  double lambda = 3.0;
  std::string csv;    // optional data file (robust_ls features, vpp demand)
};

struct GraphSpec {
  GraphKind kind = GraphKind::cycle;
  double tau_factor = 0.505;
  std::vector<std::pair<int, int>> edges;  // custom graphs only
};

struct RunConfig {
  int schema_version = 1;
  ProblemSpec problem;
  GraphSpec graph;
  std::uint64_t seed = 0;
  std::vector<Algorithm> algorithms;
  StepMode mode = StepMode::heterogeneous;
  BetaRule rule = BetaRule::beta_norm;
  double safety = 0.9;
  int iterations = 1000;
  int repetitions = 1;
  int record_every = 1;
  InitSpec init;
  std::string out_dir = "results";
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// Executes every (algorithm, repetition) pair: one trace CSV each plus a
// summary JSON with mean and worst-case final metrics per algorithm.
// Repetition seeds are config seed + repetition index. Returns a process exit
// status; diagnostics go to log.
int cmd_run(const RunConfig& config, std::ostream& log, int parallel = 1,
            bool debug_dump_states = false);

// Builds the graph/mixing pair and prints the validation report (four mixing
// properties, spectral quantities, the tau condition, and both readings of the
// aggregative-memory inequality). Nonzero exit if any property fails.
int cmd_validate_graph(const GraphSpec& spec, int n, std::ostream& out);

// Reads every summary JSON in a directory and prints an aligned table of
// mean (worst) final residual and time per algorithm, one row per agent
// count, marking the best mean residual per row.
int cmd_table(const std::string& summary_dir, std::ostream& out);

}  // namespace opsplit
