#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "opsplit/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decentralized operator-splitting simulator"};
  app.require_subcommand(1);

  // run
  std::string config_path;
  std::string out_override;
  int parallel = 1;
  bool debug_dump = false;
  CLI::App* run_cmd = app.add_subcommand("run", "Execute an experiment config");
  run_cmd->add_option("--config", config_path, "JSON experiment config")->required();
  run_cmd->add_option("--out", out_override, "Override the config output directory");
  run_cmd->add_option("--parallel", parallel, "Worker threads for repetitions")
      ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--debug-dump-states", debug_dump,
                    "Also write the final iterate of each run as CSV");

  // validate-graph
  std::string graph_kind = "cycle";
  int n_agents = 0;
  double tau_factor = 0.505;
  std::vector<std::string> edge_args;
  CLI::App* val_cmd =
      app.add_subcommand("validate-graph", "Check the mixing-matrix properties of a graph");
  val_cmd->add_option("--kind", graph_kind, "cycle | barbell | grid2d | custom");
  val_cmd->add_option("--n", n_agents, "Number of agents")->required();
  val_cmd->add_option("--tau-factor", tau_factor, "Laplacian scaling factor in (0.5, 1]");
  val_cmd->add_option("--edge", edge_args, "Custom edge as i,j (repeatable)");

  // table
  std::string summary_dir;
  CLI::App* table_cmd = app.add_subcommand("table", "Summarize results across runs");
  table_cmd->add_option("--dir", summary_dir, "Directory containing summary JSON files")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      opsplit::RunConfig cfg = opsplit::load_run_config(config_path);
      if (!out_override.empty()) cfg.out_dir = out_override;
      return opsplit::cmd_run(cfg, std::cout, parallel, debug_dump);
    }
    if (*val_cmd) {
      opsplit::GraphSpec spec;
      spec.kind = opsplit::parse_graph_kind(graph_kind);
      spec.tau_factor = tau_factor;
      for (const auto& e : edge_args) {
        const auto comma = e.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("edge format is i,j");
        spec.edges.emplace_back(std::stoi(e.substr(0, comma)), std::stoi(e.substr(comma + 1)));
      }
      return opsplit::cmd_validate_graph(spec, n_agents, std::cout);
    }
    if (*table_cmd) return opsplit::cmd_table(summary_dir, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
