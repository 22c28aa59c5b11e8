#include "opsplit/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "opsplit/metrics.hpp"
#include "opsplit/problems.hpp"

namespace opsplit {

namespace {

InitSpec parse_init_spec(const nlohmann::json& j) {
  InitSpec init;
  const std::string kind = j.value("kind", "zero");
  if (kind == "zero") {
    init.kind = InitSpec::Kind::zero;
  } else if (kind == "random_normalized") {
    init.kind = InitSpec::Kind::random_normalized;
    init.norm = j.value("norm", 10.0);
    if (init.norm <= 0.0) throw std::invalid_argument("config: init norm must be positive");
  } else {
    throw std::invalid_argument("config: unknown init kind: " + kind);
  }
  return init;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.schema_version = j.value("schema_version", 1);
  if (cfg.schema_version != 1)
    throw std::invalid_argument("config: unsupported schema_version");

  const auto& pj = j.at("problem");
  cfg.problem.kind = pj.at("kind").get<std::string>();
  cfg.problem.n_agents = pj.at("n_agents").get<int>();
  cfg.problem.p = pj.value("p", 0);
  cfg.problem.d = pj.value("d", 0);
  cfg.problem.lambda = pj.value("lambda", 3.0);
  cfg.problem.csv = pj.value("csv", std::string());
  if (cfg.problem.kind != "robust_ls" && cfg.problem.kind != "matrix_game" &&
      cfg.problem.kind != "vpp")
    throw std::invalid_argument("config: unknown problem kind: " + cfg.problem.kind);
  if (!cfg.problem.csv.empty() && !std::filesystem::exists(cfg.problem.csv))
    throw std::invalid_argument("config: data file not found: " + cfg.problem.csv);

  if (j.contains("graph")) {
    const auto& gj = j.at("graph");
    cfg.graph.kind = parse_graph_kind(gj.value("kind", "cycle"));
    cfg.graph.tau_factor = gj.value("tau_factor", 0.505);
    if (gj.contains("edges"))
      for (const auto& e : gj.at("edges"))
        cfg.graph.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  }

  cfg.seed = j.value("seed", 0ull);
  for (const auto& name : j.at("algorithms"))
    cfg.algorithms.push_back(parse_algorithm(name.get<std::string>()));
  if (cfg.algorithms.empty()) throw std::invalid_argument("config: empty algorithm list");
  for (Algorithm alg : cfg.algorithms)
    if (alg == Algorithm::alg2 && cfg.problem.kind != "vpp")
      throw std::invalid_argument("config: alg2 requires the aggregative problem");

  cfg.mode = parse_step_mode(j.value("step_mode", "heterogeneous"));
  cfg.rule = parse_beta_rule(j.value("beta_rule", "beta_norm"));
  cfg.safety = j.value("safety", 0.9);
  cfg.iterations = j.value("iterations", 1000);
  cfg.repetitions = j.value("repetitions", 1);
  cfg.record_every = j.value("record_every", 1);
  if (cfg.iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
  if (cfg.repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
  if (cfg.record_every < 1) throw std::invalid_argument("config: record_every must be >= 1");
  if (j.contains("init")) cfg.init = parse_init_spec(j.at("init"));
  cfg.out_dir = j.value("out_dir", std::string("results"));
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file not found: " + path);
  nlohmann::json j;
  in >> j;
  RunConfig cfg = parse_run_config(j);
  if (const char* env_seed = std::getenv("OPSPLIT_SEED")) cfg.seed = std::stoull(env_seed);
  return cfg;
}

namespace {

struct BuiltProblem {
  std::unique_ptr<AgentProblem> problem;
  std::optional<Eigen::VectorXd> xstar;
  nlohmann::json instance_json;
};

BuiltProblem build_problem(const ProblemSpec& spec, std::uint64_t seed) {
  BuiltProblem out;
  if (spec.kind == "robust_ls") {
    const RobustLSInstance inst =
        spec.csv.empty()
            ? gen_robust_ls(spec.d, spec.p, spec.n_agents, seed, spec.lambda)
            : robust_ls_from_csv(spec.csv, spec.n_agents, spec.lambda);
    out.problem = robust_ls_problem(inst);
    out.xstar = robust_ls_solution(inst);
    out.instance_json = to_json(inst);
  } else if (spec.kind == "matrix_game") {
    const MatrixGameInstance inst = gen_matrix_game(spec.p, spec.n_agents, seed);
    out.problem = matrix_game_problem(inst);
    out.xstar = matrix_game_solution(inst);
    out.instance_json = to_json(inst);
  } else if (spec.kind == "vpp") {
    const VPPInstance inst = gen_vpp(spec.n_agents, spec.p, seed);
    out.problem = vpp_problem(inst);
    out.instance_json = to_json(inst);
  } else {
    throw std::invalid_argument("unknown problem kind: " + spec.kind);
  }
  return out;
}

CommGraph build_graph_from_spec(const GraphSpec& spec, int n) {
  if (spec.kind == GraphKind::custom) return make_custom_graph(n, spec.edges);
  return build_graph(spec.kind, n);
}

StackedPoint make_initial_point(const InitSpec& init, int rows, int cols, std::uint64_t seed) {
  if (init.kind == InitSpec::Kind::zero) return StackedPoint::Zero(rows, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  StackedPoint z(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) z(r, c) = ud(rng);
  const double norm = z.norm();
  if (norm > 0.0) z *= init.norm / norm;
  return z;
}

struct JobResult {
  std::string algorithm;
  int rep = 0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  double final_relative_error = std::numeric_limits<double>::quiet_NaN();
  double time_seconds = 0.0;
};

nlohmann::json stat_pair(const std::vector<double>& values) {
  double sum = 0.0, worst = -std::numeric_limits<double>::infinity();
  int count = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    worst = std::max(worst, v);
    ++count;
  }
  if (count == 0) return nullptr;
  return nlohmann::json{{"mean", sum / count}, {"worst", worst}};
}

void write_state_csv(const std::string& path, const StackedPoint& x) {
  std::ofstream out(path);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", x(r, c));
      out << buf << (c + 1 == x.cols() ? '\n' : ',');
    }
  }
}

}  // namespace

int cmd_run(const RunConfig& config, std::ostream& log, int parallel, bool debug_dump_states) {
  try {
    std::filesystem::create_directories(config.out_dir);

    struct Job {
      Algorithm alg;
      int rep;
    };
    std::vector<Job> jobs;
    for (Algorithm alg : config.algorithms)
      for (int rep = 0; rep < config.repetitions; ++rep) jobs.push_back({alg, rep});

    std::vector<JobResult> results(jobs.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex log_mutex;

    auto worker = [&] {
      for (;;) {
        const size_t idx = next.fetch_add(1);
        if (idx >= jobs.size() || failed.load()) break;
        const Job& job = jobs[idx];
        const std::uint64_t rep_seed = config.seed + static_cast<std::uint64_t>(job.rep);
        try {
          BuiltProblem built = build_problem(config.problem, rep_seed);
          const AgentProblem& problem = *built.problem;
          const CommGraph graph = build_graph_from_spec(config.graph, problem.num_agents());
          const MixingMatrix mix = build_mixing_matrix(graph, config.graph.tau_factor);

          RunOptions opt;
          opt.algorithm = job.alg;
          opt.mode = config.mode;
          opt.rule = config.rule;
          opt.safety = config.safety;
          opt.iterations = config.iterations;
          opt.record_every = config.record_every;
          opt.problem_name = config.problem.kind;
          opt.seed = rep_seed;
          opt.run_id = config.problem.kind + "_" + to_string(job.alg) + "_rep" +
                       std::to_string(job.rep);
          opt.z0 = make_initial_point(config.init, problem.dim(), problem.num_agents(),
                                      rep_seed * 2654435761ull + 1);
          // The reference experiments always pair a (possibly random) z^0
          // with y^0 = 0; keeping y^0 fixed avoids forward evaluations at
          // arbitrary random points.
          opt.y0 = StackedPoint::Zero(problem.dim(), problem.num_agents());
          if (built.xstar) opt.xstar = *built.xstar;
          StackedPoint final_x;
          opt.final_x = debug_dump_states ? &final_x : nullptr;

          const auto trace = run(problem, graph, mix, opt);

          const std::string base = config.out_dir + "/" + opt.run_id;
          std::ofstream csv(base + ".csv");
          write_trace_csv(csv, trace);
          if (debug_dump_states) write_state_csv(base + "_state.csv", final_x);

          JobResult r;
          r.algorithm = to_string(job.alg);
          r.rep = job.rep;
          if (!trace.empty()) {
            r.final_residual = trace.back().residual;
            r.final_relative_error = trace.back().relative_error;
            r.time_seconds = trace.back().elapsed_ms / 1000.0;
          }
          results[idx] = r;
        } catch (const std::exception& e) {
          failed.store(true);
          std::lock_guard<std::mutex> lk(log_mutex);
          log << "error in " << to_string(job.alg) << " rep " << job.rep << ": " << e.what()
              << "\n";
        }
      }
    };

    const int workers = std::max(1, std::min<int>(parallel, static_cast<int>(jobs.size())));
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (failed.load()) return 1;

    nlohmann::json summary;
    summary["schema_version"] = 1;
    summary["problem"] = config.problem.kind;
    summary["graph_kind"] = to_string(config.graph.kind);
    summary["n_agents"] = config.problem.n_agents;
    summary["seed"] = config.seed;
    summary["iterations"] = config.iterations;
    summary["repetitions"] = config.repetitions;
    summary["step_mode"] = to_string(config.mode);
    summary["beta_rule"] = to_string(config.rule);
    nlohmann::json algs = nlohmann::json::object();
    for (Algorithm alg : config.algorithms) {
      std::vector<double> res, rel, secs;
      for (const JobResult& r : results) {
        if (r.algorithm != to_string(alg)) continue;
        res.push_back(r.final_residual);
        rel.push_back(r.final_relative_error);
        secs.push_back(r.time_seconds);
      }
      nlohmann::json a;
      a["final_residual"] = stat_pair(res);
      a["final_relative_error"] = stat_pair(rel);
      a["time_seconds"] = stat_pair(secs);
      algs[to_string(alg)] = a;
    }
    summary["algorithms"] = algs;
    std::ofstream out(config.out_dir + "/summary.json");
    out << summary.dump(2) << "\n";

    log << "wrote " << jobs.size() << " trace file(s) and summary.json to " << config.out_dir
        << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "run failed: " << e.what() << "\n";
    return 1;
  }
}

int cmd_validate_graph(const GraphSpec& spec, int n, std::ostream& out) {
  try {
    const CommGraph g = build_graph_from_spec(spec, n);
    const MixingMatrix mix = build_mixing_matrix(g, spec.tau_factor);
    const MixingReport report = validate_mixing(g, mix);
    const MemoryCondition mem = memory_condition(g);

    auto line = [&](const char* name, bool ok, double slack) {
      out << name << ": " << (ok ? "PASS" : "FAIL") << " (slack " << slack << ")\n";
    };
    out << "graph: " << to_string(g.kind) << " n=" << g.n << " edges=" << g.edge_count()
        << "\n";
    line("sparsity", report.sparsity_ok, report.sparsity_slack);
    line("symmetry", report.symmetric_ok, report.symmetry_slack);
    line("kernel", report.kernel_ok, report.kernel_slack);
    line("spectrum", report.spectrum_ok, report.spectrum_slack);
    out << "lambda_min_w: " << report.lambda_min_w << "\n";
    out << "lambda_max_w: " << report.lambda_max_w << "\n";
    out << "lambda_max_laplacian: " << mix.lambda_max_laplacian << "\n";
    out << "tau: " << mix.tau << " (factor " << spec.tau_factor << ")\n";
    out << "tau_condition: "
        << (mix.tau_two_thirds_bound ? "satisfied (tau < 2/3 lambda_max)"
                                 : "not satisfied (tau >= 2/3 lambda_max)")
        << "\n";
    out << "memory_condition aggregate: " << (mem.aggregate ? "true" : "false")
        << " (sum |two-hop| = " << mem.sum_two_hop << ", threshold " << g.n - 1 << ")\n";
    out << "memory_condition per_agent: " << (mem.per_agent_all ? "true" : "false") << "\n";
    return report.all_ok() ? 0 : 1;
  } catch (const std::exception& e) {
    out << "validation failed: " << e.what() << "\n";
    return 1;
  }
}

namespace {

std::string fmt_stat(const nlohmann::json& stat, const char* fmt) {
  if (stat.is_null()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, stat.at("mean").get<double>());
  std::string s = buf;
  std::snprintf(buf, sizeof(buf), fmt, stat.at("worst").get<double>());
  return s + " (" + buf + ")";
}

}  // namespace

int cmd_table(const std::string& summary_dir, std::ostream& out) {
  try {
    std::vector<nlohmann::json> summaries;
    if (!std::filesystem::is_directory(summary_dir))
      throw std::runtime_error("not a directory: " + summary_dir);
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(summary_dir))
      if (entry.path().extension() == ".json") paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
      std::ifstream in(p);
      nlohmann::json j;
      in >> j;
      if (j.contains("algorithms") && j.contains("n_agents")) summaries.push_back(std::move(j));
    }
    if (summaries.empty()) throw std::runtime_error("no summary files in " + summary_dir);

    std::sort(summaries.begin(), summaries.end(), [](const auto& a, const auto& b) {
      return a.at("n_agents").template get<int>() < b.at("n_agents").template get<int>();
    });
    std::set<std::string> algs;
    for (const auto& s : summaries)
      for (const auto& [name, _] : s.at("algorithms").items()) algs.insert(name);

    // header
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"N"};
    for (const auto& a : algs) {
      header.push_back(a + " residual");
      header.push_back(a + " time (s)");
    }
    rows.push_back(header);

    for (const auto& s : summaries) {
      std::vector<std::string> row{std::to_string(s.at("n_agents").get<int>())};
      // locate the best (smallest) mean residual in this row
      std::string best;
      double best_val = std::numeric_limits<double>::infinity();
      for (const auto& a : algs) {
        if (!s.at("algorithms").contains(a)) continue;
        const auto& stat = s.at("algorithms").at(a).at("final_residual");
        if (stat.is_null()) continue;
        const double v = stat.at("mean").get<double>();
        if (v < best_val) {
          best_val = v;
          best = a;
        }
      }
      for (const auto& a : algs) {
        if (!s.at("algorithms").contains(a)) {
          row.push_back("-");
          row.push_back("-");
          continue;
        }
        const auto& aj = s.at("algorithms").at(a);
        std::string res = fmt_stat(aj.at("final_residual"), "%.2e");
        if (a == best) res = "*" + res;
        row.push_back(res);
        row.push_back(fmt_stat(aj.at("time_seconds"), "%.2f"));
      }
      rows.push_back(row);
    }

    std::vector<size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows)
      for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    for (const auto& row : rows) {
      for (size_t c = 0; c < row.size(); ++c)
        out << std::left << std::setw(static_cast<int>(widths[c]) + 2) << row[c];
      out << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    out << "table failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace opsplit
