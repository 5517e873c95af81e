// tristream: run, oracle, experiment and plotdata subcommands.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tristream/experiment.hpp"
#include "tristream/metrics.hpp"
#include "tristream/pipeline.hpp"
#include "tristream/report_json.hpp"
#include "tristream/triangle_oracle.hpp"

namespace {

using namespace tristream;
using nlohmann::ordered_json;

struct StreamOptions {
  std::string input;
  std::string gen;
  std::string generator = "er";
  double triad = 0.5;
  std::uint64_t graph_seed = 1;
  bool shuffle = false;
  std::uint64_t shuffle_seed = 0;
};

void add_stream_options(CLI::App* app, StreamOptions& o) {
  auto* in = app->add_option("--input", o.input, "Edge-list file (whitespace or comma separated)");
  auto* gen = app->add_option("--gen", o.gen, "Generate a graph: n,m (powerlaw: n,edges-per-node)");
  in->excludes(gen);
  app->add_option("--generator", o.generator, "Generator for --gen")->check(CLI::IsMember({"er", "powerlaw"}));
  app->add_option("--triad", o.triad, "Triad-formation probability for the powerlaw generator");
  app->add_option("--graph-seed", o.graph_seed, "Seed of the generated graph");
  app->add_flag("--shuffle", o.shuffle, "Randomly permute the arrival order");
  app->add_option("--shuffle-seed", o.shuffle_seed, "Seed of the permutation");
}

std::pair<std::uint64_t, std::uint64_t> parse_pair(const std::string& s) {
  std::uint64_t a = 0, b = 0;
  char comma = 0;
  std::istringstream in(s);
  if (!(in >> a >> comma >> b) || comma != ',') throw CLI::ValidationError("--gen", "expected n,m");
  return {a, b};
}

StreamSpec to_stream_spec(const StreamOptions& o) {
  StreamSpec s;
  s.input = o.input;
  s.generator = o.generator;
  s.triad_probability = o.triad;
  s.seed = o.graph_seed;
  if (!o.gen.empty()) std::tie(s.nodes, s.edges) = parse_pair(o.gen);
  return s;
}

GraphStream load(const StreamOptions& o) {
  if (o.input.empty() && o.gen.empty()) throw CLI::ValidationError("stream", "give --input or --gen");
  GraphStream s = load_stream(to_stream_spec(o));
  if (o.shuffle) s = shuffle_stream(s, o.shuffle_seed);
  return s;
}

template <typename T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream one(item);
    T v{};
    if (!(one >> v)) throw CLI::ValidationError("list", "bad item '" + item + "'");
    out.push_back(v);
  }
  return out;
}

int cmd_run(const PipelineConfig& base, const std::string& budget, const StreamOptions& so, const std::string& out) {
  const GraphStream s = load(so);
  PipelineConfig cfg = base;
  cfg.budget = resolve_budget(std::stod(budget), s.edges.size());
  const RunReport r = run(cfg, s);
  ordered_json j = ordered_json::parse(report_to_json(r));
  if (cfg.instrument) {
    const TriangleSet truth = exact_count(s);
    const StructuralVerdict v = verify_structural_properties(r, truth);
    j["structure"] = {
        {"max_replication", v.max_replication}, {"replication_ok", v.p1},
        {"max_emitters", v.max_emitters},       {"single_emitter_ok", v.p2},
        {"uncovered_triangles", v.without_potential_counter},
        {"coverage_ok", v.p3},
    };
    const AccuracyReport a = accuracy(truth.size(), truth.per_node, r.estimates.global(), r.estimates.locals());
    j["truth"] = truth.size();
    j["global_error"] = a.global_error;
    j["local_error"] = a.local_error;
  }
  std::cout << j.dump(2) << '\n';
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream(std::filesystem::path(out) / "report.json") << j.dump(2) << '\n';
    std::ofstream locals(std::filesystem::path(out) / "local_estimates.txt");
    write_local_estimates(locals, r.estimates);
  }
  return 0;
}

int cmd_oracle(const StreamOptions& so, const std::string& budget, const std::string& out) {
  const GraphStream s = load(so);
  const StreamTriangles st(s);
  ordered_json j;
  j["edges"] = st.stream_length();
  j["nodes"] = st.nodes().size();
  j["triangles"] = st.triangle_count();
  j["type1_pairs"] = st.pairs().type1;
  j["type2_pairs"] = st.pairs().type2;
  if (!budget.empty()) {
    const std::uint64_t b = resolve_budget(std::stod(budget), s.edges.size());
    j["budget"] = b;
    j["variance_bound"] = variance_bound(st.stream_length(), b, st.triangle_count(), st.pairs());
  }
  std::cout << j.dump(2) << '\n';
  if (!out.empty()) {
    const TriangleSet truth = exact_count(s);
    std::vector<std::pair<NodeId, std::uint64_t>> rows(truth.per_node.begin(), truth.per_node.end());
    std::sort(rows.begin(), rows.end());
    std::ofstream f(out);
    for (const auto& [u, x] : rows) f << u << ' ' << x << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed streaming triangle counting (Tri-Fly, CoCoS)"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "One pass over a stream; prints a JSON report");
  PipelineConfig cfg;
  std::string algo = "COCOS_OPT", aggregation = "EAGER", mode = "DETERMINISTIC", run_budget = "1000", run_out;
  StreamOptions run_stream;
  run_cmd->add_option("--algo", algo, "TRIFLY, COCOS_SIMPLE or COCOS_OPT");
  run_cmd->add_option("--k", cfg.workers, "Number of workers")->check(CLI::PositiveNumber);
  run_cmd->add_option("--budget", run_budget, "Edges per worker; a value below 1 is a fraction of |E|");
  run_cmd->add_option("--theta", cfg.theta, "Load tolerance of the adaptive map")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--seed", cfg.seed, "Run seed");
  run_cmd->add_option("--aggregation", aggregation, "EAGER or LAZY");
  run_cmd->add_option("--mode", mode, "DETERMINISTIC or CONCURRENT");
  run_cmd->add_flag("--instrument", cfg.instrument, "Record traces and check structure against the oracle");
  run_cmd->add_flag("--eager-zero", cfg.eager_zero, "Send zero-sum count updates");
  run_cmd->add_option("--out", run_out, "Directory for report.json and local_estimates.txt");
  add_stream_options(run_cmd, run_stream);

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact triangle counts, pair counts and variance bound");
  StreamOptions oracle_stream;
  std::string oracle_budget, oracle_out;
  add_stream_options(oracle_cmd, oracle_stream);
  oracle_cmd->add_option("--budget", oracle_budget, "Budget for the single-worker variance bound");
  oracle_cmd->add_option("--out", oracle_out, "File for per-node counts");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Repeated trials over parameter grids");
  std::string spec_file, kind = "UNBIASEDNESS", algos = "TRIFLY,COCOS_SIMPLE,COCOS_OPT", ks = "4", budgets = "100",
                         thetas = "0.2", sizes, exp_out, exp_aggregation = "EAGER", exp_mode = "DETERMINISTIC";
  std::uint64_t trials = 100, exp_seed = 0, tracked = 20;
  unsigned threads = 1;
  std::string reshuffle;
  StreamOptions exp_stream;
  exp_cmd->add_option("--spec", spec_file, "JSON experiment specification (overrides the other flags)");
  exp_cmd->add_option("--kind", kind,
                      "UNBIASEDNESS, VARIANCE_VS_K, ACCURACY_VS_BUDGET, SPEED_ACCURACY, SCALABILITY, THETA_SWEEP, "
                      "PARTITION_STATS");
  exp_cmd->add_option("--algo", algos, "Comma-separated algorithms");
  exp_cmd->add_option("--k", ks, "Comma-separated worker counts");
  exp_cmd->add_option("--budget", budgets, "Comma-separated budgets (absolute, or fractions below 1)");
  exp_cmd->add_option("--theta", thetas, "Comma-separated tolerances");
  exp_cmd->add_option("--sizes", sizes, "Comma-separated stream sizes (scalability)");
  exp_cmd->add_option("--trials", trials, "Trials per configuration")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--seed", exp_seed, "Base seed");
  exp_cmd->add_option("--threads", threads, "Trials run in parallel");
  exp_cmd->add_option("--tracked-nodes", tracked, "Nodes whose local estimates are followed (unbiasedness)");
  exp_cmd->add_option("--reshuffle", reshuffle, "on/off: fresh arrival order per trial")
      ->check(CLI::IsMember({"on", "off"}));
  exp_cmd->add_option("--aggregation", exp_aggregation, "EAGER or LAZY");
  exp_cmd->add_option("--mode", exp_mode, "DETERMINISTIC or CONCURRENT");
  exp_cmd->add_option("--out", exp_out, "Results directory")->required();
  add_stream_options(exp_cmd, exp_stream);

  // plotdata
  auto* plot_cmd = app.add_subcommand("plotdata", "Series files from an experiment's results");
  std::string results_dir, plot_out;
  plot_cmd->add_option("--results", results_dir, "Results directory")->required();
  plot_cmd->add_option("--out", plot_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      cfg.algorithm = parse_algorithm(algo);
      cfg.aggregation = parse_aggregation(aggregation);
      cfg.execution = parse_execution(mode);
      return cmd_run(cfg, run_budget, run_stream, run_out);
    }
    if (oracle_cmd->parsed()) return cmd_oracle(oracle_stream, oracle_budget, oracle_out);
    if (exp_cmd->parsed()) {
      ExperimentSpec spec;
      if (!spec_file.empty()) {
        std::ifstream in(spec_file);
        if (!in) throw std::runtime_error("cannot read " + spec_file);
        spec = spec_from_json(nlohmann::json::parse(in));
      } else {
        spec.kind = parse_experiment_kind(kind);
        spec.algorithms.clear();
        for (const auto& a : parse_list<std::string>(algos)) spec.algorithms.push_back(parse_algorithm(a));
        spec.k_grid = parse_list<WorkerIndex>(ks);
        spec.b_grid = parse_list<double>(budgets);
        spec.theta_grid = parse_list<double>(thetas);
        if (!sizes.empty()) spec.size_grid = parse_list<std::uint64_t>(sizes);
        spec.trials = trials;
        spec.base_seed = exp_seed;
        spec.threads = threads;
        spec.tracked_nodes = tracked;
        if (!reshuffle.empty()) spec.reshuffle = reshuffle == "on";
        spec.aggregation = parse_aggregation(exp_aggregation);
        spec.execution = parse_execution(exp_mode);
        spec.stream = to_stream_spec(exp_stream);
      }
      const ExperimentResult result = run_experiment(spec);
      write_results(spec, result, exp_out);
      std::cerr << "wrote " << result.trials.size() << " trial rows and " << result.summary.size()
                << " summary rows to " << exp_out << (result.oracle_skipped ? " (oracle skipped)" : "") << '\n';
      return 0;
    }
    if (plot_cmd->parsed()) {
      for (const auto& p : emit_plotdata(results_dir, plot_out)) std::cout << p.string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
