// graphdiff: command-line front end for the experiment pipelines.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>

#include <CLI11.hpp>

#include "graphdiff/csv.hpp"
#include "graphdiff/experiments.hpp"
#include "graphdiff/scenario.hpp"

using namespace graphdiff;

namespace {

struct Globals {
  std::string out;
  unsigned jobs = 1;
  std::uint64_t seed = 1;
};

double parse_real(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& s : items) out.push_back(parse_real(s));
  return out;
}

void print_warnings(const Scenario& s) {
  for (const auto& w : build_graph(s.graph).warnings()) std::cerr << "warning: " << w << '\n';
}

int report(const std::vector<CheckResult>& checks, const std::string& title) {
  int failed = 0;
  for (const auto& c : checks) {
    std::printf("%s %-48s residual=%s threshold=%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                format_number(c.residual).c_str(), format_number(c.threshold).c_str());
    if (!c.passed) ++failed;
  }
  std::printf("%s: %zu checks, %d failed\n", title.c_str(), checks.size(), failed);
  return failed == 0 ? 0 : 1;
}

int run_scenario(Scenario s, const Globals& g) {
  validate(s);
  print_warnings(s);
  RunContext ctx;
  if (!g.out.empty()) ctx.output_dir = g.out;
  ctx.jobs = g.jobs;
  const RunSummary summary = run_experiment(s, ctx);
  for (const auto& [key, path] : summary.csv) std::printf("wrote %s\n", path.string().c_str());
  return report(summary.checks, summary.experiment + " (scenario " + summary.scenario_hash + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local and nonlocal diffusion on metric graphs"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--out", g.out, "Output directory (overrides the scenario's)");
  app.add_option("--jobs", g.jobs, "Parallel workers for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for randomized property tests");

  std::string scenario_path;
  auto scenario_cmd = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
    return sub;
  };
  auto* local = scenario_cmd("local", "Heat equation with Kirchhoff conditions");
  auto* nonlocal = scenario_cmd("nonlocal", "Nonlocal diffusion with a radial kernel");
  auto* decay = scenario_cmd("decay", "Fit L^p decay exponents");
  auto* profile = scenario_cmd("profile", "Weighted distance to the Gaussian profile");
  auto* relax = scenario_cmd("relax", "Nonlocal-to-local relaxation sweep");

  std::vector<std::string> times, ps, eps;
  profile->add_option("--times", times, "Comma-separated times")->delimiter(',');
  profile->add_option("--p", ps, "Comma-separated exponents (inf allowed)")->delimiter(',');
  relax->add_option("--eps", eps, "Comma-separated epsilons")->delimiter(',');

  auto* distance = app.add_subcommand("distance", "Graph distance between two points");
  std::string graph_path, from, to;
  distance->add_option("graphfile", graph_path, "Graph description file")->required()->check(CLI::ExistingFile);
  distance->add_option("--from", from, "edge:coord")->required();
  distance->add_option("--to", to, "edge:coord")->required();

  auto* check = app.add_subcommand("check", "Run the invariant suite");

  auto* compare = app.add_subcommand("compare", "Per-column max difference of two runs");
  std::string summary_a, summary_b;
  compare->add_option("summary_a", summary_a, "summary.yaml of the first run")->required()->check(CLI::ExistingFile);
  compare->add_option("summary_b", summary_b, "summary.yaml of the second run")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    const std::vector<std::pair<CLI::App*, ExperimentKind>> kinds{{local, ExperimentKind::local},
                                                                  {nonlocal, ExperimentKind::nonlocal},
                                                                  {decay, ExperimentKind::decay},
                                                                  {profile, ExperimentKind::profile},
                                                                  {relax, ExperimentKind::relax}};
    for (const auto& [sub, kind] : kinds) {
      if (!sub->parsed()) continue;
      Scenario s = parse_scenario(scenario_path, kind);
      if (!times.empty()) {
        s.profile_times = parse_list(times);
        for (double t : s.profile_times) s.final_time = std::max(s.final_time, t);
      }
      if (!ps.empty()) s.profile_p = parse_list(ps);
      if (!eps.empty()) s.relax_eps = parse_list(eps);
      return run_scenario(std::move(s), g);
    }
    if (distance->parsed()) {
      const MetricGraph graph = build_graph(parse_graph_file(graph_path));
      for (const auto& w : graph.warnings()) std::cerr << "warning: " << w << '\n';
      std::printf("%s\n", format_number(graph_distance(graph, parse_point(from), parse_point(to))).c_str());
      return 0;
    }
    if (check->parsed()) {
      const auto checks = run_invariant_suite(g.seed, g.jobs);
      if (!g.out.empty()) {
        std::filesystem::create_directories(g.out);
        RunSummary summary;
        summary.experiment = "check";
        summary.scenario_hash = "seed-" + std::to_string(g.seed);
        summary.checks = checks;
        write_summary(std::filesystem::path(g.out) / "summary.yaml", summary);
      }
      return report(checks, "check (seed " + std::to_string(g.seed) + ")");
    }
    if (compare->parsed()) {
      const DiffReport diff = compare_runs(summary_a, summary_b);
      for (const auto& [file, cols] : diff.max_abs) {
        for (const auto& [col, v] : cols) std::printf("%s,%s,%s\n", file.c_str(), col.c_str(), format_number(v).c_str());
      }
      std::printf("overall,max,%s\n", format_number(diff.overall()).c_str());
      return 0;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
