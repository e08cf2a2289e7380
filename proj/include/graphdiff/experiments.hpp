#ifndef GRAPHDIFF_EXPERIMENTS_HPP
#define GRAPHDIFF_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "graphdiff/scenario.hpp"

namespace graphdiff {

/// One named invariant verdict with the measured residual.
struct CheckResult {
  std::string name;
  bool passed = false;
  double residual = 0.0;
  double threshold = 0.0;
};

struct RunSummary {
  std::string experiment;
  std::string scenario_hash;
  std::map<std::string, std::filesystem::path> csv;  // observable -> path
  std::vector<CheckResult> checks;
  double wall_seconds = 0.0;

  bool all_passed() const;
};

struct RunContext {
  std::filesystem::path output_dir;  // empty: use the scenario's
  unsigned jobs = 1;
};

/// Runs the scenario's pipeline, writes its CSVs, one gnuplot script per CSV
/// and `summary.yaml` into the output directory.
RunSummary run_experiment(const Scenario& s, const RunContext& ctx = {});

void write_summary(const std::filesystem::path& path, const RunSummary& summary);
RunSummary read_summary(const std::filesystem::path& path);

/// Per file, per column maximum absolute difference between two runs.
struct DiffReport {
  std::map<std::string, std::map<std::string, double>> max_abs;
  double overall() const;
};

/// Rows are matched by index. Snapshot tables (columns edge,x,u) on
/// different grids are compared by interpolating the second onto the first.
DiffReport compare_runs(const RunSummary& a, const RunSummary& b);
DiffReport compare_runs(const std::filesystem::path& summary_a, const std::filesystem::path& summary_b);

/// The property suite behind `graphdiff check`: symmetry, maximum principle,
/// contraction, positivity, constants in the kernel, kernel moments, mass
/// conservation and distance axioms, on built-in graphs.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed = 1, unsigned jobs = 1);

}  // namespace graphdiff

#endif  // GRAPHDIFF_EXPERIMENTS_HPP
