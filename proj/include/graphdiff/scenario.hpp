#ifndef GRAPHDIFF_SCENARIO_HPP
#define GRAPHDIFF_SCENARIO_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graphdiff/graph.hpp"
#include "graphdiff/initial_data.hpp"
#include "graphdiff/kernel.hpp"
#include "graphdiff/time_stepping.hpp"

namespace graphdiff {

enum class ExperimentKind { local, nonlocal, decay, profile, relax, distance };

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind k);

struct KernelSpec {
  std::string name = "tent";
  KernelParams params;
  bool normalize = false;
};

/// A fully validated experiment description with defaults filled in.
struct Scenario {
  ExperimentKind kind = ExperimentKind::local;
  GraphDescription graph;
  double h = 1e-2;
  double truncation = 0.0;
  std::vector<DatumSpec> initial;
  std::optional<KernelSpec> kernel;
  double epsilon = 1.0;

  double final_time = 1.0;
  double dt = 0.0;
  TimeScheme scheme = TimeScheme::crank_nicolson;

  std::vector<double> observe_times;
  std::vector<std::string> quantities{"mass", "l1", "l2", "linf", "grad_l2"};
  bool snapshots = false;

  std::vector<double> relax_eps{0.4, 0.2, 0.1};
  std::vector<double> profile_times{10.0, 40.0, 160.0};
  std::vector<double> profile_p{1.0, 2.0, kInfiniteLength};
  double decay_window_lo = 10.0;
  double decay_window_hi = 100.0;
  std::size_t decay_samples = 20;
  bool decay_nonlocal = false;
  std::vector<std::pair<GraphPoint, GraphPoint>> distance_pairs;

  std::filesystem::path output_dir = "out";

  /// Kernel with normalization applied, if any.
  std::optional<Kernel> build_kernel() const;
  /// Canonical text of every field; the hash is computed from it.
  std::string canonical() const;
  std::string hash() const;
};

/// Strict parse: unknown keys and constraint violations throw with
/// "<path>:<line>:" prefixed messages. The graph keys (vertices, edges,
/// grid, strict_topology) double as the graph description file.
/// `kind` overrides the file's `experiment` key (CLI subcommands).
Scenario parse_scenario(const std::filesystem::path& path, std::optional<ExperimentKind> kind = std::nullopt);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<string>",
                             std::optional<ExperimentKind> kind = std::nullopt);

/// Graph part only; other scenario keys are accepted and ignored.
GraphDescription parse_graph_file(const std::filesystem::path& path);

/// "edge:coord" as used on the command line.
GraphPoint parse_point(const std::string& text);

/// Re-runs the load-time checks after command-line overrides.
void validate(const Scenario& s);

}  // namespace graphdiff

#endif  // GRAPHDIFF_SCENARIO_HPP
