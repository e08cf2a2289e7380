#include "graphdiff/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "graphdiff/asymptotics.hpp"
#include "graphdiff/csv.hpp"
#include "graphdiff/local_solver.hpp"
#include "graphdiff/nonlocal_solver.hpp"

namespace graphdiff {

namespace fs = std::filesystem;

namespace {

constexpr double kMassTol = 1e-10;
constexpr double kMonotoneTol = 1e-10;

CheckResult check(std::string name, double residual, double threshold) {
  return {std::move(name), residual <= threshold, residual, threshold};
}

// Largest increase along a sequence, relative to its first value.
double max_increase(const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, v[i] - v[i - 1]);
  const double scale = v.empty() ? 1.0 : std::max(1.0, std::abs(v.front()));
  return worst / scale;
}

// Zero when the sequence strictly decreases; else the largest non-decrease.
double strict_decrease_violation(const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) worst = std::max(worst, v[i] - v[i - 1] + 1e-300);
  }
  return worst;
}

double mass_drift(const std::vector<Observation>& obs) {
  if (obs.empty()) return 0.0;
  const double m0 = obs.front().mass;
  const double scale = std::abs(m0) > 0.0 ? std::abs(m0) : 1.0;
  double worst = 0.0;
  for (const auto& o : obs) worst = std::max(worst, std::abs(o.mass - m0) / scale);
  return worst;
}

void add_contraction_checks(std::vector<CheckResult>& checks, const std::string& prefix,
                            const std::vector<Observation>& obs) {
  std::vector<double> l1, l2, linf;
  for (const auto& o : obs) {
    l1.push_back(o.l1);
    l2.push_back(o.l2);
    linf.push_back(o.linf);
  }
  checks.push_back(check(prefix + "l1_contraction", max_increase(l1), kMonotoneTol));
  checks.push_back(check(prefix + "l2_contraction", max_increase(l2), kMonotoneTol));
  checks.push_back(check(prefix + "linf_contraction", max_increase(linf), kMonotoneTol));
}

std::string time_tag(double t) { return format_number(t); }

struct Setup {
  std::shared_ptr<const MetricGraph> graph;
  std::shared_ptr<const Grid> grid;
  GraphFunction u0;
};

Setup make_setup(const Scenario& s) {
  Setup st;
  st.graph = std::make_shared<const MetricGraph>(build_graph(s.graph));
  st.grid = std::make_shared<const Grid>(st.graph, s.h, s.truncation);
  st.u0 = make_datum(st.grid, s.initial);
  return st;
}

void emit(RunSummary& summary, const fs::path& dir, const std::string& key, const std::string& file,
          const CsvTable& table, bool log_scale = false) {
  const fs::path path = dir / file;
  write_csv(path, table);
  write_plot_script(path, table, log_scale);
  summary.csv[key] = path;
}

void write_snapshot(const fs::path& path, const GraphFunction& u) {
  CsvTable t{{"edge", "x", "u"}, {}};
  for (std::size_t i = 0; i < u.grid().size(); ++i) {
    const GraphPoint p = u.grid().cell_point(i);
    t.rows.push_back({static_cast<double>(p.edge.value), p.coord, u.values()[static_cast<Eigen::Index>(i)]});
  }
  write_csv(path, t);
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(n - 1)));
  }
  return out;
}

RunOptions run_options(const Scenario& s, std::vector<double> times) {
  RunOptions o;
  o.final_time = s.final_time;
  o.dt = s.dt;
  o.scheme = s.scheme;
  o.observe_times = std::move(times);
  return o;
}

double observation_value(const Observation& o, const std::string& q) {
  if (q == "mass") return o.mass;
  if (q == "l1") return o.l1;
  if (q == "l2") return o.l2;
  if (q == "linf") return o.linf;
  if (q == "grad_l2") return o.grad_l2;
  return o.energy;
}

CsvTable observation_table(const std::vector<Observation>& obs, const std::vector<std::string>& quantities,
                           bool nonlocal) {
  CsvTable t;
  t.columns.push_back("t");
  for (const auto& q : quantities) {
    if (nonlocal && q == "grad_l2") continue;
    if (!nonlocal && q == "energy") continue;
    t.columns.push_back(q);
  }
  if (nonlocal && std::find(t.columns.begin(), t.columns.end(), "energy") == t.columns.end() &&
      std::find(quantities.begin(), quantities.end(), "grad_l2") != quantities.end()) {
    t.columns.push_back("energy");
  }
  for (const auto& o : obs) {
    std::vector<double> row{o.t};
    for (std::size_t c = 1; c < t.columns.size(); ++c) row.push_back(observation_value(o, t.columns[c]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void run_local(const Scenario& s, const fs::path& dir, RunSummary& summary) {
  Setup st = make_setup(s);
  const LocalOperator op = assemble_local(st.grid);
  RunOptions opts = run_options(s, s.observe_times);
  if (s.snapshots) {
    opts.on_observe = [&](const HeatState& state) {
      const fs::path path = dir / ("u_t" + time_tag(state.t) + ".csv");
      write_snapshot(path, state.u);
      summary.csv["snapshot_t" + time_tag(state.t)] = path;
    };
  }
  const RunRecord run = solve_heat(op, st.u0, opts);
  emit(summary, dir, "local", "local.csv", observation_table(run.observations, s.quantities, false));

  summary.checks.push_back(check("mass_conservation", mass_drift(run.observations), kMassTol));
  add_contraction_checks(summary.checks, "", run.observations);
  if (s.scheme == TimeScheme::implicit_euler) {
    const double lo = st.u0.values().minCoeff();
    const double hi = st.u0.values().maxCoeff();
    const double over = std::max(0.0, run.final_state.u.values().maxCoeff() - hi);
    const double under = std::max(0.0, lo - run.final_state.u.values().minCoeff());
    summary.checks.push_back(check("maximum_principle", std::max(over, under), 1e-12));
  }
  if (s.scheme == TimeScheme::crank_nicolson) {
    const double norm0 = run.l2_squared.front();
    summary.checks.push_back(
        check("energy_identity", discrete_energy_identity(run) / std::max(norm0, 1e-300), 5e-2));
  }
}

void run_nonlocal(const Scenario& s, const fs::path& dir, RunSummary& summary) {
  Setup st = make_setup(s);
  const Kernel kernel = *s.build_kernel();
  const NonlocalOperator op = assemble_nonlocal(st.grid, kernel, s.epsilon);
  RunOptions opts = run_options(s, s.observe_times);
  if (s.snapshots) {
    opts.on_observe = [&](const HeatState& state) {
      const fs::path path = dir / ("u_t" + time_tag(state.t) + ".csv");
      write_snapshot(path, state.u);
      summary.csv["snapshot_t" + time_tag(state.t)] = path;
    };
  }
  const RunRecord run = solve_nonlocal(op, st.u0, opts);
  emit(summary, dir, "nonlocal", "nonlocal.csv", observation_table(run.observations, s.quantities, true));

  summary.checks.push_back(check("mass_conservation", mass_drift(run.observations), kMassTol));
  add_contraction_checks(summary.checks, "", run.observations);
  const double norm0 = run.l2_squared.front();
  double worst = 0.0;
  for (const auto& o : run.observations) {
    if (o.t > 0.0) worst = std::max(worst, o.t * o.energy / std::max(norm0, 1e-300));
  }
  summary.checks.push_back(check("energy_bound", worst, 1.05));
  if (st.u0.values().minCoeff() >= 0.0) {
    summary.checks.push_back(check("positivity", std::max(0.0, -run.final_state.u.values().minCoeff()), 1e-12));
  }
  summary.checks.push_back(check("energy_identity", nonlocal_energy_identity(run),
                                 run.dt * op.max_diagonal() * norm0 + 1e-12));
}

void run_decay(const Scenario& s, const fs::path& dir, RunSummary& summary) {
  Setup st = make_setup(s);
  const std::vector<double> times = log_spaced(s.decay_window_lo, s.decay_window_hi, s.decay_samples);
  RunRecord run;
  double tol = 0.05;
  if (s.decay_nonlocal) {
    const NonlocalOperator op = assemble_nonlocal(st.grid, *s.build_kernel(), s.epsilon);
    run = solve_nonlocal(op, st.u0, run_options(s, times));
    tol = 0.07;
  } else {
    const LocalOperator op = assemble_local(st.grid);
    run = solve_heat(op, st.u0, run_options(s, times));
  }
  CsvTable series{{"t", "l1", "l2", "linf"}, {}};
  std::vector<DecaySample> l1, l2, linf;
  for (const auto& o : run.observations) {
    series.rows.push_back({o.t, o.l1, o.l2, o.linf});
    l1.push_back({o.t, o.l1});
    l2.push_back({o.t, o.l2});
    linf.push_back({o.t, o.linf});
  }
  emit(summary, dir, "decay_series", "decay_series.csv", series, true);

  CsvTable slopes{{"p", "fitted_slope", "expected_slope"}, {}};
  const double lo = s.decay_window_lo * (1.0 - 1e-9);
  const double hi = s.decay_window_hi * (1.0 + 1e-9);
  const double s1 = fit_decay_exponent(l1, lo, hi);
  const double s2 = fit_decay_exponent(l2, lo, hi);
  const double sinf = fit_decay_exponent(linf, lo, hi);
  slopes.rows = {{1.0, s1, 0.0}, {2.0, s2, -0.25}, {kInfiniteLength, sinf, -0.5}};
  emit(summary, dir, "decay", "decay.csv", slopes);

  std::vector<double> l1_values;
  for (const auto& o : run.observations) l1_values.push_back(o.l1);
  summary.checks.push_back(check("l1_nonincreasing", max_increase(l1_values), kMonotoneTol));
  summary.checks.push_back(check("slope_l2", std::abs(s2 + 0.25), tol));
  summary.checks.push_back(check("slope_linf", std::abs(sinf + 0.5), tol));
  summary.checks.push_back(check("mass_conservation", mass_drift(run.observations), kMassTol));
}

void run_profile(const Scenario& s, const fs::path& dir, RunSummary& summary) {
  Setup st = make_setup(s);
  const LocalOperator op = assemble_local(st.grid);
  const ProfileParams params = profile_params_for(st.u0);
  CsvTable table{{"t", "p", "err_infinite_part", "err_finite_part"}, {}};
  std::map<double, std::vector<double>> inf_part, fin_part;
  RunOptions opts = run_options(s, s.profile_times);
  opts.on_observe = [&](const HeatState& state) {
    for (double p : s.profile_p) {
      const WeightedError e = weighted_error(state.u, state.t, p, params);
      table.rows.push_back({state.t, p, e.infinite_part, e.finite_part});
      inf_part[p].push_back(e.infinite_part);
      fin_part[p].push_back(e.finite_part);
    }
  };
  (void)solve_heat(op, st.u0, opts);
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const auto& a, const auto& b) { return a[0] < b[0]; });
  emit(summary, dir, "profile_errors", "profile_errors.csv", table);

  const bool has_finite = !st.graph->finite_edges().empty();
  for (double p : s.profile_p) {
    const std::string tag = "p" + format_number(p);
    summary.checks.push_back(check("profile_infinite_decreasing_" + tag, strict_decrease_violation(inf_part[p]), 0.0));
    if (has_finite) {
      summary.checks.push_back(check("profile_finite_decreasing_" + tag, strict_decrease_violation(fin_part[p]), 0.0));
    }
  }
}

void run_relax(const Scenario& s, const fs::path& dir, RunSummary& summary, unsigned jobs) {
  Setup st = make_setup(s);
  RelaxationOptions opts;
  opts.final_time = s.final_time;
  opts.dt = s.dt;
  opts.scheme = s.scheme;
  opts.jobs = jobs;
  std::vector<double> eps = s.relax_eps;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const auto rows = relaxation_sweep(st.grid, *s.build_kernel(), st.u0, eps, opts);
  CsvTable table{{"epsilon", "space_time_l2_error"}, {}};
  std::vector<double> errors;
  for (const auto& r : rows) {
    table.rows.push_back({r.eps, r.space_time_l2_error});
    errors.push_back(r.space_time_l2_error);
  }
  emit(summary, dir, "relax", "relax.csv", table, true);
  summary.checks.push_back(check("relax_error_decreasing", strict_decrease_violation(errors), 0.0));
}

void run_distance(const Scenario& s, const fs::path& dir, RunSummary& summary) {
  const MetricGraph g = build_graph(s.graph);
  CsvTable table{{"from_edge", "from_coord", "to_edge", "to_coord", "distance"}, {}};
  double asym = 0.0;
  for (const auto& [a, b] : s.distance_pairs) {
    const double d = graph_distance(g, a, b);
    asym = std::max(asym, std::abs(d - graph_distance(g, b, a)));
    table.rows.push_back({static_cast<double>(a.edge.value), a.coord, static_cast<double>(b.edge.value), b.coord, d});
  }
  emit(summary, dir, "distance", "distance.csv", table);
  summary.checks.push_back(check("distance_symmetry", asym, 1e-12));
}

CsvTable snapshot_interpolated(const CsvTable& a, const CsvTable& b) {
  // b's u sampled at a's (edge, x) by linear interpolation per edge.
  const std::size_t ce = b.column("edge"), cx = b.column("x"), cu = b.column("u");
  std::map<long, std::vector<std::pair<double, double>>> curves;
  for (const auto& r : b.rows) curves[std::lround(r[ce])].emplace_back(r[cx], r[cu]);
  for (auto& [e, pts] : curves) std::sort(pts.begin(), pts.end());
  CsvTable out = a;
  const std::size_t ae = a.column("edge"), ax = a.column("x"), au = a.column("u");
  for (auto& r : out.rows) {
    const auto it = curves.find(std::lround(r[ae]));
    if (it == curves.end()) throw std::invalid_argument("snapshot edges differ between runs");
    const auto& pts = it->second;
    const double x = r[ax];
    if (pts.size() < 2) throw std::invalid_argument("snapshot edge with fewer than two cells");
    // Linear through the bracketing centers; the end half-cells extrapolate
    // the first or last segment.
    auto hi = std::lower_bound(pts.begin(), pts.end(), std::make_pair(x, -std::numeric_limits<double>::infinity()));
    if (hi == pts.begin()) ++hi;
    if (hi == pts.end()) --hi;
    const auto lo = hi - 1;
    const double f = (x - lo->first) / (hi->first - lo->first);
    r[au] = (1.0 - f) * lo->second + f * hi->second;
  }
  return out;
}

}  // namespace

bool RunSummary::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

RunSummary run_experiment(const Scenario& s, const RunContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = ctx.output_dir.empty() ? s.output_dir : ctx.output_dir;
  fs::create_directories(dir);

  RunSummary summary;
  summary.experiment = to_string(s.kind);
  summary.scenario_hash = s.hash();
  try {
    switch (s.kind) {
      case ExperimentKind::local: run_local(s, dir, summary); break;
      case ExperimentKind::nonlocal: run_nonlocal(s, dir, summary); break;
      case ExperimentKind::decay: run_decay(s, dir, summary); break;
      case ExperimentKind::profile: run_profile(s, dir, summary); break;
      case ExperimentKind::relax: run_relax(s, dir, summary, ctx.jobs); break;
      case ExperimentKind::distance: run_distance(s, dir, summary); break;
    }
  } catch (const std::exception& err) {
    throw std::runtime_error("experiment '" + summary.experiment + "' (scenario " + summary.scenario_hash +
                             "): " + err.what());
  }
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_summary(dir / "summary.yaml", summary);
  return summary;
}

void write_summary(const fs::path& path, const RunSummary& summary) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "experiment" << YAML::Value << summary.experiment;
  out << YAML::Key << "scenario_hash" << YAML::Value << summary.scenario_hash;
  out << YAML::Key << "wall_seconds" << YAML::Value << format_number(summary.wall_seconds);
  out << YAML::Key << "all_passed" << YAML::Value << summary.all_passed();
  out << YAML::Key << "csv" << YAML::Value << YAML::BeginMap;
  for (const auto& [key, p] : summary.csv) out << YAML::Key << key << YAML::Value << p.filename().string();
  out << YAML::EndMap;
  out << YAML::Key << "checks" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : summary.checks) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;
    out << YAML::Key << "passed" << YAML::Value << c.passed;
    out << YAML::Key << "residual" << YAML::Value << format_number(c.residual);
    out << YAML::Key << "threshold" << YAML::Value << format_number(c.threshold);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << out.c_str() << '\n';
}

RunSummary read_summary(const fs::path& path) {
  const YAML::Node root = YAML::LoadFile(path.string());
  RunSummary s;
  s.experiment = root["experiment"].as<std::string>();
  s.scenario_hash = root["scenario_hash"].as<std::string>();
  s.wall_seconds = root["wall_seconds"].as<double>();
  for (const auto& kv : root["csv"]) {
    s.csv[kv.first.as<std::string>()] = path.parent_path() / kv.second.as<std::string>();
  }
  for (const auto& c : root["checks"]) {
    s.checks.push_back({c["name"].as<std::string>(), c["passed"].as<bool>(), c["residual"].as<double>(),
                        c["threshold"].as<double>()});
  }
  return s;
}

double DiffReport::overall() const {
  double m = 0.0;
  for (const auto& [file, cols] : max_abs)
    for (const auto& [col, v] : cols) m = std::max(m, v);
  return m;
}

DiffReport compare_runs(const RunSummary& a, const RunSummary& b) {
  if (a.experiment != b.experiment) {
    throw std::invalid_argument("compare_runs: experiments differ (" + a.experiment + " vs " + b.experiment + ")");
  }
  DiffReport report;
  for (const auto& [key, path_a] : a.csv) {
    const auto it = b.csv.find(key);
    if (it == b.csv.end()) continue;
    const CsvTable ta = read_csv(path_a);
    CsvTable tb = read_csv(it->second);
    if (ta.columns != tb.columns) throw std::invalid_argument("compare_runs: mismatched columns in " + key);
    const bool snapshot = ta.has_column("edge") && ta.has_column("x") && ta.has_column("u");
    if (snapshot) {
      tb = snapshot_interpolated(ta, tb);
    } else if (ta.rows.size() != tb.rows.size()) {
      throw std::invalid_argument("compare_runs: mismatched row counts in " + key);
    }
    auto& cols = report.max_abs[key];
    for (std::size_t c = 0; c < ta.columns.size(); ++c) {
      double m = 0.0;
      for (std::size_t r = 0; r < ta.rows.size(); ++r) {
        const double x = ta.rows[r][c];
        const double y = tb.rows[r][c];
        if (x == y) continue;  // covers matching infinities
        m = std::max(m, std::abs(x - y));
      }
      cols[ta.columns[c]] = m;
    }
  }
  return report;
}

DiffReport compare_runs(const fs::path& summary_a, const fs::path& summary_b) {
  return compare_runs(read_summary(summary_a), read_summary(summary_b));
}

}  // namespace graphdiff
