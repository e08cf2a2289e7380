#include "graphdiff/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "graphdiff/csv.hpp"

namespace graphdiff {

namespace {

class Parser {
 public:
  explicit Parser(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const int line = at.Mark().line;
    throw std::invalid_argument(origin_ + ":" + (line >= 0 ? std::to_string(line + 1) : "?") + ": " + msg);
  }

  void expect_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
  }

  void only_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) const {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  double number(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a number");
    const std::string s = node.Scalar();
    if (s == "inf" || s == ".inf" || s == "infinity") return kInfiniteLength;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(node, what + " must be a number, got '" + s + "'");
    }
  }

  double positive(const YAML::Node& node, const std::string& what) const {
    const double v = number(node, what);
    if (!(v > 0.0) || !std::isfinite(v)) fail(node, what + " must be positive and finite");
    return v;
  }

  bool boolean(const YAML::Node& node, const std::string& what) const {
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, what + " must be true or false");
    }
  }

  std::string text(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a string");
    return node.Scalar();
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(number(item, what));
    return out;
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
};

const std::set<std::string> kScenarioKeys{"experiment", "vertices", "edges",  "grid",     "strict_topology",
                                          "initial",    "kernel",   "epsilon", "time",    "observe",
                                          "relax",      "profile",  "decay",  "distance", "output"};

GraphDescription parse_graph(const Parser& p, const YAML::Node& root) {
  GraphDescription g;
  const YAML::Node vertices = root["vertices"];
  if (!vertices) p.fail(root, "missing 'vertices'");
  if (!vertices.IsSequence()) p.fail(vertices, "'vertices' must be a list of names");
  for (const auto& v : vertices) g.vertices.push_back(p.text(v, "vertex name"));

  const YAML::Node edges = root["edges"];
  if (!edges) p.fail(root, "missing 'edges'");
  if (!edges.IsSequence()) p.fail(edges, "'edges' must be a list");
  for (const auto& e : edges) {
    p.expect_map(e, "edge");
    p.only_keys(e, {"from", "to", "length"}, "edge");
    if (!e["from"]) p.fail(e, "edge needs 'from'");
    GraphDescription::EdgeSpec spec;
    spec.from = p.text(e["from"], "edge 'from'");
    if (e["to"] && !e["to"].IsNull()) spec.to = p.text(e["to"], "edge 'to'");
    if (!e["length"]) p.fail(e, "edge needs 'length'");
    spec.length = p.number(e["length"], "edge length");
    if (!(spec.length > 0.0)) p.fail(e["length"], "edge length must be positive");
    if (spec.to && std::isinf(spec.length)) p.fail(e, "infinite edge cannot have a 'to' vertex");
    if (!spec.to && !std::isinf(spec.length)) p.fail(e, "edge without 'to' must have length inf");
    g.edges.push_back(spec);
  }
  if (const YAML::Node s = root["strict_topology"]) g.strict_topology = p.boolean(s, "strict_topology");
  try {
    (void)build_graph(g);
  } catch (const std::invalid_argument& err) {
    p.fail(edges, err.what());
  }
  return g;
}

DatumSpec parse_datum(const Parser& p, const YAML::Node& node, std::size_t edge_count) {
  p.expect_map(node, "initial");
  p.only_keys(node, {"kind", "edge", "center", "width", "mass"}, "initial");
  DatumSpec d;
  if (const YAML::Node k = node["kind"]) {
    try {
      d.kind = parse_datum_kind(p.text(k, "initial kind"));
    } catch (const std::invalid_argument& err) {
      p.fail(k, err.what());
    }
  }
  if (const YAML::Node e = node["edge"]) {
    const double v = p.number(e, "initial edge");
    if (v < 0 || v != std::floor(v) || v >= static_cast<double>(edge_count)) {
      p.fail(e, "initial edge must be an edge index in [0, " + std::to_string(edge_count) + ")");
    }
    d.edge = EdgeId{static_cast<std::size_t>(v)};
  }
  if (const YAML::Node c = node["center"]) d.center = p.number(c, "initial center");
  if (const YAML::Node w = node["width"]) d.width = p.positive(w, "initial width");
  if (const YAML::Node m = node["mass"]) d.mass = p.number(m, "initial mass");
  return d;
}

void check_window(const Scenario& s, const std::string& prefix) {
  const bool uses_kernel = s.kind == ExperimentKind::nonlocal || s.kind == ExperimentKind::relax ||
                           (s.kind == ExperimentKind::decay && s.decay_nonlocal);
  double a = 1.0;
  double reach = 0.0;
  if (uses_kernel) {
    if (!s.kernel) throw std::invalid_argument(prefix + "experiment '" + to_string(s.kind) + "' needs a 'kernel'");
    const Kernel k = *s.build_kernel();
    a = k.second_moment_half();
    const double eps =
        s.kind == ExperimentKind::relax ? *std::max_element(s.relax_eps.begin(), s.relax_eps.end()) : s.epsilon;
    reach = eps * k.support_radius();
  }
  if (s.kind == ExperimentKind::distance) return;
  const double front = 10.0 * std::sqrt(a * s.final_time) + reach;
  if (front > s.truncation * (1.0 + 1e-12)) {
    throw std::invalid_argument(prefix + "L_trunc=" + format_number(s.truncation) +
                                " is below the validity front " + format_number(front) + " for T=" +
                                format_number(s.final_time));
  }
}

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "local") return ExperimentKind::local;
  if (name == "nonlocal") return ExperimentKind::nonlocal;
  if (name == "decay") return ExperimentKind::decay;
  if (name == "profile") return ExperimentKind::profile;
  if (name == "relax") return ExperimentKind::relax;
  if (name == "distance") return ExperimentKind::distance;
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::local: return "local";
    case ExperimentKind::nonlocal: return "nonlocal";
    case ExperimentKind::decay: return "decay";
    case ExperimentKind::profile: return "profile";
    case ExperimentKind::relax: return "relax";
    case ExperimentKind::distance: return "distance";
  }
  return "?";
}

GraphPoint parse_point(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("point '" + text + "' must be edge:coord");
  try {
    std::size_t used = 0;
    const long edge = std::stol(text.substr(0, colon), &used);
    if (used != colon || edge < 0) throw std::invalid_argument(text);
    const std::string rest = text.substr(colon + 1);
    const double coord = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    return {EdgeId{static_cast<std::size_t>(edge)}, coord};
  } catch (const std::exception&) {
    throw std::invalid_argument("point '" + text + "' must be edge:coord");
  }
}

std::optional<Kernel> Scenario::build_kernel() const {
  if (!kernel) return std::nullopt;
  Kernel k = builtin_kernel(kernel->name, kernel->params);
  if (kernel->normalize) k = normalize_unit_second_moment(k);
  return k;
}

std::string Scenario::canonical() const {
  std::ostringstream out;
  auto list = [&](const std::vector<double>& v) {
    out << '[';
    for (double x : v) out << format_number(x) << ';';
    out << ']';
  };
  out << "kind=" << to_string(kind) << "\nvertices=";
  for (const auto& v : graph.vertices) out << v << ';';
  out << "\nedges=";
  for (const auto& e : graph.edges) out << e.from << '>' << e.to.value_or("~") << ':' << format_number(e.length) << ';';
  out << "\nstrict=" << graph.strict_topology << "\nh=" << format_number(h) << "\nL=" << format_number(truncation);
  out << "\ninitial=";
  for (const auto& d : initial) {
    out << to_string(d.kind) << ',' << d.edge.value << ',' << format_number(d.center) << ','
        << format_number(d.width) << ',' << format_number(d.mass) << ';';
  }
  out << "\nkernel=";
  if (kernel) {
    out << kernel->name << ',' << kernel->normalize;
    for (const auto& [k, v] : kernel->params) out << ',' << k << '=' << format_number(v);
  }
  out << "\neps=" << format_number(epsilon) << "\nT=" << format_number(final_time) << "\ndt=" << format_number(dt)
      << "\nscheme=" << to_string(scheme) << "\nobserve=";
  list(observe_times);
  out << "\nquantities=";
  for (const auto& q : quantities) out << q << ';';
  out << "\nsnapshots=" << snapshots << "\nrelax=";
  list(relax_eps);
  out << "\nprofile_t=";
  list(profile_times);
  out << "\nprofile_p=";
  list(profile_p);
  out << "\ndecay=" << format_number(decay_window_lo) << ',' << format_number(decay_window_hi) << ','
      << decay_samples << ',' << decay_nonlocal << "\ndistance=";
  for (const auto& [a, b] : distance_pairs) {
    out << a.edge.value << ':' << format_number(a.coord) << '-' << b.edge.value << ':' << format_number(b.coord) << ';';
  }
  out << '\n';
  return out.str();
}

std::string Scenario::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate(const Scenario& s) {
  const MetricGraph g = build_graph(s.graph);
  if (!(s.h > 0.0)) throw std::invalid_argument("grid h must be positive");
  if (!(s.final_time > 0.0)) throw std::invalid_argument("time T must be positive");
  if (s.dt < 0.0) throw std::invalid_argument("time dt must be positive");
  for (const auto& d : s.initial) {
    if (d.edge.value >= g.edge_count()) throw std::invalid_argument("initial datum references a missing edge");
  }
  for (double t : s.observe_times) {
    if (t < 0.0 || t > s.final_time * (1.0 + 1e-12)) throw std::invalid_argument("observe time outside [0, T]");
  }
  for (double eps : s.relax_eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("relax eps must be positive");
  }
  for (double p : s.profile_p) {
    if (!(p >= 1.0)) throw std::invalid_argument("profile p must be >= 1");
  }
  for (const auto& [a, b] : s.distance_pairs) {
    if (!valid_point(g, a) || !valid_point(g, b)) throw std::invalid_argument("distance point outside the graph");
  }
  if (s.decay_window_lo >= s.decay_window_hi || s.decay_window_lo <= 0.0) {
    throw std::invalid_argument("decay window must satisfy 0 < lo < hi");
  }
  if (s.decay_samples < 5) throw std::invalid_argument("decay needs at least 5 samples");
  check_window(s, "");
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin,
                             std::optional<ExperimentKind> kind) {
  const Parser p(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& err) {
    throw std::invalid_argument(origin + ":" + std::to_string(err.mark.line + 1) + ": " + err.msg);
  }
  if (!root.IsMap()) throw std::invalid_argument(origin + ": scenario must be a mapping");
  p.only_keys(root, kScenarioKeys, "scenario");

  Scenario s;
  if (const YAML::Node k = root["experiment"]) {
    try {
      s.kind = parse_experiment_kind(p.text(k, "experiment"));
    } catch (const std::invalid_argument& err) {
      p.fail(k, std::string(err.what()) + " (key 'experiment')");
    }
  }
  if (kind) s.kind = *kind;
  s.graph = parse_graph(p, root);
  const std::size_t edge_count = s.graph.edges.size();

  YAML::Node grid = root["grid"];
  std::optional<double> trunc;
  if (grid) {
    p.expect_map(grid, "grid");
    p.only_keys(grid, {"h", "L_trunc"}, "grid");
    if (grid["h"]) s.h = p.positive(grid["h"], "grid h");
    if (grid["L_trunc"]) trunc = p.positive(grid["L_trunc"], "grid L_trunc");
  }

  if (const YAML::Node init = root["initial"]) {
    if (init.IsSequence()) {
      for (const auto& item : init) s.initial.push_back(parse_datum(p, item, edge_count));
    } else {
      s.initial.push_back(parse_datum(p, init, edge_count));
    }
  } else {
    s.initial.push_back(DatumSpec{});
  }

  if (const YAML::Node k = root["kernel"]) {
    p.expect_map(k, "kernel");
    KernelSpec ks;
    for (const auto& kv : k) {
      const auto key = kv.first.as<std::string>();
      if (key == "name") {
        ks.name = p.text(kv.second, "kernel name");
      } else if (key == "normalize") {
        ks.normalize = p.boolean(kv.second, "kernel normalize");
      } else {
        ks.params[key] = p.number(kv.second, "kernel parameter '" + key + "'");
      }
    }
    try {
      (void)builtin_kernel(ks.name, ks.params);
    } catch (const std::invalid_argument& err) {
      p.fail(k, err.what());
    }
    s.kernel = ks;
  }
  if (const YAML::Node e = root["epsilon"]) s.epsilon = p.positive(e, "epsilon");

  if (const YAML::Node r = root["relax"]) {
    p.expect_map(r, "relax");
    p.only_keys(r, {"eps"}, "relax");
    if (r["eps"]) s.relax_eps = p.numbers(r["eps"], "relax eps");
    if (s.relax_eps.empty()) p.fail(r, "relax eps must not be empty");
    for (double eps : s.relax_eps) {
      if (!(eps > 0.0)) p.fail(r["eps"], "relax eps must be positive");
    }
  }
  if (const YAML::Node pr = root["profile"]) {
    p.expect_map(pr, "profile");
    p.only_keys(pr, {"times", "p"}, "profile");
    if (pr["times"]) s.profile_times = p.numbers(pr["times"], "profile times");
    if (pr["p"]) s.profile_p = p.numbers(pr["p"], "profile p");
    for (double v : s.profile_p) {
      if (!(v >= 1.0)) p.fail(pr["p"], "profile p must be >= 1");
    }
    for (double v : s.profile_times) {
      if (!(v > 0.0)) p.fail(pr["times"], "profile times must be positive");
    }
  }
  if (const YAML::Node d = root["decay"]) {
    p.expect_map(d, "decay");
    p.only_keys(d, {"window", "samples", "solver"}, "decay");
    if (d["window"]) {
      const auto w = p.numbers(d["window"], "decay window");
      if (w.size() != 2 || !(w[0] > 0.0) || !(w[1] > w[0])) p.fail(d["window"], "decay window must be [lo, hi] with 0 < lo < hi");
      s.decay_window_lo = w[0];
      s.decay_window_hi = w[1];
    }
    if (d["samples"]) {
      const double n = p.number(d["samples"], "decay samples");
      if (n < 5 || n != std::floor(n)) p.fail(d["samples"], "decay samples must be an integer >= 5");
      s.decay_samples = static_cast<std::size_t>(n);
    }
    if (d["solver"]) {
      const std::string solver = p.text(d["solver"], "decay solver");
      if (solver != "local" && solver != "nonlocal") p.fail(d["solver"], "decay solver must be local or nonlocal");
      s.decay_nonlocal = solver == "nonlocal";
    }
  }
  if (const YAML::Node d = root["distance"]) {
    p.expect_map(d, "distance");
    p.only_keys(d, {"pairs"}, "distance");
    if (const YAML::Node pairs = d["pairs"]) {
      if (!pairs.IsSequence()) p.fail(pairs, "distance pairs must be a list");
      for (const auto& pair : pairs) {
        if (!pair.IsSequence() || pair.size() != 2) p.fail(pair, "distance pair must be [edge:coord, edge:coord]");
        try {
          s.distance_pairs.emplace_back(parse_point(p.text(pair[0], "point")), parse_point(p.text(pair[1], "point")));
        } catch (const std::invalid_argument& err) {
          p.fail(pair, err.what());
        }
      }
    }
  }

  const YAML::Node time = root["time"];
  bool has_T = false;
  bool has_scheme = false;
  if (time) {
    p.expect_map(time, "time");
    p.only_keys(time, {"T", "dt", "scheme"}, "time");
    if (time["T"]) {
      s.final_time = p.positive(time["T"], "time T");
      has_T = true;
    }
    if (time["dt"]) s.dt = p.positive(time["dt"], "time dt");
    if (time["scheme"]) {
      try {
        s.scheme = parse_scheme(p.text(time["scheme"], "time scheme"));
      } catch (const std::invalid_argument& err) {
        p.fail(time["scheme"], err.what());
      }
      has_scheme = true;
    }
  }
  if (!has_T) {
    if (s.kind == ExperimentKind::profile) {
      s.final_time = *std::max_element(s.profile_times.begin(), s.profile_times.end());
    } else if (s.kind == ExperimentKind::decay) {
      s.final_time = s.decay_window_hi;
    } else if (s.kind != ExperimentKind::distance) {
      p.fail(root, "missing 'time: {T: ...}'");
    }
  }
  const bool nonlocal_run = s.kind == ExperimentKind::nonlocal || s.kind == ExperimentKind::relax ||
                            (s.kind == ExperimentKind::decay && s.decay_nonlocal);
  if (!has_scheme) s.scheme = nonlocal_run ? TimeScheme::implicit_euler : TimeScheme::crank_nicolson;
  if (s.dt == 0.0) s.dt = s.final_time / 2000.0;

  if (const YAML::Node o = root["observe"]) {
    p.expect_map(o, "observe");
    p.only_keys(o, {"times", "quantities", "snapshots"}, "observe");
    if (o["times"]) {
      s.observe_times = p.numbers(o["times"], "observe times");
      for (double t : s.observe_times) {
        if (t < 0.0 || t > s.final_time * (1.0 + 1e-12)) p.fail(o["times"], "observe time outside [0, T]");
      }
    }
    if (o["quantities"]) {
      const YAML::Node q = o["quantities"];
      if (!q.IsSequence()) p.fail(q, "observe quantities must be a list");
      s.quantities.clear();
      const std::set<std::string> allowed{"mass", "l1", "l2", "linf", "grad_l2", "energy"};
      for (const auto& item : q) {
        const std::string name = p.text(item, "quantity");
        if (!allowed.count(name)) p.fail(item, "unknown quantity '" + name + "'");
        s.quantities.push_back(name);
      }
    }
    if (o["snapshots"]) s.snapshots = p.boolean(o["snapshots"], "observe snapshots");
  }
  if (s.observe_times.empty()) {
    for (int k = 0; k <= 20; ++k) s.observe_times.push_back(s.final_time * k / 20.0);
  }
  if (s.kind == ExperimentKind::profile) {
    for (double t : s.profile_times) {
      if (t > s.final_time * (1.0 + 1e-12)) p.fail(root["profile"], "profile time beyond T");
    }
  }
  if (s.kind == ExperimentKind::decay && s.decay_window_hi > s.final_time * (1.0 + 1e-12)) {
    p.fail(root["decay"] ? root["decay"] : root, "decay window extends beyond T");
  }

  if (const YAML::Node out = root["output"]) s.output_dir = p.text(out, "output");

  if (trunc) {
    s.truncation = *trunc;
  } else {
    // Smallest admissible truncation, rounded up.
    double a = 1.0;
    double reach = 0.0;
    if (nonlocal_run && s.kernel) {
      const Kernel k = *s.build_kernel();
      a = k.second_moment_half();
      const double eps = s.kind == ExperimentKind::relax ? *std::max_element(s.relax_eps.begin(), s.relax_eps.end())
                                                         : s.epsilon;
      reach = eps * k.support_radius();
    }
    s.truncation = std::max(1.0, std::ceil(10.0 * std::sqrt(a * s.final_time) + reach));
  }

  try {
    check_window(s, "");
  } catch (const std::invalid_argument& err) {
    p.fail(grid ? grid : root, err.what());
  }
  return s;
}

Scenario parse_scenario(const std::filesystem::path& path, std::optional<ExperimentKind> kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string(), kind);
}

GraphDescription parse_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read graph file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const Parser p(path.string());
  YAML::Node root;
  try {
    root = YAML::Load(buf.str());
  } catch (const YAML::ParserException& err) {
    throw std::invalid_argument(path.string() + ":" + std::to_string(err.mark.line + 1) + ": " + err.msg);
  }
  if (!root.IsMap()) throw std::invalid_argument(path.string() + ": graph file must be a mapping");
  p.only_keys(root, kScenarioKeys, "graph file");
  return parse_graph(p, root);
}

}  // namespace graphdiff
