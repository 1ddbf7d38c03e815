#include "sidmp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "sidmp/csv.hpp"
#include "sidmp/inhibition.hpp"
#include "sidmp/metric_synthesis.hpp"
#include "sidmp/parallel.hpp"
#include "sidmp/svg.hpp"

namespace sidmp::scenario {

ConfigError::ConfigError(std::string f, const std::string& what, int l, int c)
    : ValidationError(what), field(std::move(f)), line(l), column(c) {}

Command parse_command(std::string_view name) {
  if (name == "simulate") return Command::simulate;
  if (name == "certify") return Command::certify;
  if (name == "learn") return Command::learn;
  if (name == "gait") return Command::gait;
  throw ValidationError("unknown command '" + std::string(name) + "'");
}

std::string command_name(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::certify: return "certify";
    case Command::learn: return "learn";
    case Command::gait: return "gait";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Field access with path diagnostics
// ---------------------------------------------------------------------------

namespace {

std::string sub(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError(field, "config field '" + field + "': " + msg);
}

/// Library errors raised while building from a config section are re-tagged
/// with that section's path.
template <class F>
auto tagged(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

const Json* find(const Json& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  require_object(obj, path);
  for (const auto& [key, _] : obj.items()) {
    if (!key.empty() && key[0] == '_') continue;  // comments
    if (key == "description" || key == "comment") continue;
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      std::string list;
      for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
      fail(sub(path, key), "unknown field (expected one of: " + list + ")");
    }
  }
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

double number(const Json& obj, const std::string& key, const std::string& path,
              std::optional<double> def = std::nullopt) {
  const Json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    fail(sub(path, key), "required number is missing");
  }
  return as_number(*v, sub(path, key));
}

int integer(const Json& obj, const std::string& key, const std::string& path,
            std::optional<int> def = std::nullopt) {
  const Json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    fail(sub(path, key), "required integer is missing");
  }
  if (!v->is_number_integer()) fail(sub(path, key), "expected an integer");
  return v->get<int>();
}

bool boolean(const Json& obj, const std::string& key, const std::string& path, bool def) {
  const Json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_boolean()) fail(sub(path, key), "expected true or false");
  return v->get<bool>();
}

std::string string(const Json& obj, const std::string& key, const std::string& path,
                   std::optional<std::string> def = std::nullopt) {
  const Json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    fail(sub(path, key), "required string is missing");
  }
  if (!v->is_string()) fail(sub(path, key), "expected a string");
  return v->get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], at(path, i)));
  return out;
}

Vec vec(const Json& j, const std::string& path) {
  const auto v = numbers(j, path);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Number → s·I, flat array of n → diag, array of rows → matrix.
Mat square(const Json& j, const std::string& path, int n) {
  if (j.is_number()) return as_number(j, path) * Mat::Identity(n, n);
  if (!j.is_array()) fail(path, "expected a number or a matrix");
  if (!j.empty() && j[0].is_number()) {
    const Vec d = vec(j, path);
    if (d.size() != n) fail(path, "diagonal needs " + std::to_string(n) + " entries");
    return d.asDiagonal();
  }
  if (static_cast<int>(j.size()) != n) fail(path, "matrix needs " + std::to_string(n) + " rows");
  Mat M(n, n);
  for (int r = 0; r < n; ++r) {
    const Vec row = vec(j[static_cast<std::size_t>(r)], at(path, static_cast<std::size_t>(r)));
    if (row.size() != n) fail(at(path, static_cast<std::size_t>(r)), "row needs " + std::to_string(n) + " entries");
    M.row(r) = row.transpose();
  }
  return M;
}

Mat rows_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const Vec first = vec(j[0], at(path, 0));
  Mat M(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = vec(j[r], at(path, r));
    if (row.size() != first.size()) fail(at(path, r), "rows must have equal length");
    M.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return M;
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const Mat& M) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) a.push_back(to_json(Vec(M.row(r).transpose())));
  return a;
}

/// Vector given as a number (repeated m times) or an array of m numbers.
Vec per_output(const Json& obj, const std::string& key, const std::string& path, int m) {
  const Json* v = find(obj, key);
  if (!v) fail(sub(path, key), "required value is missing");
  if (v->is_number()) return Vec::Constant(m, as_number(*v, sub(path, key)));
  const Vec out = vec(*v, sub(path, key));
  if (out.size() != m) fail(sub(path, key), "needs " + std::to_string(m) + " entries");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Subsystem builders
// ---------------------------------------------------------------------------

dynamics::CanonicalSystem parse_canonical(const Json& j, const std::string& path) {
  require_object(j, path);
  const std::string kind = string(j, "kind", path);
  dynamics::CanonicalSystem c;
  if (kind == "hopf") {
    check_keys(j, path, {"kind", "omega", "rho", "radius", "tau", "radius_ref_index"});
    dynamics::HopfParams p;
    p.omega = number(j, "omega", path, p.omega);
    p.rho = number(j, "rho", path, p.rho);
    p.radius = number(j, "radius", path, p.radius);
    p.tau = number(j, "tau", path, p.tau);
    c = tagged(path, [&] { return dynamics::CanonicalSystem::make_hopf(p); });
    if (find(j, "radius_ref_index")) c.radius_ref_index = integer(j, "radius_ref_index", path);
  } else if (kind == "vanderpol") {
    check_keys(j, path, {"kind", "omega", "mu", "classical"});
    dynamics::VanDerPolParams p;
    p.omega = number(j, "omega", path, p.omega);
    p.mu = number(j, "mu", path, p.mu);
    p.classical = boolean(j, "classical", path, p.classical);
    c = tagged(path, [&] { return dynamics::CanonicalSystem::make_vanderpol(p); });
  } else if (kind == "exponential") {
    check_keys(j, path, {"kind", "alpha_x", "tau"});
    const double a = number(j, "alpha_x", path, 1.0), tau = number(j, "tau", path, 1.0);
    c = tagged(path, [&] { return dynamics::CanonicalSystem::exponential(a, tau); });
  } else {
    fail(sub(path, "kind"), "unknown canonical system '" + kind +
                                "' (expected hopf, vanderpol or exponential)");
  }
  tagged(path, [&] { c.validate(); });
  return c;
}

dynamics::ForcingFunction parse_forcing(const Json& j, const std::string& path) {
  check_keys(j, path, {"kind", "centers", "count", "range", "width", "weights"});
  const std::string kind = string(j, "kind", path, "gaussian");
  std::vector<double> centers;
  if (const Json* c = find(j, "centers")) {
    centers = numbers(*c, sub(path, "centers"));
  } else {
    const int count = integer(j, "count", path);
    if (count < 1) fail(sub(path, "count"), "needs at least one basis function");
    if (kind == "von_mises") {
      centers = dynamics::ForcingFunction::uniform_angles(count);
    } else {
      double lo = 0.0, hi = 1.0;
      if (const Json* r = find(j, "range")) {
        const auto v = numbers(*r, sub(path, "range"));
        if (v.size() != 2) fail(sub(path, "range"), "expected [low, high]");
        lo = v[0];
        hi = v[1];
      }
      for (int i = 0; i < count; ++i)
        centers.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1.0));
    }
  }
  if (centers.empty()) fail(path, "needs at least one basis function");
  double width = 0.0;
  if (find(j, "width")) {
    width = number(j, "width", path);
  } else if (kind == "von_mises") {
    width = std::numbers::pi / static_cast<double>(centers.size());
  } else {
    width = centers.size() > 1 ? std::abs(centers.back() - centers.front()) /
                                     static_cast<double>(centers.size() - 1)
                               : 1.0;
  }
  const int P = kind == "von_mises" ? 2 : 1;
  Mat weights = Mat::Zero(static_cast<Eigen::Index>(centers.size()), P);
  if (const Json* w = find(j, "weights")) weights = rows_matrix(*w, sub(path, "weights"));
  dynamics::ForcingFunction f;
  if (kind == "gaussian")
    f = dynamics::ForcingFunction::gaussian(centers, width, weights);
  else if (kind == "von_mises")
    f = dynamics::ForcingFunction::von_mises(centers, width, weights);
  else
    fail(sub(path, "kind"), "unknown basis '" + kind + "' (expected gaussian or von_mises)");
  tagged(path, [&] { f.validate(); });
  return f;
}

Json forcing_to_json(const dynamics::ForcingFunction& f) {
  Json j;
  j["kind"] = f.kind == dynamics::BasisKind::gaussian ? "gaussian" : "von_mises";
  j["centers"] = f.centers;
  j["width"] = f.width;
  j["weights"] = to_json(f.weights);
  return j;
}

namespace {

dynamics::Goal parse_goal(const Json& j, const std::string& path) {
  if (j.is_number()) return dynamics::Goal::fixed(as_number(j, path));
  const std::string kind = string(j, "kind", path, "constant");
  if (kind == "constant") {
    check_keys(j, path, {"kind", "value"});
    return dynamics::Goal::fixed(number(j, "value", path));
  }
  if (kind == "reference") {
    check_keys(j, path, {"kind", "index"});
    return dynamics::Goal::from_reference(integer(j, "index", path, 0));
  }
  if (kind == "harmonic") {
    check_keys(j, path, {"kind", "offset", "amp", "amp_gain", "amp_ref_index", "cos", "sin"});
    dynamics::HarmonicGoal h;
    h.offset = number(j, "offset", path, 0.0);
    h.amp = number(j, "amp", path, 1.0);
    h.amp_gain = number(j, "amp_gain", path, 0.0);
    h.amp_ref_index = integer(j, "amp_ref_index", path, -1);
    if (const Json* c = find(j, "cos")) h.cos_coeffs = numbers(*c, sub(path, "cos"));
    if (const Json* s = find(j, "sin")) h.sin_coeffs = numbers(*s, sub(path, "sin"));
    return dynamics::Goal::phase_based(std::move(h));
  }
  fail(sub(path, "kind"), "unknown goal kind '" + kind + "' (expected constant, reference or harmonic)");
}

}  // namespace

dynamics::TransformationSystem parse_transform(const Json& j, const std::string& path) {
  check_keys(j, path, {"stiffness", "damping", "tau", "goals", "forcing"});
  const Json* goals = find(j, "goals");
  if (!goals || !goals->is_array() || goals->empty())
    fail(sub(path, "goals"), "expected a non-empty array of goals");
  const int m = static_cast<int>(goals->size());
  dynamics::TransformationSystem ts;
  ts.stiffness = per_output(j, "stiffness", path, m);
  ts.damping = per_output(j, "damping", path, m);
  ts.tau = number(j, "tau", path, 1.0);
  for (std::size_t i = 0; i < goals->size(); ++i)
    ts.goals.push_back(parse_goal((*goals)[i], at(sub(path, "goals"), i)));
  if (const Json* f = find(j, "forcing")) ts.forcing = parse_forcing(*f, sub(path, "forcing"));
  tagged(path, [&] { ts.validate(); });
  return ts;
}

namespace {

dynamics::ReferenceSystem parse_reference(const Json& j, const std::string& path) {
  check_keys(j, path, {"gains", "initial", "steps", "state0"});
  const Json* gj = find(j, "gains");
  if (!gj) fail(sub(path, "gains"), "required vector is missing");
  const Vec gains = vec(*gj, sub(path, "gains"));
  const Json* init = find(j, "initial");
  if (!init) fail(sub(path, "initial"), "required command is missing");
  const Vec initial = vec(*init, sub(path, "initial"));
  if (initial.size() != gains.size()) fail(sub(path, "initial"), "needs one entry per gain");
  std::vector<std::pair<double, Vec>> steps;
  if (const Json* s = find(j, "steps")) {
    if (!s->is_array()) fail(sub(path, "steps"), "expected an array of {t, value}");
    double last = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s->size(); ++i) {
      const std::string p = at(sub(path, "steps"), i);
      check_keys((*s)[i], p, {"t", "value"});
      const double t = number((*s)[i], "t", p);
      if (!(t >= last)) fail(sub(p, "t"), "step times must be non-decreasing");
      last = t;
      const Vec v = vec((*s)[i].at("value"), sub(p, "value"));
      if (v.size() != gains.size()) fail(sub(p, "value"), "needs one entry per gain");
      steps.emplace_back(t, v);
    }
  }
  return tagged(path, [&] { return dynamics::ReferenceSystem::piecewise(gains, initial, steps); });
}

const Json& section(const Json& config, const std::string& key) {
  const Json* s = find(config, key);
  if (!s) fail(key, "required section is missing");
  return *s;
}

}  // namespace

double amble_phase(std::string_view leg) {
  constexpr double pi = std::numbers::pi;
  if (leg == "LH") return 0.0;
  if (leg == "LF") return 0.5 * pi;
  if (leg == "RH") return pi;
  if (leg == "RF") return 1.5 * pi;
  throw ValidationError("amble pattern has no leg named '" + std::string(leg) +
                        "' (expected LH, LF, RH or RF)");
}

NetworkSpec parse_network(const Json& config) {
  require_object(config, "");
  const Json& systems = section(config, "systems");
  check_keys(systems, "systems", {"canonical", "reference", "transforms", "node_names"});
  const dynamics::CanonicalSystem nominal =
      parse_canonical(section(systems, "canonical"), "systems.canonical");
  const int n = nominal.dim();

  const Json& graph = section(config, "graph");
  check_keys(graph, "graph", {"nodes", "topology", "gain", "mode", "edges", "phases"});
  const int N = integer(graph, "nodes", "graph");
  if (N < 1) fail("graph.nodes", "needs at least one node");

  NetworkSpec spec;
  if (const Json* names = find(systems, "node_names")) {
    if (!names->is_array() || static_cast<int>(names->size()) != N)
      fail("systems.node_names", "needs one name per node");
    for (std::size_t i = 0; i < names->size(); ++i) {
      if (!(*names)[i].is_string()) fail(at("systems.node_names", i), "expected a string");
      spec.node_names.push_back((*names)[i].get<std::string>());
    }
  }

  // Node phases ψ.
  spec.node_phases.assign(static_cast<std::size_t>(N), 0.0);
  if (const Json* ph = find(graph, "phases")) {
    if (ph->is_string()) {
      if (ph->get<std::string>() != "amble") fail("graph.phases", "unknown pattern (expected \"amble\")");
      if (N != 4) fail("graph.phases", "the amble pattern needs 4 nodes");
      if (spec.node_names.empty()) spec.node_names = {"LF", "RF", "LH", "RH"};
      for (int i = 0; i < N; ++i)
        spec.node_phases[static_cast<std::size_t>(i)] = tagged("systems.node_names", [&] {
          return amble_phase(spec.node_names[static_cast<std::size_t>(i)]);
        });
    } else {
      spec.node_phases = numbers(*ph, "graph.phases");
      if (static_cast<int>(spec.node_phases.size()) != N) fail("graph.phases", "needs one phase per node");
    }
  }
  if (spec.node_names.empty())
    for (int i = 0; i < N; ++i) spec.node_names.push_back("node" + std::to_string(i));

  const Mat K = find(graph, "gain") ? square(graph.at("gain"), "graph.gain", n) : Mat::Identity(n, n);
  const std::string mode_name = string(graph, "mode", "graph", "symmetric");
  if (mode_name != "symmetric" && mode_name != "directed")
    fail("graph.mode", "expected symmetric or directed");
  const auto mode = mode_name == "symmetric" ? network::CouplingGraph::Mode::symmetric
                                             : network::CouplingGraph::Mode::directed;
  const std::string topology = string(graph, "topology", "graph", "all_to_all");
  auto psi = [&](int i) { return spec.node_phases[static_cast<std::size_t>(i)]; };
  network::CouplingGraph g(N, n, mode);
  auto edge = [&](int i, int j, const Mat& gain, double phase) {
    tagged("graph", [&] { g.add_edge(i, j, gain, phase); });
  };
  if (topology == "all_to_all") {
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        edge(i, j, K, psi(i) - psi(j));
        if (mode == network::CouplingGraph::Mode::directed) edge(j, i, K, psi(j) - psi(i));
      }
  } else if (topology == "ring" || topology == "chain") {
    const int last = topology == "ring" && N > 2 ? N : N - 1;
    for (int i = 0; i < last; ++i) {
      const int j = (i + 1) % N;
      edge(i, j, K, psi(i) - psi(j));
      if (mode == network::CouplingGraph::Mode::directed) edge(j, i, K, psi(j) - psi(i));
    }
  } else if (topology == "edges") {
    const Json* edges = find(graph, "edges");
    if (!edges || !edges->is_array()) fail("graph.edges", "expected an array of edges");
    for (std::size_t e = 0; e < edges->size(); ++e) {
      const std::string p = at("graph.edges", e);
      check_keys((*edges)[e], p, {"i", "j", "gain", "phase"});
      const int i = integer((*edges)[e], "i", p), j = integer((*edges)[e], "j", p);
      if (i < 0 || i >= N || j < 0 || j >= N) fail(p, "node index out of range");
      const Mat Ke = find((*edges)[e], "gain") ? square((*edges)[e].at("gain"), sub(p, "gain"), n) : K;
      edge(i, j, Ke, number((*edges)[e], "phase", p, psi(i) - psi(j)));
    }
  } else if (topology != "none") {
    fail("graph.topology", "unknown topology '" + topology + "' (expected all_to_all, ring, chain, edges or none)");
  }
  tagged("graph", [&] { g.validate(); });
  spec.graph = g;

  // Heterogeneity: per-node overrides merged onto the nominal canonical system.
  spec.hetero = network::HeterogeneousParams::uniform(N, nominal);
  if (const Json* h = find(config, "heterogeneity")) {
    check_keys(*h, "heterogeneity", {"nodes"});
    if (const Json* nodes = find(*h, "nodes")) {
      if (!nodes->is_array() || static_cast<int>(nodes->size()) != N)
        fail("heterogeneity.nodes", "needs one entry per node");
      for (std::size_t i = 0; i < nodes->size(); ++i) {
        Json merged = section(systems, "canonical");
        merged.merge_patch((*nodes)[i]);
        spec.hetero.nodes[i] = parse_canonical(merged, at("heterogeneity.nodes", i));
        if (spec.hetero.nodes[i].dim() != n)
          fail(at("heterogeneity.nodes", i), "node dimension differs from the nominal system");
      }
    }
  }
  tagged("heterogeneity", [&] { spec.hetero.validate(); });

  if (const Json* inh = find(config, "inhibition"); inh && boolean(*inh, "enabled", "inhibition", true)) {
    check_keys(*inh, "inhibition",
               {"enabled", "nodes", "goals", "radius", "gain", "weights", "schedule", "latch"});
    network::InhibitionRule rule;
    const Json* nodes = find(*inh, "nodes");
    if (!nodes || !nodes->is_array()) fail("inhibition.nodes", "expected an array of node indices");
    for (std::size_t i = 0; i < nodes->size(); ++i) {
      if (!(*nodes)[i].is_number_integer()) fail(at("inhibition.nodes", i), "expected a node index");
      const int k = (*nodes)[i].get<int>();
      if (k < 0 || k >= N) fail(at("inhibition.nodes", i), "node index out of range");
      rule.nodes.push_back(k);
    }
    const Json* goals = find(*inh, "goals");
    if (!goals || !goals->is_array()) fail("inhibition.goals", "expected one goal per inhibited node");
    for (std::size_t i = 0; i < goals->size(); ++i) rule.goals.push_back(vec((*goals)[i], at("inhibition.goals", i)));
    rule.radius = number(*inh, "radius", "inhibition", rule.radius);
    rule.gain = number(*inh, "gain", "inhibition", rule.gain);
    if (const Json* w = find(*inh, "weights")) rule.weights = numbers(*w, "inhibition.weights");
    if (const Json* s = find(*inh, "schedule")) {
      if (!s->is_array()) fail("inhibition.schedule", "expected an array of [on, off] intervals");
      for (std::size_t i = 0; i < s->size(); ++i) {
        const auto v = numbers((*s)[i], at("inhibition.schedule", i));
        if (v.size() != 2) fail(at("inhibition.schedule", i), "expected [on, off]");
        rule.schedule.emplace_back(v[0], v[1]);
      }
    }
    rule.latch = boolean(*inh, "latch", "inhibition", true);
    tagged("inhibition", [&] { rule.validate(N, n); });
    spec.inhibition = rule;
  }
  return spec;
}

network::CoupledCanonical build_network(const Json& config) {
  NetworkSpec spec = parse_network(config);
  return tagged("graph", [&] {
    return network::CoupledCanonical(spec.graph, spec.hetero, spec.inhibition);
  });
}

network::NetworkHierarchy build_gait(const Json& config) {
  const Json& systems = section(config, "systems");
  const Json* ref = find(systems, "reference");
  if (!ref) fail("systems.reference", "the gait command needs a reference system");
  const Json* tr = find(systems, "transforms");
  if (!tr) fail("systems.transforms", "the gait command needs transformation systems");
  dynamics::ReferenceSystem reference = parse_reference(*ref, "systems.reference");
  network::CoupledCanonical canonical = build_network(config);
  std::vector<dynamics::TransformationSystem> transforms;
  if (tr->is_object()) {
    const auto ts = parse_transform(*tr, "systems.transforms");
    transforms.assign(static_cast<std::size_t>(canonical.nodes()), ts);
  } else if (tr->is_array() && static_cast<int>(tr->size()) == canonical.nodes()) {
    for (std::size_t i = 0; i < tr->size(); ++i)
      transforms.push_back(parse_transform((*tr)[i], at("systems.transforms", i)));
  } else {
    fail("systems.transforms", "expected one object shared by all nodes or one per node");
  }
  return tagged("systems", [&] {
    return network::NetworkHierarchy(std::move(reference), std::move(canonical), std::move(transforms));
  });
}

RegionSampler parse_region(const Json& j, const std::string& path, std::uint64_t seed,
                           std::optional<int> samples) {
  require_object(j, path);
  const std::string kind = string(j, "kind", path);
  const int count = samples ? *samples : integer(j, "samples", path, 4096);
  if (count < 1) fail(sub(path, "samples"), "needs at least one sample");
  const auto s = static_cast<std::uint64_t>(integer(j, "seed", path, static_cast<int>(seed % 2147483647)));
  return tagged(path, [&]() -> RegionSampler {
    if (kind == "annulus") {
      check_keys(j, path, {"kind", "inner", "outer", "center", "samples", "seed"});
      const Vec c = find(j, "center") ? vec(j.at("center"), sub(path, "center")) : Vec(Vec::Zero(2));
      return RegionSampler::annulus(number(j, "inner", path), number(j, "outer", path), count, s, c);
    }
    if (kind == "ball") {
      check_keys(j, path, {"kind", "center", "radius", "samples", "seed"});
      const Json* c = find(j, "center");
      if (!c) fail(sub(path, "center"), "required vector is missing");
      return RegionSampler::ball(vec(*c, sub(path, "center")), number(j, "radius", path), count, s);
    }
    if (kind == "box") {
      check_keys(j, path, {"kind", "lower", "upper", "samples", "seed"});
      const Json *lo = find(j, "lower"), *hi = find(j, "upper");
      if (!lo || !hi) fail(path, "box needs lower and upper corners");
      return RegionSampler::box(vec(*lo, sub(path, "lower")), vec(*hi, sub(path, "upper")), count, s);
    }
    if (kind == "points") {
      check_keys(j, path, {"kind", "points"});
      const Json* p = find(j, "points");
      if (!p) fail(sub(path, "points"), "required list is missing");
      const Mat P = rows_matrix(*p, sub(path, "points"));
      std::vector<Vec> pts;
      for (Eigen::Index r = 0; r < P.rows(); ++r) pts.push_back(P.row(r).transpose());
      return RegionSampler::points(pts);
    }
    fail(sub(path, "kind"), "unknown region '" + kind + "' (expected annulus, ball, box or points)");
  });
}

// ---------------------------------------------------------------------------
// Parsing and reporting
// ---------------------------------------------------------------------------

Json parse_config(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    int line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string msg = e.what();
    if (auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError("", "config parse error at line " + std::to_string(line) + ", column " +
                              std::to_string(column) + ": " + msg,
                      line, column);
  }
}

Json load_config(const std::filesystem::path& path) {
  return parse_config(io::read_text(path));
}

Json error_report(const std::exception& e, std::string_view command, std::string_view config_path) {
  Json err;
  err["message"] = e.what();
  err["kind"] = "internal";
  if (const auto* se = dynamic_cast<const Error*>(&e)) err["kind"] = se->kind();
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    err["kind"] = "config";
    if (!ce->field.empty()) err["field"] = ce->field;
    if (ce->line > 0) {
      err["line"] = ce->line;
      err["column"] = ce->column;
    }
  }
  if (const auto* de = dynamic_cast<const DivergenceError*>(&e)) err["last_valid_time"] = de->last_valid_time;
  Json r;
  r["status"] = "error";
  r["command"] = command;
  r["config"] = config_path;
  r["error"] = err;
  return r;
}

Json certificate_to_json(const contraction::Certificate& c) {
  Json j;
  j["kind"] = contraction::kind_name(c.kind);
  j["pass"] = c.pass;
  j["metric"] = c.metric_id;
  j["region"] = c.region;
  j["rate"] = c.rate;
  j["worst_margin"] = c.worst_margin;
  j["witness"] = to_json(c.witness);
  j["samples"] = c.samples;
  j["tolerance"] = c.tolerance;
  j["min_metric_eigenvalue"] = c.min_metric_eigenvalue;
  Json values = Json::object();
  for (const auto& [k, v] : c.values) values[k] = std::isfinite(v) ? Json(v) : Json(nullptr);
  j["values"] = values;
  j["notes"] = c.notes;
  j["disclaimer"] = c.disclaimer;
  return j;
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kTopKeys[] = {"name", "seed", "systems", "graph", "heterogeneity", "inhibition",
                                    "integrator", "pipeline", "outputs", "variants", "learning"};

struct SimRecord {
  simulate::Trajectory traj;
  int x_offset = 0;
  int nodes = 0;
  int node_dim = 0;
  std::vector<double> node_phases;
  std::vector<std::string> names;
  double nominal_radius = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> y_offsets;
  std::vector<int> y_outputs;
};

struct Outputs {
  std::string prefix;
  bool trajectory = true;
  bool events = true;
  bool plots = true;
  bool certificates = true;
  bool eigen_report = true;
  bool summary = true;
};

class Runner {
 public:
  Runner(Command cmd, const Json& config, const RunOptions& opt) : cmd_(cmd), config_(config), opt_(opt) {}

  RunReport run() {
    validate_top();
    if (cmd_ == Command::learn) {
      learn();
      finish();
      return std::move(report_);
    }
    const Json* pipe = find(config_, "pipeline");
    if (pipe && !pipe->is_array()) fail("pipeline", "expected an array of steps");
    std::vector<std::size_t> selected;
    if (pipe)
      for (std::size_t i = 0; i < pipe->size(); ++i)
        if (cmd_ != Command::certify || string((*pipe)[i], "op", at("pipeline", i), "") == "certify")
          selected.push_back(i);
    validate_pipeline();
    if (selected.empty()) {
      warn(cmd_ == Command::certify ? "pipeline declares no certify steps; nothing to do"
                                    : "pipeline is empty; nothing to do");
      return std::move(report_);
    }
    for (std::size_t i : selected) execute((*pipe)[i], at("pipeline", i), i);
    finish();
    return std::move(report_);
  }

 private:
  Command cmd_;
  const Json& config_;
  const RunOptions& opt_;
  RunReport report_;
  Outputs out_;
  std::uint64_t seed_ = 1;
  std::map<std::string, SimRecord> sims_;

  // -- plumbing ------------------------------------------------------------

  void warn(const std::string& msg) {
    report_.warnings.push_back(msg);
    if (opt_.log) *opt_.log << "warning: " << msg << "\n";
  }

  void note(const std::string& msg) {
    if (opt_.verbose && opt_.log) *opt_.log << msg << "\n";
  }

  void write(const std::string& name, std::string_view content) {
    const auto path = opt_.out_dir / (out_.prefix + name);
    io::write_file_atomic(path, content);
    report_.files.push_back(path);
    note("wrote " + path.string());
  }

  void outcome(const std::string& name, const std::string& op, const std::string& kind,
               std::optional<bool> pass, const std::string& detail) {
    report_.steps.push_back({name, op, kind, pass, detail});
    if (opt_.out) {
      *opt_.out << (pass ? (*pass ? "PASS" : "FAIL") : "DONE") << "  " << name << "  " << kind;
      if (!detail.empty()) *opt_.out << "  " << detail;
      *opt_.out << "\n";
    }
  }

  void finish() {
    if (out_.summary && !report_.steps.empty()) write("summary.json", report_.results.dump(2) + "\n");
  }

  void validate_top() {
    require_object(config_, "");
    for (const auto& [key, _] : config_.items()) {
      if (!key.empty() && key[0] == '_') continue;
      if (key == "description") continue;
      bool ok = false;
      for (const char* k : kTopKeys) ok = ok || key == k;
      if (!ok) fail(key, "unknown section");
    }
    if (opt_.seed) {
      seed_ = *opt_.seed;
    } else if (const Json* s = find(config_, "seed")) {
      if (!s->is_number_unsigned()) fail("seed", "expected a non-negative integer");
      seed_ = s->get<std::uint64_t>();
    }
    if (const Json* o = find(config_, "outputs")) {
      check_keys(*o, "outputs",
                 {"prefix", "trajectory", "events", "plots", "certificates", "eigen_report", "summary"});
      out_.prefix = string(*o, "prefix", "outputs", "");
      out_.trajectory = boolean(*o, "trajectory", "outputs", true);
      out_.events = boolean(*o, "events", "outputs", true);
      out_.plots = boolean(*o, "plots", "outputs", true);
      out_.certificates = boolean(*o, "certificates", "outputs", true);
      out_.eigen_report = boolean(*o, "eigen_report", "outputs", true);
      out_.summary = boolean(*o, "summary", "outputs", true);
    }
    if (const Json* v = find(config_, "variants")) require_object(*v, "variants");
  }

  /// Outside the gait command there is no reference state, so a radius
  /// driven by the reference falls back to the configured radius.
  Json effective(Json c, bool keep_reference = false) const {
    if (keep_reference) return c;
    if (c.contains("systems") && c["systems"].is_object() && c["systems"].contains("canonical") &&
        c["systems"]["canonical"].is_object())
      c["systems"]["canonical"].erase("radius_ref_index");
    return c;
  }

  Json variant_config(const Json& step, const std::string& path) const {
    const bool keep = cmd_ == Command::gait && find(step, "op") && step["op"] == "simulate";
    const Json* name = find(step, "variant");
    if (!name) return effective(config_, keep);
    if (!name->is_string()) fail(sub(path, "variant"), "expected a variant name");
    const Json* variants = find(config_, "variants");
    const Json* patch = variants ? find(*variants, name->get<std::string>()) : nullptr;
    if (!patch) fail(sub(path, "variant"), "no variant named '" + name->get<std::string>() + "'");
    Json c = config_;
    c.merge_patch(*patch);
    return effective(c, keep);
  }

  /// Checks step structure and cross references before anything runs.
  void validate_pipeline() {
    // Sections are checked even when no step uses them.
    if (cmd_ != Command::learn && (find(config_, "systems") || find(config_, "graph"))) {
      if (cmd_ == Command::gait)
        (void)build_gait(config_);
      else
        (void)build_network(effective(config_));
      if (find(config_, "integrator")) (void)integrator(effective(config_), nullptr);
    }
    const Json* pipe = find(config_, "pipeline");
    if (!pipe) return;
    std::set<std::string> names, sims;
    for (std::size_t i = 0; i < pipe->size(); ++i) {
      const std::string path = at("pipeline", i);
      const Json& step = (*pipe)[i];
      require_object(step, path);
      const std::string op = string(step, "op", path);
      const std::string name = step_name(step, path, i);
      if (!names.insert(name).second) fail(sub(path, "name"), "duplicate step name '" + name + "'");
      const Json cfg = variant_config(step, path);
      if (op == "simulate") {
        check_keys(step, path, {"op", "name", "variant", "duration"});
        sims.insert(name);
        if (cmd_ == Command::gait)
          (void)build_gait(cfg);
        else
          (void)build_network(cfg);
        (void)integrator(cfg, find(step, "duration"));
      } else if (op == "measure") {
        check_keys(step, path, {"op", "name", "of", "kind", "from", "to", "from_event", "to_event",
                                "offset", "to_offset", "window", "component", "expect", "value"});
        const std::string of = string(step, "of", path);
        if (!sims.count(of)) fail(sub(path, "of"), "no earlier simulate step named '" + of + "'");
        measure_kind(step, path);
      } else if (op == "certify") {
        certify_kind(step, path);
        (void)parse_network(cfg);
      } else if (op == "sweep") {
        check_keys(step, path, {"op", "name", "parameter", "values", "measure", "duration"});
        (void)string(step, "parameter", path);
        (void)numbers(section(step, "values"), sub(path, "values"));
        const Json& m = section(step, "measure");
        measure_kind(m, sub(path, "measure"));
      } else {
        fail(sub(path, "op"), "unknown step '" + op + "' (expected simulate, measure, certify or sweep)");
      }
    }
  }

  static std::string step_name(const Json& step, const std::string& path, std::size_t index) {
    return string(step, "name", path, string(step, "op", path) + std::to_string(index));
  }

  void execute(const Json& step, const std::string& path, std::size_t index) {
    const std::string op = string(step, "op", path);
    const std::string name = step_name(step, path, index);
    note("[" + op + "] " + name);
    if (op == "simulate") run_simulate(step, path, name);
    else if (op == "measure") run_measure(step, path, name);
    else if (op == "certify") run_certify(step, path, name);
    else if (op == "sweep") run_sweep(step, path, name);
  }

  // -- simulation ----------------------------------------------------------

  simulate::IntegratorConfig integrator(const Json& cfg, const Json* duration_override) const {
    const Json& j = section(cfg, "integrator");
    check_keys(j, "integrator", {"step", "duration", "t0", "record_stride", "x0", "x0_nodes",
                                 "x0_random", "reference0", "y0", "disturbance"});
    simulate::IntegratorConfig ic;
    ic.step = number(j, "step", "integrator", 1e-3);
    ic.duration = number(j, "duration", "integrator");
    if (duration_override) ic.duration = as_number(*duration_override, "duration");
    ic.t0 = number(j, "t0", "integrator", 0.0);
    ic.record_stride = integer(j, "record_stride", "integrator", 1);
    if (const Json* d = find(j, "disturbance")) {
      const std::string p = "integrator.disturbance";
      check_keys(*d, p, {"kind", "value", "amplitude", "frequency", "phase", "bound", "hold", "dim"});
      const std::string kind = string(*d, "kind", p);
      if (kind == "constant")
        ic.disturbance = simulate::Disturbance::constant(vec(section(*d, "value"), sub(p, "value")));
      else if (kind == "sinusoid")
        ic.disturbance = simulate::Disturbance::sinusoid(vec(section(*d, "amplitude"), sub(p, "amplitude")),
                                                         number(*d, "frequency", p), number(*d, "phase", p, 0.0));
      else if (kind == "random")
        ic.disturbance = simulate::Disturbance::random_piecewise(integer(*d, "dim", p), number(*d, "bound", p),
                                                                 number(*d, "hold", p, 0.1), seed_);
      else
        fail(sub(p, "kind"), "unknown disturbance (expected constant, sinusoid or random)");
    }
    tagged("integrator", [&] { ic.validate(); });
    return ic;
  }

  /// Initial canonical network state from integrator.x0 / x0_nodes / x0_random.
  Vec initial_nodes(const Json& cfg, int N, int n) const {
    const Json& j = section(cfg, "integrator");
    if (const Json* x0 = find(j, "x0")) {
      const Vec v = vec(*x0, "integrator.x0");
      if (v.size() != N * n) fail("integrator.x0", "needs " + std::to_string(N * n) + " entries");
      return v;
    }
    if (const Json* xn = find(j, "x0_nodes")) {
      if (!xn->is_array() || static_cast<int>(xn->size()) != N)
        fail("integrator.x0_nodes", "needs one state per node");
      Vec v(N * n);
      for (int i = 0; i < N; ++i) {
        const Vec xi = vec((*xn)[static_cast<std::size_t>(i)], at("integrator.x0_nodes", static_cast<std::size_t>(i)));
        if (xi.size() != n) fail(at("integrator.x0_nodes", static_cast<std::size_t>(i)), "wrong node dimension");
        v.segment(i * n, n) = xi;
      }
      return v;
    }
    if (const Json* xr = find(j, "x0_random")) {
      check_keys(*xr, "integrator.x0_random", {"inner", "outer"});
      const double inner = number(*xr, "inner", "integrator.x0_random", 0.0);
      const double outer = number(*xr, "outer", "integrator.x0_random");
      if (!(outer > inner && inner >= 0.0)) fail("integrator.x0_random", "needs 0 <= inner < outer");
      std::mt19937_64 rng(seed_);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> gauss(0.0, 1.0);
      Vec v(N * n);
      for (int i = 0; i < N; ++i) {
        Vec dir(n);
        for (int k = 0; k < n; ++k) dir[k] = gauss(rng);
        if (dir.norm() == 0.0) dir[0] = 1.0;
        const double rad = inner + (outer - inner) * u(rng);
        v.segment(i * n, n) = rad * dir.normalized();
      }
      return v;
    }
    fail("integrator", "initial state missing (give x0, x0_nodes or x0_random)");
  }

  void run_simulate(const Json& step, const std::string& path, const std::string& name) {
    const Json cfg = variant_config(step, path);
    const auto ic = integrator(cfg, find(step, "duration"));
    SimRecord rec;
    const NetworkSpec spec = parse_network(cfg);
    rec.nodes = spec.graph.nodes();
    rec.node_dim = spec.hetero.nominal.dim();
    rec.node_phases = spec.node_phases;
    rec.names = spec.node_names;
    if (spec.hetero.nominal.kind == dynamics::CanonicalKind::hopf)
      rec.nominal_radius = spec.hetero.nominal.hopf.radius;
    const Vec x0 = initial_nodes(cfg, rec.nodes, rec.node_dim);

    if (cmd_ == Command::gait) {
      const auto sys = build_gait(cfg);
      const Json& jint = section(cfg, "integrator");
      const Json& ref = section(section(cfg, "systems"), "reference");
      Vec r0 = vec(find(ref, "state0") ? ref.at("state0") : ref.at("initial"), "systems.reference.initial");
      if (const Json* r = find(jint, "reference0")) r0 = vec(*r, "integrator.reference0");
      if (r0.size() != sys.r_dim()) fail("integrator.reference0", "wrong reference dimension");
      Vec state = Vec::Zero(sys.dim());
      state.head(sys.r_dim()) = r0;
      state.segment(sys.x_offset(), x0.size()) = x0;
      if (const Json* y0 = find(jint, "y0")) {
        const Vec v = vec(*y0, "integrator.y0");
        if (v.size() != sys.dim() - sys.y_offset(0)) fail("integrator.y0", "wrong transformation-state dimension");
        state.tail(v.size()) = v;
      }
      rec.x_offset = sys.x_offset();
      for (int i = 0; i < rec.nodes; ++i) {
        rec.y_offsets.push_back(sys.y_offset(i));
        const int next = i + 1 < rec.nodes ? sys.y_offset(i + 1) : sys.dim();
        rec.y_outputs.push_back((next - sys.y_offset(i)) / 2);
      }
      rec.traj = simulate::integrate(sys, state, ic);
    } else {
      const network::CoupledCanonical sys(spec.graph, spec.hetero, spec.inhibition);
      rec.traj = simulate::integrate(sys, x0, ic);
    }

    if (out_.trajectory) write(name + "_trajectory.csv", io::trajectory_csv(rec.traj));
    if (out_.events) write(name + "_events.csv", io::events_csv(rec.traj.events));
    if (out_.plots) {
      std::vector<int> cols;
      std::vector<std::string> labels;
      for (int i = 0; i < rec.nodes; ++i) {
        cols.push_back(rec.x_offset + i * rec.node_dim);
        labels.push_back(rec.names[static_cast<std::size_t>(i)]);
      }
      write(name + "_time.svg", svg::time_series(rec.traj, cols, labels, name + ": first phase component"));
      if (rec.node_dim == 2) {
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < rec.nodes; ++i)
          pairs.emplace_back(rec.x_offset + 2 * i, rec.x_offset + 2 * i + 1);
        write(name + "_phase.svg", svg::phase_portrait(rec.traj, pairs, labels, name + ": phase portrait"));
      }
      if (!rec.y_offsets.empty()) {
        std::vector<int> jc;
        std::vector<std::string> jl;
        for (int i = 0; i < rec.nodes; ++i)
          for (int m = 0; m < rec.y_outputs[static_cast<std::size_t>(i)]; ++m) {
            jc.push_back(rec.y_offsets[static_cast<std::size_t>(i)] + m);
            jl.push_back(rec.names[static_cast<std::size_t>(i)] + " y" + std::to_string(m));
          }
        write(name + "_outputs.svg", svg::time_series(rec.traj, jc, jl, name + ": transformation outputs"));
      }
    }
    Json res;
    res["samples"] = rec.traj.size();
    res["t_end"] = rec.traj.t.back();
    res["events"] = Json::array();
    for (const auto& e : rec.traj.events) res["events"].push_back({{"t", e.time}, {"event", e.id}});
    report_.results[name] = res;
    outcome(name, "simulate", cmd_ == Command::gait ? "gait" : "network", std::nullopt,
            std::to_string(rec.traj.size()) + " samples, " + std::to_string(rec.traj.events.size()) + " events");
    sims_[name] = std::move(rec);
  }

  // -- measurements --------------------------------------------------------

  static std::string measure_kind(const Json& step, const std::string& path) {
    const std::string kind = string(step, "kind", path);
    static const std::set<std::string> known{"period", "sync_error", "amplitude", "radius", "phase_offsets"};
    if (!known.count(kind))
      fail(sub(path, "kind"), "unknown measurement '" + kind +
                                  "' (expected period, sync_error, amplitude, radius or phase_offsets)");
    if (const Json* e = find(step, "expect")) check_keys(*e, sub(path, "expect"), {"max", "min"});
    return kind;
  }

  static double event_time(const SimRecord& rec, const std::string& id) {
    for (const auto& e : rec.traj.events)
      if (e.id == id) return e.time;
    throw PreconditionError("event '" + id + "' did not occur");
  }

  /// Returns (named values, primary value name).
  static std::pair<Json, std::string> measure(const Json& step, const std::string& path, const SimRecord& rec) {
    const std::string kind = measure_kind(step, path);
    const auto& traj = rec.traj;
    double from = number(step, "from", path, traj.t.front());
    double to = number(step, "to", path, traj.t.back());
    if (const Json* ev = find(step, "from_event")) {
      if (!ev->is_string()) fail(sub(path, "from_event"), "expected an event id");
      from = event_time(rec, ev->get<std::string>()) + number(step, "offset", path, 0.0);
    }
    if (const Json* ev = find(step, "to_event")) {
      if (!ev->is_string()) fail(sub(path, "to_event"), "expected an event id");
      to = event_time(rec, ev->get<std::string>()) + number(step, "to_offset", path, 0.0);
    }
    const int N = rec.nodes, n = rec.node_dim;
    auto node_col = [&](int i, int c) { return rec.x_offset + i * n + c; };
    auto in_window = [&](std::size_t s) { return traj.t[s] >= from - 1e-12 && traj.t[s] <= to + 1e-12; };
    Json out;
    out["from"] = from;
    out["to"] = to;
    if (kind == "period") {
      const int comp = integer(step, "component", path, 0);
      if (comp < 0 || comp >= n) fail(sub(path, "component"), "component out of range");
      std::vector<double> periods;
      for (int i = 0; i < N; ++i) {
        const auto est = simulate::estimate_period(traj, simulate::Section::coordinate(traj.dim(), node_col(i, comp), from));
        periods.push_back(est.period);
      }
      const auto [lo, hi] = std::minmax_element(periods.begin(), periods.end());
      double mean = 0.0;
      for (double p : periods) mean += p / N;
      out["periods"] = periods;
      out["mean"] = mean;
      out["spread"] = (*hi - *lo) / mean;
      return {out, "spread"};
    }
    if (kind == "sync_error") {
      const double window = number(step, "window", path, to - from);
      out["error"] = network::sync_error(traj, window, n, rec.node_phases, rec.x_offset);
      return {out, "error"};
    }
    if (kind == "amplitude") {
      double worst = 0.0;
      for (int i = 0; i < N; ++i)
        for (int c = 0; c < n; ++c) {
          double lo = std::numeric_limits<double>::infinity(), hi = -lo;
          for (std::size_t s = 0; s < traj.size(); ++s)
            if (in_window(s)) {
              lo = std::min(lo, traj.x(static_cast<Eigen::Index>(s), node_col(i, c)));
              hi = std::max(hi, traj.x(static_cast<Eigen::Index>(s), node_col(i, c)));
            }
          if (!std::isfinite(lo)) throw PreconditionError("measurement window contains no samples");
          worst = std::max(worst, 0.5 * (hi - lo));
        }
      out["amplitude"] = worst;
      return {out, "amplitude"};
    }
    if (kind == "radius") {
      if (!std::isfinite(rec.nominal_radius)) fail(sub(path, "kind"), "radius needs a Hopf canonical system");
      double worst = 0.0;
      bool any = false;
      for (std::size_t s = 0; s < traj.size(); ++s) {
        if (!in_window(s)) continue;
        any = true;
        for (int i = 0; i < N; ++i) {
          const double r = traj.x.row(static_cast<Eigen::Index>(s)).segment(node_col(i, 0), n).norm();
          worst = std::max(worst, std::abs(r - rec.nominal_radius) / rec.nominal_radius);
        }
      }
      if (!any) throw PreconditionError("measurement window contains no samples");
      out["max_relative_error"] = worst;
      return {out, "max_relative_error"};
    }
    // phase_offsets
    if (n != 2) fail(sub(path, "kind"), "phase offsets need planar nodes");
    double worst = 0.0;
    bool any = false;
    for (std::size_t s = 0; s < traj.size(); ++s) {
      if (!in_window(s)) continue;
      any = true;
      const auto row = traj.x.row(static_cast<Eigen::Index>(s));
      for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
          const double ti = std::atan2(row[node_col(i, 1)], row[node_col(i, 0)]);
          const double tj = std::atan2(row[node_col(j, 1)], row[node_col(j, 0)]);
          const double want = rec.node_phases[static_cast<std::size_t>(i)] - rec.node_phases[static_cast<std::size_t>(j)];
          // x_i = R(φ_ij) x_j rotates counter-clockwise, so θ_i − θ_j = φ_ij.
          const double d = std::remainder(ti - tj - want, 2.0 * std::numbers::pi);
          worst = std::max(worst, std::abs(d));
        }
    }
    if (!any) throw PreconditionError("measurement window contains no samples");
    out["max_error"] = worst;
    return {out, "max_error"};
  }

  static std::optional<bool> judge(const Json& step, const std::string& path, double value) {
    const Json* e = find(step, "expect");
    if (!e) return std::nullopt;
    bool ok = std::isfinite(value);
    if (find(*e, "max")) ok = ok && value <= number(*e, "max", sub(path, "expect"));
    if (find(*e, "min")) ok = ok && value >= number(*e, "min", sub(path, "expect"));
    return ok;
  }

  void run_measure(const Json& step, const std::string& path, const std::string& name) {
    const SimRecord& rec = sims_.at(string(step, "of", path));
    const std::string kind = measure_kind(step, path);
    Json values;
    std::string primary;
    try {
      std::tie(values, primary) = measure(step, path, rec);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      Json r;
      r["error"] = e.what();
      report_.results[name] = r;
      outcome(name, "measure", kind, find(step, "expect") ? std::optional<bool>(false) : std::nullopt, e.what());
      return;
    }
    const std::string key = string(step, "value", path, primary);
    if (!values.contains(key) || !values[key].is_number()) fail(sub(path, "value"), "measurement has no value '" + key + "'");
    const double v = values[key].get<double>();
    const auto pass = judge(step, path, v);
    if (pass) values["pass"] = *pass;
    report_.results[name] = values;
    outcome(name, "measure", kind, pass, key + "=" + io::format_double(v));
  }

  // -- sweeps --------------------------------------------------------------

  void run_sweep(const Json& step, const std::string& path, const std::string& name) {
    const std::string param = string(step, "parameter", path);
    const auto values = numbers(section(step, "values"), sub(path, "values"));
    const Json& mstep = section(step, "measure");
    std::string pointer = "/" + param;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    std::vector<double> results(values.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> errors(values.size());
    const Json* dur = find(step, "duration");
    parallel_for(values.size(), [&](std::size_t k) {
      Json cfg = effective(config_);
      try {
        cfg.at(Json::json_pointer(pointer));
      } catch (const std::exception&) {
        fail(sub(path, "parameter"), "no config value at '" + param + "'");
      }
      cfg[Json::json_pointer(pointer)] = values[k];
      const auto ic = integrator(cfg, dur);
      const NetworkSpec spec = parse_network(cfg);
      SimRecord rec;
      rec.nodes = spec.graph.nodes();
      rec.node_dim = spec.hetero.nominal.dim();
      rec.node_phases = spec.node_phases;
      if (spec.hetero.nominal.kind == dynamics::CanonicalKind::hopf)
        rec.nominal_radius = spec.hetero.nominal.hopf.radius;
      const network::CoupledCanonical sys(spec.graph, spec.hetero, spec.inhibition);
      try {
        rec.traj = simulate::integrate(sys, initial_nodes(cfg, rec.nodes, rec.node_dim), ic);
        auto [vals, primary] = measure(mstep, sub(path, "measure"), rec);
        results[k] = vals[string(mstep, "value", sub(path, "measure"), primary)].get<double>();
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        errors[k] = e.what();
      }
    });
    std::string csv = "value,measurement\n";
    Json res = Json::array();
    for (std::size_t k = 0; k < values.size(); ++k) {
      csv += io::format_double(values[k]) + "," + io::format_double(results[k]) + "\n";
      Json row{{"value", values[k]}};
      row["measurement"] = std::isfinite(results[k]) ? Json(results[k]) : Json(nullptr);
      if (!errors[k].empty()) row["error"] = errors[k];
      res.push_back(row);
    }
    write(name + ".csv", csv);
    report_.results[name] = res;
    outcome(name, "sweep", param, std::nullopt, std::to_string(values.size()) + " runs");
  }

  // -- certificates --------------------------------------------------------

  static std::string certify_kind(const Json& step, const std::string& path) {
    const std::string kind = string(step, "kind", path);
    static const std::set<std::string> known{"contraction", "transverse", "sync", "threshold", "tube", "metric"};
    if (!known.count(kind))
      fail(sub(path, "kind"), "unknown certificate '" + kind +
                                  "' (expected contraction, transverse, sync, threshold, tube or metric)");
    check_keys(step, path, {"op", "name", "kind", "variant", "field", "node", "region", "rate", "metric",
                            "factor", "runs", "w_bar", "hold", "constant", "duration", "step",
                            "sample_stride", "x0", "points", "seed", "threads"});
    return kind;
  }

  VectorField pick_field(const Json& step, const std::string& path, const NetworkSpec& spec) const {
    const std::string which = string(step, "field", path, "canonical");
    const int node = integer(step, "node", path, -1);
    if (node >= static_cast<int>(spec.hetero.nodes.size())) fail(sub(path, "node"), "node index out of range");
    const dynamics::CanonicalSystem& sys = node >= 0 ? spec.hetero.nodes[static_cast<std::size_t>(node)] : spec.hetero.nominal;
    if (which == "canonical") return sys.field();
    if (which == "inhibition" || which == "inhibited") {
      if (!spec.inhibition) fail(sub(path, "field"), "config has no inhibition rule");
      const auto& rule = *spec.inhibition;
      std::size_t k = 0;
      if (node >= 0) {
        auto it = std::find(rule.nodes.begin(), rule.nodes.end(), node);
        if (it == rule.nodes.end()) fail(sub(path, "node"), "node is not inhibited");
        k = static_cast<std::size_t>(it - rule.nodes.begin());
      }
      const Vec goal = rule.goals[k];
      const double a = rule.weight(k) * rule.gain;
      const int n = static_cast<int>(goal.size());
      if (which == "inhibition")
        return VectorField(n, [goal, a](double, const Vec& x) { return Vec(a * (goal - x)); },
                           [a, n](double, const Vec&) { return Mat(-a * Mat::Identity(n, n)); });
      const VectorField f = sys.field();
      return VectorField(n, [f, goal, a](double t, const Vec& x) { return Vec(f(t, x) + a * (goal - x)); },
                         [f, a, n](double t, const Vec& x) { return Mat(f.jacobian(t, x) - a * Mat::Identity(n, n)); });
    }
    fail(sub(path, "field"), "unknown field '" + which + "' (expected canonical, inhibition or inhibited)");
  }

  contraction::Metric pick_metric(const Json& step, const std::string& path, int n) const {
    const Json* m = find(step, "metric");
    if (!m || (m->is_string() && m->get<std::string>() == "identity")) return contraction::Metric::identity(n);
    if (m->is_string()) fail(sub(path, "metric"), "unknown metric (expected \"identity\" or a matrix)");
    return tagged(sub(path, "metric"), [&] { return contraction::Metric::constant(square(*m, sub(path, "metric"), n)); });
  }

  RegionSampler step_region(const Json& step, const std::string& path) const {
    return parse_region(section(step, "region"), sub(path, "region"), seed_, opt_.samples);
  }

  unsigned threads(const Json& step, const std::string& path) const {
    return static_cast<unsigned>(integer(step, "threads", path, 0));
  }

  void emit_certificate(const std::string& name, const Json& j, bool pass, const std::string& kind,
                        const std::string& detail) {
    if (out_.certificates) write(name + ".json", j.dump(2) + "\n");
    report_.results[name] = j;
    outcome(name, "certify", kind, pass, detail);
  }

  void run_certify(const Json& step, const std::string& path, const std::string& name) {
    const std::string kind = certify_kind(step, path);
    const Json cfg = variant_config(step, path);
    const NetworkSpec spec = parse_network(cfg);
    contraction::CheckOptions copt;
    copt.threads = threads(step, path);

    if (kind == "contraction" || kind == "transverse") {
      const VectorField f = pick_field(step, path, spec);
      const auto M = pick_metric(step, path, f.dim());
      const RegionSampler region = step_region(step, path);
      const double rate = number(step, "rate", path);
      const auto cert = tagged(path, [&] {
        return kind == "contraction" ? contraction::check_contraction(f, M, region, rate, copt)
                                     : contraction::check_transverse_contraction(f, M, region, rate, copt);
      });
      emit_certificate(name, certificate_to_json(cert), cert.pass, kind,
                       "rate=" + io::format_double(rate) + " worst_margin=" + io::format_double(cert.worst_margin));
      return;
    }

    if (kind == "sync") {
      const auto lap = tagged("graph", [&] { return network::assemble_block_laplacian(spec.graph, spec.hetero.nominal.dim()); });
      std::vector<VectorField> fields;
      for (const auto& node : spec.hetero.nodes) fields.push_back(node.field());
      const RegionSampler region = step_region(step, path);
      const auto cert = tagged(path, [&] { return contraction::check_sync_condition(lap, fields, region, copt); });
      Json j = certificate_to_json(cert);
      j["laplacian_eigenvalues"] = to_json(lap.eigenvalues);
      if (out_.eigen_report) {
        std::string csv = "index,eigenvalue\n";
        for (Eigen::Index i = 0; i < lap.eigenvalues.size(); ++i)
          csv += std::to_string(i) + "," + io::format_double(lap.eigenvalues[i]) + "\n";
        write(name + "_laplacian.csv", csv);
      }
      emit_certificate(name, j, cert.pass, kind,
                       "lambda_N+1=" + io::format_double(cert.value("lambda_n_plus_1")) +
                           " sup_lambda_max_As=" + io::format_double(cert.value("sup_lambda_max_As")));
      return;
    }

    if (kind == "threshold") {
      if (!spec.inhibition) fail(path, "threshold certificate needs an inhibition rule");
      const auto& rule = *spec.inhibition;
      const int node = integer(step, "node", path, rule.nodes.front());
      auto it = std::find(rule.nodes.begin(), rule.nodes.end(), node);
      if (it == rule.nodes.end()) fail(sub(path, "node"), "node is not inhibited");
      const auto k = static_cast<std::size_t>(it - rule.nodes.begin());
      const Vec goal = rule.goals[k];
      const int n = static_cast<int>(goal.size());
      const VectorField f1 = spec.hetero.nodes[static_cast<std::size_t>(node)].field();
      const VectorField g(n, [goal](double, const Vec& x) { return Vec(goal - x); },
                          [n](double, const Vec&) { return Mat(-Mat::Identity(n, n)); });
      const RegionSampler region = find(step, "region")
                                       ? step_region(step, path)
                                       : RegionSampler::ball(goal, rule.radius, opt_.samples.value_or(4096), seed_);
      const auto M = pick_metric(step, path, n);
      const auto est = tagged(path, [&] { return network::inhibition_threshold_estimate(f1, g, region, M, copt); });
      const double factor = number(step, "factor", path, 2.0);
      const double applied = rule.weight(k) * rule.gain;
      const bool pass = applied >= factor * est.alpha0;
      Json j;
      j["kind"] = "inhibition_threshold";
      j["pass"] = pass;
      j["alpha0"] = est.alpha0;
      j["beta_hat"] = est.beta_hat;
      j["lambda2"] = est.lambda2;
      j["witness"] = to_json(est.witness);
      j["samples"] = est.samples;
      j["region"] = region.describe();
      j["applied_gain"] = applied;
      j["required_factor"] = factor;
      j["sampled_estimate"] = est.sampled_estimate;
      j["disclaimer"] = est.g_certificate.disclaimer;
      emit_certificate(name, j, pass, kind,
                       "alpha0=" + io::format_double(est.alpha0) + " gain=" + io::format_double(applied));
      return;
    }

    if (kind == "tube") {
      const VectorField f = pick_field(step, path, spec);
      const int n = f.dim();
      const auto M = pick_metric(step, path, n);
      if (!M.is_constant()) fail(sub(path, "metric"), "tube bound needs a constant metric");
      contraction::TubeBoundConfig tc;
      tc.region = step_region(step, path);
      tc.rate = find(step, "rate") ? number(step, "rate", path)
                                   : tagged(path, [&] { return contraction::certified_rate(f, M, *tc.region, true, copt); });
      tc.metric = M(Vec::Zero(n));
      if (const Json* x0 = find(step, "x0")) {
        tc.x0 = vec(*x0, sub(path, "x0"));
      } else {
        tc.x0 = Vec::Zero(n);
        tc.x0[0] = std::isfinite(spec.hetero.nominal.hopf.radius) && spec.hetero.nominal.kind == dynamics::CanonicalKind::hopf
                       ? spec.hetero.nominal.hopf.radius
                       : 1.0;
      }
      tc.runs = integer(step, "runs", path, tc.runs);
      tc.w_bar = number(step, "w_bar", path, tc.w_bar);
      tc.hold = number(step, "hold", path, tc.hold);
      tc.constant = boolean(step, "constant", path, tc.constant);
      tc.duration = number(step, "duration", path, tc.duration);
      tc.step = number(step, "step", path, tc.step);
      tc.sample_stride = integer(step, "sample_stride", path, tc.sample_stride);
      tc.seed = find(step, "seed") ? static_cast<std::uint64_t>(integer(step, "seed", path)) : seed_;
      tc.threads = copt.threads;
      const auto rep = tagged(path, [&] { return contraction::tube_bound_check(f, tc); });
      Json j;
      j["kind"] = "tube_bound";
      j["pass"] = rep.pass;
      j["rate"] = tc.rate;
      j["R"] = rep.R;
      j["w_bar"] = tc.w_bar;
      j["bound"] = rep.bound;
      j["worst_distance"] = rep.worst_distance;
      j["worst_ratio"] = rep.worst_ratio;
      j["runs"] = rep.runs;
      j["inconclusive"] = rep.inconclusive;
      j["violations"] = rep.violations;
      j["region"] = tc.region->describe();
      j["disclaimer"] = "sample-based numerical evidence, not a formal proof";
      if (out_.eigen_report) {
        std::string csv = "run,max_distance\n";
        for (std::size_t r = 0; r < rep.per_run_max.size(); ++r)
          csv += std::to_string(r) + "," + io::format_double(rep.per_run_max[r]) + "\n";
        write(name + "_runs.csv", csv);
      }
      emit_certificate(name, j, rep.pass, kind,
                       "worst=" + io::format_double(rep.worst_distance) + " bound=" + io::format_double(rep.bound));
      return;
    }

    // metric: singular and full transverse metrics at points on the limit cycle
    const VectorField f = pick_field(step, path, spec);
    std::vector<Vec> base;
    if (const Json* p = find(step, "points")) {
      if (p->is_number_integer()) {
        if (spec.hetero.nominal.kind != dynamics::CanonicalKind::hopf)
          fail(sub(path, "points"), "a point count needs a Hopf canonical system; list the points instead");
        base = circle_points(p->get<int>(), spec.hetero.nominal.hopf.radius);
      } else {
        const Mat P = rows_matrix(*p, sub(path, "points"));
        for (Eigen::Index r = 0; r < P.rows(); ++r) base.push_back(P.row(r).transpose());
      }
    } else {
      fail(sub(path, "points"), "metric construction needs base points (a count or a list)");
    }
    const RegionSampler region = step_region(step, path);
    const double lam = find(step, "rate") ? number(step, "rate", path)
                                          : tagged(path, [&] {
                                              return contraction::certified_rate(f, contraction::Metric::identity(f.dim()), region, true, copt);
                                            });
    contraction::SingularMetricOptions so;
    so.rate = lam;
    so.step = number(step, "step", path, so.step);
    const auto sing = tagged(path, [&] { return contraction::build_singular_metric(f, base, so); });
    const auto full = tagged(path, [&] { return contraction::build_full_metric(sing); });
    bool pass = true;
    double worst_residual = 0.0, worst_ratio = 0.0, max_l2 = -std::numeric_limits<double>::infinity();
    std::ostringstream csv;
    const int n = f.dim();
    csv << "point";
    for (int i = 0; i < n; ++i) csv << ",x_" << i;
    csv << ",residual,rank,horizon,tail_bound";
    for (int i = 0; i < n; ++i) csv << ",ms_eig_" << i;
    for (int i = 0; i < n; ++i) csv << ",fs_eig_" << i;
    csv << "\n";
    for (std::size_t k = 0; k < base.size(); ++k) {
      const auto& sp = sing.points[k];
      const auto& fp = full.points[k];
      const Vec& e = fp.fs_eigenvalues;
      const double l1 = e[0], l2 = e[e.size() - 1];
      const double ratio = std::abs(l1) / std::abs(l2);
      worst_residual = std::max(worst_residual, sp.residual);
      worst_ratio = std::max(worst_ratio, ratio);
      max_l2 = std::max(max_l2, l2);
      pass = pass && sp.residual < 1e-6 && sp.rank == n - 1 && ratio <= 1e-3 && l2 < 0.0;
      csv << k;
      for (int i = 0; i < n; ++i) csv << "," << io::format_double(sp.x[i]);
      csv << "," << io::format_double(sp.residual) << "," << sp.rank << "," << io::format_double(sp.horizon)
          << "," << io::format_double(sp.tail_bound);
      for (int i = 0; i < n; ++i) csv << "," << io::format_double(sp.eigenvalues[i]);
      for (int i = 0; i < n; ++i) csv << "," << io::format_double(e[i]);
      csv << "\n";
    }
    if (out_.eigen_report) write(name + "_eigen.csv", csv.str());
    Json j;
    j["kind"] = "transverse_metric_construction";
    j["pass"] = pass;
    j["points"] = base.size();
    j["rate_hat"] = lam;
    j["r"] = full.r;
    j["q"] = full.q;
    j["horizon"] = full.horizon;
    j["worst_residual"] = worst_residual;
    j["worst_eigenvalue_ratio"] = worst_ratio;
    j["max_transverse_eigenvalue"] = max_l2;
    j["disclaimer"] = "sample-based numerical evidence, not a formal proof";
    emit_certificate(name, j, pass, kind,
                     "residual=" + io::format_double(worst_residual) + " ratio=" + io::format_double(worst_ratio));
  }

  // -- learning ------------------------------------------------------------

  void learn() {
    const Json& L = section(config_, "learning");
    const std::string p = "learning";
    check_keys(L, p, {"demo", "stiffness", "damping", "goal", "tau", "canonical", "x0", "basis", "ridge",
                      "substeps", "expected_weights", "tolerance"});
    const std::filesystem::path demo_path = opt_.base_dir / string(L, "demo", p);
    learning::Demonstration demo = tagged(sub(p, "demo"), [&] { return learning::load_demonstration_csv(demo_path); });
    const int m = demo.outputs();
    demo.stiffness = per_output(L, "stiffness", p, m);
    demo.damping = per_output(L, "damping", p, m);
    demo.goal = per_output(L, "goal", p, m);
    demo.tau = number(L, "tau", p, 1.0);
    tagged(p, [&] { demo.validate(); });
    const auto canonical = parse_canonical(section(L, "canonical"), sub(p, "canonical"));
    const Vec x0 = vec(section(L, "x0"), sub(p, "x0"));
    if (x0.size() != canonical.dim()) fail(sub(p, "x0"), "dimension differs from the canonical system");
    const int substeps = integer(L, "substeps", p, 10);
    const Mat phase = tagged(p, [&] { return learning::phase_rollout(canonical, x0, demo.t, substeps); });

    Json basis_j = section(L, "basis");
    dynamics::ForcingFunction basis;
    const std::string kind = string(basis_j, "kind", sub(p, "basis"), "gaussian");
    if (kind == "gaussian" && !find(basis_j, "centers")) {
      // Centres at the phase reached at evenly spaced demonstration times.
      const int count = integer(basis_j, "count", sub(p, "basis"));
      if (count < 1) fail(sub(p, "basis.count"), "needs at least one basis function");
      std::vector<double> centers;
      const auto S = static_cast<double>(demo.samples() - 1);
      for (int i = 0; i < count; ++i) {
        const auto s = static_cast<Eigen::Index>(std::lround(count == 1 ? 0.0 : S * i / (count - 1.0)));
        centers.push_back(phase(s, 0));
      }
      basis_j["centers"] = centers;
      basis_j.erase("count");
    }
    basis = parse_forcing(basis_j, sub(p, "basis"));
    if (basis.phase_dim() != canonical.dim()) fail(sub(p, "basis"), "basis phase dimension differs from the canonical system");

    double ridge = -1.0;
    if (const Json* r = find(L, "ridge")) {
      if (r->is_string()) {
        if (r->get<std::string>() != "auto") fail(sub(p, "ridge"), "expected a number or \"auto\"");
      } else {
        ridge = as_number(*r, sub(p, "ridge"));
        if (ridge < 0.0) fail(sub(p, "ridge"), "must be nonnegative");
      }
    }
    const Mat targets = learning::compute_target_forcing(demo);
    const auto fit = tagged(p, [&] { return learning::fit_weights(targets, phase, basis, ridge); });

    Json transform;
    transform["stiffness"] = to_json(demo.stiffness);
    transform["damping"] = to_json(demo.damping);
    transform["tau"] = demo.tau;
    transform["goals"] = to_json(demo.goal);
    transform["forcing"] = forcing_to_json(fit.forcing);
    Json fragment;
    fragment["systems"]["transforms"] = Json::array({transform});
    fragment["fit"] = {{"rmse", fit.rmse}, {"baseline_rmse", fit.baseline_rmse}, {"ridge", fit.ridge},
                       {"samples", demo.samples()}};
    write("learn_weights.json", fragment.dump(2) + "\n");

    std::ostringstream csv;
    csv << "t";
    for (int k = 0; k < m; ++k) csv << ",target_" << k << ",fitted_" << k;
    csv << "\n";
    simulate::Trajectory plot;
    plot.t = demo.t;
    plot.x.resize(demo.samples(), 2 * m);
    for (int s = 0; s < demo.samples(); ++s) {
      const Vec fitted = dynamics::eval_forcing(fit.forcing, phase.row(s).transpose());
      csv << io::format_double(demo.t[static_cast<std::size_t>(s)]);
      for (int k = 0; k < m; ++k) {
        csv << "," << io::format_double(targets(s, k)) << "," << io::format_double(fitted[k]);
        plot.x(s, 2 * k) = targets(s, k);
        plot.x(s, 2 * k + 1) = fitted[k];
      }
      csv << "\n";
    }
    write("learn_fit.csv", csv.str());
    if (out_.plots) {
      std::vector<int> cols;
      std::vector<std::string> labels;
      for (int k = 0; k < m; ++k) {
        cols.push_back(2 * k);
        cols.push_back(2 * k + 1);
        labels.push_back("target " + std::to_string(k));
        labels.push_back("fitted " + std::to_string(k));
      }
      write("learn_fit.svg", svg::time_series(plot, cols, labels, "forcing fit"));
    }

    Json res = fragment["fit"];
    std::optional<bool> pass;
    std::string detail = "rmse=" + io::format_double(fit.rmse);
    if (const Json* ew = find(L, "expected_weights")) {
      const Mat expected = rows_matrix(*ew, sub(p, "expected_weights"));
      if (expected.rows() != fit.forcing.weights.rows() || expected.cols() != fit.forcing.weights.cols())
        fail(sub(p, "expected_weights"), "shape differs from the fitted weights");
      const double err = (expected - fit.forcing.weights).cwiseAbs().maxCoeff();
      const double tol = number(L, "tolerance", p, 1e-6);
      pass = err < tol;
      res["max_weight_error"] = err;
      res["pass"] = *pass;
      detail += " max_weight_error=" + io::format_double(err);
    }
    report_.results["learn"] = res;
    outcome("learn", "learn", kind, pass, detail);
  }
};

}  // namespace

RunReport run(Command command, const Json& config, const RunOptions& options) {
  Runner runner(command, config, options);
  return runner.run();
}

}  // namespace sidmp::scenario
