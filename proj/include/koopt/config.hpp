#pragma once

#include "koopt/baseline_nlp.hpp"
#include "koopt/upper_level.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace koopt {

struct SystemConfig {
  std::string preset = "pendulum";  // oscillator | pendulum | compass_gait
  std::string oscillator_a = "conventional";
  double damping = 0.1;
  CompassGaitParams walker;
  std::optional<StateBox> box;  // overrides the preset sampling box
};

struct DictionaryConfig {
  std::string preset = "pendulum";  // identity | affine | pendulum | walker | polynomial | custom
  int degree = 3;                   // polynomial only
  nlohmann::json terms;             // custom only
};

struct IdentificationConfig {
  Index n_s = 45000;
  std::uint64_t seed = 1;
  double svd_tol = 1e-10;
};

struct BoundaryConfig {
  std::string type = "periodic_amplitude";  // periodic_amplitude | walker_gait | equilibrium
  double amplitude_deg = 40.0;
  double v_avg = 0.05;
  double rate_bound = 0.6;
  Vec x_eq;
  // Period bounds, in multiples of `period_unit` seconds.
  double t_min = 0.7;
  double t_max = 1.5;
  std::string period_unit = "2pi";  // "s" or "2pi"

  double unit() const { return period_unit == "2pi" ? 2.0 * kPi : 1.0; }
};

struct SweepConfig {
  std::string axis = "T";  // T (in period_unit) | amplitude (degrees)
  double from = 0.7;
  double to = 5.0;
  int count = 431;
};

struct Gate {
  std::string metric;
  std::optional<double> min;
  std::optional<double> max;
};

struct ReproduceConfig {
  std::string bundle = "none";  // fig1 | pendulum | walker | none
  double small_amplitude_deg = 5.0;
  std::vector<Gate> gates;
};

struct ExperimentConfig {
  std::string name = "experiment";
  SystemConfig system;
  DictionaryConfig dictionary;
  IdentificationConfig identification;
  BoundaryConfig boundary;
  std::vector<std::string> variants{"b0", "bT"};
  std::vector<double> w_soft{0.1, 0.5, 0.9};
  Index knots = 100;
  double cost_scale = 1.0;
  std::string formulation = "reduced";  // reduced | general
  UpperConfig upper;
  bool baseline = true;
  int baseline_substeps = 1;
  NlpConfig nlp;
  SweepConfig sweep;
  ReproduceConfig reproduce;
  int workers = 1;
  std::string output = "out";
};

namespace detail {

// Walks a JSON object, remembering which keys were read, so that leftovers
// can be reported as unknown with their full path.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(at(key) + ": wrong type (" + std::string(j_.at(key).type_name()) + ")");
    }
  }

  template <class T>
  void require(const std::string& key, T& out) {
    if (!j_.contains(key)) throw ConfigError(at(key) + ": required key missing");
    get(key, out);
  }

  void get_vec(const std::string& key, Vec& out) {
    std::vector<double> v;
    if (!j_.contains(key)) {
      seen_.insert(key);
      return;
    }
    get(key, v);
    out = Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()));
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(at(key) + ": required section missing");
    return Reader(j_.at(key), at(key));
  }

  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }
  const std::string& path() const { return path_; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(at(key) + ": unknown key");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void check_choice(const std::string& value, std::initializer_list<const char*> options,
                         const std::string& where) {
  for (const char* o : options)
    if (value == o) return;
  std::string msg = where + ": '" + value + "' is not one of";
  for (const char* o : options) msg += std::string(" ") + o;
  throw ConfigError(msg);
}

inline SimplexOptions read_simplex(Reader r, SimplexOptions s) {
  r.get("initial_radius", s.initial_radius);
  r.get("xtol", s.xtol);
  r.get("ftol", s.ftol);
  r.get("max_evals", s.max_evals);
  r.finish();
  if (!(s.initial_radius > 0.0) || !(s.xtol > 0.0) || s.max_evals < 1)
    throw ConfigError(r.path() + ": radius, xtol and max_evals must be positive");
  return s;
}

inline nlohmann::json simplex_json(const SimplexOptions& s) {
  return {{"initial_radius", s.initial_radius}, {"xtol", s.xtol}, {"ftol", s.ftol}, {"max_evals", s.max_evals}};
}

inline nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::Reader;
  ExperimentConfig c;
  Reader r(j, "config");
  r.get("name", c.name);

  {
    Reader s = r.child("system");
    s.require("preset", c.system.preset);
    detail::check_choice(c.system.preset, {"oscillator", "pendulum", "compass_gait"}, s.at("preset"));
    s.get("oscillator_a", c.system.oscillator_a);
    detail::check_choice(c.system.oscillator_a, {"conventional", "decoupled"}, s.at("oscillator_a"));
    s.get("damping", c.system.damping);
    if (s.has("walker")) {
      Reader w = s.child("walker");
      w.get("leg_length", c.system.walker.leg_length);
      w.get("hip_mass_ratio", c.system.walker.hip_mass_ratio);
      w.get("mass_position", c.system.walker.mass_position);
      w.get("slope", c.system.walker.slope);
      w.get("gravity", c.system.walker.gravity);
      w.finish();
    }
    if (s.has("box")) {
      Reader b = s.child("box");
      StateBox box;
      b.get_vec("lower", box.lower);
      b.get_vec("upper", box.upper);
      b.finish();
      box.validate();
      c.system.box = box;
    }
    s.finish();
  }

  {
    Reader d = r.child("dictionary");
    d.require("preset", c.dictionary.preset);
    detail::check_choice(c.dictionary.preset, {"identity", "affine", "pendulum", "walker", "polynomial", "custom"},
                         d.at("preset"));
    d.get("degree", c.dictionary.degree);
    if (d.has("terms")) c.dictionary.terms = d.raw("terms");
    if (c.dictionary.preset == "custom" && c.dictionary.terms.is_null())
      throw ConfigError(d.at("terms") + ": required for the custom dictionary");
    d.finish();
  }

  if (r.has("identification")) {
    Reader i = r.child("identification");
    i.get("n_s", c.identification.n_s);
    i.get("seed", c.identification.seed);
    i.get("svd_tol", c.identification.svd_tol);
    i.finish();
    if (c.identification.n_s < 1) throw ConfigError("config.identification.n_s: must be positive");
    if (!(c.identification.svd_tol > 0.0)) throw ConfigError("config.identification.svd_tol: must be positive");
  }

  {
    Reader b = r.child("boundary");
    b.require("type", c.boundary.type);
    detail::check_choice(c.boundary.type, {"periodic_amplitude", "walker_gait", "equilibrium"}, b.at("type"));
    b.get("amplitude_deg", c.boundary.amplitude_deg);
    b.get("v_avg", c.boundary.v_avg);
    b.get("rate_bound", c.boundary.rate_bound);
    b.get_vec("x_eq", c.boundary.x_eq);
    b.get("t_min", c.boundary.t_min);
    b.get("t_max", c.boundary.t_max);
    b.get("period_unit", c.boundary.period_unit);
    detail::check_choice(c.boundary.period_unit, {"s", "2pi"}, b.at("period_unit"));
    b.finish();
    if (!(c.boundary.t_min > 0.0) || !(c.boundary.t_max > c.boundary.t_min))
      throw ConfigError("config.boundary: need 0 < t_min < t_max");
  }

  r.get("variants", c.variants);
  for (const auto& v : c.variants) detail::check_choice(v, {"b0", "bT", "soft"}, r.at("variants"));
  r.get("w_soft", c.w_soft);
  for (double w : c.w_soft)
    if (!(w > 0.0 && w < 1.0)) throw ConfigError("config.w_soft: weights must lie in (0, 1)");
  r.get("knots", c.knots);
  if (c.knots < 2) throw ConfigError("config.knots: must be >= 2");
  r.get("cost_scale", c.cost_scale);
  if (!(c.cost_scale > 0.0)) throw ConfigError("config.cost_scale: must be positive");
  r.get("formulation", c.formulation);
  detail::check_choice(c.formulation, {"reduced", "general"}, r.at("formulation"));

  if (r.has("upper")) {
    Reader u = r.child("upper");
    u.get("starts", c.upper.starts);
    if (u.has("p_guess")) {
      Vec p;
      u.get_vec("p_guess", p);
      c.upper.p_guess = p;
    }
    if (u.has("simplex")) c.upper.simplex = detail::read_simplex(u.child("simplex"), c.upper.simplex);
    if (u.has("al")) {
      Reader a = u.child("al");
      a.get("rho0", c.upper.al_rho0);
      a.get("growth", c.upper.al_growth);
      a.get("outer", c.upper.al_outer);
      a.get("tol", c.upper.al_tol);
      a.get("stall", c.upper.al_stall);
      if (a.has("simplex")) c.upper.al_simplex = detail::read_simplex(a.child("simplex"), c.upper.al_simplex);
      a.finish();
    }
    u.finish();
  }

  if (r.has("baseline")) {
    Reader b = r.child("baseline");
    b.get("enabled", c.baseline);
    b.get("substeps", c.baseline_substeps);
    b.get("rho0", c.nlp.rho0);
    b.get("growth", c.nlp.growth);
    b.get("max_outer", c.nlp.max_outer);
    b.get("feas_tol", c.nlp.feas_tol);
    b.get("fd_step", c.nlp.fd_step);
    b.get("max_inner", c.nlp.inner.max_iters);
    b.finish();
    if (c.baseline_substeps < 1) throw ConfigError("config.baseline.substeps: must be >= 1");
  }

  if (r.has("sweep")) {
    Reader s = r.child("sweep");
    s.get("axis", c.sweep.axis);
    detail::check_choice(c.sweep.axis, {"T", "amplitude"}, s.at("axis"));
    s.get("from", c.sweep.from);
    s.get("to", c.sweep.to);
    s.get("count", c.sweep.count);
    s.finish();
    if (c.sweep.count < 1) throw ConfigError("config.sweep.count: must be >= 1");
  }

  if (r.has("reproduce")) {
    Reader p = r.child("reproduce");
    p.get("bundle", c.reproduce.bundle);
    detail::check_choice(c.reproduce.bundle, {"fig1", "pendulum", "walker", "none"}, p.at("bundle"));
    p.get("small_amplitude_deg", c.reproduce.small_amplitude_deg);
    if (p.has("gates")) {
      const nlohmann::json& gates = p.raw("gates");
      if (!gates.is_array()) throw ConfigError(p.at("gates") + ": expected an array");
      for (std::size_t i = 0; i < gates.size(); ++i) {
        Reader g(gates[i], p.at("gates") + "[" + std::to_string(i) + "]");
        Gate gate;
        g.require("metric", gate.metric);
        if (g.has("min")) {
          double v = 0.0;
          g.get("min", v);
          gate.min = v;
        }
        if (g.has("max")) {
          double v = 0.0;
          g.get("max", v);
          gate.max = v;
        }
        g.finish();
        if (!gate.min && !gate.max) throw ConfigError(g.path() + ": gate needs min or max");
        c.reproduce.gates.push_back(gate);
      }
    }
    p.finish();
  }

  r.get("workers", c.workers);
  if (c.workers < 1) throw ConfigError("config.workers: must be >= 1");
  r.get("output", c.output);
  r.finish();
  c.upper.knots = c.knots;
  c.upper.cost_scale = c.cost_scale;
  c.upper.workers = c.workers;
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json system = {{"preset", c.system.preset},
                 {"oscillator_a", c.system.oscillator_a},
                 {"damping", c.system.damping},
                 {"walker",
                  {{"leg_length", c.system.walker.leg_length},
                   {"hip_mass_ratio", c.system.walker.hip_mass_ratio},
                   {"mass_position", c.system.walker.mass_position},
                   {"slope", c.system.walker.slope},
                   {"gravity", c.system.walker.gravity}}}};
  if (c.system.box)
    system["box"] = {{"lower", detail::vec_json(c.system.box->lower)}, {"upper", detail::vec_json(c.system.box->upper)}};
  json dictionary = {{"preset", c.dictionary.preset}, {"degree", c.dictionary.degree}};
  if (!c.dictionary.terms.is_null()) dictionary["terms"] = c.dictionary.terms;
  json upper = {{"starts", c.upper.starts},
                {"simplex", detail::simplex_json(c.upper.simplex)},
                {"al",
                 {{"rho0", c.upper.al_rho0},
                  {"growth", c.upper.al_growth},
                  {"outer", c.upper.al_outer},
                  {"tol", c.upper.al_tol},
                  {"stall", c.upper.al_stall},
                  {"simplex", detail::simplex_json(c.upper.al_simplex)}}}};
  if (c.upper.p_guess) upper["p_guess"] = detail::vec_json(*c.upper.p_guess);
  json gates = json::array();
  for (const auto& g : c.reproduce.gates) {
    json e = {{"metric", g.metric}};
    if (g.min) e["min"] = *g.min;
    if (g.max) e["max"] = *g.max;
    gates.push_back(e);
  }
  return {{"name", c.name},
          {"system", system},
          {"dictionary", dictionary},
          {"identification",
           {{"n_s", c.identification.n_s}, {"seed", c.identification.seed}, {"svd_tol", c.identification.svd_tol}}},
          {"boundary",
           {{"type", c.boundary.type},
            {"amplitude_deg", c.boundary.amplitude_deg},
            {"v_avg", c.boundary.v_avg},
            {"rate_bound", c.boundary.rate_bound},
            {"x_eq", detail::vec_json(c.boundary.x_eq)},
            {"t_min", c.boundary.t_min},
            {"t_max", c.boundary.t_max},
            {"period_unit", c.boundary.period_unit}}},
          {"variants", c.variants},
          {"w_soft", c.w_soft},
          {"knots", c.knots},
          {"cost_scale", c.cost_scale},
          {"formulation", c.formulation},
          {"upper", upper},
          {"baseline",
           {{"enabled", c.baseline},
            {"substeps", c.baseline_substeps},
            {"rho0", c.nlp.rho0},
            {"growth", c.nlp.growth},
            {"max_outer", c.nlp.max_outer},
            {"feas_tol", c.nlp.feas_tol},
            {"fd_step", c.nlp.fd_step},
            {"max_inner", c.nlp.inner.max_iters}}},
          {"sweep", {{"axis", c.sweep.axis}, {"from", c.sweep.from}, {"to", c.sweep.to}, {"count", c.sweep.count}}},
          {"reproduce",
           {{"bundle", c.reproduce.bundle}, {"small_amplitude_deg", c.reproduce.small_amplitude_deg}, {"gates", gates}}},
          {"workers", c.workers},
          {"output", c.output}};
}

// Parse errors from the JSON reader carry line and column.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---- building blocks from a config ---------------------------------------

inline ControlAffineSystem build_system(const ExperimentConfig& c) {
  ControlAffineSystem sys;
  if (c.system.preset == "oscillator") sys = make_oscillator(c.system.oscillator_a);
  else if (c.system.preset == "pendulum") sys = make_pendulum(c.system.damping);
  else sys = make_compass_gait(c.system.walker);
  if (c.system.box) {
    if (c.system.box->lower.size() != sys.n_x)
      throw ConfigError("config.system.box: dimension does not match the system");
    sys.state_box = *c.system.box;
  }
  return sys;
}

inline ObservableDictionary build_dictionary(const ExperimentConfig& c, Index n_x) {
  const std::string& p = c.dictionary.preset;
  ObservableDictionary d = [&] {
    if (p == "identity") return identity_dictionary(n_x);
    if (p == "affine") return affine_dictionary(n_x);
    if (p == "pendulum") return pendulum_dictionary();
    if (p == "walker") return walker_dictionary();
    if (p == "polynomial") return polynomial_dictionary(n_x, c.dictionary.degree);
    return dictionary_from_json(c.dictionary.terms);
  }();
  if (d.n_x() != n_x) throw ConfigError("config.dictionary: state dimension does not match the system");
  return d;
}

inline MixedBoundaryConstraint build_mbc(const ExperimentConfig& c, const ControlAffineSystem& sys,
                                         std::optional<double> amplitude_deg = {}) {
  const double tmin = c.boundary.t_min * c.boundary.unit();
  const double tmax = c.boundary.t_max * c.boundary.unit();
  if (c.boundary.type == "periodic_amplitude") {
    if (sys.n_x != 2) throw ConfigError("config.boundary: periodic_amplitude needs a two-state system");
    return periodic_amplitude_mbc(deg2rad(amplitude_deg.value_or(c.boundary.amplitude_deg)), tmin, tmax);
  }
  if (c.boundary.type == "walker_gait") {
    if (c.system.preset != "compass_gait") throw ConfigError("config.boundary: walker_gait needs compass_gait");
    return walker_gait_mbc(CompassGait(c.system.walker), c.boundary.v_avg, tmin, tmax, c.boundary.rate_bound);
  }
  if (c.boundary.x_eq.size() != sys.n_x) throw ConfigError("config.boundary.x_eq: wrong dimension");
  return equilibrium_mbc(c.boundary.x_eq, tmin, tmax);
}

inline std::vector<BoundaryVariant> build_variants(const ExperimentConfig& c) {
  std::vector<BoundaryVariant> out;
  for (const auto& name : c.variants) {
    if (name == "soft") {
      for (double w : c.w_soft) out.push_back(BoundaryVariant::soft(w));
    } else {
      out.push_back(BoundaryVariant::parse(name));
    }
  }
  return out;
}

}  // namespace koopt
