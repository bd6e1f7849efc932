#pragma once

#include "koopt/config.hpp"
#include "koopt/io.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace koopt {

namespace fs = std::filesystem;

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Hash of everything that determines the identified model.
inline std::string identification_hash(const ExperimentConfig& c) {
  const nlohmann::json j = config_to_json(c);
  const nlohmann::json src = {{"system", j["system"]}, {"dictionary", j["dictionary"]}, {"identification", j["identification"]}};
  return hex64(fnv1a(src.dump()));
}

// Hash of everything that can change a result. Worker count and output
// location are execution details and stay out of it.
inline std::string config_hash(const ExperimentConfig& c) {
  nlohmann::json j = config_to_json(c);
  j.erase("workers");
  j.erase("output");
  if (j.contains("upper")) j["upper"].erase("workers");
  return hex64(fnv1a(j.dump()));
}

inline GeneratorModel run_identify(const ExperimentConfig& c) {
  const ControlAffineSystem sys = build_system(c);
  const ObservableDictionary dict = build_dictionary(c, sys.n_x);
  return identify(sys, dict, c.identification.n_s, c.identification.seed, c.identification.svd_tol);
}

inline std::string model_file_text(const GeneratorModel& m, const ExperimentConfig& c) {
  nlohmann::json j = model_to_json(m);
  j["source_hash"] = identification_hash(c);
  return j.dump(1) + "\n";
}

// Reuses <dir>/model.json when it was identified from the same settings.
inline GeneratorModel load_or_identify(const ExperimentConfig& c, const fs::path& dir, bool* reused = nullptr) {
  const fs::path path = dir / "model.json";
  if (fs::exists(path)) {
    const nlohmann::json j = read_json(path);
    if (j.value("source_hash", std::string()) == identification_hash(c)) {
      if (reused) *reused = true;
      return model_from_json(j);
    }
  }
  if (reused) *reused = false;
  GeneratorModel m = run_identify(c);
  write_file(path, model_file_text(m, c));
  return m;
}

struct VariantOutcome {
  BoundaryVariant variant;
  BilevelSolution bilevel;
  std::optional<NlpSolution> baseline;
  bool baseline_converged = false;
  std::string baseline_message;
  double pcc_state = std::numeric_limits<double>::quiet_NaN();
  double pcc_input = std::numeric_limits<double>::quiet_NaN();
  double seconds_bilevel = 0.0;
  double seconds_baseline = 0.0;
};

inline double state_pcc(const Trajectory& a, const Trajectory& b) {
  const auto [ra, rb] = resample_common_grid(a, b, 101);
  return mean_pearson(ra, rb);
}

inline double input_pcc(const Mat& ua, double ta, const Mat& ub, double tb) {
  const auto [ra, rb] = resample_common_grid(knots_as_trajectory(ua, ta), knots_as_trajectory(ub, tb), 101);
  return mean_pearson(ra, rb);
}

inline BilevelSolution run_bilevel(const ExperimentConfig& c, const GeneratorModel& model,
                                   const MixedBoundaryConstraint& mbc, const BoundaryVariant& variant,
                                   int workers) {
  UpperConfig u = c.upper;
  u.workers = workers;
  if (c.formulation == "reduced") return solve_reduced(model, variant, mbc, u);
  BoundaryPoint guess;
  if (mbc.has_reduction()) {
    guess = mbc.reduction(u.p_guess.value_or(Vec(0.5 * (mbc.p_lower + mbc.p_upper))));
  } else {
    guess = unpack_boundary(0.5 * (mbc.v_lower + mbc.v_upper), mbc.n_x);
  }
  return solve_general(model, variant, mbc, u, guess);
}

// Bilevel solve, then the transcribed NLP warm-started from it.
inline VariantOutcome run_variant(const ExperimentConfig& c, const ControlAffineSystem& sys,
                                  const GeneratorModel& model, const MixedBoundaryConstraint& mbc,
                                  const BoundaryVariant& variant, bool with_baseline, int workers) {
  VariantOutcome out;
  out.variant = variant;
  auto t0 = std::chrono::steady_clock::now();
  out.bilevel = run_bilevel(c, model, mbc, variant, workers);
  out.seconds_bilevel = seconds_since(t0);
  if (!with_baseline) return out;

  t0 = std::chrono::steady_clock::now();
  const TranscribedNlp nlp = transcribe(sys, mbc, c.knots, c.cost_scale, c.baseline_substeps);
  const Vec guess = nlp.pack(out.bilevel.x.states, out.bilevel.u, out.bilevel.boundary.period);
  try {
    out.baseline = solve_nlp(nlp, guess, c.nlp);
    out.baseline_converged = true;
  } catch (const NlpNonConvergence& e) {
    out.baseline = e.best_iterate;
    out.baseline_message = e.what();
  } catch (const NumericError& e) {
    out.baseline_message = e.what();
  }
  out.seconds_baseline = seconds_since(t0);
  if (out.baseline) {
    out.pcc_state = state_pcc(out.bilevel.x, out.baseline->x);
    out.pcc_input = input_pcc(out.bilevel.u, out.bilevel.boundary.period, out.baseline->u, out.baseline->period);
  }
  return out;
}

// ---- persistence ------------------------------------------------------------

inline Trajectory lifted_trajectory(const LowerLevelSolution& s) {
  Trajectory t;
  t.times = Vec::LinSpaced(s.z.rows(), 0.0, s.period);
  t.states = s.z;
  return t;
}

inline std::string lifted_csv(const LowerLevelSolution& s) {
  std::string text = trajectory_csv(lifted_trajectory(s), s.u);
  // lifted coordinates are z1..; inputs keep their names
  const auto eol = text.find('\n');
  std::string header = text.substr(0, eol);
  std::string fixed;
  std::stringstream ss(header);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!fixed.empty()) fixed += ",";
    fixed += cell[0] == 'x' ? "z" + cell.substr(1) : cell;
  }
  return fixed + text.substr(eol);
}

struct Artifact {
  std::string name;
  std::string bytes;
};

inline nlohmann::json variant_entry(const ExperimentConfig& c, const VariantOutcome& o) {
  const std::string tag = o.variant.tag();
  nlohmann::json e = {
      {"variant", tag},
      {"w", o.variant.w},
      {"T_star", o.bilevel.boundary.period},
      {"c", o.bilevel.c},
      {"c_hat_lower", o.bilevel.c_hat},
      {"mbc_violation", o.bilevel.violation},
      {"boundary",
       {{"x0", detail::vec_json(o.bilevel.boundary.x0)},
        {"xT", detail::vec_json(o.bilevel.boundary.xT)},
        {"T", o.bilevel.boundary.period}}},
      {"kkt_residual", std::max(o.bilevel.lower.kkt.stationarity, o.bilevel.lower.kkt.feasibility)},
      {"manifold_defect_max", o.bilevel.lower.manifold_defect.maxCoeff()},
      {"evaluations", o.bilevel.evaluations},
      {"files", {{"bilevel", "bilevel_" + tag + ".csv"}, {"lifted", "lifted_" + tag + ".csv"}}},
  };
  if (o.baseline) {
    e["T_star_baseline"] = o.baseline->period;
    e["c_baseline"] = o.baseline->c;
    e["baseline_max_defect"] = o.baseline->max_defect;
    e["baseline_mbc_violation"] = o.baseline->mbc_violation;
    e["baseline_converged"] = o.baseline_converged;
    e["pcc_state"] = o.pcc_state;
    e["pcc_input"] = o.pcc_input;
    e["files"]["baseline"] = "baseline_" + tag + ".csv";
  } else if (c.baseline) {
    e["baseline_converged"] = false;
  }
  if (!o.baseline_message.empty()) e["baseline_message"] = o.baseline_message;
  return e;
}

inline std::vector<Artifact> variant_artifacts(const VariantOutcome& o) {
  const std::string tag = o.variant.tag();
  std::vector<Artifact> a = {{"bilevel_" + tag + ".csv", trajectory_csv(o.bilevel.x, o.bilevel.u)},
                             {"lifted_" + tag + ".csv", lifted_csv(o.bilevel.lower)}};
  if (o.baseline) a.push_back({"baseline_" + tag + ".csv", trajectory_csv(o.baseline->x, o.baseline->u)});
  return a;
}

inline nlohmann::json comparison_report(const ExperimentConfig& c, const std::string& model_hash,
                                        const std::vector<VariantOutcome>& outcomes,
                                        std::optional<double> amplitude_deg = {}) {
  nlohmann::json variants = nlohmann::json::array();
  for (const auto& o : outcomes) variants.push_back(variant_entry(c, o));
  nlohmann::json r = {{"name", c.name},
                      {"knots", c.knots},
                      {"cost_scale", c.cost_scale},
                      {"variants", variants},
                      {"provenance", {{"config_hash", config_hash(c)}, {"model_hash", model_hash}}}};
  if (amplitude_deg) r["amplitude_deg"] = *amplitude_deg;
  return r;
}

// ---- sweeps -------------------------------------------------------------------

inline std::vector<double> sweep_grid(const SweepConfig& s) {
  std::vector<double> g;
  for (int k = 0; k < s.count; ++k)
    g.push_back(s.count == 1 ? s.from : s.from + (s.to - s.from) * static_cast<double>(k) / (s.count - 1));
  return g;
}

inline std::string cell(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

inline std::string period_sweep_csv(const std::vector<SweepRow>& rows, double unit) {
  std::ostringstream os;
  os << "T,T_over_unit,c,c_hat,kkt_residual,manifold_defect_max\n";
  for (const auto& r : rows)
    os << format_double(r.period) << "," << format_double(r.period / unit) << "," << cell(r.c) << ","
       << cell(r.c_hat) << "," << cell(r.kkt_residual) << "," << cell(r.manifold_defect_max) << "\n";
  return os.str();
}

struct AmplitudeRow {
  double amplitude_deg = 0.0;
  std::optional<VariantOutcome> outcome;
  std::string diagnostic;
};

// Every (amplitude, variant) pair is an independent task.
inline std::vector<AmplitudeRow> amplitude_sweep(const ExperimentConfig& c, const ControlAffineSystem& sys,
                                                 const GeneratorModel& model, const std::vector<double>& amps,
                                                 const std::vector<BoundaryVariant>& variants, int workers) {
  std::vector<AmplitudeRow> rows(amps.size() * variants.size());
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    AmplitudeRow& row = rows[i];
    row.amplitude_deg = amps[i / variants.size()];
    try {
      const MixedBoundaryConstraint mbc = build_mbc(c, sys, row.amplitude_deg);
      row.outcome = run_variant(c, sys, model, mbc, variants[i % variants.size()], c.baseline, 1);
    } catch (const Error& e) {
      row.diagnostic = e.what();
    }
  });
  return rows;
}

inline std::string amplitude_sweep_csv(const std::vector<AmplitudeRow>& rows) {
  std::ostringstream os;
  os << "amplitude_deg,variant,w,T_star,T_star_baseline,pcc_state,pcc_input,c,c_baseline,c_hat\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    os << format_double(r.amplitude_deg) << ",";
    if (!r.outcome) {
      os << ",,,,,,,,\n";
      continue;
    }
    const auto& o = *r.outcome;
    const bool b = o.baseline.has_value();
    os << o.variant.tag() << "," << format_double(o.variant.w) << "," << cell(o.bilevel.boundary.period) << ","
       << cell(b ? o.baseline->period : nan) << "," << cell(o.pcc_state) << "," << cell(o.pcc_input) << ","
       << cell(o.bilevel.c) << "," << cell(b ? o.baseline->c : nan) << "," << cell(o.bilevel.c_hat) << "\n";
  }
  return os.str();
}

// ---- reproduction bundles -------------------------------------------------------

using Metrics = std::map<std::string, double>;

struct BundleResult {
  Metrics metrics;
  std::vector<Artifact> artifacts;
  std::vector<std::string> notes;
};

struct GateResult {
  Gate gate;
  double value = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
};

inline std::vector<GateResult> evaluate_gates(const std::vector<Gate>& gates, const Metrics& m) {
  std::vector<GateResult> out;
  for (const auto& g : gates) {
    GateResult r{g};
    const auto it = m.find(g.metric);
    if (it != m.end()) {
      r.value = it->second;
      r.pass = std::isfinite(r.value) && (!g.min || r.value >= *g.min) && (!g.max || r.value <= *g.max);
    }
    out.push_back(r);
  }
  return out;
}

struct RefinedMinimum {
  double period = 0.0;
  double c = 0.0;
};

// Local minima of c(T) on the grid, each polished by a bracketed 1-D simplex.
inline std::vector<RefinedMinimum> refine_minima(const GeneratorModel& model, const BoundaryVariant& variant,
                                                 const MixedBoundaryConstraint& mbc,
                                                 const std::vector<SweepRow>& rows, Index knots, double cost_scale) {
  std::vector<RefinedMinimum> out;
  for (std::size_t i : local_minima(rows)) {
    const double lo = rows[i - 1].period, hi = rows[i + 1].period;
    auto f = [&](const Vec& p) {
      if (p(0) < lo || p(0) > hi) return std::numeric_limits<double>::infinity();
      return evaluate_upper(model, variant, mbc.reduction(p), knots, cost_scale).c;
    };
    const SimplexResult r =
        nelder_mead(f, to_vec({rows[i].period}), to_vec({hi - lo}), SimplexOptions{0.25, 1e-9 * hi, 1e-16, 200});
    out.push_back({r.x(0), std::min(r.f, rows[i].c)});
  }
  return out;
}

inline BundleResult bundle_fig1(const ExperimentConfig& c, const GeneratorModel& model) {
  BundleResult b;
  const auto t0 = std::chrono::steady_clock::now();
  const ControlAffineSystem sys = build_system(c);
  const MixedBoundaryConstraint mbc = build_mbc(c, sys);
  const BoundaryVariant variant = build_variants(c).front();
  const double unit = c.boundary.unit();
  std::vector<double> grid;
  for (double g : sweep_grid(c.sweep)) grid.push_back(g * unit);
  const auto rows = sweep_period(model, variant, mbc, grid, c.knots, c.cost_scale, c.workers);
  const auto minima = refine_minima(model, variant, mbc, rows, c.knots, c.cost_scale);
  b.metrics["fig1.runtime_s"] = seconds_since(t0);
  b.artifacts.push_back({"fig1_sweep.csv", period_sweep_csv(rows, unit)});

  std::ostringstream os;
  os << "T,T_over_2pi,c\n";
  for (const auto& m : minima) os << format_double(m.period) << "," << format_double(m.period / (2 * kPi)) << "," << format_double(m.c) << "\n";
  b.artifacts.push_back({"fig1_minima.csv", os.str()});

  int failed = 0;
  for (const auto& r : rows) failed += r.ok() ? 0 : 1;
  b.metrics["fig1.failed_points"] = failed;
  b.metrics["fig1.minima_count"] = static_cast<double>(minima.size());
  int near = 0;
  for (const auto& m : minima) {
    const double f = m.period / (2 * kPi);
    if (std::abs(f - std::round(f)) <= 0.1 && std::round(f) >= 1.0) ++near;
  }
  b.metrics["fig1.minima_near_integer"] = near;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double gt = nan, gc = std::numeric_limits<double>::infinity(), second = nan, best_gap = 0.5;
  for (const auto& m : minima) {
    if (m.c < gc) {
      gc = m.c;
      gt = m.period;
    }
    const double gap = std::abs(m.period / (2 * kPi) - 2.0);
    if (gap < best_gap) {
      best_gap = gap;
      second = m.c;
    }
  }
  b.metrics["fig1.global_T_over_2pi"] = gt / (2 * kPi);
  b.metrics["fig1.global_c"] = std::isfinite(gc) ? gc : nan;
  b.metrics["fig1.second_basin_c"] = second;
  return b;
}

inline void add_outcome_metrics(const std::string& prefix, const VariantOutcome& o, Metrics& m, double unit) {
  const std::string p = prefix + "." + o.variant.tag() + ".";
  m[p + "T_star"] = o.bilevel.boundary.period;
  m[p + "T_star_over_unit"] = o.bilevel.boundary.period / unit;
  m[p + "c"] = o.bilevel.c;
  m[p + "c_hat"] = o.bilevel.c_hat;
  m[p + "mbc_violation"] = o.bilevel.violation;
  m[p + "runtime_s"] = o.seconds_bilevel + o.seconds_baseline;
  if (o.baseline) {
    m[p + "baseline_converged"] = o.baseline_converged ? 1.0 : 0.0;
    m[p + "T_baseline"] = o.baseline->period;
    m[p + "T_baseline_over_unit"] = o.baseline->period / unit;
    m[p + "T_rel_diff"] = std::abs(o.bilevel.boundary.period - o.baseline->period) / o.baseline->period;
    m[p + "c_baseline"] = o.baseline->c;
    m[p + "pcc_state"] = o.pcc_state;
    m[p + "pcc_input"] = o.pcc_input;
  }
}

inline BundleResult bundle_pendulum(const ExperimentConfig& c, const GeneratorModel& model,
                                    const std::string& model_hash) {
  BundleResult b;
  const ControlAffineSystem sys = build_system(c);
  const MixedBoundaryConstraint mbc = build_mbc(c, sys);
  std::vector<VariantOutcome> outcomes;
  for (const auto& v : build_variants(c)) {
    outcomes.push_back(run_variant(c, sys, model, mbc, v, c.baseline && v.kind != BoundaryVariant::Kind::Soft, c.workers));
    add_outcome_metrics("pendulum", outcomes.back(), b.metrics, c.boundary.unit());
    for (auto& a : variant_artifacts(outcomes.back())) b.artifacts.push_back(std::move(a));
  }
  b.artifacts.push_back({"report.json", comparison_report(c, model_hash, outcomes, c.boundary.amplitude_deg).dump(2) + "\n"});

  // soft trade-off as w grows: c up, c_hat down
  std::vector<const VariantOutcome*> soft;
  for (const auto& o : outcomes)
    if (o.variant.kind == BoundaryVariant::Kind::Soft) soft.push_back(&o);
  std::sort(soft.begin(), soft.end(), [](auto* a, auto* b) { return a->variant.w < b->variant.w; });
  if (soft.size() >= 2) {
    bool c_up = true, chat_down = true;
    for (std::size_t i = 1; i < soft.size(); ++i) {
      c_up = c_up && soft[i]->bilevel.c > soft[i - 1]->bilevel.c;
      chat_down = chat_down && soft[i]->bilevel.c_hat < soft[i - 1]->bilevel.c_hat;
    }
    b.metrics["pendulum.soft.c_increasing"] = c_up ? 1.0 : 0.0;
    b.metrics["pendulum.soft.c_hat_decreasing"] = chat_down ? 1.0 : 0.0;
  }

  // small-amplitude limit: period of the linearized oscillator
  const auto t0 = std::chrono::steady_clock::now();
  const MixedBoundaryConstraint small = build_mbc(c, sys, c.reproduce.small_amplitude_deg);
  const BilevelSolution s = run_bilevel(c, model, small, BoundaryVariant::b0(), c.workers);
  b.metrics["pendulum.small.T_over_2pi"] = s.boundary.period / (2 * kPi);
  b.metrics["pendulum.small.T_rel_err"] = std::abs(s.boundary.period / (2 * kPi) - 1.0);
  b.metrics["pendulum.small.runtime_s"] = seconds_since(t0);
  return b;
}

inline BundleResult bundle_walker(const ExperimentConfig& c, const GeneratorModel& model,
                                  const std::string& model_hash) {
  BundleResult b;
  const ControlAffineSystem sys = build_system(c);
  const MixedBoundaryConstraint mbc = build_mbc(c, sys);
  const CompassGait walker(c.system.walker);
  std::vector<VariantOutcome> outcomes;
  for (const auto& v : build_variants(c)) {
    outcomes.push_back(run_variant(c, sys, model, mbc, v, c.baseline, c.workers));
    const VariantOutcome& o = outcomes.back();
    add_outcome_metrics("walker", o, b.metrics, 1.0);
    // fallback gate quantities, from the bilevel state trajectory endpoints
    const Vec x0 = o.bilevel.x.states.row(0).transpose();
    const Vec xT = o.bilevel.x.states.row(o.bilevel.x.states.rows() - 1).transpose();
    const std::string p = "walker." + v.tag() + ".";
    b.metrics[p + "periodicity_defect"] = (CompassGait::flip(walker.jump(xT)) - x0).norm();
    b.metrics[p + "v_avg_rel_err"] =
        std::abs(walker.step_length(x0) / o.bilevel.boundary.period - c.boundary.v_avg) / c.boundary.v_avg;
    for (auto& a : variant_artifacts(o)) b.artifacts.push_back(std::move(a));
  }
  b.artifacts.push_back({"report.json", comparison_report(c, model_hash, outcomes).dump(2) + "\n"});
  return b;
}

// ---- audit ----------------------------------------------------------------------

struct AuditLine {
  std::string variant;
  std::string quantity;
  double reported = 0.0;
  double recomputed = 0.0;
  bool pass = false;
};

// Recomputes every number of <dir>/report.json from the persisted CSVs and the
// persisted model, using only the evaluation routines.
inline std::vector<AuditLine> audit_directory(const ExperimentConfig& c, const fs::path& dir) {
  const nlohmann::json report = read_json(dir / "report.json");
  const GeneratorModel model = model_from_json(read_json(dir / "model.json"));
  const ControlAffineSystem sys = build_system(c);
  std::optional<double> amp;
  if (report.contains("amplitude_deg")) amp = report.at("amplitude_deg").get<double>();
  const MixedBoundaryConstraint mbc = build_mbc(c, sys, amp);
  const Index nx = sys.n_x;
  const Index knots = report.at("knots").get<Index>();
  const double scale = report.at("cost_scale").get<double>();

  std::vector<AuditLine> out;
  auto check = [&](const std::string& variant, const std::string& q, const nlohmann::json& entry, double value) {
    if (!entry.contains(q)) return;
    const double rep = entry.at(q).get<double>();
    const bool ok = std::abs(rep - value) <= 1e-12 + 1e-8 * std::abs(rep);
    out.push_back({variant, q, rep, value, ok});
  };

  for (const auto& e : report.at("variants")) {
    const std::string tag = e.at("variant").get<std::string>();
    const CsvTrajectory bl = parse_trajectory_csv(read_file(dir / e.at("files").at("bilevel").get<std::string>()), nx);
    const CsvTrajectory lz =
        parse_trajectory_csv(read_file(dir / e.at("files").at("lifted").get<std::string>()), model.n_z());
    if (bl.u.rows() != knots) throw DataError("audit: " + tag + " has the wrong number of knots");
    const double t_star = bl.x.period();
    check(tag, "T_star", e, t_star);
    check(tag, "c", e, scale * (t_star / static_cast<double>(knots)) * bl.u.squaredNorm());

    const BoundaryPoint bp{detail::vec_from_json(e.at("boundary").at("x0")),
                           detail::vec_from_json(e.at("boundary").at("xT")), e.at("boundary").at("T").get<double>()};
    check(tag, "mbc_violation", e, mbc.violation(bp));
    const Vec z0 = lz.x.states.row(0).transpose();
    const Vec zn = lz.x.states.row(lz.x.states.rows() - 1).transpose();
    check(tag, "c_hat_lower", e,
          (z0 - model.dict.eval(bp.x0)).squaredNorm() + (zn - model.dict.eval(bp.xT)).squaredNorm());

    if (e.at("files").contains("baseline")) {
      const CsvTrajectory nl =
          parse_trajectory_csv(read_file(dir / e.at("files").at("baseline").get<std::string>()), nx);
      const TranscribedNlp nlp = transcribe(sys, mbc, knots, scale, c.baseline_substeps);
      NlpSolution s;
      s.x = nl.x;
      s.u = nl.u;
      s.period = nl.x.period();
      const SolutionCheck chk = evaluate_solution(nlp, s);
      check(tag, "T_star_baseline", e, s.period);
      check(tag, "c_baseline", e, chk.cost);
      check(tag, "baseline_max_defect", e, chk.max_defect);
      check(tag, "baseline_mbc_violation", e, chk.mbc_violation);
      check(tag, "pcc_state", e, state_pcc(bl.x, nl.x));
      check(tag, "pcc_input", e, input_pcc(bl.u, t_star, nl.u, s.period));
    }
  }
  return out;
}

}  // namespace koopt
