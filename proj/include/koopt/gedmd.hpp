#pragma once

#include "koopt/dynamics.hpp"
#include "koopt/lifting.hpp"
#include "koopt/numerics.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace koopt {

struct SampleSet {
  Mat states;  // n_s x n_x
  std::uint64_t seed = 0;
  StateBox box;

  Index size() const { return states.rows(); }
};

// i.i.d. uniform samples in `box`. The generator and the mapping from raw
// 64-bit words to doubles are fixed so the set is reproducible across
// standard libraries.
inline SampleSet sample_states(const StateBox& box, Index n_s, std::uint64_t seed) {
  box.validate();
  if (n_s < 1) throw ConfigError("sample_states: sample count must be positive");
  std::mt19937_64 rng(seed);
  SampleSet set;
  set.seed = seed;
  set.box = box;
  set.states.resize(n_s, box.dim());
  for (Index j = 0; j < n_s; ++j) {
    for (Index i = 0; i < box.dim(); ++i) {
      const double r = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
      set.states(j, i) = box.lower(i) + r * (box.upper(i) - box.lower(i));
    }
  }
  return set;
}

struct LieData {
  Mat psi;   // n_z x n_s
  Mat dpsi;  // n_z x n_s
};

// Lifted samples and their Lie derivatives along f + G e_i (e_0 := 0).
inline LieData assemble_data(const ControlAffineSystem& sys, const ObservableDictionary& dict,
                             const SampleSet& samples, Index input_index) {
  if (dict.n_x() != sys.n_x) throw ConfigError("assemble_data: dictionary and system disagree on n_x");
  if (input_index < 0 || input_index > sys.n_u)
    throw ConfigError("assemble_data: input index out of range");
  Vec u = Vec::Zero(sys.n_u);
  if (input_index > 0) u(input_index - 1) = 1.0;

  const Index n_s = samples.size();
  LieData d{Mat(dict.n_z(), n_s), Mat(dict.n_z(), n_s)};
  for (Index j = 0; j < n_s; ++j) {
    const Vec x = samples.states.row(j).transpose();
    Vec dx;
    try {
      dx = eval_rhs(sys, x, u);
    } catch (const DomainError& e) {
      throw DataError("assemble_data: sample " + std::to_string(j) + ": " + e.what());
    }
    d.psi.col(j) = dict.eval(x);
    d.dpsi.col(j) = dict.grad(x) * dx;
    if (!d.dpsi.col(j).allFinite() || !d.psi.col(j).allFinite())
      throw DataError("assemble_data: non-finite Lie derivative at sample " + std::to_string(j));
  }
  return d;
}

struct GeneratorFit {
  Mat l;
  double residual = 0.0;
  Index rank = 0;
  bool rank_deficient = false;
};

inline double fit_residual(const Mat& l, const Mat& psi, const Mat& dpsi) {
  const double den = dpsi.norm();
  const double num = (l * psi - dpsi).norm();
  return den > 0.0 ? num / den : num;
}

// L = dPsi pinv(Psi), truncated SVD.
inline GeneratorFit fit_generator(const Mat& psi, const Mat& dpsi, double svd_tol = 1e-10) {
  if (psi.rows() != dpsi.rows() || psi.cols() != dpsi.cols())
    throw DataError("fit_generator: Psi and dPsi shapes differ");
  const PseudoInverse p = pinv_svd(psi, svd_tol);
  GeneratorFit fit;
  fit.l = dpsi * p.pinv;
  fit.rank = p.rank;
  fit.rank_deficient = p.rank < psi.rows();
  fit.residual = fit_residual(fit.l, psi, dpsi);
  return fit;
}

struct GeneratorModel {
  ObservableDictionary dict;
  Mat l0;
  std::vector<Mat> li;
  std::vector<double> residuals;  // L0, L1, ...
  std::vector<Index> ranks;
  bool rank_warning = false;
  double svd_tol = 1e-10;
  std::uint64_t seed = 0;
  Index n_samples = 0;
  StateBox box;
  std::string system;

  Index n_x() const { return dict.n_x(); }
  Index n_z() const { return dict.n_z(); }
  Index n_u() const { return static_cast<Index>(li.size()); }
  Mat recovery_matrix() const { return dict.recovery_matrix(); }
};

inline GeneratorModel identify(const ControlAffineSystem& sys, const ObservableDictionary& dict,
                               Index n_s, std::uint64_t seed, double svd_tol = 1e-10) {
  const SampleSet samples = sample_states(sys.state_box, n_s, seed);
  GeneratorModel m;
  m.dict = dict;
  m.svd_tol = svd_tol;
  m.seed = seed;
  m.n_samples = n_s;
  m.box = sys.state_box;
  m.system = sys.name;
  for (Index i = 0; i <= sys.n_u; ++i) {
    const LieData d = assemble_data(sys, dict, samples, i);
    GeneratorFit fit = fit_generator(d.psi, d.dpsi, svd_tol);
    m.residuals.push_back(fit.residual);
    m.ranks.push_back(fit.rank);
    m.rank_warning = m.rank_warning || fit.rank_deficient;
    if (i == 0) m.l0 = std::move(fit.l);
    else m.li.push_back(std::move(fit.l));
  }
  return m;
}

struct LiftedLTI {
  Mat a;
  Mat b;
  Vec z_bar;
};

inline LiftedLTI linearize(const GeneratorModel& m, const Vec& z_bar) {
  if (z_bar.size() != m.n_z()) throw DomainError("linearize: linearization point has wrong size");
  LiftedLTI lti{m.l0, Mat(m.n_z(), m.n_u()), z_bar};
  for (Index i = 0; i < m.n_u(); ++i) lti.b.col(i) = (m.li[static_cast<std::size_t>(i)] - m.l0) * z_bar;
  return lti;
}

// z' = L0 z + sum_i u_i (L_i - L0) z
inline Vec bilinear_rhs(const GeneratorModel& m, const Vec& z, const Vec& u) {
  Vec dz = m.l0 * z;
  for (Index i = 0; i < m.n_u(); ++i)
    if (u(i) != 0.0) dz.noalias() += u(i) * ((m.li[static_cast<std::size_t>(i)] - m.l0) * z);
  return dz;
}

inline Trajectory simulate_bilinear(const GeneratorModel& m, const Vec& x0, const ControlSignal& u,
                                    int substeps = 16) {
  if (substeps < 1) throw IntegrationError("simulate_bilinear: substeps must be >= 1");
  u.validate(m.n_u());
  const Index n = u.size();
  const double h = u.step() / substeps;
  Trajectory traj;
  traj.times = Vec::LinSpaced(n + 1, 0.0, u.period);
  traj.states.resize(n + 1, m.n_x());
  Vec z = m.dict.eval(x0);
  traj.states.row(0) = x0.transpose();
  for (Index k = 0; k < n; ++k) {
    const Vec uk = u.knots.row(k).transpose();
    for (int s = 0; s < substeps; ++s) {
      const Vec k1 = bilinear_rhs(m, z, uk);
      const Vec k2 = bilinear_rhs(m, z + 0.5 * h * k1, uk);
      const Vec k3 = bilinear_rhs(m, z + 0.5 * h * k2, uk);
      const Vec k4 = bilinear_rhs(m, z + h * k3, uk);
      z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!z.allFinite()) throw IntegrationError("simulate_bilinear: surrogate diverged");
    traj.states.row(k + 1) = z.head(m.n_x()).transpose();
  }
  return traj;
}

// Per-state RMS of C z(t) - x(t) over the knot grid.
inline Vec prediction_error(const GeneratorModel& m, const ControlAffineSystem& sys, const Vec& x0,
                            const ControlSignal& u, int substeps = 16) {
  const Trajectory truth = simulate(sys, x0, u, substeps);
  const Trajectory pred = simulate_bilinear(m, x0, u, substeps);
  const Mat diff = pred.states - truth.states;
  return (diff.array().square().colwise().sum() / static_cast<double>(diff.rows())).sqrt().transpose();
}

// ---------------------------------------------------------------------------
// Persistence. Matrices are stored row-major as decimal numbers with 17
// significant digits, which round-trips IEEE doubles exactly.

namespace detail {

inline nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat mat_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw ConfigError(what + ": ragged matrix");
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline nlohmann::json vec_to_json(const Vec& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vec vec_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace detail

inline nlohmann::json model_to_json(const GeneratorModel& m) {
  nlohmann::json j;
  j["system"] = m.system;
  j["dictionary"] = m.dict;
  j["labels"] = m.dict.labels();
  j["n_x"] = m.n_x();
  j["n_z"] = m.n_z();
  j["n_u"] = m.n_u();
  j["L0"] = detail::mat_to_json(m.l0);
  nlohmann::json li = nlohmann::json::array();
  for (const auto& l : m.li) li.push_back(detail::mat_to_json(l));
  j["Li"] = li;
  j["residuals"] = m.residuals;
  j["ranks"] = m.ranks;
  j["rank_warning"] = m.rank_warning;
  j["svd_tol"] = m.svd_tol;
  j["seed"] = m.seed;
  j["n_samples"] = m.n_samples;
  j["box"] = {{"lower", detail::vec_to_json(m.box.lower)}, {"upper", detail::vec_to_json(m.box.upper)}};
  return j;
}

inline GeneratorModel model_from_json(const nlohmann::json& j) {
  try {
    GeneratorModel m;
    m.system = j.at("system").get<std::string>();
    m.dict = dictionary_from_json(j.at("dictionary"));
    m.l0 = detail::mat_from_json(j.at("L0"), "L0");
    for (const auto& l : j.at("Li")) m.li.push_back(detail::mat_from_json(l, "Li"));
    m.residuals = j.at("residuals").get<std::vector<double>>();
    m.ranks = j.at("ranks").get<std::vector<Index>>();
    m.rank_warning = j.at("rank_warning").get<bool>();
    m.svd_tol = j.at("svd_tol").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_samples = j.at("n_samples").get<Index>();
    m.box.lower = detail::vec_from_json(j.at("box").at("lower"));
    m.box.upper = detail::vec_from_json(j.at("box").at("upper"));
    if (m.l0.rows() != m.n_z() || m.l0.cols() != m.n_z())
      throw ConfigError("model: L0 does not match the dictionary size");
    for (const auto& l : m.li)
      if (l.rows() != m.n_z() || l.cols() != m.n_z())
        throw ConfigError("model: Li does not match the dictionary size");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

}  // namespace koopt
