#pragma once

#include "koopt/common.hpp"
#include "koopt/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>

namespace koopt {

namespace detail {

// Pade coefficients of degree 3, 5, 7, 9 and 13 for the scaling-and-squaring
// matrix exponential (Higham 2005).
inline constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
inline constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
inline constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                                 25200.0,    1512.0,    56.0,      1.0};
inline constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                                  302702400.0,   30270240.0,   2162160.0,
                                                  110880.0,      3960.0,       90.0,
                                                  1.0};
inline constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

// 1-norm thresholds below which the degree-m approximant reaches unit roundoff.
inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e0;
inline constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t K>
void pade_low(const Mat& a, const std::array<double, K>& b, Mat& u, Mat& v) {
  const Index n = a.rows();
  const Mat a2 = a * a;
  Mat odd = b[1] * Mat::Identity(n, n);
  Mat even = b[0] * Mat::Identity(n, n);
  Mat power = Mat::Identity(n, n);
  for (std::size_t k = 2; k < K; k += 2) {
    power = power * a2;
    even += b[k] * power;
    if (k + 1 < K) odd += b[k + 1] * power;
  }
  u = a * odd;
  v = even;
}

inline void pade13(const Mat& a, Mat& u, Mat& v) {
  const auto& b = kPade13;
  const Index n = a.rows();
  const Mat id = Mat::Identity(n, n);
  const Mat a2 = a * a;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  Mat tmp = b[13] * a6 + b[11] * a4 + b[9] * a2;
  u = a * (a6 * tmp + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  tmp = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * tmp + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace detail

inline double norm1(const Mat& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

/// Matrix exponential by scaling and squaring with a diagonal Pade
/// approximant. The lowest degree in {3, 5, 7, 9} whose 1-norm bound holds is
/// used; otherwise the matrix is scaled so degree 13 applies, then squared back.
inline Mat expm(const Mat& m) {
  if (m.rows() != m.cols()) throw NumericError("expm: matrix must be square");
  if (!m.allFinite()) throw NumericError("expm: non-finite entries");
  const Index n = m.rows();
  if (n == 0) return m;

  const double nrm = norm1(m);
  Mat u, v;
  int squarings = 0;
  if (nrm <= detail::kTheta3) {
    detail::pade_low(m, detail::kPade3, u, v);
  } else if (nrm <= detail::kTheta5) {
    detail::pade_low(m, detail::kPade5, u, v);
  } else if (nrm <= detail::kTheta7) {
    detail::pade_low(m, detail::kPade7, u, v);
  } else if (nrm <= detail::kTheta9) {
    detail::pade_low(m, detail::kPade9, u, v);
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / detail::kTheta13))));
    const Mat scaled = m / std::ldexp(1.0, squarings);
    detail::pade13(scaled, u, v);
  }
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  if (!r.allFinite()) throw NumericError("expm: overflow");
  return r;
}

struct ZohPair {
  Mat ad;
  Mat bd;
  double step = 0.0;
};

// Exact zero-order-hold discretization via exp(h [[A, B], [0, 0]]).
inline ZohPair zoh_discretize(const Mat& a, const Mat& b, double h) {
  if (!(h > 0.0)) throw NumericError("zoh_discretize: step must be positive");
  if (a.rows() != a.cols() || b.rows() != a.rows())
    throw NumericError("zoh_discretize: dimension mismatch");
  const Index n = a.rows();
  const Index m = b.cols();
  Mat aug = Mat::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a * h;
  aug.topRightCorner(n, m) = b * h;
  const Mat e = expm(aug);
  return ZohPair{e.topLeftCorner(n, n), e.topRightCorner(n, m), h};
}

struct PseudoInverse {
  Mat pinv;
  Index rank = 0;
  Vec singular_values;
};

// Moore-Penrose inverse; singular values below rel_tol * sigma_max are dropped.
inline PseudoInverse pinv_svd(const Mat& m, double rel_tol = 1e-10) {
  if (!m.allFinite()) throw NumericError("pinv_svd: non-finite entries");
  PseudoInverse out;
  if (m.size() == 0) {
    out.pinv = Mat::Zero(m.cols(), m.rows());
    return out;
  }
  Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  out.singular_values = s;
  const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
  Index r = 0;
  while (r < s.size() && s(r) > cutoff && s(r) > 0.0) ++r;
  out.rank = r;
  const Mat vr = svd.matrixV().leftCols(r);
  const Mat ur = svd.matrixU().leftCols(r);
  out.pinv = vr * s.head(r).cwiseInverse().asDiagonal() * ur.transpose();
  return out;
}

struct KktResult {
  Vec primal;
  Vec dual;
  double stationarity = 0.0;
  double feasibility = 0.0;
  double regularization = 0.0;
};

inline double default_kkt_regularization(const Mat& h) {
  return h.rows() > 0 ? 1e-9 * h.trace() / static_cast<double>(h.rows()) : 0.0;
}

inline void kkt_residuals(const Mat& h, const Vec& g, const Mat& aeq, const Vec& beq,
                          KktResult& r) {
  const Vec stat =
      h * r.primal + r.regularization * r.primal + g + aeq.transpose() * r.dual;
  r.stationarity = stat.size() ? stat.lpNorm<Eigen::Infinity>() : 0.0;
  const Vec feas = aeq * r.primal - beq;
  r.feasibility = feas.size() ? feas.lpNorm<Eigen::Infinity>() : 0.0;
}

/// Solves min 1/2 v'Hv + g'v  s.t. Aeq v = beq through the saddle-point system
/// [[H + reg I, Aeq'], [Aeq, 0]] with a fully pivoted LU and one step of
/// iterative refinement. Multipliers follow (H + reg I) v + g + Aeq' lambda = 0.
inline KktResult solve_kkt(const Mat& h, const Vec& g, const Mat& aeq, const Vec& beq,
                           std::optional<double> reg = std::nullopt) {
  const Index n = h.rows();
  const Index m = aeq.rows();
  if (h.cols() != n || g.size() != n || (m > 0 && aeq.cols() != n) || beq.size() != m)
    throw NumericError("solve_kkt: dimension mismatch");
  const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
  if (n > 0 && asym > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()))
    throw NumericError("solve_kkt: Hessian is not symmetric");

  KktResult out;
  out.regularization = reg.value_or(default_kkt_regularization(h));

  Mat k = Mat::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = h + out.regularization * Mat::Identity(n, n);
  if (m > 0) {
    k.topRightCorner(n, m) = aeq.transpose();
    k.bottomLeftCorner(m, n) = aeq;
  }
  Vec rhs(n + m);
  rhs << -g, beq;

  Eigen::FullPivLU<Mat> lu(k);
  const Vec diag = lu.matrixLU().diagonal().cwiseAbs();
  const double smallest = diag.size() ? diag.minCoeff() : 0.0;
  const double largest = diag.size() ? diag.maxCoeff() : 0.0;
  if (!(smallest > 1e-14 * largest) || !lu.isInvertible()) {
    std::ostringstream os;
    os << "solve_kkt: singular KKT matrix (smallest pivot " << smallest << ")";
    throw DegenerateQpError(os.str(), smallest);
  }
  Vec sol = lu.solve(rhs);
  sol += lu.solve(rhs - k * sol);
  if (!sol.allFinite()) throw DegenerateQpError("solve_kkt: non-finite solution", smallest);

  out.primal = sol.head(n);
  out.dual = sol.tail(m);
  kkt_residuals(h, g, aeq, beq, out);
  return out;
}

// Standard centered correlation of two equally long series.
inline double pearson(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw NumericError("pearson: series must have equal length >= 2");
  const Vec da = a.array() - a.mean();
  const Vec db = b.array() - b.mean();
  const double va = da.squaredNorm();
  const double vb = db.squaredNorm();
  if (!(va > 0.0) || !(vb > 0.0)) throw NumericError("pearson: zero variance, correlation undefined");
  const double r = da.dot(db) / std::sqrt(va * vb);
  return std::clamp(r, -1.0, 1.0);
}

// Linear interpolation of a sampled trajectory onto n points of normalized
// time tau = t / T in [0, 1].
inline Mat resample_normalized(const Trajectory& traj, Index n) {
  if (n < 2) throw NumericError("resample: need at least two grid points");
  const Index samples = traj.times.size();
  if (samples < 2 || traj.states.rows() != samples)
    throw NumericError("resample: malformed trajectory");
  const double t0 = traj.times(0);
  const double span = traj.times(samples - 1) - t0;
  if (!(span > 0.0)) throw NumericError("resample: trajectory has zero duration");

  Mat out(n, traj.states.cols());
  Index seg = 0;
  for (Index i = 0; i < n; ++i) {
    const double t = t0 + span * static_cast<double>(i) / static_cast<double>(n - 1);
    while (seg + 2 < samples && traj.times(seg + 1) < t) ++seg;
    const double ta = traj.times(seg);
    const double tb = traj.times(seg + 1);
    const double w = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
    out.row(i) = (1.0 - w) * traj.states.row(seg) + w * traj.states.row(seg + 1);
  }
  return out;
}

inline std::pair<Mat, Mat> resample_common_grid(const Trajectory& a, const Trajectory& b,
                                                Index n) {
  return {resample_normalized(a, n), resample_normalized(b, n)};
}

// Unweighted mean of the per-column correlations.
inline double mean_pearson(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.cols() == 0)
    throw NumericError("mean_pearson: shape mismatch");
  double sum = 0.0;
  for (Index j = 0; j < a.cols(); ++j) sum += pearson(a.col(j), b.col(j));
  return sum / static_cast<double>(a.cols());
}

// Piecewise-constant knots sampled at interval midpoints, as a trajectory
// usable with resample_normalized.
inline Trajectory knots_as_trajectory(const Mat& knots, double period) {
  const Index n = knots.rows();
  Trajectory t;
  t.times.resize(n);
  for (Index k = 0; k < n; ++k) t.times(k) = (static_cast<double>(k) + 0.5) * period / n;
  t.states = knots;
  return t;
}

}  // namespace koopt
