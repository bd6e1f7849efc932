#pragma once

#include "koopt/dynamics.hpp"

#include <cmath>
#include <string>

namespace koopt {

// Damped linear oscillator x' = A x + B u with B = [0; 1].
// "conventional" uses A = [[0, 1], [-1, -0.2]]; "decoupled" uses
// A = [[1, 0], [-1, -0.2]] (first row x1' = x1, input cannot reach x1).
inline Mat oscillator_matrix(const std::string& preset) {
  Mat a(2, 2);
  if (preset == "conventional") {
    a << 0.0, 1.0, -1.0, -0.2;
  } else if (preset == "decoupled") {
    a << 1.0, 0.0, -1.0, -0.2;
  } else {
    throw ConfigError("unknown oscillator preset '" + preset + "'");
  }
  return a;
}

inline ControlAffineSystem make_linear_system(std::string name, const Mat& a, const Mat& b,
                                              StateBox box) {
  ControlAffineSystem sys;
  sys.name = std::move(name);
  sys.n_x = a.rows();
  sys.n_u = b.cols();
  sys.drift = [a](const Vec& x) -> Vec { return a * x; };
  sys.input_map = [b](const Vec&) -> Mat { return b; };
  sys.state_box = std::move(box);
  return sys;
}

inline ControlAffineSystem make_oscillator(const std::string& preset = "conventional") {
  Mat b(2, 1);
  b << 0.0, 1.0;
  return make_linear_system("oscillator", oscillator_matrix(preset), b,
                            StateBox{to_vec({-1.0, -1.0}), to_vec({1.0, 1.0})});
}

// Normalized pendulum (g = l = m = 1): q'' = -sin q - d q' + u.
inline ControlAffineSystem make_pendulum(double damping = 0.1) {
  ControlAffineSystem sys;
  sys.name = "pendulum";
  sys.n_x = 2;
  sys.n_u = 1;
  sys.drift = [damping](const Vec& x) -> Vec {
    Vec dx(2);
    dx << x(1), -std::sin(x(0)) - damping * x(1);
    return dx;
  };
  sys.input_map = [](const Vec&) -> Mat {
    Mat g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  sys.state_box = StateBox{to_vec({-kPi / 2, -0.7}), to_vec({kPi / 2, 0.7})};
  return sys;
}

struct CompassGaitParams {
  double leg_length = 1.0;       // l, hip to foot
  double hip_mass_ratio = 2.0;   // m_hip / m_leg
  double mass_position = 0.5;    // leg mass distance from the foot, as a fraction of l
  double slope = 0.0;            // ground inclination [rad], downhill in walking direction
  double gravity = 1.0;
};

// Point-mass compass-gait walker. State x = (th_st, th_sw, dth_st, dth_sw),
// angles from the vertical, positive counter-clockwise, walking towards +x.
// Masses are normalized so that 2 m_leg + m_hip = 1; the hip torque u acts
// on the swing leg and reacts on the stance leg.
class CompassGait {
 public:
  explicit CompassGait(CompassGaitParams p = {}) : p_(p) {
    if (!(p_.leg_length > 0.0) || !(p_.hip_mass_ratio > 0.0) || !(p_.mass_position > 0.0) ||
        !(p_.mass_position < 1.0) || !(p_.gravity > 0.0))
      throw ConfigError("compass gait: invalid physical parameters");
    l_ = p_.leg_length;
    a_ = p_.mass_position * l_;
    b_ = l_ - a_;
    m_ = 1.0 / (2.0 + p_.hip_mass_ratio);
    mh_ = p_.hip_mass_ratio * m_;
  }

  const CompassGaitParams& params() const { return p_; }

  Eigen::Matrix2d mass_matrix(double th_st, double th_sw) const {
    const double c = std::cos(th_st - th_sw);
    Eigen::Matrix2d m;
    m << m_ * a_ * a_ + (m_ + mh_) * l_ * l_, -m_ * b_ * l_ * c,  //
        -m_ * b_ * l_ * c, m_ * b_ * b_;
    return m;
  }

  // Coriolis, centrifugal and gravity terms.
  Eigen::Vector2d bias(const Vec& x) const {
    const double s = std::sin(x(0) - x(1));
    const double g = p_.gravity;
    Eigen::Vector2d h;
    h << -m_ * b_ * l_ * s * x(3) * x(3) - g * (m_ * a_ + (m_ + mh_) * l_) * std::sin(x(0)),
        m_ * b_ * l_ * s * x(2) * x(2) + g * m_ * b_ * std::sin(x(1));
    return h;
  }

  Vec drift(const Vec& x) const {
    const Eigen::Vector2d qdd = mass_matrix(x(0), x(1)).ldlt().solve(-bias(x));
    Vec dx(4);
    dx << x(2), x(3), qdd(0), qdd(1);
    return dx;
  }

  Mat input_map(const Vec& x) const {
    const Eigen::Vector2d qdd = mass_matrix(x(0), x(1)).ldlt().solve(Eigen::Vector2d(-1.0, 1.0));
    Mat g = Mat::Zero(4, 1);
    g(2, 0) = qdd(0);
    g(3, 0) = qdd(1);
    return g;
  }

  // Plastic swing-foot impact: angular momentum of the whole walker about the
  // new contact point and of the trailing leg about the hip are conserved.
  // Returns the post-impact state in pre-impact labels (positions unchanged).
  Vec jump(const Vec& x) const {
    const double c = std::cos(x(0) - x(1));
    Eigen::Matrix2d qm;
    qm << (2.0 * m_ * a_ * l_ + mh_ * l_ * l_) * c - m_ * a_ * b_, -m_ * a_ * b_,  //
        -m_ * a_ * b_, 0.0;
    Eigen::Matrix2d qp;
    qp << m_ * a_ * a_ + m_ * l_ * (l_ - b_ * c) + mh_ * l_ * l_, m_ * b_ * (b_ - l_ * c),  //
        -m_ * b_ * l_ * c, m_ * b_ * b_;
    // post = (rate of the new stance leg, rate of the new swing leg)
    const Eigen::Vector2d post = qp.partialPivLu().solve(qm * Eigen::Vector2d(x(2), x(3)));
    Vec out = x;
    out(2) = post(1);  // old stance leg becomes the swing leg
    out(3) = post(0);
    return out;
  }

  static Vec flip(const Vec& x) {
    Vec out(4);
    out << x(1), x(0), x(3), x(2);
    return out;
  }

  // Height of the swing foot above the ground line through the stance foot.
  double touchdown_guard(const Vec& x) const {
    const double dx = l_ * (std::sin(x(1)) - std::sin(x(0)));
    const double dy = l_ * (std::cos(x(0)) - std::cos(x(1)));
    return dy * std::cos(p_.slope) + dx * std::sin(p_.slope);
  }

  // Signed so that it stays smooth through the legs-together configuration;
  // positive when leg 0 is ahead of leg 1.
  double step_length(const Vec& x) const {
    return 2.0 * l_ * std::sin(0.5 * (x(0) - x(1)));
  }

  double kinetic_energy(const Vec& x) const {
    const Eigen::Vector2d qd(x(2), x(3));
    return 0.5 * qd.dot(mass_matrix(x(0), x(1)) * qd);
  }

  double potential_energy(const Vec& x) const {
    const double g = p_.gravity;
    const double hip_y = l_ * std::cos(x(0));
    return g * (mh_ * hip_y + m_ * a_ * std::cos(x(0)) + m_ * (hip_y - b_ * std::cos(x(1))));
  }

  // Touchdown configuration with inter-leg angle `spread` (th_st - th_sw).
  std::pair<double, double> touchdown_angles(double spread) const {
    return {0.5 * spread - p_.slope, -0.5 * spread - p_.slope};
  }

  double hip_mass() const { return mh_; }
  double leg_mass() const { return m_; }

 private:
  CompassGaitParams p_;
  double l_ = 1.0, a_ = 0.5, b_ = 0.5, m_ = 0.25, mh_ = 0.5;
};

inline ControlAffineSystem make_compass_gait(const CompassGaitParams& params = {}) {
  const CompassGait walker(params);
  ControlAffineSystem sys;
  sys.name = "compass_gait";
  sys.n_x = 4;
  sys.n_u = 1;
  sys.drift = [walker](const Vec& x) { return walker.drift(x); };
  sys.input_map = [walker](const Vec& x) { return walker.input_map(x); };
  sys.state_box = StateBox{to_vec({-0.1, -0.1, -0.2, -0.2}), to_vec({0.1, 0.1, 0.2, 0.2})};
  HybridExtras extras;
  extras.jump_map = [walker](const Vec& x) { return walker.jump(x); };
  extras.flip_map = [](const Vec& x) { return CompassGait::flip(x); };
  extras.touchdown_guard = [walker](const Vec& x) { return walker.touchdown_guard(x); };
  sys.hybrid = std::move(extras);
  return sys;
}

}  // namespace koopt
