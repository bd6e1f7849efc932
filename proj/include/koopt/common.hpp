#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace koopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Error hierarchy. Every failure the library can surface derives from Error so
// the CLI can map it onto an exit code with a single catch.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration or schema violation (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

// Numerical failures (CLI exit code 3).
struct NumericError : Error {
  using Error::Error;
};

struct DomainError : NumericError {
  using NumericError::NumericError;
};

struct IntegrationError : NumericError {
  using NumericError::NumericError;
};

struct HybridEventError : NumericError {
  using NumericError::NumericError;
};

struct DataError : NumericError {
  using NumericError::NumericError;
};

// Singular or inconsistent KKT system; carries the smallest pivot seen.
struct DegenerateQpError : NumericError {
  DegenerateQpError(const std::string& what, double pivot)
      : NumericError(what), smallest_pivot(pivot) {}
  double smallest_pivot;
};

struct ConvergenceError : NumericError {
  using NumericError::NumericError;
};

inline bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

inline Vec to_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }

}  // namespace koopt
