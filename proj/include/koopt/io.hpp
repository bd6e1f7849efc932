#pragma once

#include "koopt/dynamics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace koopt {

// 64-bit FNV-1a, used for provenance and determinism checks.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Writes to a sibling temporary and renames, so readers never see a partial file.
inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << bytes;
    if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// Trajectory CSV: header t,x1..,u1..; one row per state sample. The input on
// row k is the knot applied on [t_k, t_k+1); the last row repeats the final
// knot (zero-order hold).
inline std::string trajectory_csv(const Trajectory& x, const Mat& u) {
  const Index n = x.samples();
  if (u.rows() != n - 1) throw DomainError("trajectory_csv: need one input knot per interval");
  std::ostringstream os;
  os << "t";
  for (Index i = 0; i < x.states.cols(); ++i) os << ",x" << i + 1;
  for (Index i = 0; i < u.cols(); ++i) os << ",u" << i + 1;
  os << "\n";
  for (Index k = 0; k < n; ++k) {
    os << format_double(x.times(k));
    for (Index i = 0; i < x.states.cols(); ++i) os << "," << format_double(x.states(k, i));
    const Index uk = std::min(k, n - 2);
    for (Index i = 0; i < u.cols(); ++i) os << "," << format_double(u(uk, i));
    os << "\n";
  }
  return os.str();
}

struct CsvTrajectory {
  Trajectory x;
  Mat u;  // knots, one per interval
};

inline CsvTrajectory parse_trajectory_csv(const std::string& text, Index n_x) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("trajectory csv: empty");
  const Index cols = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + 1;
  if (line.rfind("t,", 0) != 0 || cols < 1 + n_x) throw DataError("trajectory csv: bad header '" + line + "'");
  const Index n_u = cols - 1 - n_x;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<Index>(row.size()) != cols) throw DataError("trajectory csv: ragged row");
    rows.push_back(std::move(row));
  }
  const Index n = static_cast<Index>(rows.size());
  if (n < 2) throw DataError("trajectory csv: need at least two rows");
  CsvTrajectory out;
  out.x.times.resize(n);
  out.x.states.resize(n, n_x);
  out.u.resize(n - 1, n_u);
  for (Index k = 0; k < n; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    out.x.times(k) = r[0];
    for (Index i = 0; i < n_x; ++i) out.x.states(k, i) = r[static_cast<std::size_t>(1 + i)];
    if (k < n - 1)
      for (Index i = 0; i < n_u; ++i) out.u(k, i) = r[static_cast<std::size_t>(1 + n_x + i)];
  }
  return out;
}

}  // namespace koopt
