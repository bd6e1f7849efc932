#pragma once

#include "koopt/common.hpp"

#include <json.hpp>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace koopt {

// One scalar observable, declared as data so identified models stay
// serializable.
//   monomial: prod_k x[indices[k]]^powers[k]   (no indices: the constant 1)
//   sin/cos:  sin(sum_k powers[k] * x[indices[k]])   (powers default to 1)
//   product:  prod of `factors`
struct Term {
  enum class Kind { Monomial, Sin, Cos, Product };

  Kind kind = Kind::Monomial;
  std::vector<int> indices;
  std::vector<int> powers;
  std::vector<Term> factors;

  static Term constant() { return Term{}; }
  static Term state(int i) { return Term{Kind::Monomial, {i}, {1}, {}}; }
  static Term monomial(std::vector<int> idx, std::vector<int> pw) {
    return Term{Kind::Monomial, std::move(idx), std::move(pw), {}};
  }
  static Term sin(std::vector<int> idx, std::vector<int> coeff = {}) {
    return Term{Kind::Sin, std::move(idx), std::move(coeff), {}};
  }
  static Term cos(std::vector<int> idx, std::vector<int> coeff = {}) {
    return Term{Kind::Cos, std::move(idx), std::move(coeff), {}};
  }
  static Term product(std::vector<Term> f) { return Term{Kind::Product, {}, {}, std::move(f)}; }

  int power(std::size_t k) const { return k < powers.size() ? powers[k] : 1; }

  bool is_state_copy(int i) const {
    return kind == Kind::Monomial && indices.size() == 1 && indices[0] == i && power(0) == 1;
  }

  void validate(Index n_x) const {
    if (kind != Kind::Product) {
      if (!powers.empty() && powers.size() != indices.size())
        throw ConfigError("dictionary term: powers and indices differ in length");
      for (int i : indices)
        if (i < 0 || i >= n_x) throw ConfigError("dictionary term: state index out of range");
      if (kind == Kind::Monomial)
        for (std::size_t k = 0; k < indices.size(); ++k)
          if (power(k) < 0) throw ConfigError("dictionary term: negative monomial power");
      if ((kind == Kind::Sin || kind == Kind::Cos) && indices.empty())
        throw ConfigError("dictionary term: trigonometric term needs an argument");
    } else {
      if (factors.empty()) throw ConfigError("dictionary term: empty product");
      for (const auto& f : factors) f.validate(n_x);
    }
  }

  double argument(const Vec& x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) s += power(k) * x(indices[k]);
    return s;
  }

  double eval(const Vec& x) const {
    switch (kind) {
      case Kind::Monomial: {
        double v = 1.0;
        for (std::size_t k = 0; k < indices.size(); ++k) v *= std::pow(x(indices[k]), power(k));
        return v;
      }
      case Kind::Sin:
        return std::sin(argument(x));
      case Kind::Cos:
        return std::cos(argument(x));
      case Kind::Product: {
        double v = 1.0;
        for (const auto& f : factors) v *= f.eval(x);
        return v;
      }
    }
    return 0.0;
  }

  // Accumulates d(term)/dx into `row`, scaled by `scale`.
  void add_gradient(const Vec& x, double scale, Eigen::Ref<Eigen::RowVectorXd> row) const {
    switch (kind) {
      case Kind::Monomial:
        for (std::size_t k = 0; k < indices.size(); ++k) {
          const int p = power(k);
          if (p == 0) continue;
          double d = p * std::pow(x(indices[k]), p - 1);
          for (std::size_t j = 0; j < indices.size(); ++j)
            if (j != k) d *= std::pow(x(indices[j]), power(j));
          row(indices[k]) += scale * d;
        }
        break;
      case Kind::Sin:
      case Kind::Cos: {
        const double arg = argument(x);
        const double d = kind == Kind::Sin ? std::cos(arg) : -std::sin(arg);
        for (std::size_t k = 0; k < indices.size(); ++k) row(indices[k]) += scale * d * power(k);
        break;
      }
      case Kind::Product: {
        std::vector<double> vals(factors.size());
        for (std::size_t k = 0; k < factors.size(); ++k) vals[k] = factors[k].eval(x);
        for (std::size_t k = 0; k < factors.size(); ++k) {
          double others = 1.0;
          for (std::size_t j = 0; j < factors.size(); ++j)
            if (j != k) others *= vals[j];
          if (others != 0.0) factors[k].add_gradient(x, scale * others, row);
        }
        break;
      }
    }
  }

  std::string label() const {
    std::ostringstream os;
    auto var = [](int i) { return "x" + std::to_string(i + 1); };
    switch (kind) {
      case Kind::Monomial: {
        if (indices.empty()) return "1";
        for (std::size_t k = 0; k < indices.size(); ++k) {
          if (k) os << "*";
          os << var(indices[k]);
          if (power(k) != 1) os << "^" << power(k);
        }
        break;
      }
      case Kind::Sin:
      case Kind::Cos: {
        os << (kind == Kind::Sin ? "sin(" : "cos(");
        for (std::size_t k = 0; k < indices.size(); ++k) {
          const int c = power(k);
          if (k || c < 0) os << (c < 0 ? "-" : "+");
          if (std::abs(c) != 1) os << std::abs(c) << "*";
          os << var(indices[k]);
        }
        os << ")";
        break;
      }
      case Kind::Product:
        for (std::size_t k = 0; k < factors.size(); ++k) {
          if (k) os << "*";
          os << factors[k].label();
        }
        break;
    }
    return os.str();
  }
};

inline void to_json(nlohmann::json& j, const Term& t) {
  switch (t.kind) {
    case Term::Kind::Monomial: j["kind"] = "monomial"; break;
    case Term::Kind::Sin: j["kind"] = "sin"; break;
    case Term::Kind::Cos: j["kind"] = "cos"; break;
    case Term::Kind::Product: j["kind"] = "product"; break;
  }
  if (t.kind == Term::Kind::Product) {
    j["factors"] = t.factors;
  } else {
    j["indices"] = t.indices;
    if (!t.powers.empty()) j["powers"] = t.powers;
  }
}

inline void from_json(const nlohmann::json& j, Term& t) {
  if (!j.is_object()) throw ConfigError("dictionary term must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "kind" && key != "indices" && key != "powers" && key != "factors")
      throw ConfigError("dictionary term: unknown key '" + key + "'");
  if (!j.contains("kind")) throw ConfigError("dictionary term: missing 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  t = Term{};
  if (kind == "monomial") t.kind = Term::Kind::Monomial;
  else if (kind == "sin") t.kind = Term::Kind::Sin;
  else if (kind == "cos") t.kind = Term::Kind::Cos;
  else if (kind == "product") t.kind = Term::Kind::Product;
  else throw ConfigError("dictionary term: unknown kind '" + kind + "'");
  if (t.kind == Term::Kind::Product) {
    if (!j.contains("factors")) throw ConfigError("dictionary term: product needs 'factors'");
    t.factors = j.at("factors").get<std::vector<Term>>();
  } else {
    if (j.contains("indices")) t.indices = j.at("indices").get<std::vector<int>>();
    if (j.contains("powers")) t.powers = j.at("powers").get<std::vector<int>>();
  }
}

// Lifting psi: R^{n_x} -> R^{n_z}. The first n_x entries are the state itself,
// so x = C z with C = [I 0].
class ObservableDictionary {
 public:
  ObservableDictionary() = default;

  ObservableDictionary(Index n_x, std::vector<Term> terms) : n_x_(n_x), terms_(std::move(terms)) {
    if (n_x_ < 1) throw ConfigError("dictionary: state dimension must be positive");
    if (static_cast<Index>(terms_.size()) < n_x_)
      throw ConfigError("dictionary: fewer observables than states");
    for (Index i = 0; i < n_x_; ++i)
      if (!terms_[static_cast<std::size_t>(i)].is_state_copy(static_cast<int>(i)))
        throw ConfigError("dictionary: entry " + std::to_string(i) + " must be the state copy x" +
                          std::to_string(i + 1));
    for (const auto& t : terms_) t.validate(n_x_);
  }

  Index n_x() const { return n_x_; }
  Index n_z() const { return static_cast<Index>(terms_.size()); }
  const std::vector<Term>& terms() const { return terms_; }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) out.push_back(t.label());
    return out;
  }

  Vec eval(const Vec& x) const {
    if (x.size() != n_x_) throw DomainError("lift: state dimension mismatch");
    Vec z(n_z());
    for (Index i = 0; i < n_z(); ++i) z(i) = terms_[static_cast<std::size_t>(i)].eval(x);
    z.head(n_x_) = x;  // exact state copy, independent of pow()
    return z;
  }

  Mat grad(const Vec& x) const {
    if (x.size() != n_x_) throw DomainError("lift_gradient: state dimension mismatch");
    Mat g = Mat::Zero(n_z(), n_x_);
    Eigen::RowVectorXd row(n_x_);
    for (Index i = 0; i < n_z(); ++i) {
      row.setZero();
      terms_[static_cast<std::size_t>(i)].add_gradient(x, 1.0, row);
      g.row(i) = row;
    }
    return g;
  }

  Mat recovery_matrix() const {
    Mat c = Mat::Zero(n_x_, n_z());
    c.leftCols(n_x_).setIdentity();
    return c;
  }

 private:
  Index n_x_ = 0;
  std::vector<Term> terms_;
};

inline void to_json(nlohmann::json& j, const ObservableDictionary& d) {
  j = nlohmann::json{{"n_x", d.n_x()}, {"terms", d.terms()}};
}

inline ObservableDictionary dictionary_from_json(const nlohmann::json& j) {
  return ObservableDictionary(j.at("n_x").get<Index>(), j.at("terms").get<std::vector<Term>>());
}

struct LiftedState {
  Vec z;
};

inline LiftedState lift(const ObservableDictionary& dict, const Vec& x) {
  if (!x.allFinite()) throw DomainError("lift: non-finite state");
  return LiftedState{dict.eval(x)};
}

inline Vec unlift(const ObservableDictionary& dict, const Vec& z) {
  if (z.size() != dict.n_z()) throw DomainError("unlift: lifted dimension mismatch");
  return z.head(dict.n_x());
}

inline Mat lift_gradient(const ObservableDictionary& dict, const Vec& x) { return dict.grad(x); }

// Distance of z from the lifting manifold {psi(x)}: ||z - psi(C z)||.
inline double manifold_defect(const ObservableDictionary& dict, const Vec& z) {
  return (z - dict.eval(unlift(dict, z))).norm();
}

// ---------------------------------------------------------------------------
// Default dictionaries

inline ObservableDictionary identity_dictionary(Index n_x) {
  std::vector<Term> terms;
  for (Index i = 0; i < n_x; ++i) terms.push_back(Term::state(static_cast<int>(i)));
  return ObservableDictionary(n_x, std::move(terms));
}

// State copy plus the constant observable. Exact for linear systems with a
// constant input map, since (L_i - L0) psi(x) = G e_i needs the constant.
inline ObservableDictionary affine_dictionary(Index n_x) {
  std::vector<Term> terms;
  for (Index i = 0; i < n_x; ++i) terms.push_back(Term::state(static_cast<int>(i)));
  terms.push_back(Term::constant());
  return ObservableDictionary(n_x, std::move(terms));
}

// 12 observables of the pendulum angle x1 and rate x2.
inline ObservableDictionary pendulum_dictionary() {
  using T = Term;
  std::vector<Term> terms = {
      T::state(0),
      T::state(1),
      T::sin({0}),
      T::cos({0}),
      T::product({T::state(1), T::sin({0})}),
      T::product({T::state(1), T::cos({0})}),
      T::product({T::monomial({1}, {2}), T::sin({0})}),
      T::product({T::monomial({1}, {2}), T::cos({0})}),
      T::monomial({0, 1}, {1, 1}),
      T::monomial({0}, {2}),
      T::monomial({1}, {2}),
      T::constant(),
  };
  return ObservableDictionary(2, std::move(terms));
}

// State copy, every monomial of total degree 2..degree (graded, lexicographic
// within a degree) and the constant. degree 3 on four states gives 35 terms.
inline ObservableDictionary polynomial_dictionary(Index n_x, int degree) {
  if (n_x < 1 || degree < 1) throw ConfigError("polynomial dictionary needs n_x >= 1 and degree >= 1");
  std::vector<Term> terms;
  for (Index i = 0; i < n_x; ++i) terms.push_back(Term::state(static_cast<int>(i)));
  std::vector<int> idx;
  const int n = static_cast<int>(n_x);
  // non-decreasing index tuples of length d enumerate the degree-d monomials
  std::function<void(int, int)> rec = [&](int start, int left) {
    if (left == 0) {
      std::vector<int> vars, pows;
      for (int v : idx) {
        if (!vars.empty() && vars.back() == v) ++pows.back();
        else {
          vars.push_back(v);
          pows.push_back(1);
        }
      }
      terms.push_back(Term::monomial(vars, pows));
      return;
    }
    for (int v = start; v < n; ++v) {
      idx.push_back(v);
      rec(v, left - 1);
      idx.pop_back();
    }
  };
  for (int d = 2; d <= degree; ++d) rec(0, d);
  terms.push_back(Term::constant());
  return ObservableDictionary(n_x, std::move(terms));
}

// Cubic polynomial observables of the walker state.
inline ObservableDictionary walker_dictionary() { return polynomial_dictionary(4, 3); }

}  // namespace koopt
