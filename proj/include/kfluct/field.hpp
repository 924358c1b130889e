#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kfluct {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct ModelParams {
  double K = 1.0;
  double omega0 = 0.0;

  void validate() const {
    if (!(K > 0.0) || !std::isfinite(K)) throw std::invalid_argument("K must be > 0");
    if (!(omega0 >= 0.0) || !std::isfinite(omega0))
      throw std::invalid_argument("omega0 must be >= 0");
  }
};

// Uniform nodes theta_i = 2 pi i / M and a Fourier truncation order n.
struct Grid {
  int M = 256;
  int n = 32;

  Grid() = default;
  Grid(int M_, int n_) : M(M_), n(n_) { validate(); }

  void validate() const {
    if (M < 4 || M % 2 != 0) throw std::invalid_argument("grid size M must be even and >= 4");
    if (n < 1 || M < 4 * n + 2)
      throw std::invalid_argument("grid requires M >= 4n+2 (M=" + std::to_string(M) +
                                  ", n=" + std::to_string(n) + ")");
  }

  double h() const { return two_pi / M; }
  double theta(int i) const { return two_pi * i / M; }

  Eigen::VectorXd nodes() const {
    Eigen::VectorXd t(M);
    for (int i = 0; i < M; ++i) t[i] = theta(i);
    return t;
  }

  // Trapezoid rule on the periodic grid.
  double integrate(const Eigen::VectorXd& f) const { return h() * f.sum(); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// Samples of a 2 pi-periodic function on the grid nodes.
using ThetaField = Eigen::VectorXd;

// A function of (theta, omega) for the two disorder values +omega0 and -omega0.
struct DisorderedField {
  ThetaField plus;
  ThetaField minus;

  DisorderedField() = default;
  DisorderedField(ThetaField p, ThetaField m) : plus(std::move(p)), minus(std::move(m)) {
    if (plus.size() != minus.size())
      throw std::invalid_argument("DisorderedField components must share one grid");
  }
  static DisorderedField zero(int M) {
    return {ThetaField::Zero(M), ThetaField::Zero(M)};
  }
  static DisorderedField constant(int M, double v) {
    return {ThetaField::Constant(M, v), ThetaField::Constant(M, v)};
  }

  Eigen::Index size() const { return plus.size(); }
  const ThetaField& component(int sign) const { return sign > 0 ? plus : minus; }
  ThetaField& component(int sign) { return sign > 0 ? plus : minus; }

  DisorderedField& operator+=(const DisorderedField& o) {
    plus += o.plus;
    minus += o.minus;
    return *this;
  }
  DisorderedField& operator-=(const DisorderedField& o) {
    plus -= o.plus;
    minus -= o.minus;
    return *this;
  }
  DisorderedField& operator*=(double c) {
    plus *= c;
    minus *= c;
    return *this;
  }
  friend DisorderedField operator+(DisorderedField a, const DisorderedField& b) { return a += b; }
  friend DisorderedField operator-(DisorderedField a, const DisorderedField& b) { return a -= b; }
  friend DisorderedField operator*(double c, DisorderedField a) { return a *= c; }

  double max_abs() const {
    return std::max(plus.cwiseAbs().maxCoeff(), minus.cwiseAbs().maxCoeff());
  }
};

// (R f)(theta_i) = f(-theta_i) on the grid, i.e. index i -> (M - i) mod M.
inline ThetaField reflect(const ThetaField& f) {
  const Eigen::Index M = f.size();
  ThetaField out(M);
  for (Eigen::Index i = 0; i < M; ++i) out[i] = f[(M - i) % M];
  return out;
}

// Binary disorder average <f>_mu = (f(+omega0) + f(-omega0)) / 2.
template <class F>
double mu_average(F&& f) {
  return 0.5 * (f(+1) + f(-1));
}

}  // namespace kfluct
