#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "field.hpp"
#include "fourier.hpp"

namespace kfluct {

inline double eval_G(double theta, double omega, double x) {
  return x * std::cos(theta) + 2.0 * omega * theta;
}

namespace detail {

// Coefficients of S(., omega, x) without the e^{x cos theta} prefactor.
// S(theta) = e^{x cos theta} int_0^{2pi} e^{-x cos(theta - s) + 2 omega s} ds, expanded as a
// circular convolution. Avoids the cancellation between the two nested integrals.
inline fourier::Coeffs S_convolution_coeffs(double omega, double x, const Grid& grid) {
  const int M = grid.M;
  Eigen::VectorXd g(M);
  for (int i = 0; i < M; ++i) g[i] = std::exp(-x * std::cos(grid.theta(i)));
  fourier::Coeffs c = fourier::forward(g);
  const double growth = std::expm1(4.0 * std::numbers::pi * omega);
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const std::complex<double> denom(2.0 * omega, -static_cast<double>(k));
    // (e^{4 pi omega} - 1)/(2 omega - ik) tends to 2 pi as the denominator vanishes
    const std::complex<double> factor =
        std::abs(denom) < 1e-300 ? std::complex<double>(two_pi, 0.0) : growth / denom;
    c[k] *= factor;
  }
  c[M / 2] = 0.0;
  return c;
}

}  // namespace detail

// S(theta, omega, x) sampled at every grid node.
inline ThetaField eval_S_field(double omega, double x, const Grid& grid) {
  if (omega == 0.0) {
    // only the k = 0 term survives: S = 2 pi g_0 e^{x cos theta}
    ThetaField e(grid.M);
    for (int i = 0; i < grid.M; ++i) e[i] = std::exp(-x * std::cos(grid.theta(i)));
    const double g0 = e.mean();
    ThetaField s(grid.M);
    for (int i = 0; i < grid.M; ++i) s[i] = two_pi * g0 * std::exp(x * std::cos(grid.theta(i)));
    return s;
  }
  ThetaField conv = fourier::inverse(detail::S_convolution_coeffs(omega, x, grid), grid.M);
  for (int i = 0; i < grid.M; ++i) conv[i] *= std::exp(x * std::cos(grid.theta(i)));
  return conv;
}

inline double eval_S(double theta, double omega, double x, const Grid& grid) {
  const fourier::Coeffs c = detail::S_convolution_coeffs(omega, x, grid);
  double sum = c[0].real();
  for (Eigen::Index k = 1; k < c.size(); ++k)
    sum += 2.0 * (c[k] * std::polar(1.0, static_cast<double>(k) * theta)).real();
  return std::exp(x * std::cos(theta)) * sum;
}

inline double psi0(double x, const Grid& grid) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < grid.M; ++i) {
    const double c = std::cos(grid.theta(i));
    const double w = std::exp(x * (c - 1.0));
    num += c * w;
    den += w;
  }
  return num / den;
}

// F(x, omega) = int cos(theta) S / Z.
inline double first_moment_S(double x, double omega, const Grid& grid) {
  const ThetaField s = eval_S_field(omega, x, grid);
  double num = 0.0;
  for (int i = 0; i < grid.M; ++i) num += std::cos(grid.theta(i)) * s[i];
  return num / s.sum();
}

inline double psi_mu(double x, double omega0, const Grid& grid) {
  if (omega0 == 0.0) return psi0(x, grid);
  return 0.5 * (first_moment_S(x, omega0, grid) + first_moment_S(x, -omega0, grid));
}

namespace detail {

template <class G>
double bisect(G&& g, double lo, double hi) {
  double glo = g(lo);
  for (int it = 0; it < 200 && hi - lo > 4e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline double solve_r0(double K, double tol, const Grid& grid) {
  if (!(K > 0.0)) throw std::invalid_argument("K must be > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (K <= 1.0) return 0.0;
  auto g = [&](double r) { return psi0(2.0 * K * r, grid) - r; };
  return detail::bisect(g, tol, 1.0);
}

struct FixedPoints {
  double r = 0.0;             // largest bracketed root, 0 if none
  std::vector<double> roots;  // all bracketed positive roots, ascending
  bool multiple() const { return roots.size() > 1; }
};

inline FixedPoints solve_r_all(double K, double omega0, double tol, const Grid& grid,
                               int scan_points = 64) {
  if (!(K > 0.0)) throw std::invalid_argument("K must be > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  FixedPoints out;
  if (omega0 == 0.0) {
    out.r = solve_r0(K, tol, grid);
    if (out.r > 0.0) out.roots.push_back(out.r);
    return out;
  }
  auto g = [&](double r) { return psi_mu(2.0 * K * r, omega0, grid) - r; };
  std::vector<double> rs{tol};
  for (int i = 1; i <= scan_points; ++i) rs.push_back(static_cast<double>(i) / scan_points);
  double prev = g(rs[0]);
  for (std::size_t i = 1; i < rs.size(); ++i) {
    const double cur = g(rs[i]);
    if (cur == 0.0) {
      out.roots.push_back(rs[i]);
    } else if (prev != 0.0 && (prev > 0.0) != (cur > 0.0)) {
      out.roots.push_back(detail::bisect(g, rs[i - 1], rs[i]));
    }
    prev = cur;
  }
  if (!out.roots.empty()) out.r = out.roots.back();
  return out;
}

inline double solve_r(double K, double omega0, double tol, const Grid& grid) {
  return solve_r_all(K, omega0, tol, grid).r;
}

struct StationaryState {
  ModelParams params;
  Grid grid;
  double r = 0.0;
  DisorderedField q;
  double Z_plus = 0.0, Z_minus = 0.0;
  double kappa_plus = 0.0, kappa_minus = 0.0;
  ThetaField q0;
  double r0 = 0.0;
  std::vector<double> roots;

  double omega(int sign) const { return sign > 0 ? params.omega0 : -params.omega0; }
  double kappa(int sign) const { return sign > 0 ? kappa_plus : kappa_minus; }
};

inline StationaryState build_stationary(const ModelParams& params, const Grid& grid,
                                        double tol = 1e-10) {
  params.validate();
  grid.validate();
  StationaryState st;
  st.params = params;
  st.grid = grid;
  const FixedPoints fp = solve_r_all(params.K, params.omega0, tol, grid);
  st.r = fp.r;
  st.roots = fp.roots;
  const double x = 2.0 * params.K * st.r;
  auto profile = [&](double omega, double& Z, double& kappa) {
    ThetaField s = eval_S_field(omega, x, grid);
    Z = grid.integrate(s);
    kappa = -std::expm1(4.0 * std::numbers::pi * omega) / (2.0 * Z);
    return ThetaField(s / Z);
  };
  st.q.plus = profile(params.omega0, st.Z_plus, st.kappa_plus);
  st.q.minus = profile(-params.omega0, st.Z_minus, st.kappa_minus);
  if (st.q.plus.minCoeff() <= 0.0 || st.q.minus.minCoeff() <= 0.0)
    throw std::runtime_error("stationary profile has nonpositive samples (quadrature breakdown)");

  st.r0 = solve_r0(params.K, tol, grid);
  const double x0 = 2.0 * params.K * st.r0;
  st.q0.resize(grid.M);
  for (int i = 0; i < grid.M; ++i) st.q0[i] = std::exp(x0 * (std::cos(grid.theta(i)) - 1.0));
  st.q0 /= grid.integrate(st.q0);
  return st;
}

inline ThetaField mean_field(const DisorderedField& h, double K, const Grid& grid) {
  double C = 0.0, S = 0.0;
  for (int sgn : {+1, -1}) {
    const ThetaField& f = h.component(sgn);
    for (int i = 0; i < grid.M; ++i) {
      C += std::cos(grid.theta(i)) * f[i];
      S += std::sin(grid.theta(i)) * f[i];
    }
  }
  C *= 0.5 * grid.h();
  S *= 0.5 * grid.h();
  ThetaField out(grid.M);
  for (int i = 0; i < grid.M; ++i)
    out[i] = -K * (std::sin(grid.theta(i)) * C - std::cos(grid.theta(i)) * S);
  return out;
}

struct OrderParameter {
  double r = 0.0;
  double psi = 0.0;
};

inline OrderParameter order_parameter(const DisorderedField& h, const Grid& grid) {
  double C = 0.0, S = 0.0;
  for (int sgn : {+1, -1}) {
    const ThetaField& f = h.component(sgn);
    for (int i = 0; i < grid.M; ++i) {
      C += std::cos(grid.theta(i)) * f[i];
      S += std::sin(grid.theta(i)) * f[i];
    }
  }
  C *= 0.5 * grid.h();
  S *= 0.5 * grid.h();
  OrderParameter op;
  op.r = std::hypot(C, S);
  op.psi = op.r < 1e-12 ? 0.0 : std::atan2(S, C);
  return op;
}

// Nearest-branch continuation: the returned angle differs from prev by less than pi.
inline double unwrap_near(double prev, double angle) {
  return prev + std::remainder(angle - prev, two_pi);
}

inline double sobolev_norm(const DisorderedField& h, const DisorderedField& weight,
                           const Grid& grid) {
  double total = 0.0;
  for (int sgn : {+1, -1}) {
    const ThetaField& k = weight.component(sgn);
    if (k.minCoeff() <= 0.0) throw std::invalid_argument("sobolev_norm: weight must be positive");
    const ThetaField& f = h.component(sgn);
    const double m = grid.integrate(f);
    const double km = grid.integrate(k);
    ThetaField H = fourier::primitive(f - (m / km) * k);
    const ThetaField inv_k = k.cwiseInverse();
    H.array() -= grid.integrate(H.cwiseProduct(inv_k)) / grid.integrate(inv_k);
    total += 0.5 * (m * m + grid.integrate(H.cwiseAbs2().cwiseProduct(inv_k)));
  }
  return std::sqrt(total);
}

// max over nodes and components of |q'/2 - q(<J*q> + omega) - kappa(omega)|
inline double stationarity_residual(const StationaryState& st) {
  const ThetaField jq = mean_field(st.q, st.params.K, st.grid);
  double worst = 0.0;
  for (int sgn : {+1, -1}) {
    const ThetaField& q = st.q.component(sgn);
    const ThetaField dq = fourier::derivative(q);
    const ThetaField res = 0.5 * dq - q.cwiseProduct((jq.array() + st.omega(sgn)).matrix()) -
                           ThetaField::Constant(st.grid.M, st.kappa(sgn));
    worst = std::max(worst, res.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace kfluct
