#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "field.hpp"
#include "fourier.hpp"

namespace kfluct {

// Coordinate layouts for Galerkin vectors.
//   domain:               (+ modes)(- modes)(c0)   c0 = (1/2pi, -1/2pi), total mass zero
//   zero_mass:            (+ modes)(- modes)       every component has zero mass
//   single_zero_mean:     (modes)                  one function of theta, zero mean
//   single_with_constant: (1/2pi)(modes)           one function of theta
// "modes" is cos(k theta), sin(k theta) interleaved for k = 1..n.
enum class Layout { domain, zero_mass, single_zero_mean, single_with_constant };

struct BasisSpec {
  int n = 32;
  Layout layout = Layout::domain;

  bool disordered() const { return layout == Layout::domain || layout == Layout::zero_mass; }
  bool has_mass_vector() const { return layout == Layout::domain; }
  bool has_constant() const { return layout == Layout::single_with_constant; }

  int dim() const {
    switch (layout) {
      case Layout::domain: return 4 * n + 1;
      case Layout::zero_mass: return 4 * n;
      case Layout::single_zero_mean: return 2 * n;
      case Layout::single_with_constant: return 2 * n + 1;
    }
    return 0;
  }

  // offset of the first mode of a component (sign ignored for single layouts)
  int mode_offset(int sign = +1) const {
    if (disordered()) return sign > 0 ? 0 : 2 * n;
    return has_constant() ? 1 : 0;
  }
  int cos_index(int k, int sign = +1) const { return mode_offset(sign) + 2 * (k - 1); }
  int sin_index(int k, int sign = +1) const { return cos_index(k, sign) + 1; }
  int mass_index() const {
    if (!has_mass_vector()) throw std::logic_error("layout has no mass vector");
    return 4 * n;
  }
  int constant_index() const {
    if (!has_constant()) throw std::logic_error("layout has no constant vector");
    return 0;
  }

  // Fourier order of coordinate i (0 for c0 / constant)
  int order(int i) const {
    if (has_mass_vector() && i == 4 * n) return 0;
    if (has_constant() && i == 0) return 0;
    const int local = disordered() ? (i % (2 * n)) : (i - mode_offset());
    return local / 2 + 1;
  }

  void check_grid(const Grid& grid) const {
    if (grid.M < 4 * n + 2)
      throw std::invalid_argument("basis order n=" + std::to_string(n) +
                                  " too large for grid M=" + std::to_string(grid.M));
  }

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

namespace detail {

inline void put_modes(const Eigen::VectorXd& f, int n, Eigen::VectorXd& out, int offset) {
  const fourier::TrigCoeffs t = fourier::to_trig(f, n);
  for (int k = 1; k <= n; ++k) {
    out[offset + 2 * (k - 1)] = t.a[k - 1];
    out[offset + 2 * (k - 1) + 1] = t.b[k - 1];
  }
}

inline Eigen::VectorXd get_modes(const Eigen::VectorXd& c, int n, int offset, double a0, Eigen::Index M) {
  fourier::TrigCoeffs t;
  t.a0 = a0;
  t.a.resize(n);
  t.b.resize(n);
  for (int k = 1; k <= n; ++k) {
    t.a[k - 1] = c[offset + 2 * (k - 1)];
    t.b[k - 1] = c[offset + 2 * (k - 1) + 1];
  }
  return fourier::from_trig(t, M);
}

}  // namespace detail

// Galerkin coordinates of a disordered field. The c0 coordinate is (m+ - m-)/2,
// which equals both masses when h lies in the domain.
inline Eigen::VectorXd coefficients(const DisorderedField& h, const BasisSpec& b, const Grid& grid) {
  if (!b.disordered()) throw std::invalid_argument("coefficients: layout is single-component");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(b.dim());
  detail::put_modes(h.plus, b.n, c, b.mode_offset(+1));
  detail::put_modes(h.minus, b.n, c, b.mode_offset(-1));
  if (b.has_mass_vector()) c[b.mass_index()] = 0.5 * (grid.integrate(h.plus) - grid.integrate(h.minus));
  return c;
}

inline DisorderedField synthesize(const Eigen::VectorXd& c, const BasisSpec& b, const Grid& grid) {
  if (!b.disordered()) throw std::invalid_argument("synthesize: layout is single-component");
  if (c.size() != b.dim()) throw std::invalid_argument("synthesize: coefficient size mismatch");
  const double m = b.has_mass_vector() ? c[b.mass_index()] / two_pi : 0.0;
  return {detail::get_modes(c, b.n, b.mode_offset(+1), m, grid.M),
          detail::get_modes(c, b.n, b.mode_offset(-1), -m, grid.M)};
}

inline Eigen::VectorXd coefficients(const ThetaField& f, const BasisSpec& b, const Grid& grid) {
  if (b.disordered()) throw std::invalid_argument("coefficients: layout is disordered");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(b.dim());
  detail::put_modes(f, b.n, c, b.mode_offset());
  if (b.has_constant()) c[0] = grid.integrate(f);
  return c;
}

inline ThetaField synthesize_single(const Eigen::VectorXd& c, const BasisSpec& b, const Grid& grid) {
  if (b.disordered()) throw std::invalid_argument("synthesize_single: layout is disordered");
  if (c.size() != b.dim()) throw std::invalid_argument("synthesize_single: coefficient size mismatch");
  const double a0 = b.has_constant() ? c[0] / two_pi : 0.0;
  return detail::get_modes(c, b.n, b.mode_offset(), a0, grid.M);
}

// Coordinates of h -> -h(-theta, -omega). Leaves c0 fixed.
inline Eigen::MatrixXd reflection_matrix(const BasisSpec& b) {
  if (!b.disordered()) throw std::invalid_argument("reflection_matrix: layout is single-component");
  const int d = b.dim();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(d, d);
  for (int sgn : {+1, -1}) {
    for (int k = 1; k <= b.n; ++k) {
      R(b.cos_index(k, sgn), b.cos_index(k, -sgn)) = -1.0;
      R(b.sin_index(k, sgn), b.sin_index(k, -sgn)) = 1.0;
    }
  }
  if (b.has_mass_vector()) R(b.mass_index(), b.mass_index()) = 1.0;
  return R;
}

inline Eigen::VectorXd odd_part(const Eigen::VectorXd& c, const BasisSpec& b) {
  return 0.5 * (c + reflection_matrix(b) * c);
}

}  // namespace kfluct
