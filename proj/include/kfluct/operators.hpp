#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "basis.hpp"
#include "stationary.hpp"

namespace kfluct {

enum class OperatorLabel { L, A, B, Atilde1, Atilde2, Lq0 };

inline std::string to_string(OperatorLabel l) {
  switch (l) {
    case OperatorLabel::L: return "L";
    case OperatorLabel::A: return "A";
    case OperatorLabel::B: return "B";
    case OperatorLabel::Atilde1: return "Atilde1";
    case OperatorLabel::Atilde2: return "Atilde2";
    case OperatorLabel::Lq0: return "Lq0";
  }
  return "?";
}

struct OperatorMatrix {
  Eigen::MatrixXd entries;
  BasisSpec basis;
  OperatorLabel label = OperatorLabel::L;
};

// Every operator here has the divergence form  h -> (diffusion/2) h'' - d/dtheta flux(h).
namespace flux {

inline ThetaField times(const ThetaField& a, const ThetaField& b) { return a.cwiseProduct(b); }

// h (<J*q> + omega) + q <J*h>
inline DisorderedField L(const DisorderedField& h, const StationaryState& st) {
  const ThetaField jq = mean_field(st.q, st.params.K, st.grid);
  const ThetaField jh = mean_field(h, st.params.K, st.grid);
  DisorderedField out;
  for (int s : {+1, -1}) {
    out.component(s) = times(h.component(s), (jq.array() + st.omega(s)).matrix()) +
                       times(st.q.component(s), jh);
  }
  return out;
}

// h <J*q0> + q0 <J*h>
inline DisorderedField A(const DisorderedField& h, const StationaryState& st) {
  const DisorderedField q0{st.q0, st.q0};
  const ThetaField jq0 = mean_field(q0, st.params.K, st.grid);
  const ThetaField jh = mean_field(h, st.params.K, st.grid);
  DisorderedField out;
  for (int s : {+1, -1}) out.component(s) = times(h.component(s), jq0) + times(st.q0, jh);
  return out;
}

// h (<J*(q - q0)> + omega) + (q - q0) <J*h>
inline DisorderedField B(const DisorderedField& h, const StationaryState& st) {
  const DisorderedField dq = st.q - DisorderedField{st.q0, st.q0};
  const ThetaField jd = mean_field(dq, st.params.K, st.grid);
  const ThetaField jh = mean_field(h, st.params.K, st.grid);
  DisorderedField out;
  for (int s : {+1, -1}) {
    out.component(s) = times(h.component(s), (jd.array() + st.omega(s)).matrix()) +
                       times(dq.component(s), jh);
  }
  return out;
}

// no-disorder Kuramoto operator on one function: u J*q0 + q0 J*u
inline ThetaField Lq0(const ThetaField& u, const StationaryState& st) {
  const DisorderedField uu{u, u};
  const DisorderedField q0{st.q0, st.q0};
  return times(u, mean_field(q0, st.params.K, st.grid)) +
         times(st.q0, mean_field(uu, st.params.K, st.grid));
}

// v J*q0, i.e. the transport part of the Fokker-Planck operator with potential -2 K r0 cos
inline ThetaField Atilde2(const ThetaField& v, const StationaryState& st) {
  const DisorderedField q0{st.q0, st.q0};
  return times(v, mean_field(q0, st.params.K, st.grid));
}

}  // namespace flux

namespace detail {

inline ThetaField divergence_form(const ThetaField& h, const ThetaField& fl, double diffusion) {
  return 0.5 * diffusion * fourier::derivative(h, 2) - fourier::derivative(fl);
}

}  // namespace detail

// Full-resolution actions on grid fields (spectral derivatives).
inline DisorderedField apply_L(const DisorderedField& h, const StationaryState& st) {
  const DisorderedField f = flux::L(h, st);
  return {detail::divergence_form(h.plus, f.plus, 1.0), detail::divergence_form(h.minus, f.minus, 1.0)};
}
inline DisorderedField apply_A(const DisorderedField& h, const StationaryState& st) {
  const DisorderedField f = flux::A(h, st);
  return {detail::divergence_form(h.plus, f.plus, 1.0), detail::divergence_form(h.minus, f.minus, 1.0)};
}
inline DisorderedField apply_B(const DisorderedField& h, const StationaryState& st) {
  const DisorderedField f = flux::B(h, st);
  return {-fourier::derivative(f.plus), -fourier::derivative(f.minus)};
}
inline ThetaField apply_Lq0(const ThetaField& u, const StationaryState& st) {
  return detail::divergence_form(u, flux::Lq0(u, st), 1.0);
}
inline ThetaField apply_Atilde2(const ThetaField& v, const StationaryState& st) {
  return detail::divergence_form(v, flux::Atilde2(v, st), 1.0);
}

namespace detail {

// Coordinates of -d/dtheta f for a single component: cos k -> -k b_k, sin k -> k a_k.
inline void add_minus_derivative(const ThetaField& f, int n, int offset, Eigen::Ref<Eigen::VectorXd> col) {
  const fourier::TrigCoeffs t = fourier::to_trig(f, n);
  for (int k = 1; k <= n; ++k) {
    col[offset + 2 * (k - 1)] += -k * t.b[k - 1];
    col[offset + 2 * (k - 1) + 1] += k * t.a[k - 1];
  }
}

inline void add_diffusion(const BasisSpec& b, double diffusion, Eigen::MatrixXd& m) {
  for (int i = 0; i < b.dim(); ++i) {
    const int k = b.order(i);
    m(i, i) += -0.5 * diffusion * k * k;
  }
}

}  // namespace detail

// Galerkin matrix of h -> (diffusion/2) h'' - (flux h)'. The diffusion part is exact on the
// basis; the flux is formed on the grid and projected. Images of a derivative carry no
// mass, so the c0 row is identically zero.
inline Eigen::MatrixXd assemble_disordered(
    const BasisSpec& b, const Grid& grid, double diffusion,
    const std::function<DisorderedField(const DisorderedField&)>& fl) {
  if (!b.disordered()) throw std::invalid_argument("assemble_disordered: single-component layout");
  b.check_grid(grid);
  const int d = b.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    const DisorderedField e = synthesize(Eigen::VectorXd::Unit(d, j), b, grid);
    const DisorderedField f = fl(e);
    detail::add_minus_derivative(f.plus, b.n, b.mode_offset(+1), m.col(j));
    detail::add_minus_derivative(f.minus, b.n, b.mode_offset(-1), m.col(j));
  }
  detail::add_diffusion(b, diffusion, m);
  return m;
}

inline Eigen::MatrixXd assemble_single(const BasisSpec& b, const Grid& grid, double diffusion,
                                       const std::function<ThetaField(const ThetaField&)>& fl) {
  if (b.disordered()) throw std::invalid_argument("assemble_single: disordered layout");
  b.check_grid(grid);
  const int d = b.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    const ThetaField e = synthesize_single(Eigen::VectorXd::Unit(d, j), b, grid);
    detail::add_minus_derivative(fl(e), b.n, b.mode_offset(), m.col(j));
  }
  detail::add_diffusion(b, diffusion, m);
  return m;
}

inline OperatorMatrix assemble_L(const StationaryState& st, const BasisSpec& b) {
  return {assemble_disordered(b, st.grid, 1.0, [&](const DisorderedField& h) { return flux::L(h, st); }),
          b, OperatorLabel::L};
}
inline OperatorMatrix assemble_A(const StationaryState& st, const BasisSpec& b) {
  return {assemble_disordered(b, st.grid, 1.0, [&](const DisorderedField& h) { return flux::A(h, st); }),
          b, OperatorLabel::A};
}
inline OperatorMatrix assemble_B(const StationaryState& st, const BasisSpec& b) {
  return {assemble_disordered(b, st.grid, 0.0, [&](const DisorderedField& h) { return flux::B(h, st); }),
          b, OperatorLabel::B};
}
inline OperatorMatrix assemble_Lq0(const StationaryState& st, int n) {
  const BasisSpec b{n, Layout::single_zero_mean};
  return {assemble_single(b, st.grid, 1.0, [&](const ThetaField& u) { return flux::Lq0(u, st); }), b,
          OperatorLabel::Lq0};
}
inline OperatorMatrix assemble_Atilde2(const StationaryState& st, int n) {
  const BasisSpec b{n, Layout::single_with_constant};
  return {assemble_single(b, st.grid, 1.0, [&](const ThetaField& v) { return flux::Atilde2(v, st); }), b,
          OperatorLabel::Atilde2};
}

// Change of coordinates h -> (u, v) = ((h+ + h-)/2, (h+ - h-)/2) on the domain layout.
// Output ordering: u modes (2n), then v constant, then v modes (2n).
inline Eigen::MatrixXd conjugation_matrix(const BasisSpec& b) {
  if (b.layout != Layout::domain) throw std::invalid_argument("conjugation requires the domain layout");
  const int n = b.n, d = b.dim();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < 2 * n; ++i) {
    T(i, i) = 0.5;
    T(i, 2 * n + i) = 0.5;
    T(2 * n + 1 + i, i) = 0.5;
    T(2 * n + 1 + i, 2 * n + i) = -0.5;
  }
  T(2 * n, b.mass_index()) = 1.0;  // c0 has v = 1/2pi
  return T;
}

struct ConjugatedBlocks {
  OperatorMatrix A1;  // u sector, zero-mean modes
  OperatorMatrix A2;  // v sector, constant plus modes
  double offdiag_max = 0.0;
};

inline ConjugatedBlocks conjugate_M(const OperatorMatrix& opA, double tol = 1e-12) {
  const BasisSpec& b = opA.basis;
  const Eigen::MatrixXd T = conjugation_matrix(b);
  const Eigen::MatrixXd At = T * opA.entries * T.inverse();
  const int nu = 2 * b.n, nv = 2 * b.n + 1;
  ConjugatedBlocks out;
  out.offdiag_max = std::max(At.topRightCorner(nu, nv).cwiseAbs().maxCoeff(),
                             At.bottomLeftCorner(nv, nu).cwiseAbs().maxCoeff());
  if (out.offdiag_max > tol)
    throw std::runtime_error("conjugate_M: off-diagonal block " + std::to_string(out.offdiag_max) +
                             " exceeds tolerance");
  out.A1 = {At.topLeftCorner(nu, nu), {b.n, Layout::single_zero_mean}, OperatorLabel::Atilde1};
  out.A2 = {At.bottomRightCorner(nv, nv), {b.n, Layout::single_with_constant}, OperatorLabel::Atilde2};
  return out;
}

// ---------------------------------------------------------------------------
// Weighted H^{-1} inner products and Gram matrices

// <f, g>_{-1,k} = (int f)(int g) + int F G / k with primitives normalized by int F/k = 0.
// embed() maps f to a vector whose Euclidean dot products reproduce this inner product.
struct WeightedMetric {
  Grid grid;
  ThetaField weight;
  ThetaField inv_weight;
  ThetaField sqrt_quad;  // sqrt(h / k) at the nodes
  double mass_of_weight = 1.0;
  double inv_mass = 1.0;

  WeightedMetric(const Grid& g, ThetaField k) : grid(g), weight(std::move(k)) {
    if (weight.minCoeff() <= 0.0) throw std::invalid_argument("metric weight must be positive");
    inv_weight = weight.cwiseInverse();
    sqrt_quad = (grid.h() * inv_weight).cwiseSqrt();
    mass_of_weight = grid.integrate(weight);
    inv_mass = grid.integrate(inv_weight);
  }

  // (mass, normalized primitive of the remainder after removing mass * weight)
  std::pair<double, ThetaField> split(const ThetaField& f) const {
    const double m = grid.integrate(f);
    ThetaField H = fourier::primitive(f - (m / mass_of_weight) * weight);
    H.array() -= grid.integrate(H.cwiseProduct(inv_weight)) / inv_mass;
    return {m, H};
  }

  static constexpr int embed_size(int M) { return M + 1; }

  Eigen::VectorXd embed(const ThetaField& f) const {
    const auto [m, H] = split(f);
    Eigen::VectorXd out(grid.M + 1);
    out[0] = m;
    out.tail(grid.M) = H.cwiseProduct(sqrt_quad);
    return out;
  }

  double inner(const ThetaField& f, const ThetaField& g) const { return embed(f).dot(embed(g)); }
  double norm(const ThetaField& f) const { return embed(f).norm(); }
};

// Disorder-averaged metric: <h, g> = < <h(., w), g(., w)>_{-1,k(., w)} >_mu
struct DisorderedMetric {
  WeightedMetric plus, minus;
  DisorderedMetric(const Grid& g, const DisorderedField& k) : plus(g, k.plus), minus(g, k.minus) {}

  Eigen::VectorXd embed(const DisorderedField& h) const {
    Eigen::VectorXd out(2 * (plus.grid.M + 1));
    out << plus.embed(h.plus), minus.embed(h.minus);
    return out * std::sqrt(0.5);
  }
  double inner(const DisorderedField& a, const DisorderedField& b) const { return embed(a).dot(embed(b)); }
  double norm(const DisorderedField& a) const { return embed(a).norm(); }
};

// Metric of the A-splitting: ||u||^2 in H^{-1}_{q0} plus ||v||^2 in H^{-1}_{w}.
struct CompositeMetric {
  WeightedMetric u_metric, v_metric;
  CompositeMetric(const Grid& g, const ThetaField& q0, const ThetaField& w) : u_metric(g, q0), v_metric(g, w) {}

  Eigen::VectorXd embed(const DisorderedField& h) const {
    Eigen::VectorXd out(2 * (u_metric.grid.M + 1));
    out << u_metric.embed(0.5 * (h.plus + h.minus)), v_metric.embed(0.5 * (h.plus - h.minus));
    return out;
  }
  double inner(const DisorderedField& a, const DisorderedField& b) const { return embed(a).dot(embed(b)); }
  double norm(const DisorderedField& a) const { return embed(a).norm(); }
};

// w = e^{-Phi} / int e^{-Phi} with Phi = -2 K r0 cos theta (this coincides with q0)
inline ThetaField weight_w(const StationaryState& st) {
  ThetaField w(st.grid.M);
  for (int i = 0; i < st.grid.M; ++i)
    w[i] = std::exp(2.0 * st.params.K * st.r0 * (std::cos(st.grid.theta(i)) - 1.0));
  return w / st.grid.integrate(w);
}

inline CompositeMetric composite_metric(const StationaryState& st) {
  return CompositeMetric(st.grid, st.q0, weight_w(st));
}

// S_ij = <e_i, op(e_j)> with full-resolution images; a null op gives the Gram matrix.
template <class Metric>
Eigen::MatrixXd form_matrix(const BasisSpec& b, const Grid& grid, const Metric& metric,
                            const std::function<DisorderedField(const DisorderedField&)>& op) {
  const int d = b.dim();
  Eigen::MatrixXd E, I;
  for (int j = 0; j < d; ++j) {
    const DisorderedField e = synthesize(Eigen::VectorXd::Unit(d, j), b, grid);
    const Eigen::VectorXd ee = metric.embed(e);
    if (j == 0) {
      E.resize(ee.size(), d);
      I.resize(ee.size(), d);
    }
    E.col(j) = ee;
    I.col(j) = op ? metric.embed(op(e)) : ee;
  }
  return E.transpose() * I;
}

inline Eigen::MatrixXd form_matrix_single(const BasisSpec& b, const Grid& grid, const WeightedMetric& metric,
                                          const std::function<ThetaField(const ThetaField&)>& op) {
  const int d = b.dim();
  Eigen::MatrixXd E(grid.M + 1, d), I(grid.M + 1, d);
  for (int j = 0; j < d; ++j) {
    const ThetaField e = synthesize_single(Eigen::VectorXd::Unit(d, j), b, grid);
    E.col(j) = metric.embed(e);
    I.col(j) = op ? metric.embed(op(e)) : E.col(j);
  }
  return E.transpose() * I;
}

inline Eigen::MatrixXd gram_matrix(const BasisSpec& b, const DisorderedField& weights, const Grid& grid) {
  Eigen::MatrixXd G;
  if (b.disordered()) {
    G = form_matrix(b, grid, DisorderedMetric(grid, weights), nullptr);
  } else {
    G = form_matrix_single(b, grid, WeightedMetric(grid, weights.plus), nullptr);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) throw std::runtime_error("gram_matrix is not positive definite");
  return G;
}

inline Eigen::MatrixXd composite_gram(const StationaryState& st, const BasisSpec& b) {
  return form_matrix(b, st.grid, composite_metric(st), nullptr);
}

// ||S - S^T|| / ||S|| in the Frobenius norm
inline double relative_asymmetry(const Eigen::MatrixXd& S) {
  return (S - S.transpose()).norm() / S.norm();
}

}  // namespace kfluct
