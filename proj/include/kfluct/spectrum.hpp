#pragma once

#include <algorithm>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "operators.hpp"

namespace kfluct {

using cplx = std::complex<double>;

struct SpectralDecomposition {
  Eigen::VectorXcd eigenvalues;    // sorted by real part, descending
  Eigen::MatrixXcd right_vectors;  // columns match eigenvalues
  std::vector<int> zero_cluster;   // indices with |lambda| < threshold
  double threshold = 1e-4;
  double gap = 0.0;

  // filled for L on the domain layout
  Eigen::VectorXd kernel_vec;  // coordinates of d/dtheta q
  Eigen::VectorXd jordan_vec;  // coordinates of p, L p = d/dtheta q
  Eigen::RowVectorXd ell_dq, ell_p;
  Eigen::MatrixXd P0;
  double kernel_residual = 0.0;
  double jordan_residual = 0.0;
};

namespace detail {

// Row indices that are identically zero. Such a row carries an exact zero eigenvalue whose
// left eigenvector is the unit vector; the rest of the spectrum is that of the matrix with
// the row and column removed (the permutation step of standard balancing).
inline std::vector<int> zero_rows(const Eigen::MatrixXd& A) {
  std::vector<int> rows;
  for (int i = 0; i < A.rows(); ++i)
    if (A.row(i).cwiseAbs().maxCoeff() == 0.0) rows.push_back(i);
  return rows;
}

}  // namespace detail

inline SpectralDecomposition eigendecompose(const OperatorMatrix& op, double threshold = 1e-4) {
  const Eigen::MatrixXd& A = op.entries;
  const int d = static_cast<int>(A.rows());
  if (A.cols() != d) throw std::invalid_argument("eigendecompose: matrix must be square");
  if (!A.allFinite()) throw std::invalid_argument("eigendecompose: non-finite entries");

  const std::vector<int> zr = detail::zero_rows(A);
  std::vector<int> keep;
  for (int i = 0; i < d; ++i)
    if (!std::binary_search(zr.begin(), zr.end(), i)) keep.push_back(i);
  const int m = static_cast<int>(keep.size());

  Eigen::MatrixXd Ar(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) Ar(i, j) = A(keep[i], keep[j]);

  Eigen::VectorXcd vals(d);
  Eigen::MatrixXcd vecs = Eigen::MatrixXcd::Zero(d, d);
  if (m > 0) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(Ar, true);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecompose: eigensolver did not converge");
    const Eigen::VectorXcd ev = es.eigenvalues();
    const Eigen::MatrixXcd evec = es.eigenvectors();
    for (int i = 0; i < m; ++i) {
      vals[i] = ev[i];
      for (int r = 0; r < m; ++r) vecs(keep[r], i) = evec(r, i);
    }
  }
  // deflated zeros: right vectors are not recovered here (left vectors are unit rows)
  for (int z = 0; z < static_cast<int>(zr.size()); ++z) {
    vals[m + z] = 0.0;
    vecs(zr[z], m + z) = 1.0;
  }

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (vals[a].real() != vals[b].real()) return vals[a].real() > vals[b].real();
    return vals[a].imag() > vals[b].imag();
  });

  SpectralDecomposition out;
  out.threshold = threshold;
  out.eigenvalues.resize(d);
  out.right_vectors.resize(d, d);
  for (int i = 0; i < d; ++i) {
    out.eigenvalues[i] = vals[order[i]];
    out.right_vectors.col(i) = vecs.col(order[i]);
  }
  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    if (std::abs(out.eigenvalues[i]) < threshold) {
      out.zero_cluster.push_back(i);
    } else {
      gap = std::min(gap, std::abs(out.eigenvalues[i].real()));
    }
  }
  out.gap = std::isfinite(gap) ? gap : 0.0;
  return out;
}

inline double spectral_gap(const SpectralDecomposition& dec) { return dec.gap; }

// ---------------------------------------------------------------------------
// Kernel and Jordan vector

inline DisorderedField theta_derivative(const DisorderedField& h) {
  return {fourier::derivative(h.plus), fourier::derivative(h.minus)};
}

inline Eigen::VectorXd kernel_coefficients(const StationaryState& st, const BasisSpec& b) {
  return coefficients(theta_derivative(st.q), b, st.grid);
}

struct JordanSolution {
  Eigen::VectorXd p;
  double residual = 0.0;  // ||L p - kernel|| / ||kernel||
};

// Minimum-norm least-squares solution of L p = kernel, made odd under (theta, omega) -> (-theta, -omega).
inline JordanSolution jordan_least_squares(const OperatorMatrix& L, const Eigen::VectorXd& kernel_vec,
                                           double rcond = 1e-10) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(L.entries, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cut = rcond * s[0];
  Eigen::VectorXd utb = svd.matrixU().transpose() * kernel_vec;
  for (Eigen::Index i = 0; i < s.size(); ++i) utb[i] = s[i] > cut ? utb[i] / s[i] : 0.0;
  JordanSolution js;
  js.p = svd.matrixV() * utb;
  if (L.basis.disordered()) js.p = odd_part(js.p, L.basis);
  js.residual = (L.entries * js.p - kernel_vec).norm() / kernel_vec.norm();
  return js;
}

inline Eigen::VectorXd jordan_solve(const OperatorMatrix& L, const Eigen::VectorXd& kernel_vec,
                                    double max_residual = 1e-5) {
  const double kres = (L.entries * kernel_vec).norm() / kernel_vec.norm();
  if (kres > 1e-6) throw std::runtime_error("jordan_solve: kernel vector residual " + std::to_string(kres));
  JordanSolution js = jordan_least_squares(L, kernel_vec);
  if (js.residual > max_residual)
    throw std::runtime_error("jordan_solve: residual " + std::to_string(js.residual) +
                             " (no generalized eigenvector in this domain)");
  return js.p;
}

// ---------------------------------------------------------------------------
// Spectral projector onto the zero cluster via a reordered Schur form

namespace detail {

// Givens pair (c real, s complex) with [c s; -conj(s) c] [f; g] = [r; 0]
inline void givens(cplx f, cplx g, double& c, cplx& s) {
  const double af = std::abs(f), ag = std::abs(g);
  if (ag == 0.0) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (af == 0.0) {
    c = 0.0;
    s = std::conj(g) / ag;
    return;
  }
  const double nrm = std::hypot(af, ag);
  c = af / nrm;
  s = (f / af) * std::conj(g) / nrm;
}

// Swap the adjacent diagonal entries k, k+1 of the upper triangular T, updating U.
inline void swap_schur(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U, int k) {
  const int n = static_cast<int>(T.rows());
  const cplx t11 = T(k, k), t22 = T(k + 1, k + 1);
  double c;
  cplx s;
  givens(T(k, k + 1), t22 - t11, c, s);
  // rows k, k+1 (columns k+2..): x' = c x + s y, y' = c y - conj(s) x
  for (int j = k + 2; j < n; ++j) {
    const cplx x = T(k, j), y = T(k + 1, j);
    T(k, j) = c * x + s * y;
    T(k + 1, j) = c * y - std::conj(s) * x;
  }
  // columns k, k+1 (rows 0..k-1) with the conjugate rotation
  const cplx sc = std::conj(s);
  for (int i = 0; i < k; ++i) {
    const cplx x = T(i, k), y = T(i, k + 1);
    T(i, k) = c * x + sc * y;
    T(i, k + 1) = c * y - std::conj(sc) * x;
  }
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
  for (int i = 0; i < n; ++i) {
    const cplx x = U(i, k), y = U(i, k + 1);
    U(i, k) = c * x + sc * y;
    U(i, k + 1) = c * y - std::conj(sc) * x;
  }
}

}  // namespace detail

// Spectral projector onto the invariant subspace of eigenvalues with |lambda| < threshold.
inline Eigen::MatrixXd cluster_projector(const Eigen::MatrixXd& A, double threshold, int& cluster_size) {
  const int n = static_cast<int>(A.rows());
  Eigen::ComplexSchur<Eigen::MatrixXcd> cs(A.cast<cplx>(), true);
  if (cs.info() != Eigen::Success) throw std::runtime_error("Schur decomposition did not converge");
  Eigen::MatrixXcd T = cs.matrixT();
  Eigen::MatrixXcd U = cs.matrixU();
  // bubble cluster eigenvalues to the top-left
  int top = 0;
  for (int j = 0; j < n; ++j) {
    if (std::abs(T(j, j)) < threshold) {
      for (int k = j - 1; k >= top; --k) detail::swap_schur(T, U, k);
      ++top;
    }
  }
  cluster_size = top;
  const int m = n - top;
  // T11 X - X T22 = -T12, column by column
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(top, m);
  const Eigen::MatrixXcd T11 = T.topLeftCorner(top, top);
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXcd rhs = -T.block(0, top + j, top, 1);
    for (int l = 0; l < j; ++l) rhs += X.col(l) * T(top + l, top + j);
    Eigen::MatrixXcd sys = T11;
    sys.diagonal().array() -= T(top + j, top + j);
    X.col(j) = sys.triangularView<Eigen::Upper>().solve(rhs);
  }
  Eigen::MatrixXcd PT = Eigen::MatrixXcd::Zero(n, n);
  PT.topLeftCorner(top, top).setIdentity();
  PT.topRightCorner(top, m) = -X;
  return (U * PT * U.adjoint()).real();
}

struct ProjectorResult {
  Eigen::RowVectorXd ell_dq, ell_p;
  Eigen::MatrixXd P0;
};

// Coordinates (ell_dq, ell_p) of the zero-cluster projector in the basis {kernel, jordan}.
inline ProjectorResult projector_P0(const OperatorMatrix& L, const Eigen::VectorXd& kernel_vec,
                                    const Eigen::VectorXd& jordan_vec, double threshold = 1e-4) {
  int size = 0;
  ProjectorResult out;
  out.P0 = cluster_projector(L.entries, threshold, size);
  if (size != 2) throw std::runtime_error("projector_P0: zero cluster has size " + std::to_string(size));
  Eigen::MatrixXd V(kernel_vec.size(), 2);
  V << kernel_vec, jordan_vec;
  const Eigen::MatrixXd coords = V.completeOrthogonalDecomposition().solve(out.P0);
  out.ell_dq = coords.row(0);
  out.ell_p = coords.row(1);
  return out;
}

// ell_p(h) = int h_+ / int p_+ on the domain layout
inline Eigen::RowVectorXd ell_p_explicit(const BasisSpec& b, const Eigen::VectorXd& jordan_vec) {
  Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(b.dim());
  e[b.mass_index()] = 1.0 / jordan_vec[b.mass_index()];
  return e;
}

inline double mass_plus(const BasisSpec& b, const Eigen::VectorXd& c) {
  return b.has_mass_vector() ? c[b.mass_index()] : 0.0;
}

// Full analysis of L on the domain layout.
inline SpectralDecomposition decompose_L(const StationaryState& st, const BasisSpec& b,
                                         double threshold = 1e-4) {
  const OperatorMatrix L = assemble_L(st, b);
  SpectralDecomposition dec = eigendecompose(L, threshold);
  dec.kernel_vec = kernel_coefficients(st, b);
  dec.kernel_residual = (L.entries * dec.kernel_vec).norm() / dec.kernel_vec.norm();
  dec.jordan_vec = jordan_solve(L, dec.kernel_vec);
  dec.jordan_residual = (L.entries * dec.jordan_vec - dec.kernel_vec).norm() / dec.kernel_vec.norm();
  const ProjectorResult pr = projector_P0(L, dec.kernel_vec, dec.jordan_vec, threshold);
  dec.ell_dq = pr.ell_dq;
  dec.ell_p = pr.ell_p;
  dec.P0 = pr.P0;
  return dec;
}

// ---------------------------------------------------------------------------
// Companion quantities

inline double gap_Lq0(const StationaryState& st, int n, double threshold = 1e-4) {
  return eigendecompose(assemble_Lq0(st, n), threshold).gap;
}

inline double gap_Atilde2(const StationaryState& st, int n, double threshold = 1e-4) {
  return eigendecompose(assemble_Atilde2(st, n), threshold).gap;
}

inline double gap_lower_bound(const StationaryState& st) { return 0.5 * std::exp(-4.0 * st.params.K * st.r0); }

// Eigenvalues of the Rayleigh-Ritz matrix G^{-1} S for a form matrix S and Gram matrix G.
inline Eigen::VectorXcd ritz_values(const Eigen::MatrixXd& G, const Eigen::MatrixXd& S) {
  const Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (G + G.transpose()));
  if (llt.info() != Eigen::Success) throw std::runtime_error("ritz_values: Gram matrix not SPD");
  const Eigen::MatrixXd Linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(G.rows(), G.cols()));
  const Eigen::MatrixXd C = Linv * S * Linv.transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
  if (es.info() != Eigen::Success) throw std::runtime_error("ritz_values: eigensolver failed");
  return es.eigenvalues();
}

// p2(theta, omega) = e^{-B(theta)} [ e^{4 pi omega} / (1 - e^{4 pi omega}) I(2 pi) + I(theta) ],
// I(theta) = int_0^theta e^{B(u)} du,  B(u) = -2 (K r (cos u - 1) + omega u).
// The cumulative integral of the non-periodic integrand is evaluated spectrally:
// int_0^theta g_k e^{(ik - 2 omega) u} du = g_k (e^{(ik - 2 omega) theta} - 1) / (ik - 2 omega).
class P2Evaluator {
 public:
  P2Evaluator(const StationaryState& st, double omega) : grid_(st.grid), Kr_(st.params.K * st.r), omega_(omega) {
    if (omega == 0.0) throw std::invalid_argument("p2_explicit: requires omega0 > 0");
    Eigen::VectorXd per(grid_.M);  // periodic factor e^{-2 K r (cos u - 1)}
    for (int i = 0; i < grid_.M; ++i) per[i] = std::exp(-2.0 * Kr_ * (std::cos(grid_.theta(i)) - 1.0));
    const fourier::Coeffs c = fourier::forward(per);
    d_.resize(grid_.M / 2);
    for (Eigen::Index k = 0; k < d_.size(); ++k) {
      d_[k] = c[k] / cplx(-2.0 * omega, static_cast<double>(k));
      base_ += (k == 0 ? 1.0 : 2.0) * d_[k].real();
    }
    const double four_pi_w = 4.0 * std::numbers::pi * omega;
    constant_ = std::exp(four_pi_w) / (-std::expm1(four_pi_w)) * std::expm1(-four_pi_w) * base_;
  }

  double operator()(double theta) const {
    double osc = d_[0].real();
    for (Eigen::Index k = 1; k < d_.size(); ++k)
      osc += 2.0 * (d_[k] * std::polar(1.0, static_cast<double>(k) * theta)).real();
    return combine(theta, osc);
  }

  ThetaField on_grid() const {
    fourier::Coeffs full = fourier::Coeffs::Zero(grid_.M / 2 + 1);
    full.head(d_.size()) = d_;
    const ThetaField osc = fourier::inverse(full, grid_.M);
    ThetaField out(grid_.M);
    for (int i = 0; i < grid_.M; ++i) out[i] = combine(grid_.theta(i), osc[i]);
    return out;
  }

 private:
  double combine(double theta, double osc) const {
    const double I = std::exp(-2.0 * omega_ * theta) * osc - base_;
    const double B = -2.0 * (Kr_ * (std::cos(theta) - 1.0) + omega_ * theta);
    return std::exp(-B) * (constant_ + I);
  }

  Grid grid_;
  double Kr_, omega_;
  Eigen::VectorXcd d_;
  double base_ = 0.0;      // sum over all k of g_k / (ik - 2 omega)
  double constant_ = 0.0;  // e^{4 pi omega} / (1 - e^{4 pi omega}) I(2 pi)
};

inline DisorderedField p2_explicit(const StationaryState& st) {
  if (st.params.omega0 == 0.0) throw std::invalid_argument("p2_explicit: requires omega0 > 0");
  return {P2Evaluator(st, st.params.omega0).on_grid(), P2Evaluator(st, -st.params.omega0).on_grid()};
}

// e = -q' cos theta + q sin theta
inline DisorderedField e_field(const StationaryState& st) {
  DisorderedField e = DisorderedField::zero(st.grid.M);
  for (int s : {+1, -1}) {
    const ThetaField& q = st.q.component(s);
    const ThetaField dq = fourier::derivative(q);
    for (int i = 0; i < st.grid.M; ++i) {
      const double th = st.grid.theta(i);
      e.component(s)[i] = -dq[i] * std::cos(th) + q[i] * std::sin(th);
    }
  }
  return e;
}

inline double cosine_similarity(const DisorderedField& a, const DisorderedField& b) {
  const double ab = a.plus.dot(b.plus) + a.minus.dot(b.minus);
  const double aa = a.plus.squaredNorm() + a.minus.squaredNorm();
  const double bb = b.plus.squaredNorm() + b.minus.squaredNorm();
  return ab / std::sqrt(aa * bb);
}

}  // namespace kfluct
