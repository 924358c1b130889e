#pragma once

#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "field.hpp"

// Real-to-complex transforms on the uniform grid.
// Coefficients c_k, k = 0..M/2, with f(theta_j) = sum_{|k| <= M/2} c_k e^{i k theta_j}.
namespace kfluct::fourier {

using Coeffs = Eigen::VectorXcd;

inline Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

inline Coeffs forward(const Eigen::VectorXd& f) {
  const Eigen::Index M = f.size();
  Eigen::VectorXcd full;
  engine().fwd(full, f);
  Coeffs c = full.head(M / 2 + 1) / static_cast<double>(M);
  return c;
}

inline Eigen::VectorXd inverse(const Coeffs& c, Eigen::Index M) {
  const Eigen::Index half = M / 2;
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(M);
  const Eigen::Index kmax = std::min<Eigen::Index>(c.size() - 1, half);
  for (Eigen::Index k = 0; k <= kmax; ++k) {
    full[k] = c[k] * static_cast<double>(M);
    if (k > 0 && k < half) full[M - k] = std::conj(full[k]);
  }
  if (kmax == half) full[half] = std::complex<double>(full[half].real(), 0.0);
  Eigen::VectorXcd out;
  engine().inv(out, full);
  return out.real();
}

// Spectral derivative of the given order. The Nyquist mode is dropped.
inline Eigen::VectorXd derivative(const Eigen::VectorXd& f, int order = 1) {
  const Eigen::Index M = f.size();
  Coeffs c = forward(f);
  const std::complex<double> I(0.0, 1.0);
  for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::pow(I * static_cast<double>(k), order);
  c[M / 2] = 0.0;
  return inverse(c, M);
}

// Zero-mean primitive of the zero-mean part of f.
inline Eigen::VectorXd primitive(const Eigen::VectorXd& f) {
  const Eigen::Index M = f.size();
  Coeffs c = forward(f);
  const std::complex<double> I(0.0, 1.0);
  c[0] = 0.0;
  for (Eigen::Index k = 1; k < c.size(); ++k) c[k] /= I * static_cast<double>(k);
  c[M / 2] = 0.0;
  return inverse(c, M);
}

// g(theta) = f(theta - shift), exact for band-limited f below Nyquist.
inline Eigen::VectorXd rotate(const Eigen::VectorXd& f, double shift) {
  const Eigen::Index M = f.size();
  Coeffs c = forward(f);
  for (Eigen::Index k = 0; k < c.size(); ++k)
    c[k] *= std::polar(1.0, -static_cast<double>(k) * shift);
  c[M / 2] = 0.0;
  return inverse(c, M);
}

// Real trigonometric coefficients: f = a0 + sum_k a_k cos k theta + b_k sin k theta.
struct TrigCoeffs {
  double a0 = 0.0;
  Eigen::VectorXd a;  // index k-1
  Eigen::VectorXd b;
};

inline TrigCoeffs to_trig(const Eigen::VectorXd& f, int n) {
  Coeffs c = forward(f);
  TrigCoeffs t;
  t.a0 = c[0].real();
  t.a.resize(n);
  t.b.resize(n);
  for (int k = 1; k <= n; ++k) {
    t.a[k - 1] = 2.0 * c[k].real();
    t.b[k - 1] = -2.0 * c[k].imag();
  }
  return t;
}

inline Eigen::VectorXd from_trig(const TrigCoeffs& t, Eigen::Index M) {
  Coeffs c = Coeffs::Zero(M / 2 + 1);
  c[0] = t.a0;
  for (Eigen::Index k = 1; k <= t.a.size(); ++k)
    c[k] = std::complex<double>(0.5 * t.a[k - 1], -0.5 * t.b[k - 1]);
  return inverse(c, M);
}

}  // namespace kfluct::fourier
