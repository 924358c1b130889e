#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include "field.hpp"
#include "fourier.hpp"
#include "stationary.hpp"

namespace kfluct {

struct PdeState {
  Grid grid;
  DisorderedField density;
  double t = 0.0;
};

namespace pde_detail {

using fourier::Coeffs;

// Spectral state: coefficients k = 0..M/2 of each component, Nyquist kept at zero.
struct SpectralDensity {
  Coeffs plus, minus;
  Coeffs& component(int s) { return s > 0 ? plus : minus; }
  const Coeffs& component(int s) const { return s > 0 ? plus : minus; }
};

inline SpectralDensity to_spectral(const DisorderedField& q) {
  SpectralDensity s{fourier::forward(q.plus), fourier::forward(q.minus)};
  const auto half = s.plus.size() - 1;
  s.plus[half] = 0.0;
  s.minus[half] = 0.0;
  return s;
}

inline DisorderedField to_grid(const SpectralDensity& s, int M) {
  return {fourier::inverse(s.plus, M), fourier::inverse(s.minus, M)};
}

// <J*q>_mu = a e^{i theta} + conj(a) e^{-i theta}
inline std::complex<double> mean_field_mode(const SpectralDensity& s, double K) {
  // int cos q = 2 pi Re c1, int sin q = -2 pi Im c1
  const std::complex<double> c1 = 0.5 * (s.plus[1] + s.minus[1]);
  const double C = two_pi * c1.real();
  const double S = -two_pi * c1.imag();
  return 0.5 * K * std::complex<double>(S, C);
}

// coefficients of -d/dtheta [q (a e^{i theta} + conj(a) e^{-i theta} + omega)]
inline Coeffs transport(const Coeffs& q, std::complex<double> a, double omega) {
  const Eigen::Index half = q.size() - 1;
  Coeffs out(q.size());
  const std::complex<double> I(0.0, 1.0);
  for (Eigen::Index k = 0; k <= half; ++k) {
    const std::complex<double> below = k >= 1 ? q[k - 1] : std::conj(q[1]);
    const std::complex<double> above = k + 1 <= half ? q[k + 1] : 0.0;
    const std::complex<double> flux = omega * q[k] + a * below + std::conj(a) * above;
    out[k] = -I * static_cast<double>(k) * flux;
  }
  out[half] = 0.0;
  return out;
}

inline void imex_step(SpectralDensity& s, double dt, const ModelParams& p) {
  const std::complex<double> a = mean_field_mode(s, p.K);
  for (int sg : {+1, -1}) {
    Coeffs& q = s.component(sg);
    const Coeffs tr = transport(q, a, sg > 0 ? p.omega0 : -p.omega0);
    for (Eigen::Index k = 1; k < q.size(); ++k) {
      const double kk = static_cast<double>(k);
      q[k] = (q[k] + dt * tr[k]) / (1.0 + 0.5 * dt * kk * kk);
      if (!(std::abs(q[k]) <= 1e12)) throw std::runtime_error("PDE step blew up (mode magnitude > 1e12)");
    }
  }
}

inline OrderParameter order_parameter(const SpectralDensity& s) {
  // int e^{i theta} q = 2 pi conj(c1)
  const std::complex<double> z = two_pi * std::conj(0.5 * (s.plus[1] + s.minus[1]));
  OrderParameter op;
  op.r = std::abs(z);
  op.psi = op.r < 1e-12 ? 0.0 : std::arg(z);
  return op;
}

}  // namespace pde_detail

inline DisorderedField rhs(const PdeState& state, const ModelParams& params) {
  const auto s = pde_detail::to_spectral(state.density);
  const std::complex<double> a = pde_detail::mean_field_mode(s, params.K);
  pde_detail::SpectralDensity out;
  for (int sg : {+1, -1}) {
    fourier::Coeffs c = pde_detail::transport(s.component(sg), a, sg > 0 ? params.omega0 : -params.omega0);
    for (Eigen::Index k = 0; k < c.size(); ++k)
      c[k] -= 0.5 * static_cast<double>(k * k) * s.component(sg)[k];
    out.component(sg) = c;
  }
  return pde_detail::to_grid(out, state.grid.M);
}

inline PdeState step_imex(const PdeState& state, double dt, const ModelParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  auto s = pde_detail::to_spectral(state.density);
  pde_detail::imex_step(s, dt, params);
  return {state.grid, pde_detail::to_grid(s, state.grid.M), state.t + dt};
}

struct PdeObservers {
  int record_every = 1;      // steps between order-parameter samples
  int snapshot_every = 0;    // steps between density snapshots, 0 = none
  std::function<void(const PdeState&)> on_snapshot;
};

struct PdeTrajectory {
  std::vector<double> t, r, psi;  // psi unwrapped by nearest-branch continuation
  std::vector<PdeState> snapshots;
  PdeState final_state;
};

inline PdeTrajectory evolve(const DisorderedField& init, const Grid& grid, double T, double dt,
                            const ModelParams& params, const PdeObservers& obs = {}) {
  params.validate();
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("evolve: need dt > 0 and T >= 0");
  if (init.size() != grid.M) throw std::invalid_argument("evolve: init does not match grid");
  if (init.plus.minCoeff() < 0.0 || init.minus.minCoeff() < 0.0)
    throw std::invalid_argument("evolve: initial density must be nonnegative");
  for (int s : {+1, -1}) {
    if (std::abs(grid.integrate(init.component(s)) - 1.0) > 1e-8)
      throw std::invalid_argument("evolve: initial density must have unit mass per component");
  }
  auto s = pde_detail::to_spectral(init);
  const long steps = std::lround(T / dt);
  const int every = std::max(1, obs.record_every);
  PdeTrajectory traj;
  auto record = [&](long step) {
    const OrderParameter op = pde_detail::order_parameter(s);
    const double psi = traj.psi.empty() ? op.psi : unwrap_near(traj.psi.back(), op.psi);
    traj.t.push_back(step * dt);
    traj.r.push_back(op.r);
    traj.psi.push_back(psi);
  };
  auto snapshot = [&](long step) {
    PdeState st{grid, pde_detail::to_grid(s, grid.M), step * dt};
    if (obs.on_snapshot) obs.on_snapshot(st);
    traj.snapshots.push_back(std::move(st));
  };
  record(0);
  if (obs.snapshot_every > 0) snapshot(0);
  for (long step = 1; step <= steps; ++step) {
    pde_detail::imex_step(s, dt, params);
    if (step % every == 0 || step == steps) record(step);
    if (obs.snapshot_every > 0 && step % obs.snapshot_every == 0) snapshot(step);
  }
  traj.final_state = {grid, pde_detail::to_grid(s, grid.M), steps * dt};
  return traj;
}

// (1 + 2 eps cos theta) / 2pi in both components: the incoherent state plus a small first
// mode, standing in for the N^{-1/2} fluctuations of a finite population.
inline DisorderedField perturbed_uniform(const Grid& grid, double eps) {
  ThetaField f(grid.M);
  for (int i = 0; i < grid.M; ++i) f[i] = (1.0 + 2.0 * eps * std::cos(grid.theta(i))) / two_pi;
  return {f, f};
}

}  // namespace kfluct
