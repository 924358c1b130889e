#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "basis.hpp"
#include "operators.hpp"
#include "parallel.hpp"
#include "particles.hpp"
#include "spectrum.hpp"
#include "stats.hpp"

namespace kfluct {

// Per-component Q-Wiener covariance over the nonconstant modes of one component:
//   Sigma_ml = 1/2 int phi_m' phi_l' q(., omega) dtheta.
// Constants carry no noise, so the c0 coordinate of an increment is always zero.
struct NoiseModel {
  BasisSpec basis;
  Eigen::MatrixXd sigma_plus, sigma_minus;
  Eigen::MatrixXd chol_plus, chol_minus;  // lower factors
  double ridge = 0.0;                     // diagonal shift needed for the factorization

  const Eigen::MatrixXd& sigma(int s) const { return s > 0 ? sigma_plus : sigma_minus; }
  const Eigen::MatrixXd& chol(int s) const { return s > 0 ? chol_plus : chol_minus; }

  // Coordinates of W_{t+dt} - W_t. Field coordinates are 1/pi times the pairings W(cos k), W(sin k).
  Eigen::VectorXd increment(double dt, std::mt19937_64& rng) const {
    std::normal_distribution<double> nd;
    const int m = 2 * basis.n;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.dim());
    Eigen::VectorXd xi(m);
    const double scale = std::sqrt(dt) / std::numbers::pi;
    for (int s : {+1, -1}) {
      for (int i = 0; i < m; ++i) xi[i] = nd(rng);
      const Eigen::VectorXd w = chol(s).triangularView<Eigen::Lower>() * xi;
      out.segment(basis.mode_offset(s), m) = scale * w;
    }
    return out;
  }
};

namespace spde_detail {

// derivative of the basis function at coordinate j (local mode index) evaluated at theta
inline double mode_derivative(int j, double theta) {
  const int k = j / 2 + 1;
  return (j % 2 == 0) ? -k * std::sin(k * theta) : k * std::cos(k * theta);
}

inline Eigen::MatrixXd factor(const Eigen::MatrixXd& S, double& ridge) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  ridge = 1e-14;
  llt.compute(S + ridge * Eigen::MatrixXd::Identity(S.rows(), S.cols()));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("noise covariance is not positive semidefinite beyond ridge 1e-14");
  return llt.matrixL();
}

}  // namespace spde_detail

inline NoiseModel build_noise(const StationaryState& st, const BasisSpec& b) {
  if (b.layout != Layout::domain) throw std::invalid_argument("build_noise: needs the domain layout");
  b.check_grid(st.grid);
  const int m = 2 * b.n;
  const Grid& g = st.grid;
  Eigen::MatrixXd D(g.M, m);
  for (int i = 0; i < g.M; ++i)
    for (int j = 0; j < m; ++j) D(i, j) = spde_detail::mode_derivative(j, g.theta(i));
  NoiseModel nm;
  nm.basis = b;
  for (int s : {+1, -1}) {
    const Eigen::VectorXd w = 0.5 * g.h() * st.q.component(s);
    Eigen::MatrixXd S = D.transpose() * w.asDiagonal() * D;
    S = 0.5 * (S + S.transpose()).eval();
    double ridge = 0.0;
    Eigen::MatrixXd L = spde_detail::factor(S, ridge);
    nm.ridge = std::max(nm.ridge, ridge);
    (s > 0 ? nm.sigma_plus : nm.sigma_minus) = S;
    (s > 0 ? nm.chol_plus : nm.chol_minus) = L;
  }
  return nm;
}

// eta_0 = C + X with C_+ = z gamma, C_- = -z gamma.
struct InitialCondition {
  double z = 0.0;
  Eigen::VectorXd eta0;
};

// z ~ N(0, 1/4), the limit law of alpha_N / sqrt(N)
inline double sample_z_gaussian(std::mt19937_64& rng) { return 0.5 * std::normal_distribution<double>()(rng); }

inline double sample_z_particles(int N, DisorderMode mode, std::mt19937_64& rng) {
  const ParticleEnsemble e = sample_disorder(N, 1.0, mode, rng);
  return e.alphaN / std::sqrt(static_cast<double>(N));
}

// gamma: a probability density on the grid, or empty for the uniform law.
// scaleX > 0 adds a zero-mass Gaussian surrogate with coefficient sd scaleX / k.
inline InitialCondition make_initial(double z, const BasisSpec& b, const Grid& grid, const ThetaField& gamma = {},
                                     double scaleX = 0.0, std::mt19937_64* rng = nullptr) {
  if (b.layout != Layout::domain) throw std::invalid_argument("make_initial: needs the domain layout");
  InitialCondition ic;
  ic.z = z;
  if (gamma.size() == 0) {
    ic.eta0 = Eigen::VectorXd::Zero(b.dim());
    ic.eta0[b.mass_index()] = z;
  } else {
    if (gamma.size() != grid.M || gamma.minCoeff() < 0.0)
      throw std::invalid_argument("make_initial: gamma must be a nonnegative density on the grid");
    const ThetaField g = gamma / grid.integrate(gamma);
    ic.eta0 = coefficients(DisorderedField(z * g, -z * g), b, grid);
  }
  if (scaleX > 0.0) {
    if (!rng) throw std::invalid_argument("make_initial: scaleX needs a random stream");
    std::normal_distribution<double> nd;
    for (int i = 0; i < b.dim(); ++i)
      if (i != b.mass_index()) ic.eta0[i] += scaleX * nd(*rng) / b.order(i);
  }
  return ic;
}

struct FluctuationState {
  Eigen::VectorXd eta;
  double t = 0.0;
};

// Implicit Euler with noise added before the solve:
//   eta <- (I - dt L)^{-1} (eta + dW)
class SpdeStepper {
 public:
  SpdeStepper(const OperatorMatrix& L, double dt, const NoiseModel* noise = nullptr)
      : basis_(L.basis), dt_(dt), noise_(noise) {
    if (!(dt > 0.0)) throw std::invalid_argument("SpdeStepper: dt must be > 0");
    const Eigen::Index d = L.entries.rows();
    lu_.compute(Eigen::MatrixXd::Identity(d, d) - dt * L.entries);
    if (!(lu_.rcond() > 1e-13))
      throw std::runtime_error("SpdeStepper: I - dt L is singular (rcond " + std::to_string(lu_.rcond()) + ")");
    if (noise_ && !(noise_->basis == basis_)) throw std::invalid_argument("SpdeStepper: noise basis mismatch");
  }

  double dt() const { return dt_; }
  const BasisSpec& basis() const { return basis_; }

  void step(FluctuationState& s, std::mt19937_64* rng) const {
    if (noise_) {
      if (!rng) throw std::invalid_argument("SpdeStepper: noisy step needs a random stream");
      s.eta = lu_.solve(s.eta + noise_->increment(dt_, *rng));
    } else {
      s.eta = lu_.solve(s.eta);
    }
    s.t += dt_;
  }

 private:
  BasisSpec basis_;
  double dt_;
  const NoiseModel* noise_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

struct SpdeTrajectory {
  std::vector<double> t, ell_dq, eta_sin, mass_plus;
};

// eta(sin) = <int sin eta(., omega)>_mu = (pi/2)(b1+ + b1-)
inline double eta_sin(const Eigen::VectorXd& eta, const BasisSpec& b) {
  return 0.5 * std::numbers::pi * (eta[b.sin_index(1, +1)] + eta[b.sin_index(1, -1)]);
}

inline SpdeTrajectory run_spde(const Eigen::VectorXd& eta0, const SpdeStepper& stepper, double T,
                               const Eigen::RowVectorXd& ell_dq, std::mt19937_64* rng, int record_every = 1) {
  const BasisSpec& b = stepper.basis();
  if (eta0.size() != b.dim() || ell_dq.size() != b.dim())
    throw std::invalid_argument("run_spde: dimension mismatch");
  const long steps = std::lround(T / stepper.dt());
  const int every = std::max(1, record_every);
  FluctuationState s{eta0, 0.0};
  SpdeTrajectory tr;
  auto record = [&](long k) {
    tr.t.push_back(k * stepper.dt());
    tr.ell_dq.push_back(ell_dq.dot(s.eta));
    tr.eta_sin.push_back(eta_sin(s.eta, b));
    tr.mass_plus.push_back(s.eta[b.mass_index()]);
  };
  record(0);
  for (long k = 1; k <= steps; ++k) {
    stepper.step(s, rng);
    if (k % every == 0 || k == steps) record(k);
  }
  return tr;
}

enum class SpeedMethod { ell_dq_slope, eta_sin_slope };

inline std::string to_string(SpeedMethod m) {
  return m == SpeedMethod::ell_dq_slope ? "ell_dq_slope" : "eta_sin_slope";
}

struct SpeedEstimate {
  double v_hat = 0.0;
  double stderr_v = 0.0;
  double t1 = 0.0, t2 = 0.0;
  SpeedMethod method = SpeedMethod::ell_dq_slope;
};

// eta_sin_slope uses int int sin(theta) d/dtheta q = -r.
inline SpeedEstimate estimate_speed(const SpdeTrajectory& tr, SpeedMethod method, double t1, double t2,
                                    double r = 1.0) {
  const bool by_sin = method == SpeedMethod::eta_sin_slope;
  if (by_sin && !(r > 0.0)) throw std::invalid_argument("estimate_speed: eta_sin_slope needs r > 0");
  const LinearFit f = fit_line(tr.t, by_sin ? tr.eta_sin : tr.ell_dq, t1, t2, 10);
  SpeedEstimate e;
  e.method = method;
  e.t1 = t1;
  e.t2 = t2;
  e.v_hat = by_sin ? -f.slope / r : f.slope;
  e.stderr_v = by_sin ? f.stderr_slope / r : f.stderr_slope;
  return e;
}

// Everything a fluctuation run needs, built once and shared read-only across tasks.
struct FluctuationModel {
  StationaryState st;
  BasisSpec basis;
  OperatorMatrix L;
  SpectralDecomposition dec;
  NoiseModel noise;
  double p_plus_mass = 0.0;  // int p_+

  FluctuationModel(const ModelParams& params, const Grid& grid)
      : st(build_stationary(params, grid)), basis{grid.n, Layout::domain}, L(assemble_L(st, basis)),
        dec(decompose_L(st, basis)), noise(build_noise(st, basis)),
        p_plus_mass(dec.jordan_vec[basis.mass_index()]) {}

  double predicted_speed(double z) const { return z / p_plus_mass; }
  double predicted_variance() const { return 1.0 / (4.0 * p_plus_mass * p_plus_mass); }
  // from int p_+ ~ -1/omega0
  double conjectured_variance() const { return 0.25 * st.params.omega0 * st.params.omega0; }
};

struct SpeedRunConfig {
  double T = 100.0;
  double dt = 0.05;
  double t1 = 20.0;  // window [t1, T]
  int record_every = 1;
  SpeedMethod method = SpeedMethod::ell_dq_slope;
};

inline SpeedEstimate speed_path(const FluctuationModel& fm, const SpdeStepper& stepper, double z,
                                const SpeedRunConfig& cfg, std::mt19937_64& rng) {
  const InitialCondition ic = make_initial(z, fm.basis, fm.st.grid);
  const SpdeTrajectory tr = run_spde(ic.eta0, stepper, cfg.T, fm.dec.ell_dq, &rng, cfg.record_every);
  return estimate_speed(tr, cfg.method, cfg.t1, cfg.T, fm.st.r);
}

enum class DrawMode { gaussian, zero };

struct EnsembleResult {
  std::vector<double> z;           // per draw
  std::vector<double> v_mean;      // per draw, averaged over its noise paths
  std::vector<double> v_path_var;  // per draw, sample variance over its noise paths (0 if one path)
  int paths_per_draw = 1;
  double var_between = 0.0;     // sample variance of v_mean
  double noise_floor = 0.0;     // mean(v_path_var) / paths_per_draw
  double var_v = 0.0;           // var_between - noise_floor
  double sigma_v_sq_pred = 0.0; // (2 int p_+)^-2
  double conjecture = 0.0;      // omega0^2 / 4
  double p_plus_mass = 0.0;
};

// Draw i uses stream (seed, i) for z and (seed, n_draws + i * paths + j) for its noise paths.
inline EnsembleResult ensemble_variance(const FluctuationModel& fm, int n_draws, int paths_per_draw,
                                        const SpeedRunConfig& cfg, std::uint64_t seed, DrawMode mode = DrawMode::gaussian,
                                        int workers = 1) {
  if (n_draws < 2) throw std::invalid_argument("ensemble_variance: need at least 2 draws");
  if (paths_per_draw < 1) throw std::invalid_argument("ensemble_variance: paths_per_draw must be >= 1");
  const SpdeStepper stepper(fm.L, cfg.dt, &fm.noise);
  EnsembleResult res;
  res.paths_per_draw = paths_per_draw;
  res.z.resize(n_draws);
  for (int i = 0; i < n_draws; ++i) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(i));
    res.z[i] = mode == DrawMode::gaussian ? sample_z_gaussian(rng) : 0.0;
  }
  const std::size_t tasks = static_cast<std::size_t>(n_draws) * paths_per_draw;
  const std::vector<double> v = parallel_map(tasks, workers, [&](std::size_t k) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(n_draws) + k);
    return speed_path(fm, stepper, res.z[k / paths_per_draw], cfg, rng).v_hat;
  });
  res.v_mean.resize(n_draws);
  res.v_path_var.assign(n_draws, 0.0);
  for (int i = 0; i < n_draws; ++i) {
    const std::vector<double> vi(v.begin() + i * paths_per_draw, v.begin() + (i + 1) * paths_per_draw);
    res.v_mean[i] = stats::mean(vi);
    if (paths_per_draw > 1) res.v_path_var[i] = stats::variance(vi);
  }
  res.var_between = stats::variance(res.v_mean);
  res.noise_floor = paths_per_draw > 1 ? stats::mean(res.v_path_var) / paths_per_draw : 0.0;
  res.var_v = res.var_between - res.noise_floor;
  res.sigma_v_sq_pred = fm.predicted_variance();
  res.conjecture = fm.conjectured_variance();
  res.p_plus_mass = fm.p_plus_mass;
  return res;
}

}  // namespace kfluct
