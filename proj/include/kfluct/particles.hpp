#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "field.hpp"
#include "stationary.hpp"

namespace kfluct {

// Seeded stream for (master seed, task index). Two tasks never share a stream.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t task = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(task), static_cast<std::uint32_t>(task >> 32)};
  return std::mt19937_64(seq);
}

// Phases are stored unwrapped; only trig evaluations see them mod 2pi.
struct ParticleEnsemble {
  Eigen::VectorXd theta;
  Eigen::VectorXd omega;
  double omega0 = 0.0;
  double alphaN = 0.0;  // (#positive frequencies) - N/2

  int size() const { return static_cast<int>(theta.size()); }
};

enum class DisorderMode { iid, symmetrized };

inline DisorderMode parse_disorder_mode(const std::string& s) {
  if (s == "iid") return DisorderMode::iid;
  if (s == "symmetrized") return DisorderMode::symmetrized;
  throw std::invalid_argument("unknown disorder mode '" + s + "' (iid|symmetrized)");
}

// Frequencies only; phases start at 0 until an init routine fills them.
inline ParticleEnsemble sample_disorder(int N, double omega0, DisorderMode mode, std::mt19937_64& rng) {
  if (N < 1) throw std::invalid_argument("sample_disorder: N must be >= 1");
  if (mode == DisorderMode::symmetrized && N % 2 != 0)
    throw std::invalid_argument("sample_disorder: symmetrized mode needs even N");
  ParticleEnsemble e;
  e.theta = Eigen::VectorXd::Zero(N);
  e.omega.resize(N);
  e.omega0 = omega0;
  int plus = 0;
  if (mode == DisorderMode::iid) {
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < N; ++i) {
      const bool up = coin(rng);
      e.omega[i] = up ? omega0 : -omega0;
      plus += up;
    }
  } else {
    for (int i = 0; i < N; ++i) e.omega[i] = (i % 2 == 0) ? omega0 : -omega0;
    plus = N / 2;
  }
  e.alphaN = plus - 0.5 * N;
  return e;
}

inline void init_uniform(ParticleEnsemble& e, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, two_pi);
  for (int i = 0; i < e.size(); ++i) e.theta[i] = u(rng);
}

// Inverse-CDF sampler for a positive density tabulated on the grid, linear between nodes.
class GridSampler {
 public:
  GridSampler(const ThetaField& density, const Grid& grid) : h_(grid.h()), cdf_(grid.M + 1) {
    if (density.size() != grid.M) throw std::invalid_argument("GridSampler: density/grid mismatch");
    if (density.minCoeff() < 0.0) throw std::invalid_argument("GridSampler: negative density");
    cdf_[0] = 0.0;
    for (int i = 0; i < grid.M; ++i)
      cdf_[i + 1] = cdf_[i] + 0.5 * h_ * (density[i] + density[(i + 1) % grid.M]);
    const double total = cdf_[grid.M];
    for (double& c : cdf_) c /= total;
  }

  double operator()(std::mt19937_64& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t j = std::clamp<std::size_t>(it - cdf_.begin(), 1, cdf_.size() - 1) - 1;
    const double w = cdf_[j + 1] - cdf_[j];
    const double frac = w > 0.0 ? (u - cdf_[j]) / w : 0.0;
    return h_ * (static_cast<double>(j) + frac);
  }

 private:
  double h_;
  std::vector<double> cdf_;
};

// Each rotator drawn from q(., omega_j): starts the population near equilibrium.
inline void init_stationary(ParticleEnsemble& e, const StationaryState& st, std::mt19937_64& rng) {
  const GridSampler plus(st.q.plus, st.grid), minus(st.q.minus, st.grid);
  for (int i = 0; i < e.size(); ++i) e.theta[i] = e.omega[i] > 0.0 ? plus(rng) : minus(rng);
}

inline OrderParameter order_parameter(const Eigen::VectorXd& theta) {
  double C = 0.0, S = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    C += std::cos(theta[i]);
    S += std::sin(theta[i]);
  }
  C /= static_cast<double>(theta.size());
  S /= static_cast<double>(theta.size());
  OrderParameter op;
  op.r = std::hypot(C, S);
  op.psi = op.r < 1e-300 ? 0.0 : std::atan2(S, C);
  return op;
}

// -(K/N) sum_i sin(theta_j - theta_i) through r_N sin(theta_j - psi_N)
inline Eigen::VectorXd interaction_force(const Eigen::VectorXd& theta, double K) {
  double C = 0.0, S = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    C += std::cos(theta[i]);
    S += std::sin(theta[i]);
  }
  C /= static_cast<double>(theta.size());
  S /= static_cast<double>(theta.size());
  Eigen::VectorXd f(theta.size());
  // r sin(t - psi) = sin t * C - cos t * S
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    f[j] = -K * (std::sin(theta[j]) * C - std::cos(theta[j]) * S);
  return f;
}

inline void em_step(ParticleEnsemble& e, double dt, double K, std::mt19937_64& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("em_step: dt must be > 0");
  const Eigen::VectorXd force = interaction_force(e.theta, K);
  std::normal_distribution<double> nd;
  const double sq = std::sqrt(dt);
  for (int j = 0; j < e.size(); ++j) e.theta[j] += (e.omega[j] + force[j]) * dt + sq * nd(rng);
}

struct SimTrajectory {
  std::vector<double> times, rN, psiN, eta_sin;
};

struct ParticleObservers {
  int record_every = 1;
  double nu_sin = 0.0;  // stationary reference for eta(sin); 0 for a profile centred at psi = 0
};

inline SimTrajectory run(ParticleEnsemble& e, double T, double dt, double K, std::mt19937_64& rng,
                         const ParticleObservers& obs = {}) {
  if (e.size() < 1) throw std::invalid_argument("run: empty ensemble");
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("run: need dt > 0 and T >= 0");
  const long steps = std::lround(T / dt);
  const int every = std::max(1, obs.record_every);
  const double sqN = std::sqrt(static_cast<double>(e.size()));
  SimTrajectory tr;
  auto record = [&](long step) {
    const OrderParameter op = order_parameter(e.theta);
    tr.times.push_back(step * dt);
    tr.rN.push_back(op.r);
    tr.psiN.push_back(tr.psiN.empty() ? op.psi : unwrap_near(tr.psiN.back(), op.psi));
    tr.eta_sin.push_back(sqN * (op.r * std::sin(op.psi) - obs.nu_sin));
  };
  record(0);
  for (long s = 1; s <= steps; ++s) {
    em_step(e, dt, K, rng);
    if (s % every == 0 || s == steps) record(s);
  }
  return tr;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  int samples = 0;
};

// Ordinary least squares of y on t over t1 <= t <= t2.
inline LinearFit fit_line(const std::vector<double>& t, const std::vector<double>& y, double t1, double t2,
                          int min_samples = 3) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_line: length mismatch");
  if (!(t2 > t1)) throw std::invalid_argument("fit_line: need t2 > t1");
  if (t.empty() || t1 < t.front() - 1e-9 || t2 > t.back() + 1e-9)
    throw std::invalid_argument("fit_line: window outside trajectory");
  double st = 0.0, sy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t1 - 1e-12 && t[i] <= t2 + 1e-12) {
      st += t[i];
      sy += y[i];
      ++n;
    }
  if (n < min_samples)
    throw std::invalid_argument("fit_line: window holds " + std::to_string(n) + " samples, need " +
                                std::to_string(min_samples));
  const double tm = st / n, ym = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t1 - 1e-12 && t[i] <= t2 + 1e-12) {
      sxx += (t[i] - tm) * (t[i] - tm);
      sxy += (t[i] - tm) * (y[i] - ym);
    }
  LinearFit f;
  f.samples = n;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * tm;
  double ssr = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t1 - 1e-12 && t[i] <= t2 + 1e-12) {
      const double e = y[i] - f.intercept - f.slope * t[i];
      ssr += e * e;
    }
  f.stderr_slope = n > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
  return f;
}

inline LinearFit fit_drift(const SimTrajectory& tr, double t1, double t2) {
  return fit_line(tr.times, tr.psiN, t1, t2);
}

}  // namespace kfluct
