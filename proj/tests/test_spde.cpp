#include <gtest/gtest.h>

#include "kfluct/spde.hpp"
#include "oracles.hpp"

using namespace kfluct;

namespace {

// K = 4, omega0 = 0.2 at n = 32; built once
const FluctuationModel& model() {
  static const FluctuationModel fm({4.0, 0.2}, Grid(256, 32));
  return fm;
}

double sample_cov(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = stats::mean(a), mb = stats::mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

}  // namespace

TEST(Noise, CovarianceStructure) {
  const NoiseModel& nm = model().noise;
  EXPECT_EQ(nm.ridge, 0.0);
  for (int s : {+1, -1}) {
    const Eigen::MatrixXd& S = nm.sigma(s);
    EXPECT_LT((S - S.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues().minCoeff(), 0.0);
    const Eigen::MatrixXd LLt = nm.chol(s) * nm.chol(s).transpose();
    EXPECT_LT((LLt - S).cwiseAbs().maxCoeff(), 1e-12);
  }
  // uniform weight 1/2pi: Sigma is diagonal with k^2 / 4 on every mode
  StationaryState flat = model().st;
  flat.q = DisorderedField::constant(flat.grid.M, 1.0 / two_pi);
  const NoiseModel nf = build_noise(flat, model().basis);
  for (int j = 0; j < 2 * model().basis.n; ++j) {
    const int k = j / 2 + 1;
    EXPECT_NEAR(nf.sigma_plus(j, j), 0.25 * k * k, 1e-12);
  }
  EXPECT_NEAR((nf.sigma_plus - Eigen::MatrixXd(nf.sigma_plus.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0,
              1e-12);
}

TEST(Noise, IncrementsCarryNoMass) {
  const FluctuationModel& fm = model();
  auto rng = make_stream(1);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd dw = fm.noise.increment(0.05, rng);
    EXPECT_EQ(dw[fm.basis.mass_index()], 0.0);
    const DisorderedField f = synthesize(dw, fm.basis, fm.st.grid);
    EXPECT_NEAR(fm.st.grid.integrate(f.plus), 0.0, 1e-13);
    EXPECT_NEAR(fm.st.grid.integrate(f.minus), 0.0, 1e-13);
  }
}

TEST(Noise, SinePairingVarianceAndIndependence) {
  // Var W_1,+(sin) = 1/2 int cos^2 q_+ ; W_+ and W_- independent
  const FluctuationModel& fm = model();
  const Grid& g = fm.st.grid;
  double expect_plus = 0.0, expect_minus = 0.0;
  for (int i = 0; i < g.M; ++i) {
    const double c2 = std::cos(g.theta(i)) * std::cos(g.theta(i));
    expect_plus += 0.5 * g.h() * c2 * fm.st.q.plus[i];
    expect_minus += 0.5 * g.h() * c2 * fm.st.q.minus[i];
  }
  auto rng = make_stream(2);
  const int draws = 100000;
  std::vector<double> wp(draws), wm(draws);
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd dw = fm.noise.increment(1.0, rng);
    // pairing with sin is pi times the sin(theta) coordinate
    wp[i] = std::numbers::pi * dw[fm.basis.sin_index(1, +1)];
    wm[i] = std::numbers::pi * dw[fm.basis.sin_index(1, -1)];
  }
  const double rel_sd = std::sqrt(2.0 / (draws - 1));
  EXPECT_NEAR(stats::variance(wp), expect_plus, 3.0 * rel_sd * expect_plus);
  EXPECT_NEAR(stats::variance(wm), expect_minus, 3.0 * rel_sd * expect_minus);
  EXPECT_NEAR(sample_cov(wp, wm), 0.0, 3.0 * std::sqrt(expect_plus * expect_minus / draws));
}

TEST(Initial, MassesAndSurrogate) {
  const FluctuationModel& fm = model();
  const Grid& g = fm.st.grid;
  EXPECT_EQ(make_initial(0.0, fm.basis, g).eta0.cwiseAbs().maxCoeff(), 0.0);

  const InitialCondition u = make_initial(0.3, fm.basis, g);
  const DisorderedField cu = synthesize(u.eta0, fm.basis, g);
  EXPECT_NEAR(cu.plus.maxCoeff(), 0.3 / two_pi, 1e-15);
  EXPECT_NEAR(cu.minus.minCoeff(), -0.3 / two_pi, 1e-15);

  ThetaField gamma(g.M);
  for (int i = 0; i < g.M; ++i) gamma[i] = std::exp(std::cos(g.theta(i) - 0.4));
  auto rng = make_stream(3);
  const InitialCondition ic = make_initial(-0.7, fm.basis, g, gamma, 0.2, &rng);
  const DisorderedField f = synthesize(ic.eta0, fm.basis, g);
  EXPECT_NEAR(g.integrate(f.plus), -0.7, 1e-12);
  EXPECT_NEAR(g.integrate(f.minus), 0.7, 1e-12);
  EXPECT_NEAR(g.integrate(f.plus + f.minus), 0.0, 1e-12);
}

TEST(Initial, GaussianZVariance) {
  auto rng = make_stream(4);
  std::vector<double> z(10000);
  for (double& v : z) v = sample_z_gaussian(rng);
  EXPECT_NEAR(stats::variance(z), 0.25, 0.05 * 0.25);
}

TEST(Initial, SymmetrizedParticlesGiveZeroZ) {
  auto rng = make_stream(5);
  EXPECT_EQ(sample_z_particles(400, DisorderMode::symmetrized, rng), 0.0);
  // odd N: alpha_N is a half-integer
  const double alpha = sample_z_particles(401, DisorderMode::iid, rng) * std::sqrt(401.0);
  EXPECT_NEAR(std::fmod(std::abs(alpha), 1.0), 0.5, 1e-9);
}

TEST(Stepper, KernelIsFixedPoint) {
  const FluctuationModel& fm = model();
  const SpdeStepper stepper(fm.L, 0.05);
  FluctuationState s{fm.dec.kernel_vec, 0.0};
  for (int i = 0; i < 2000; ++i) stepper.step(s, nullptr);
  EXPECT_LT((s.eta - fm.dec.kernel_vec).norm() / fm.dec.kernel_vec.norm(), 1e-8);
  EXPECT_NEAR(s.t, 100.0, 1e-9);
}

TEST(Stepper, JordanDriftFromP) {
  const FluctuationModel& fm = model();
  for (double dt : {0.1, 0.05}) {
    const SpdeStepper stepper(fm.L, dt);
    const SpdeTrajectory tr = run_spde(fm.dec.jordan_vec, stepper, 100.0, fm.dec.ell_dq, nullptr);
    EXPECT_NEAR(tr.ell_dq.back() / tr.t.back(), 1.0, dt * 1e-2) << "dt=" << dt;
    for (double m : tr.mass_plus) EXPECT_NEAR(m, tr.mass_plus.front(), 1e-10);
  }
}

TEST(Stepper, NoiselessJordanLawTransientDecays) {
  // ell_dq(eta_t) - ell_dq(eta_0) - t ell_p(eta_0) shrinks with t
  const FluctuationModel& fm = model();
  const SpdeStepper stepper(fm.L, 0.05);
  auto rng = make_stream(6);
  const InitialCondition ic = make_initial(0.5, fm.basis, fm.st.grid, {}, 0.3, &rng);
  const SpdeTrajectory tr = run_spde(ic.eta0, stepper, 20.0, fm.dec.ell_dq, nullptr);
  const double a0 = fm.dec.ell_dq.dot(ic.eta0), b0 = fm.dec.ell_p.dot(ic.eta0);
  auto resid = [&](std::size_t i) { return tr.ell_dq[i] - a0 - tr.t[i] * b0; };
  const std::size_t last = tr.t.size() - 1;
  const double d1 = std::abs(resid(20) - resid(last));   // t = 1
  const double d3 = std::abs(resid(60) - resid(last));   // t = 3
  const double d10 = std::abs(resid(200) - resid(last)); // t = 10
  EXPECT_GT(d1, d3);
  EXPECT_GT(d3, d10);
  EXPECT_LT(d10, 1e-8);
}

TEST(Stepper, MassConservedUnderNoise) {
  const FluctuationModel& fm = model();
  const SpdeStepper stepper(fm.L, 0.05, &fm.noise);
  auto rng = make_stream(7);
  const InitialCondition ic = make_initial(0.4, fm.basis, fm.st.grid);
  FluctuationState s{ic.eta0, 0.0};
  const double lp0 = fm.dec.ell_p.dot(s.eta);
  for (int i = 0; i < 2000; ++i) {
    stepper.step(s, &rng);
    const DisorderedField f = synthesize(s.eta, fm.basis, fm.st.grid);
    if (i % 100 == 0) {
      EXPECT_NEAR(fm.st.grid.integrate(f.plus), 0.4, 1e-10);
      EXPECT_NEAR(fm.st.grid.integrate(f.minus), -0.4, 1e-10);
      EXPECT_NEAR(fm.dec.ell_p.dot(s.eta), lp0, 1e-10 * std::abs(lp0));
    }
  }
  EXPECT_THROW(stepper.step(s, nullptr), std::invalid_argument);
  EXPECT_THROW(SpdeStepper(fm.L, 0.0), std::invalid_argument);
}

TEST(Speed, NoiselessScaledJordanVector) {
  const FluctuationModel& fm = model();
  const SpdeStepper stepper(fm.L, 0.05);
  const SpdeTrajectory tr = run_spde(-2.5 * fm.dec.jordan_vec, stepper, 100.0, fm.dec.ell_dq, nullptr);
  const SpeedEstimate e = estimate_speed(tr, SpeedMethod::ell_dq_slope, 20.0, 100.0);
  EXPECT_NEAR(e.v_hat, -2.5, 2.5 * 1e-3);
  EXPECT_GE(e.stderr_v, 0.0);
  EXPECT_THROW(estimate_speed(tr, SpeedMethod::ell_dq_slope, 20.0, 20.3), std::invalid_argument);
}

TEST(Speed, MethodsAgreeOnOnePath) {
  const FluctuationModel& fm = model();
  const SpdeStepper stepper(fm.L, 0.05, &fm.noise);
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto rng = make_stream(seed);
    const SpdeTrajectory tr =
        run_spde(make_initial(0.5, fm.basis, fm.st.grid).eta0, stepper, 100.0, fm.dec.ell_dq, &rng);
    const SpeedEstimate a = estimate_speed(tr, SpeedMethod::ell_dq_slope, 20.0, 100.0, fm.st.r);
    const SpeedEstimate b = estimate_speed(tr, SpeedMethod::eta_sin_slope, 20.0, 100.0, fm.st.r);
    EXPECT_LT(std::abs(a.v_hat - b.v_hat), 2.0 * std::hypot(a.stderr_v, b.stderr_v));
  }
}

TEST(Speed, InvariantUnderJordanVectorShift) {
  // p -> p + c dq changes ell_dq by a multiple of ell_p, which is constant along a path
  const FluctuationModel& fm = model();
  const ProjectorResult shifted =
      projector_P0(fm.L, fm.dec.kernel_vec, fm.dec.jordan_vec + 0.8 * fm.dec.kernel_vec, fm.dec.threshold);
  const SpdeStepper stepper(fm.L, 0.05, &fm.noise);
  const Eigen::VectorXd eta0 = make_initial(0.5, fm.basis, fm.st.grid).eta0;
  auto r1 = make_stream(21), r2 = make_stream(21);
  const SpdeTrajectory a = run_spde(eta0, stepper, 100.0, fm.dec.ell_dq, &r1);
  const SpdeTrajectory b = run_spde(eta0, stepper, 100.0, shifted.ell_dq, &r2);
  const SpeedEstimate ea = estimate_speed(a, SpeedMethod::ell_dq_slope, 20.0, 100.0);
  const SpeedEstimate eb = estimate_speed(b, SpeedMethod::ell_dq_slope, 20.0, 100.0);
  EXPECT_LT(std::abs(ea.v_hat - eb.v_hat), 0.01 * ea.stderr_v);
}

TEST(Speed, MeanMatchesJordanPrediction) {
  const FluctuationModel& fm = model();
  const SpeedRunConfig cfg;
  const SpdeStepper stepper(fm.L, cfg.dt, &fm.noise);
  const double z = 0.5;
  std::vector<double> v;
  for (int j = 0; j < 60; ++j) {
    auto rng = make_stream(31, j);
    v.push_back(speed_path(fm, stepper, z, cfg, rng).v_hat);
  }
  const double se = std::sqrt(stats::variance(v) / v.size());
  EXPECT_NEAR(stats::mean(v), fm.predicted_speed(z), 4.0 * se);
  // conjecture int p_+ ~ -1/omega0
  EXPECT_NEAR(fm.p_plus_mass * 0.2, -1.0, 1e-2);
}

TEST(Speed, HalvingStepMovesMeanLessThanStderr) {
  // noise increments are centred, so the mean of v_hat is the noiseless estimate
  const FluctuationModel& fm = model();
  const Eigen::VectorXd eta0 = make_initial(0.5, fm.basis, fm.st.grid).eta0;
  double v[2];
  for (int i = 0; i < 2; ++i) {
    const SpdeStepper stepper(fm.L, i == 0 ? 0.05 : 0.025);
    v[i] = estimate_speed(run_spde(eta0, stepper, 100.0, fm.dec.ell_dq, nullptr), SpeedMethod::ell_dq_slope,
                          20.0, 100.0)
               .v_hat;
  }
  // per-path sd of v_hat at T = 100 is about 0.06; stderr over 200 paths
  const double mc_stderr = 0.06 / std::sqrt(200.0);
  EXPECT_LT(std::abs(v[0] - v[1]), mc_stderr);
}

TEST(Ensemble, ZeroDrawsSitAtNoiseFloor) {
  const FluctuationModel& fm = model();
  SpeedRunConfig cfg;
  cfg.T = 50.0;
  cfg.t1 = 10.0;
  const EnsembleResult r = ensemble_variance(fm, 40, 3, cfg, 77, DrawMode::zero);
  for (double z : r.z) EXPECT_EQ(z, 0.0);
  // corrected variance is consistent with zero and far below the prediction
  EXPECT_LT(std::abs(r.var_v), 4.0 * r.noise_floor * std::sqrt(2.0 / 39.0) * 2.0);
  EXPECT_LT(r.var_between, 0.5 * r.sigma_v_sq_pred);
  EXPECT_NEAR(r.conjecture, 0.01, 1e-15);
}

TEST(Ensemble, IndependentOfWorkerCount) {
  const FluctuationModel& fm = model();
  SpeedRunConfig cfg;
  cfg.T = 20.0;
  cfg.t1 = 4.0;
  const EnsembleResult a = ensemble_variance(fm, 6, 2, cfg, 5, DrawMode::gaussian, 1);
  const EnsembleResult b = ensemble_variance(fm, 6, 2, cfg, 5, DrawMode::gaussian, 4);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.v_mean, b.v_mean);
  EXPECT_EQ(a.var_v, b.var_v);
}
