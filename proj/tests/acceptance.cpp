// Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed here, not read from anywhere.
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "kfluct/mckv_pde.hpp"
#include "kfluct/parallel.hpp"
#include "kfluct/particles.hpp"
#include "kfluct/spde.hpp"
#include "kfluct/stats.hpp"
#include "oracles.hpp"

using namespace kfluct;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Collects failed sub-checks so a criterion reports every miss, not just the first.
struct Checks {
  std::string misses;
  bool ok = true;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      misses += (misses.empty() ? "" : "; ") + what;
    }
  }
  Outcome done(const std::string& summary) const { return {ok, ok ? summary : summary + " | " + misses}; }
};

const Grid grid48(256, 48);
const BasisSpec domain48{48, Layout::domain};

const StationaryState& state(double K, double omega0) {
  static std::map<std::pair<double, double>, StationaryState> cache;
  auto it = cache.find({K, omega0});
  if (it == cache.end()) it = cache.emplace(std::make_pair(K, omega0), build_stationary({K, omega0}, grid48)).first;
  return it->second;
}

const SpectralDecomposition& decomposition(double omega0) {
  static std::map<double, SpectralDecomposition> cache;
  auto it = cache.find(omega0);
  if (it == cache.end()) it = cache.emplace(omega0, decompose_L(state(4.0, omega0), domain48)).first;
  return it->second;
}

const FluctuationModel& fluct_model() {
  static const FluctuationModel fm({4.0, 0.2}, Grid(256, 32));
  return fm;
}

Eigen::VectorXd random_domain_vector(std::mt19937_64& rng, const BasisSpec& b) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(b.dim());
  for (int i = 0; i < b.dim(); ++i) v[i] = nd(rng) / (1.0 + b.order(i));
  return v;
}

DisorderedField smooth_density(std::mt19937_64& rng, const Grid& g, int modes, double amp) {
  std::normal_distribution<double> nd;
  DisorderedField h = DisorderedField::constant(g.M, 1.0 / two_pi);
  for (int s : {+1, -1})
    for (int k = 1; k <= modes; ++k) {
      const double a = amp * nd(rng) / (k * k), b = amp * nd(rng) / (k * k);
      for (int i = 0; i < g.M; ++i) h.component(s)[i] += a * std::cos(k * g.theta(i)) + b * std::sin(k * g.theta(i));
    }
  return h;
}

Outcome fixed_points() {
  Checks c;
  const Grid g(256, 32);
  for (double K : {0.5, 0.8, 1.0}) c.expect(solve_r0(K, 1e-12, g) == 0.0, fmt("r0(%g) != 0", K));
  double worst = 0.0;
  for (double K : {1.5, 2.0, 4.0, 6.0}) {
    const double r0 = solve_r0(K, 1e-13, g);
    c.expect(r0 > 0.0 && r0 < 1.0, fmt("r0(%g)=%g outside (0,1)", K, r0));
    worst = std::max(worst, std::abs(r0 - oracle::psi0_bessel(2.0 * K * r0)));
  }
  c.expect(worst <= 1e-10, fmt("fixed-point residual %.3g", worst));
  const double below = solve_r(1.5, 0.5, 1e-12, g), above = solve_r(4.0, 0.5, 1e-12, g);
  c.expect(below == 0.0, fmt("r(K=1.5, w0=0.5)=%g", below));
  c.expect(above > 0.0, "r(K=4, w0=0.5) = 0");
  return c.done(fmt("max |r0 - I1/I0(2Kr0)| = %.2e, r(1.5,0.5) = %g, r(4,0.5) = %.6f", worst, below, above));
}

Outcome stationarity() {
  const double res = stationarity_residual(build_stationary({4.0, 0.5}, Grid(256, 32)));
  return {res < 1e-6, fmt("max-norm residual %.2e", res)};
}

Outcome kernel() {
  Checks c;
  const StationaryState& st = state(4.0, 0.2);
  std::string seq;
  double prev = 1.0, last = 1.0;
  for (int n : {16, 24, 32, 48}) {
    const BasisSpec b{n, Layout::domain};
    const Eigen::VectorXd dq = kernel_coefficients(st, b);
    last = (assemble_L(st, b).entries * dq).norm() / dq.norm();
    // decreasing until roundoff takes over
    c.expect(last <= std::max(prev, 1e-10), fmt("n=%d residual %.3g did not decrease", n, last));
    prev = last;
    seq += fmt("%s%.2e", seq.empty() ? "" : " ", last);
  }
  c.expect(last < 1e-6, "n=48 residual too large");
  return c.done("kernel residual over n={16,24,32,48}: " + seq);
}

Outcome jordan() {
  Checks c;
  const SpectralDecomposition& dec = decomposition(0.2);
  c.expect(dec.jordan_residual < 1e-6, fmt("residual %.3g", dec.jordan_residual));
  const DisorderedField p = synthesize(dec.jordan_vec, domain48, grid48);
  const double mass = grid48.integrate(p.plus) + grid48.integrate(p.minus);
  c.expect(std::abs(mass) <= 1e-10, fmt("total mass %.3g", mass));
  std::string conj;
  for (double w0 : {0.2, 0.5}) {
    const double mp = decomposition(w0).jordan_vec[domain48.mass_index()];
    const double dev = std::abs(mp + 1.0 / w0) * w0;
    c.expect(dev < 0.01, fmt("conjecture off by %.3g at w0=%g", dev, w0));
    conj += fmt(" w0=%g: int p+ = %.6f (dev %.1e)", w0, mp, dev);
  }
  double alt = 1e300;
  for (double w0 : {0.2, 0.5}) {
    const BasisSpec b{48, Layout::zero_mass};
    const StationaryState& st = state(4.0, w0);
    alt = std::min(alt, jordan_least_squares(assemble_L(st, b), kernel_coefficients(st, b)).residual);
  }
  c.expect(alt > 1e-2, fmt("zero-mass domain residual %.3g", alt));
  return c.done(fmt("residual %.2e, mass %.1e;", dec.jordan_residual, mass) + conj +
                fmt("; zero-mass domain residual >= %.3f", alt));
}

Outcome p2() {
  const StationaryState& st = state(4.0, 0.2);
  const double cs = std::abs(cosine_similarity(apply_L(p2_explicit(st), st), e_field(st)));
  return {cs > 1.0 - 1e-6, fmt("|cos| = %.12f", cs)};
}

Outcome spectrum() {
  Checks c;
  std::string s;
  for (double w0 : {0.05, 0.1, 0.2}) {
    const SpectralDecomposition& dec = decomposition(w0);
    const double re_max = dec.eigenvalues.real().maxCoeff();
    c.expect(re_max <= 1e-8, fmt("w0=%g: max Re %.3g", w0, re_max));
    c.expect(dec.zero_cluster.size() == 2, fmt("w0=%g: zero cluster size %zu", w0, dec.zero_cluster.size()));
    // one Jordan block: the kernel is one-dimensional
    const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(assemble_L(state(4.0, w0), domain48).entries).singularValues();
    const double s2 = sv[sv.size() - 2];
    c.expect(s2 > 1e-4, fmt("w0=%g: second-smallest singular value %.3g", w0, s2));
    c.expect(dec.gap > 0.0, fmt("w0=%g: gap %.3g", w0, dec.gap));
    s += fmt("w0=%g gap=%.4f ", w0, dec.gap);
  }
  const StationaryState& st0 = state(4.0, 0.0);
  const double lq0 = gap_Lq0(st0, 48), a2 = gap_Atilde2(st0, 48), bound = gap_lower_bound(st0);
  // the exponential bound is only a lower bound for the Atilde2 gap; compare with the measured limit
  const double target = std::min(lq0, a2);
  const double rel = std::abs(decomposition(0.05).gap - target) / target;
  c.expect(rel < 0.25, fmt("gap at w0=0.05 off by %.3g", rel));
  c.expect(decomposition(0.05).gap >= bound, "gap below the exponential bound");
  return c.done(s + fmt("| limit min(%.4f, %.4f), rel dev %.3f, bound %.2e", lq0, a2, rel, bound));
}

Outcome atilde2_bound() {
  Checks c;
  std::string s;
  for (double K : {2.0, 4.0, 6.0}) {
    const StationaryState& st = state(K, 0.0);
    const double g = gap_Atilde2(st, 48), b = gap_lower_bound(st);
    c.expect(g >= b, fmt("K=%g gap %.3g < bound %.3g", K, g, b));
    s += fmt("K=%g: %.4f >= %.3e  ", K, g, b);
  }
  return c.done(s);
}

Outcome self_adjoint() {
  const StationaryState& st = state(4.0, 0.2);
  const BasisSpec b{32, Layout::domain};
  const CompositeMetric cm = composite_metric(st);
  const Eigen::MatrixXd SA = form_matrix(b, grid48, cm, [&](const DisorderedField& h) { return apply_A(h, st); });
  const double asym = relative_asymmetry(SA);
  const double off = conjugate_M(assemble_A(st, domain48)).offdiag_max;
  return {asym < 1e-8 && off < 1e-12, fmt("Gram asymmetry %.2e, off-diagonal blocks %.2e", asym, off)};
}

Outcome projector() {
  Checks c;
  const StationaryState& st = state(4.0, 0.2);
  const SpectralDecomposition& dec = decomposition(0.2);
  const OperatorMatrix L = assemble_L(st, domain48);
  const DisorderedField p = synthesize(dec.jordan_vec, domain48, grid48);
  const double pp = grid48.integrate(p.plus);
  std::mt19937_64 rng(23);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::VectorXd h = random_domain_vector(rng, domain48);
    const double ref = grid48.integrate(synthesize(h, domain48, grid48).plus) / pp;
    worst = std::max(worst, std::abs(dec.ell_p.dot(h) - ref) / std::abs(ref));
  }
  c.expect(worst <= 1e-8, fmt("ell_p relative error %.3g", worst));
  const double lpl = (dec.ell_p * L.entries).cwiseAbs().maxCoeff();
  c.expect(lpl <= 1e-10, fmt("ell_p L = %.3g", lpl));
  Eigen::MatrixXd V(domain48.dim(), 2);
  V << dec.kernel_vec, dec.jordan_vec;
  Eigen::MatrixXd ell(2, domain48.dim());
  ell << dec.ell_dq, dec.ell_p;
  Eigen::Matrix2d ref;
  ref << 0, 1, 0, 0;
  const double rep = (ell * L.entries * V - ref).cwiseAbs().maxCoeff();
  c.expect(rep <= 1e-6, fmt("P0 L P0 deviation %.3g", rep));
  return c.done(fmt("ell_p rel err %.2e, |ell_p L| %.2e, P0 L P0 dev %.2e", worst, lpl, rep));
}

Outcome pde() {
  Checks c;
  const Grid grid(256, 32);
  const ModelParams p{4.0, 0.5};
  std::mt19937_64 rng(8);
  const DisorderedField init = smooth_density(rng, grid, 5, 0.03);
  const double shift = 0.9;
  const DisorderedField rot{fourier::rotate(init.plus, shift), fourier::rotate(init.minus, shift)};
  const PdeState a = evolve(init, grid, 5.0, 0.01, p).final_state;
  const PdeState b = evolve(rot, grid, 5.0, 0.01, p).final_state;
  const double eq = (DisorderedField{fourier::rotate(a.density.plus, shift), fourier::rotate(a.density.minus, shift)} -
                     b.density).max_abs();
  c.expect(eq < 1e-8, fmt("rotation mismatch %.3g", eq));

  DisorderedField even = smooth_density(rng, grid, 5, 0.03);
  even.minus = reflect(even.plus);
  double sym = 0.0;
  evolve(even, grid, 5.0, 0.01, p, {.record_every = 100, .snapshot_every = 50, .on_snapshot = [&](const PdeState& s) {
           sym = std::max(sym, (s.density.plus - reflect(s.density.minus)).cwiseAbs().maxCoeff());
         }});
  c.expect(sym < 1e-8, fmt("even-symmetry defect %.3g", sym));

  const ModelParams fig{6.0, 1.0};
  const double r_star = solve_r(fig.K, fig.omega0, 1e-10, grid);
  double mass = 0.0;
  const PdeTrajectory tr = evolve(perturbed_uniform(grid, 1.0 / std::sqrt(600.0)), grid, 6.0, 0.01, fig,
                                  {.record_every = 10, .snapshot_every = 100, .on_snapshot = [&](const PdeState& s) {
                                     for (int sg : {+1, -1})
                                       mass = std::max(mass, std::abs(grid.integrate(s.density.component(sg)) - 1.0));
                                   }});
  c.expect(mass < 1e-10, fmt("mass drift %.3g", mass));
  const double r6 = tr.r.back();
  c.expect(std::abs(tr.t.back() - 6.0) < 1e-9 && std::abs(r6 / r_star - 1.0) <= 0.10,
           fmt("r(6) = %.4f vs r* = %.4f", r6, r_star));
  return c.done(fmt("rotation %.1e, symmetry %.1e, mass %.1e, r(6)/r* = %.4f", eq, sym, mass, r6 / r_star));
}

Outcome spde_laws() {
  Checks c;
  const FluctuationModel& fm = fluct_model();
  const SpdeStepper noisy(fm.L, 0.05, &fm.noise);
  auto rng = make_stream(7);
  const InitialCondition ic = make_initial(0.4, fm.basis, fm.st.grid);
  const SpdeTrajectory tn = run_spde(ic.eta0, noisy, 100.0, fm.dec.ell_dq, &rng);
  double drift = 0.0;
  for (double m : tn.mass_plus) drift = std::max(drift, std::abs(m - tn.mass_plus.front()));
  c.expect(drift <= 1e-10, fmt("mass drift %.3g", drift));
  std::string s;
  for (double dt : {0.1, 0.05, 0.025}) {
    const SpdeTrajectory tr = run_spde(fm.dec.jordan_vec, SpdeStepper(fm.L, dt), 100.0, fm.dec.ell_dq, nullptr);
    const double dev = std::abs(tr.ell_dq.back() / tr.t.back() - 1.0);
    c.expect(dev <= dt, fmt("dt=%g: |ell/t - 1| = %.3g", dt, dev));
    s += fmt(" dt=%g: %.1e", dt, dev);
  }
  return c.done(fmt("mass drift %.1e; |ell_dq(T)/T - 1| at T=100:", drift) + s);
}

Outcome speed_law() {
  const FluctuationModel& fm = fluct_model();
  const SpeedRunConfig cfg;
  const SpdeStepper stepper(fm.L, cfg.dt, &fm.noise);
  const double z = 0.5;
  const std::vector<double> v = parallel_map(200, resolve_workers(0), [&](std::size_t j) {
    auto rng = make_stream(7, j);
    return speed_path(fm, stepper, z, cfg, rng).v_hat;
  });
  const double mean = stats::mean(v), pred = fm.predicted_speed(z);
  const double rel = std::abs(mean / pred - 1.0);
  return {rel <= 0.10, fmt("mean v = %.5f, z/int p+ = %.5f, -z w0 = %.3f, rel dev %.3f, se %.4f", mean, pred,
                           -z * 0.2, rel, std::sqrt(stats::variance(v) / v.size()))};
}

Outcome variance_law() {
  const FluctuationModel& fm = fluct_model();
  const EnsembleResult r = ensemble_variance(fm, 500, 4, SpeedRunConfig{}, 1, DrawMode::gaussian, resolve_workers(0));
  const double rel = std::abs(r.var_v / r.sigma_v_sq_pred - 1.0);
  const stats::NormalityResult ad = stats::anderson_darling_normal(r.v_mean);
  return {rel <= 0.15 && ad.p_value > 0.01,
          fmt("var v = %.5f, (2 int p+)^-2 = %.5f, rel dev %.3f, normality p = %.3f", r.var_v, r.sigma_v_sq_pred, rel,
              ad.p_value)};
}

Outcome particle_sign() {
  const StationaryState st = build_stationary({4.0, 0.5}, Grid(256, 32));
  const int N = 400, runs = 50;
  const double T = 100.0, t1 = 10.0, dt = 0.01;
  struct Run {
    double alpha, slope;
  };
  auto group = [&](DisorderMode mode, std::uint64_t seed) {
    return parallel_map(runs, resolve_workers(0), [&](std::size_t k) {
      auto rng = make_stream(seed, k);
      ParticleEnsemble e = sample_disorder(N, 0.5, mode, rng);
      init_stationary(e, st, rng);
      const SimTrajectory tr = run(e, T, dt, 4.0, rng, {.record_every = 10});
      return Run{e.alphaN, fit_drift(tr, t1, T).slope};
    });
  };
  const std::vector<Run> iid = group(DisorderMode::iid, 2024), sym = group(DisorderMode::symmetrized, 2025);
  int big = 0, match = 0;
  std::vector<double> a_iid, a_sym;
  for (const Run& r : iid) {
    a_iid.push_back(std::abs(r.slope));
    if (std::abs(r.alpha) / std::sqrt(double(N)) > 0.5) {
      ++big;
      match += (r.slope > 0.0) == (r.alpha > 0.0);
    }
  }
  for (const Run& r : sym) a_sym.push_back(std::abs(r.slope));
  const stats::WelchResult w = stats::welch_t_test(a_sym, a_iid);
  const bool pass = big > 0 && match >= 0.8 * big && w.p_less < 0.05;
  return {pass, fmt("sign match %d/%d, mean |slope| sym %.2e vs iid %.2e, one-sided p = %.2e", match, big,
                    stats::mean(a_sym), stats::mean(a_iid), w.p_less)};
}

Outcome oracles() {
  Checks c;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, two_pi);
  double force = 0.0;
  for (int N : {2, 17, 300}) {
    Eigen::VectorXd th(N);
    for (int i = 0; i < N; ++i) th[i] = u(rng);
    force = std::max(force, (interaction_force(th, 3.0) - oracle::pairwise_force(th, 3.0)).cwiseAbs().maxCoeff());
  }
  c.expect(force <= 1e-12, fmt("force mismatch %.3g", force));
  const Grid g(128, 16);
  double mf = 0.0, sob = 0.0;
  const DisorderedField w = DisorderedField::constant(128, 1.0 / two_pi);
  for (int rep = 0; rep < 5; ++rep) {
    const DisorderedField h = smooth_density(rng, g, 12, 1.0);
    mf = std::max(mf, (mean_field(h, 3.0, g) - oracle::convolution_mean_field(h.plus, h.minus, 3.0)).cwiseAbs().maxCoeff());
    const DisorderedField z = h - DisorderedField::constant(128, 1.0 / two_pi);
    sob = std::max(sob, std::abs(sobolev_norm(z, w, g) / oracle::h_minus1_uniform(z.plus, z.minus) - 1.0));
  }
  c.expect(mf <= 1e-10, fmt("mean-field mismatch %.3g", mf));
  c.expect(sob <= 1e-8, fmt("Sobolev mismatch %.3g", sob));
  return c.done(fmt("force %.1e, mean field %.1e, Sobolev rel %.1e", force, mf, sob));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"fixed points", fixed_points},
      {"stationarity identity", stationarity},
      {"kernel vector", kernel},
      {"Jordan block", jordan},
      {"p2 proportionality", p2},
      {"spectrum and gap", spectrum},
      {"Atilde2 gap bound", atilde2_bound},
      {"A self-adjointness", self_adjoint},
      {"ell_p consistency", projector},
      {"PDE invariances", pde},
      {"SPDE conservation and Jordan law", spde_laws},
      {"speed law", speed_law},
      {"variance law", variance_law},
      {"particle sign test", particle_sign},
      {"oracle equivalences", oracles},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
