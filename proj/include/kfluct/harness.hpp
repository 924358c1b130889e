#pragma once

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "mckv_pde.hpp"
#include "output.hpp"
#include "parallel.hpp"
#include "particles.hpp"
#include "spde.hpp"
#include "spectrum.hpp"
#include "stats.hpp"

namespace kfluct {

inline constexpr const char* tool_version = "1.0.0";

// What one subcommand produced. Data files are named <subcommand>_<config hash>*.
struct ResultBundle {
  std::string subcommand;
  std::string stem;
  std::filesystem::path dir;
  std::vector<std::string> artifacts;
  nlohmann::json summary;

  std::filesystem::path file(const std::string& suffix) {
    const std::string name = stem + suffix;
    artifacts.push_back(name);
    return dir / name;
  }
};

namespace harness_detail {

using nlohmann::json;

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline ModelParams params(const RunConfig& c) { return {c.real("K"), c.real("omega0")}; }
inline Grid grid(const RunConfig& c) { return Grid(static_cast<int>(c.integer("M")), static_cast<int>(c.integer("n"))); }
inline double horizon(const RunConfig& c, double fallback) { return c.real_or("T", fallback); }
inline double window_start(const RunConfig& c, double T) { return c.real_or("t1", T / 5.0); }
inline std::uint64_t seed(const RunConfig& c) { return static_cast<std::uint64_t>(c.integer("seed")); }

inline void check_window(double t1, double T) {
  if (!(t1 >= 0.0 && t1 < T)) throw ConfigError("t1: must lie in [0, T)");
}

inline void run_stationary(const RunConfig& c, ResultBundle& b) {
  const Grid g = grid(c);
  const StationaryState st = build_stationary(params(c), g);
  b.summary = {{"r", st.r},
               {"roots", st.roots},
               {"multiple_roots", st.roots.size() > 1},
               {"r0", st.r0},
               {"Z_plus", st.Z_plus},
               {"Z_minus", st.Z_minus},
               {"kappa_plus", st.kappa_plus},
               {"kappa_minus", st.kappa_minus},
               {"stationarity_residual", stationarity_residual(st)}};
  out::write_csv(b.file(".csv"), {{"theta", to_std(g.nodes())},
                                  {"q_plus", to_std(st.q.plus)},
                                  {"q_minus", to_std(st.q.minus)},
                                  {"q0", to_std(st.q0)}});
}

inline void run_pde(const RunConfig& c, ResultBundle& b) {
  const Grid g = grid(c);
  const ModelParams p = params(c);
  const double T = horizon(c, 30.0), dt = c.real("dt");
  const DisorderedField init =
      c.text("init") == "stationary" ? build_stationary(p, g).q : perturbed_uniform(g, c.real("eps"));
  const PdeTrajectory tr = evolve(init, g, T, dt, p, {.record_every = static_cast<int>(c.integer("record_every"))});
  const DisorderedField& f = tr.final_state.density;
  b.summary = {{"r_final", tr.r.back()},
               {"psi_final", tr.psi.back()},
               {"r_fixed_point", solve_r(p.K, p.omega0, 1e-10, g)},
               {"mass_error", std::max(std::abs(g.integrate(f.plus) - 1.0), std::abs(g.integrate(f.minus) - 1.0))},
               {"min_density", std::min(f.plus.minCoeff(), f.minus.minCoeff())}};
  out::write_csv(b.file(".csv"), {{"t", tr.t}, {"r", tr.r}, {"psi_unwrapped", tr.psi}});
}

struct ParticleRun {
  double alphaN = 0.0;
  SimTrajectory tr;
  LinearFit fit;
};

inline std::vector<ParticleRun> particle_runs(const RunConfig& c, double T, double t1, int workers) {
  const ModelParams p = params(c);
  const int N = static_cast<int>(c.integer("N"));
  const DisorderMode mode = parse_disorder_mode(c.text("disorder"));
  const bool stationary_init = c.text("init") == "stationary";
  const std::optional<StationaryState> st =
      stationary_init ? std::optional<StationaryState>(build_stationary(p, grid(c))) : std::nullopt;
  const double dt = c.real("dt");
  const int every = static_cast<int>(c.integer("record_every"));
  const std::uint64_t s0 = seed(c);
  return parallel_map(static_cast<std::size_t>(c.integer("runs")), workers, [&](std::size_t k) {
    auto rng = make_stream(s0, k);
    ParticleEnsemble e = sample_disorder(N, p.omega0, mode, rng);
    if (st)
      init_stationary(e, *st, rng);
    else
      init_uniform(e, rng);
    ParticleRun r;
    r.alphaN = e.alphaN;
    r.tr = run(e, T, dt, p.K, rng, {.record_every = every});
    r.fit = fit_drift(r.tr, t1, T);
    return r;
  });
}

inline std::string run_suffix(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_run%03zu.csv", k);
  return buf;
}

inline void run_particles(const RunConfig& c, ResultBundle& b, int workers) {
  const double T = horizon(c, 100.0), t1 = window_start(c, T);
  check_window(t1, T);
  const std::vector<ParticleRun> runs = particle_runs(c, T, t1, workers);
  json per = json::array();
  const double N = static_cast<double>(c.integer("N"));
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const ParticleRun& r = runs[k];
    out::write_csv(b.file(run_suffix(k)), {{"t", r.tr.times},
                                           {"rN", r.tr.rN},
                                           {"psiN_unwrapped", r.tr.psiN},
                                           {"eta_sin", r.tr.eta_sin}});
    per.push_back({{"run", k},
                   {"alphaN", r.alphaN},
                   {"alphaN_over_sqrtN", r.alphaN / std::sqrt(N)},
                   {"slope", r.fit.slope},
                   {"stderr", r.fit.stderr_slope},
                   {"rN_final", r.tr.rN.back()}});
  }
  b.summary = {{"window", {t1, T}}, {"runs", per}};
}

inline void run_spectrum(const RunConfig& c, ResultBundle& b) {
  const Grid g = grid(c);
  const StationaryState st = build_stationary(params(c), g);
  const BasisSpec basis{g.n, Layout::domain};
  const OperatorMatrix L = assemble_L(st, basis);
  const SpectralDecomposition dec = eigendecompose(L, c.real("threshold"));
  const Eigen::VectorXd dq = kernel_coefficients(st, basis);
  json zero = json::array();
  for (int i : dec.zero_cluster) zero.push_back({dec.eigenvalues[i].real(), dec.eigenvalues[i].imag()});
  b.summary = {{"dimension", basis.dim()},
               {"zero_cluster_size", dec.zero_cluster.size()},
               {"zero_cluster", zero},
               {"gap", dec.gap},
               {"max_real_part", dec.eigenvalues.real().maxCoeff()},
               {"kernel_residual", (L.entries * dq).norm() / dq.norm()},
               {"gap_Lq0", gap_Lq0(st, g.n)},
               {"gap_Atilde2", gap_Atilde2(st, g.n)},
               {"gap_lower_bound", gap_lower_bound(st)}};
  out::write_csv(b.file(".csv"), {{"re", to_std(dec.eigenvalues.real())}, {"im", to_std(dec.eigenvalues.imag())}});
}

inline void run_jordan(const RunConfig& c, ResultBundle& b) {
  const Grid g = grid(c);
  const ModelParams p = params(c);
  const StationaryState st = build_stationary(p, g);
  const BasisSpec basis{g.n, Layout::domain};
  const SpectralDecomposition dec = decompose_L(st, basis, c.real("threshold"));
  const DisorderedField pf = synthesize(dec.jordan_vec, basis, g);
  const DisorderedField dq = synthesize(dec.kernel_vec, basis, g);
  const double mp = g.integrate(pf.plus);

  const BasisSpec alt{g.n, Layout::zero_mass};
  const OperatorMatrix Lalt = assemble_L(st, alt);
  const double alt_res = jordan_least_squares(Lalt, kernel_coefficients(st, alt)).residual;

  // P0 L P0 in the {dq, p} coordinates
  const OperatorMatrix L = assemble_L(st, basis);
  Eigen::Matrix2d rep;
  rep << dec.ell_dq.dot(L.entries * dec.kernel_vec), dec.ell_dq.dot(L.entries * dec.jordan_vec),
      dec.ell_p.dot(L.entries * dec.kernel_vec), dec.ell_p.dot(L.entries * dec.jordan_vec);

  b.summary = {{"kernel_residual", dec.kernel_residual},
               {"jordan_residual", dec.jordan_residual},
               {"mass_p_plus", mp},
               {"mass_p_total", mp + g.integrate(pf.minus)},
               {"conjecture_error", p.omega0 > 0.0 ? std::abs(mp + 1.0 / p.omega0) * p.omega0 : -1.0},
               {"zero_mass_domain_residual", alt_res},
               {"P0_L_P0", {{rep(0, 0), rep(0, 1)}, {rep(1, 0), rep(1, 1)}}}};
  out::write_csv(b.file(".csv"), {{"theta", to_std(g.nodes())},
                                  {"p_plus", to_std(pf.plus)},
                                  {"p_minus", to_std(pf.minus)},
                                  {"dq_plus", to_std(dq.plus)},
                                  {"dq_minus", to_std(dq.minus)}});
}

inline SpeedRunConfig speed_config(const RunConfig& c) {
  SpeedRunConfig s;
  s.T = horizon(c, 100.0);
  s.dt = c.real("dt");
  s.t1 = window_start(c, s.T);
  s.record_every = static_cast<int>(c.integer("record_every"));
  s.method = c.text("method") == "eta_sin_slope" ? SpeedMethod::eta_sin_slope : SpeedMethod::ell_dq_slope;
  check_window(s.t1, s.T);
  return s;
}

inline void run_spde_single(const RunConfig& c, ResultBundle& b) {
  const FluctuationModel fm(params(c), grid(c));
  const SpeedRunConfig s = speed_config(c);
  const SpdeStepper stepper(fm.L, s.dt, &fm.noise);
  auto rng = make_stream(seed(c), 0);
  const double z = c.real("z");
  const InitialCondition ic = make_initial(z, fm.basis, fm.st.grid, {}, c.real("scaleX"), &rng);
  const SpdeTrajectory tr = run_spde(ic.eta0, stepper, s.T, fm.dec.ell_dq, &rng, s.record_every);
  const SpeedEstimate a = estimate_speed(tr, SpeedMethod::ell_dq_slope, s.t1, s.T, fm.st.r);
  const SpeedEstimate e = estimate_speed(tr, SpeedMethod::eta_sin_slope, s.t1, s.T, fm.st.r);
  b.summary = {{"z", z},
               {"mass_p_plus", fm.p_plus_mass},
               {"predicted_speed", fm.predicted_speed(z)},
               {"ell_dq_slope", {{"v_hat", a.v_hat}, {"stderr", a.stderr_v}}},
               {"eta_sin_slope", {{"v_hat", e.v_hat}, {"stderr", e.stderr_v}}},
               {"window", {s.t1, s.T}}};
  out::write_csv(b.file(".csv"), {{"t", tr.t}, {"ell_dq", tr.ell_dq}, {"eta_sin", tr.eta_sin}, {"mass_plus", tr.mass_plus}});
}

inline void run_ensemble(const RunConfig& c, ResultBundle& b, int workers) {
  const FluctuationModel fm(params(c), grid(c));
  const SpeedRunConfig s = speed_config(c);
  const int draws = static_cast<int>(c.integer("draws")), paths = static_cast<int>(c.integer("paths"));
  const DrawMode mode = c.text("draw_mode") == "zero" ? DrawMode::zero : DrawMode::gaussian;
  const EnsembleResult r = ensemble_variance(fm, draws, paths, s, seed(c), mode, workers);
  json normal = nullptr;
  if (mode == DrawMode::gaussian && draws >= 8) {
    const stats::NormalityResult ad = stats::anderson_darling_normal(r.v_mean);
    normal = {{"test", "anderson_darling"}, {"A2_star", ad.A2_star}, {"p_value", ad.p_value}};
  }
  b.summary = {{"z", r.z},
               {"v_hat", r.v_mean},
               {"paths_per_draw", r.paths_per_draw},
               {"var_between", r.var_between},
               {"noise_floor", r.noise_floor},
               {"var_v", r.var_v},
               {"sigma_v_sq_pred", r.sigma_v_sq_pred},
               {"conjecture_omega0_sq_over_4", r.conjecture},
               {"mass_p_plus", r.p_plus_mass},
               {"normality", normal},
               {"window", {s.t1, s.T}}};
  std::vector<double> idx(draws);
  for (int i = 0; i < draws; ++i) idx[i] = i;
  out::write_csv(b.file(".csv"), {{"draw", idx}, {"z", r.z}, {"v_hat", r.v_mean}, {"v_path_var", r.v_path_var}});
}

inline void run_figures(const RunConfig& c, ResultBundle& b, int workers) {
  const Grid g = grid(c);
  const ModelParams p = params(c);
  const double T = horizon(c, 30.0), t1 = window_start(c, T);
  check_window(t1, T);
  const std::vector<ParticleRun> runs = particle_runs(c, T, t1, workers);
  const PdeTrajectory pde = evolve(perturbed_uniform(g, c.real("eps")), g, T, c.real("dt"), p,
                                   {.record_every = static_cast<int>(c.integer("record_every"))});
  std::vector<out::Column> cols{{"t", runs.front().tr.times}, {"r_pde", pde.r}};
  std::vector<out::Series> rs{{"PDE r_t", pde.t, pde.r}}, ps;
  json per = json::array();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const ParticleRun& r = runs[k];
    const std::string tag = "run" + std::to_string(k);
    cols.push_back({"rN_" + tag, r.tr.rN});
    cols.push_back({"psiN_" + tag, r.tr.psiN});
    char label[64];
    std::snprintf(label, sizeof label, "alpha=%+.1f", r.alphaN);
    rs.push_back({"r_N " + std::string(label), r.tr.times, r.tr.rN});
    ps.push_back({label, r.tr.times, r.tr.psiN});
    per.push_back({{"run", k}, {"alphaN", r.alphaN}, {"slope", r.fit.slope}, {"stderr", r.fit.stderr_slope}});
  }
  out::write_csv(b.file(".csv"), cols);
  out::write_text(b.file("_r.svg"), out::svg_plot("order parameter", "t", "r", rs));
  out::write_text(b.file("_psi.svg"), out::svg_plot("phase of the order parameter", "t", "psi (unwrapped)", ps));
  b.summary = {{"runs", per}, {"window", {t1, T}}};
}

}  // namespace harness_detail

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"stationary", "pde",      "particles", "spectrum",
                                          "jordan",     "spde",     "ensemble",  "figures"};
  return s;
}

inline std::string config_hash(const RunConfig& c, const std::string& sub) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(sub + "\n" + c.canonical())));
  return buf;
}

// Runs one subcommand into dir. On failure the manifest is still written, marked failed,
// listing whatever was flushed, and the original exception propagates.
inline ResultBundle run_subcommand(const std::string& sub, const RunConfig& c, const std::filesystem::path& dir) {
  namespace hd = harness_detail;
  bool known = false;
  for (const auto& s : subcommands()) known |= s == sub;
  if (!known) throw ConfigError("unknown subcommand '" + sub + "'");
  validate_common(c);

  ResultBundle b;
  b.subcommand = sub;
  b.dir = dir;
  b.stem = sub + "_" + config_hash(c, sub);
  std::filesystem::create_directories(dir);
  const int workers = resolve_workers(static_cast<int>(c.integer("workers")));

  const auto t0 = std::chrono::steady_clock::now();
  std::string error;
  std::exception_ptr failure;
  try {
    if (sub == "stationary") hd::run_stationary(c, b);
    else if (sub == "pde") hd::run_pde(c, b);
    else if (sub == "particles") hd::run_particles(c, b, workers);
    else if (sub == "spectrum") hd::run_spectrum(c, b);
    else if (sub == "jordan") hd::run_jordan(c, b);
    else if (sub == "spde") hd::run_spde_single(c, b);
    else if (sub == "ensemble") hd::run_ensemble(c, b, workers);
    else hd::run_figures(c, b, workers);
    if (!b.summary.is_null()) out::write_json(b.file("_summary.json"), b.summary);
  } catch (const std::exception& e) {
    error = e.what();
    failure = std::current_exception();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json manifest = {{"tool", "kuramoto-fluct"},
                             {"version", tool_version},
                             {"subcommand", sub},
                             {"config", c.effective()},
                             {"config_hash", config_hash(c, sub)},
                             {"csv_schema_version", out::csv_schema_version},
                             {"artifacts", b.artifacts},
                             {"workers", workers},
                             {"timings", {{"wall_seconds", secs}}},
                             {"status", error.empty() ? "ok" : "failed"}};
  if (!error.empty()) manifest["error"] = error;
  out::write_json(dir / (b.stem + "_manifest.json"), manifest);
  if (failure) std::rethrow_exception(failure);
  return b;
}

}  // namespace kfluct
