// A finite population drifts at a speed set by its frequency asymmetry. Compare the particle
// drift for a few seeds with the fluctuation-model prediction.
#include <cmath>
#include <cstdio>

#include "kfluct/particles.hpp"
#include "kfluct/spde.hpp"

int main() {
  using namespace kfluct;
  const double K = 4.0, omega0 = 0.5, T = 60.0, dt = 0.01;
  const int N = 400;
  const Grid grid(256, 32);
  const FluctuationModel fm({K, omega0}, grid);
  std::printf("int p+ = %.6f  (-1/omega0 = %.6f)\n", fm.p_plus_mass, -1.0 / omega0);
  std::printf("%6s %8s %14s %14s\n", "seed", "alpha", "slope", "slope*N/alpha");
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto rng = make_stream(seed);
    ParticleEnsemble e = sample_disorder(N, omega0, DisorderMode::iid, rng);
    init_stationary(e, fm.st, rng);
    const SimTrajectory tr = run(e, T, dt, K, rng, {.record_every = 10});
    const LinearFit f = fit_drift(tr, 10.0, T);
    const double ratio = e.alphaN != 0.0 ? f.slope * N / e.alphaN : NAN;
    std::printf("%6llu %8.0f %14.3e %14.4f\n", static_cast<unsigned long long>(seed), e.alphaN, f.slope, ratio);
  }
}
