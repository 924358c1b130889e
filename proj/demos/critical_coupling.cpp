// Sweep the coupling and print the synchronized order parameter, with and without disorder,
// next to the spectral gap of the linearized operator.
#include <cstdio>

#include "kfluct/spectrum.hpp"

int main() {
  using namespace kfluct;
  const Grid grid(256, 24);
  const BasisSpec basis{24, Layout::domain};
  std::printf("%6s %10s %10s %10s\n", "K", "r0", "r(0.5)", "gap(0.5)");
  for (double K : {1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0}) {
    const double r0 = solve_r0(K, 1e-12, grid);
    const StationaryState st = build_stationary({K, 0.5}, grid);
    if (st.r == 0.0) {
      std::printf("%6.2f %10.6f %10.6f %10s\n", K, r0, st.r, "-");
      continue;
    }
    const SpectralDecomposition dec = decompose_L(st, basis);
    std::printf("%6.2f %10.6f %10.6f %10.5f\n", K, r0, st.r, dec.gap);
  }
}
