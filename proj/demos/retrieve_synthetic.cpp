// Recovers (A, alpha) from synthetic two-parameter intensity series, with and
// without noise, and prints a small table.

#include <cstdio>
#include <vector>

#include "phaseless/retrieval.hpp"
#include "phaseless/sensing.hpp"

using namespace phaseless;

int main() {
  const WavenumberGrid kg = make_wavenumber_grid(80.0, 85.0, 50);
  std::printf("%8s %8s | %10s %10s | %10s %10s\n", "A", "alpha", "A_hat", "alpha_hat",
              "A_noisy", "alpha_nsy");
  for (real A : {0.5, 1.0, 1.5, 2.0, 3.0}) {
    for (real alpha : {0.1, 0.3, 0.6, 1.0}) {
      std::vector<real> f(kg.count());
      for (int j = 0; j < kg.count(); ++j)
        f[j] = A * A + 1.0 - 2.0 * A * std::cos(kg.node(j) * alpha);

      std::vector<real> F1(kg.count()), F2(kg.count());
      cumulative_integrals(f, kg, F1, F2);
      const auto clean = extract_alpha_A(fit_xi(F2, f, kg, 1e-8), f, kg, 2.5);

      IntensityData data;
      data.plane = make_plane(1.0, 2.5, 2);
      data.kgrid = kg;
      data.values.resize(std::size_t(kg.count()) * data.pixels());
      for (int j = 0; j < kg.count(); ++j)
        for (std::size_t p = 0; p < data.pixels(); ++p)
          data.values[std::size_t(j) * data.pixels() + p] = f[j];
      const IntensityData noisy = add_noise(data, 0.05, 7);
      const PhaseMap map = retrieve_plane(noisy, 0.03);

      std::printf("%8.2f %8.2f | %10.4f %10.4f | %10.4f %10.4f\n", A, alpha,
                  clean.amplitude, clean.alpha, map.amplitude[0], map.alpha[0]);
    }
  }
  return 0;
}
