// Grid search for sine displacement amplitudes on the three-letter fusion
// system: prints the best candidate with its return-map rotation numbers and
// the adaptive schedule n_2, n_3.

#include <cstdio>

#include "tilerot/catalog.hpp"
#include "tilerot/return_map.hpp"

using namespace tilerot;

int main() {
  auto sys = catalog::fusion_noclass({10, 10, 10});
  SineSearch cfg;
  for (int i = 0; i < 5; ++i) {
    cfg.grid_a.push_back(0.2 + 0.1 * i);
    cfg.grid_b.push_back(-0.8 + 0.1 * i);
  }
  cfg.grid_c = {-0.14, 0.0, 0.14};
  cfg.min_margin = 0.1;
  auto best = search_sine_parameters(sys, cfg);
  if (!best) {
    std::puts("no candidate clears the margin");
    return 1;
  }
  std::printf("amplitudes a=%.2f b=%.2f c=%.2f\n", best->p[0], best->p[1], best->p[2]);
  for (const auto* lv : {&best->level1, &best->level2})
    std::printf("  rho_A %.5f  rho_B %.5f  rho_AB %.5f  defect %+.5f  margin %.4f\n", lv->rho_a, lv->rho_b, lv->rho_ab, lv->defect,
                lv->margin);
  std::printf("schedule n2=%llu n3=%llu, step separation %.0f / %.0f\n", static_cast<unsigned long long>(best->schedule[0]),
              static_cast<unsigned long long>(best->schedule[1]), best->separation2, best->separation3);
}
