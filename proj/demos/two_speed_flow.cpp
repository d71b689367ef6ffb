// Time-one map of a two-speed flow on the fusion tiling whose tiles are
// mostly a's in A-supertiles and mostly b's in B-supertiles. Orbits started
// in different regions see different rotation numbers.

#include <cstdio>

#include "tilerot/catalog.hpp"
#include "tilerot/map.hpp"
#include "tilerot/rotation.hpp"

using namespace tilerot;

int main() {
  auto sys = catalog::nue({10, 100, 1000});
  sys.mode = ScalarMode::floating;
  auto flow = smoothed_step_flow(sys, {1.0, 2.0}, 0.05);
  struct Run {
    const char* seed;
    double x0;
    bool backward;
  };
  for (const Run& r : {Run{"A|A", 0, false}, Run{"B|B", 1111, false}, Run{"B|A", 0, false}, Run{"B|A", 0, true}}) {
    auto w = build_window<double>(sys, 3, Seed::parse(r.seed));
    FlowMap<double> f(flow, w);
    auto est = rotation_number_estimate<double>(f, r.x0, 10000, r.backward);
    std::printf("seed %s x0 %-6g %-8s rho %.5f  (spread %.1e over the last decade)\n", r.seed, r.x0,
                r.backward ? "backward" : "forward", est.rho, est.cauchy_width);
  }
}
