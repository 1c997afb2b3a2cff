// Prints the teleportation fidelity curve next to the best CHSH value for a
// handful of resource angles.
#include <cstdio>

#include "belltide/belltide.hpp"

int main() {
  using namespace belltide;
  OptimizerConfig cfg;
  cfg.restarts = 4;
  std::printf("%-10s %-12s %-12s %-10s\n", "theta", "F_closed", "F_numeric", "CHSH");
  for (double theta : theta_grid(0.0, kThetaMax, 5)) {
    const auto best = maximize(Scenario(ScenarioKind::tele_chsh, theta), cfg);
    std::printf("%-10.5f %-12.8f %-12.8f %-10.6f\n", theta, teleport_fidelity_closed(theta),
                teleport_fidelity_numeric(theta, SphereQuadrature{40, 40}), best.value);
  }
}
