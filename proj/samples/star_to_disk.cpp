// Targets -> star weights -> disk metric -> discrete eigenvalues, for a
// shrinking epsilon.

#include <iomanip>
#include <iostream>

#include "prescribe/refine.hpp"

using namespace prescribe;

int main() {
  const graph::TargetSpectrum t{{1.0, 2.0, 3.0}};
  const auto w = graph::normalize_for_construction(graph::prescribe_weights(t));

  std::cout << "graph spectrum:";
  for (double l : graph::forward_spectrum(w)) std::cout << ' ' << l;
  std::cout << "\n";

  const double eps0 = surface::epsilon_for_waist(w, 0.5);
  std::cout << std::setprecision(5);
  for (double scale : {1.0, 0.5, 0.25}) {
    refine::PhiEpsConfig cfg;
    cfg.epsilon = scale * eps0;
    const auto d = refine::discrete_spectrum(w, cfg, 4);
    std::cout << "eps " << cfg.epsilon << "  dofs " << d.dofs << "  lambda";
    for (double l : d.lambda) std::cout << ' ' << l;
    std::cout << "\n";
  }
}
