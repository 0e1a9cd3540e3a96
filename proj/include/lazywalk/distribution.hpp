#pragma once
#include <vector>

namespace lazywalk {

// Probability mass per lattice site / grid cell on a uniform 1-D grid.
struct ProbabilityDistribution {
  std::vector<double> x;  // cell-center positions, ascending
  std::vector<double> p;  // masses, summing to ~1
  double spacing = 1.0;
};

}  // namespace lazywalk
