#ifndef PARAWELL_TESTS_SUPPORT_HPP
#define PARAWELL_TESTS_SUPPORT_HPP

#include "parawell/grid.hpp"

#include <cstdint>
#include <random>

namespace parawell::testing {

inline FieldState random_state(const GridPtr& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FieldState u(grid);
  for (Eigen::Index i = 0; i < u.values().size(); ++i) u.values()[i] = dist(rng);
  return u;
}

}  // namespace parawell::testing

#endif
