#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hypball::gc {

// One verified operation: the largest relative deviation between the
// reverse-mode gradient and central finite differences over all sampled
// points (infinity norm over coordinates, scaled by max(1, |fd|_inf)).
struct OpReport {
  std::string name;
  double worst_rel = 0.0;
  int points = 0;
};

// Checks every differentiable exported operation at `points` random
// in-domain inputs each (h = 1e-5), resampling any input that lands within
// 1e-3 of a clamp or branch boundary, where the two-sided difference would
// straddle a kink.
std::vector<OpReport> run_gradcheck_suite(std::uint64_t seed, int points = 20);

double worst_relative_error(const std::vector<OpReport>& reports);

}  // namespace hypball::gc
