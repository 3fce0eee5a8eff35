// gradcheck.hpp
// central-difference verification of the reverse-mode gradients on small
// random networks, reported per parameter family.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmstrnn/arch.hpp"

namespace pmstrnn {

struct GradCheckClass {
  std::string name;      // tensor family, e.g. "L1.k_ff" or "intention.L2.fm0"
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  int trials = 0;
  double max_rel_err = 0.0;
  std::string worst;  // family where the max occurred
  std::vector<GradCheckClass> classes;
  bool pass(double tol) const { return max_rel_err <= tol; }
};

// a small randomized two-layer network; variant selects map counts and taus
ArchitectureSpec micro_architecture(std::uint64_t seed, int variant);

// runs `trials` random networks (micro ones when arch is null), each checked
// in open and closed mode against central differences with step fd_h
GradCheckReport gradcheck(const ArchitectureSpec* arch, std::uint64_t seed,
                          int trials, int frames = 5, double fd_h = 1e-5);

}  // namespace pmstrnn
