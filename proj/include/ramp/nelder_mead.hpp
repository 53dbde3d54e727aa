#pragma once

#include <functional>
#include <vector>

#include "ramp/common.hpp"

namespace ramp {

struct NelderMeadOptions {
  int max_iterations = 500;
  double diameter_tolerance = 1e-6;   // stop once the simplex is this small
  double initial_step = 0.01;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

struct NelderMeadResult {
  VecX x;
  double value = kInf;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> history;   // best value after each iteration
};

/// Derivative-free downhill simplex minimisation. Infinite objective values
/// are treated as rejected points.
NelderMeadResult nelder_mead(const std::function<double(const VecX&)>& f, const VecX& x0,
                             const NelderMeadOptions& options = {});

}  // namespace ramp
