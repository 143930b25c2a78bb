#pragma once

#include <functional>

#include "esp/graph.hpp"

namespace esp {

/// Compares the reverse-mode gradient of a scalar loss against central
/// finite differences over every parameter. `build` must construct the loss
/// in the given graph (over the current parameter values) and return the
/// loss node. Returns the worst per-parameter relative error
///   |ad - fd| / max(|ad|, |fd|, 0.01 * ||ad||_inf, 1e-8).
double gradient_check(ParameterVector& params,
                      const std::function<int(Graph&)>& build, double h = 1e-5);

}  // namespace esp
