#pragma once

#include <string>
#include <vector>

#include "bsdebranch/picard.hpp"

namespace bsde {

// Built-in problems; mesh counts apply to the spline-fitted driver where one
// is used.  Names: "paper-example", "zero-driver", "gradient-check".
Problem make_problem(const std::string& name, int n_y, int n_z);

std::vector<std::string> problem_names();

}  // namespace bsde
