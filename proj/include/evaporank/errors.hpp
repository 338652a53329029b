#pragma once

#include <stdexcept>
#include <string>

namespace evaporank {

// Thrown when an iterative numerical routine fails to reach its tolerance
// (root finding, ODE stepping, optimizer line search).
struct convergence_error : std::runtime_error {
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when adaptive quadrature exhausts its subdivision budget.
struct quadrature_error : std::runtime_error {
  explicit quadrature_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evaporank
