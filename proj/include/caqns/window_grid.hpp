#pragma once

#include "caqns/errors.hpp"

namespace caqns {

// Uniform partition of [0, T] into L windows of width τ = T / L.
struct WindowGrid {
  int L = 1;
  double T = 1.0;

  WindowGrid() = default;
  WindowGrid(int windows, double horizon) : L(windows), T(horizon) {
    if (L < 1) throw ValidationError("window count must be positive");
    if (!(T > 0)) throw ValidationError("horizon must be positive");
  }

  double tau() const { return T / L; }
  double lower(int n) const { return (n - 1) * tau(); }  // n is 1-based
  double upper(int n) const { return n * tau(); }
};

}  // namespace caqns
