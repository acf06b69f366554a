#ifndef TTSHS_ODE_HPP
#define TTSHS_ODE_HPP

#include <functional>
#include <span>
#include <vector>

#include "ttshs/linalg.hpp"

namespace ttshs {

struct OdeOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double initial_step = 0.0;  // 0 = choose automatically
  std::size_t max_steps = 20'000'000;
};

using OdeRhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

/// Dormand-Prince 5(4) with the order-4 continuous extension. Integrates
/// from t0 = grid.front() (y0 given there) and returns the solution at
/// every grid time. Grid must be non-decreasing. Runge-Kutta steps
/// preserve linear invariants of the RHS exactly, so conserved sums hold
/// to roundoff along the trajectory.
std::vector<Vector> integrate_ode(const OdeRhs& rhs, const Vector& y0,
                                  std::span<const double> grid,
                                  const OdeOptions& options = {});

}  // namespace ttshs

#endif  // TTSHS_ODE_HPP
