#include "ttshs/ode.hpp"

#include <algorithm>
#include <cmath>

#include "ttshs/errors.hpp"

namespace ttshs {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0,
                 c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0,
                 a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
// Error weights b5 - b4.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0,
                 e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous-extension weights (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

double error_norm(const Vector& err, const Vector& y0, const Vector& y1,
                  double abs_tol, double rel_tol) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sk =
        abs_tol + rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sk;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

}  // namespace

std::vector<Vector> integrate_ode(const OdeRhs& rhs, const Vector& y0,
                                  std::span<const double> grid,
                                  const OdeOptions& options) {
  if (grid.empty()) return {};
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] < grid[i - 1])
      throw Error(ErrorCode::DimensionMismatch, "time grid must be sorted");
  }

  std::vector<Vector> out;
  out.reserve(grid.size());
  out.push_back(y0);
  std::size_t next = 1;
  while (next < grid.size() && grid[next] == grid.front()) {
    out.push_back(y0);
    ++next;
  }
  if (next == grid.size()) return out;

  const Eigen::Index n = y0.size();
  double t = grid.front();
  const double t_end = grid.back();
  Vector y = y0;
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  Vector y_stage(n), y_next(n), err(n);
  rhs(t, y, k1);

  double h = options.initial_step;
  if (h <= 0.0) {
    // Crude initial guess; the controller corrects it within a few steps.
    const double d0 = y.norm();
    const double d1n = k1.norm();
    h = (d1n > 1e-12) ? 0.01 * std::max(d0, 1.0) / d1n : 1e-6;
    h = std::min(h, t_end - t);
  }

  for (std::size_t step = 0; step < options.max_steps; ++step) {
    if (t >= t_end) break;
    h = std::min(h, t_end - t);

    y_stage = y + h * (a21 * k1);
    rhs(t + c2 * h, y_stage, k2);
    y_stage = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, y_stage, k3);
    y_stage = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, y_stage, k4);
    y_stage = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, y_stage, k5);
    y_stage = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, y_stage, k6);
    y_next = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs(t + h, y_next, k7);

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double norm =
        error_norm(err, y, y_next, options.abs_tol, options.rel_tol);

    if (norm <= 1.0) {
      // Accepted: emit grid points inside (t, t+h] via the dense output.
      const double t_new = t + h;
      while (next < grid.size() && grid[next] <= t_new) {
        const double theta = (grid[next] - t) / h;
        if (theta >= 1.0) {
          out.push_back(y_next);
        } else {
          const Vector delta = y_next - y;
          const Vector r1 = y;
          const Vector r2 = delta;
          const Vector r3 = h * k1 - delta;
          const Vector r4 = delta - h * k7 - r3;
          const Vector r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 +
                                 d6 * k6 + d7 * k7);
          out.push_back(r1 + theta * (r2 + (1.0 - theta) *
                                               (r3 + theta * (r4 + (1.0 - theta) * r5))));
        }
        ++next;
      }
      t = t_new;
      y.swap(y_next);
      k1.swap(k7);  // FSAL
      if (next >= grid.size()) return out;
      const double factor =
          (norm > 0.0) ? 0.9 * std::pow(norm, -0.2) : 5.0;
      h *= std::clamp(factor, 0.2, 5.0);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(norm, -0.2));
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw Error(ErrorCode::NumericalFailure,
                  "step size collapsed during ODE integration");
    }
  }
  if (next < grid.size()) {
    throw Error(ErrorCode::NumericalFailure,
                "ODE integration exceeded the step budget");
  }
  return out;
}

}  // namespace ttshs
