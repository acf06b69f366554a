#ifndef TTSHS_RENEWAL_ENGINE_HPP
#define TTSHS_RENEWAL_ENGINE_HPP

#include <utility>
#include <vector>

#include "ttshs/model.hpp"
#include "ttshs/ode.hpp"

namespace ttshs {

/// First two moments of the state at one time point.
struct MomentState {
  double time = 0.0;
  Vector mean;
  Matrix second_moment;  // <x x^T>, symmetric

  Matrix covariance() const {
    return second_moment - mean * mean.transpose();
  }
};

/// Exact moments for models whose timer reset only imparts noise
/// (J = I, R = 0, Q = 0). The mean never sees the timing law; the steady
/// covariance sees it only through the mean interval.
namespace renewal_engine {

/// Mean trajectory of d<x>/dt = a_hat + A<x> plus the memoryless-reset
/// drift, evaluated at the grid times (grid starts the clock at its first
/// entry; the initial state is taken at time grid.front()).
std::vector<std::pair<double, Vector>> transient_mean(
    const TTSHSModel& model, std::span<const double> grid,
    const OdeOptions& options = {});

/// Steady-state covariance C from
///   A C + C A^T = -(1/<T>) sym(D xbar 1_n + E)
/// extended with the closed memoryless-reset terms. Depends on the timing
/// law only through its mean interval.
Matrix steady_state_covariance(const TTSHSModel& model);

/// Steady-state mean including memoryless-reset drift.
Vector steady_state_mean(const TTSHSModel& model);

/// Throws NotNoiseImparting unless J = I, R = 0, Q = 0 to 1e-12.
void require_noise_imparting(const TTSHSModel& model);

}  // namespace renewal_engine

}  // namespace ttshs

#endif  // TTSHS_RENEWAL_ENGINE_HPP
