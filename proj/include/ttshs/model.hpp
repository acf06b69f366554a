#ifndef TTSHS_MODEL_HPP
#define TTSHS_MODEL_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ttshs/linalg.hpp"
#include "ttshs/phase_type.hpp"

namespace ttshs {

/// xdot = drift_offset + drift_matrix * x between events.
struct LinearDynamics {
  Vector drift_offset;  // units state/time
  Matrix drift_matrix;  // units 1/time

  Eigen::Index dimension() const { return drift_offset.size(); }
};

/// Steady-state mean -A^-1 * a_hat of the flow. Requires Hurwitz A.
Vector steady_state_mean(const LinearDynamics& dynamics,
                         double hurwitz_tol = 1e-9);

/// Named interval laws the simulator can sample directly; engines consume
/// only the mean (and cv2 where a phase-type fit is requested).
struct EmpiricalRenewal {
  enum class Kind { Deterministic, Gamma, LogNormal };
  Kind kind = Kind::Deterministic;
  double mean = 1.0;
  double cv2 = 0.0;  // 0 for deterministic
};

using TimingLaw = std::variant<PhaseTypeMixture, EmpiricalRenewal>;

double timing_mean(const TimingLaw& law);
double timing_cv2(const TimingLaw& law);

/// Timer-triggered reset: conditional mean J x + R, conditional second
/// central moment sym(Q x x^T + D x 1_n + E).
struct TimerResetFamily {
  Matrix mean_gain;      // J
  Vector mean_offset;    // R
  Matrix cov_quadratic;  // Q
  Matrix cov_linear;     // D
  Matrix cov_constant;   // E
  TimingLaw timing;
};

/// How the simulator realizes an additive memoryless reset beyond its two
/// conditional moments. Only meaningful when mean_gain = I and
/// cov_quadratic = cov_linear = 0; engines never consult it.
enum class BurstLaw { MomentMatched, Exponential, Constant, Geometric };

/// State reset occurring at a constant exponential rate, with the same
/// two-moment parametrization as the timer family.
struct MemorylessResetFamily {
  double rate = 1.0;  // events/time
  Matrix mean_gain;
  Vector mean_offset;
  Matrix cov_quadratic;
  Matrix cov_linear;
  Matrix cov_constant;
  BurstLaw burst_law = BurstLaw::MomentMatched;
};

struct TTSHSModel {
  LinearDynamics dynamics;
  TimerResetFamily timer_reset;
  std::vector<MemorylessResetFamily> memoryless_resets;
  Vector initial_state;  // deterministic initial condition

  Eigen::Index dimension() const { return dynamics.dimension(); }
};

/// Convenience builder: noise-imparting timer reset (J = I, R = 0, Q = 0)
/// with the given D, E and timing.
TTSHSModel make_noise_imparting_model(const LinearDynamics& dynamics,
                                      const Matrix& cov_linear,
                                      const Matrix& cov_constant,
                                      TimingLaw timing,
                                      const Vector& initial_state);

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> errors;
  std::vector<Violation> warnings;

  bool valid() const { return errors.empty(); }
  bool contains(const std::string& code) const;
};

struct ValidateOptions {
  bool require_hurwitz = false;
  double hurwitz_tol = 1e-9;
  double psd_tol = 1e-8;
};

/// Pure check: every violated invariant becomes one report entry with a
/// machine-readable code. The reset-covariance PSD probe (64 deterministic
/// points on a box around the steady mean) reports a warning, not an
/// error, since the reset law has no printed admissibility condition.
ValidationReport validate_model(const TTSHSModel& model,
                                const ValidateOptions& options = {});

/// True when the timer reset satisfies J = I, R = 0, Q = 0 to 1e-12.
bool is_noise_imparting(const TTSHSModel& model, double tol = 1e-12);

}  // namespace ttshs

#endif  // TTSHS_MODEL_HPP
