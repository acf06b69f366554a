#ifndef TTSHS_SIMULATOR_HPP
#define TTSHS_SIMULATOR_HPP

#include <cstdint>
#include <vector>

#include "ttshs/model.hpp"
#include "ttshs/random.hpp"
#include "ttshs/renewal_engine.hpp"

namespace ttshs {

/// How the simulator realizes the timer reset from its two conditional
/// moments. Gaussian matches the moments for any model; Deterministic
/// requires a zero-covariance reset; ScaledBinomial is the exact molecule
/// partitioning law for scalar noise-imparting resets with variance D*x.
enum class ResetSampler { Gaussian, Deterministic, ScaledBinomial };

/// Exact solution of xdot = a_hat + A x after dt, via the (n+1)x(n+1)
/// augmented matrix exponential [[A, a_hat], [0, 0]]. Handles singular A.
Vector flow_propagate(const LinearDynamics& dynamics, const Vector& x,
                      double dt);

struct ProjectionStats {
  long long resets = 0;
  long long projections = 0;  // PSD clips beyond 1e-6 * ||cov||
};

/// One draw of the timer reset at state x.
Vector sample_reset(const TimerResetFamily& family, ResetSampler sampler,
                    const Vector& x, RandomStream& rng,
                    ProjectionStats* stats = nullptr);

/// One draw of a memoryless reset. A named burst law is sampled exactly;
/// otherwise the draw is Gaussian with the family's two moments.
Vector sample_reset(const MemorylessResetFamily& family, ResetSampler sampler,
                    const Vector& x, RandomStream& rng,
                    ProjectionStats* stats = nullptr);

struct RunOptions {
  int threads = 0;  // 0 = hardware concurrency
};

/// Per-time ensemble statistics. Standard errors are sample std over
/// paths divided by sqrt(paths); the covariance SE combines mean and
/// second-moment errors and is approximate.
struct EnsembleSummary {
  std::vector<double> times;
  std::vector<Vector> mean;
  std::vector<Matrix> second_moment;
  std::vector<Vector> se_mean;
  std::vector<Matrix> se_second_moment;
  long long paths = 0;
  std::uint64_t master_seed = 0;
  long long cov_projection_warnings = 0;

  // Timer-interval log moments (all completed intervals on all paths).
  long long interval_count = 0;
  double interval_sum = 0.0;
  double interval_sum2 = 0.0;
  double interval_sum3 = 0.0;

  Matrix covariance(std::size_t time_index) const;
  Matrix se_covariance(std::size_t time_index) const;
};

/// Monte Carlo over independent paths: exact affine flow between events,
/// direct interval sampling for the timer, fresh exponential clocks per
/// segment for memoryless resets. Path p consumes a stream derived only
/// from (master_seed, p) and paths are reduced in fixed blocks, so the
/// summary is byte-identical for any thread count.
EnsembleSummary run_ensemble(const TTSHSModel& model, ResetSampler sampler,
                             long long paths, std::span<const double> grid,
                             std::uint64_t master_seed,
                             const RunOptions& options = {});

struct SteadyEstimateOptions {
  long long paths = 100'000;
  std::uint64_t master_seed = 1;
  int threads = 0;
  int window_samples = 64;
  double burn_multiplier = 20.0;  // times max(<T>, slowest flow constant)
};

/// Stationary moments by burn-in followed by within-path time averaging
/// over the second half of the horizon. Per-path averages are i.i.d., so
/// the reported standard errors are exact sample statistics.
struct SteadyEstimate {
  Vector mean;
  Vector se_mean;
  Matrix covariance;
  Matrix se_covariance;
  Matrix second_moment;
  double burn_in = 0.0;
  double horizon = 0.0;
  long long paths = 0;
  long long cov_projection_warnings = 0;
};

SteadyEstimate steady_estimate(const TTSHSModel& model, ResetSampler sampler,
                               const SteadyEstimateOptions& options);

struct ConditionalBin {
  double tau_center = 0.0;
  long long count = 0;
  double mean = 0.0;
  double ci_half_width = 0.0;  // 95%
};

/// Empirical test of mean-independence from timer age: state component
/// `component` observed at t_probe, binned by time since the last timer
/// event, with a weighted least-squares slope of bin mean versus age.
struct ConditionalStats {
  std::vector<ConditionalBin> bins;
  double global_mean = 0.0;
  double slope = 0.0;
  double slope_ci_half_width = 0.0;  // 95%
};

ConditionalStats timer_conditional_stats(const TTSHSModel& model,
                                         ResetSampler sampler, long long paths,
                                         double t_probe, int bins,
                                         std::uint64_t master_seed,
                                         int component = 0,
                                         const RunOptions& options = {});

/// Uniform grid [0, t_end] with `points` entries (points >= 2).
std::vector<double> make_time_grid(double t_end, int points);

}  // namespace ttshs

#endif  // TTSHS_SIMULATOR_HPP
