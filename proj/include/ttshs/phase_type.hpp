#ifndef TTSHS_PHASE_TYPE_HPP
#define TTSHS_PHASE_TYPE_HPP

#include <cstdint>
#include <vector>

#include "ttshs/random.hpp"

namespace ttshs {

/// One Erlang branch: `stages` exponential(rate) holding times in series,
/// entered with probability `probability` after each event.
struct ErlangBranch {
  double probability = 1.0;
  int stages = 1;
  double rate = 1.0;
};

/// Mixture of Erlang distributions for the interval between events.
struct PhaseTypeMixture {
  std::vector<ErlangBranch> branches;

  int total_stages() const {
    int m = 0;
    for (const auto& b : branches) m += b.stages;
    return m;
  }
};

/// True when probabilities sum to 1 (1e-12), every rate is positive and
/// every stage count is at least 1.
bool is_valid_mixture(const PhaseTypeMixture& mix);

/// q-th raw moment of the interval:
///   sum_i p_i / k_i^q * (m_i + q - 1)! / (m_i - 1)!
/// The factorial ratio uses an exact product when it cannot overflow and
/// log-gamma otherwise.
double interval_moment(const PhaseTypeMixture& mix, int q);

struct MeanCv2 {
  double mean = 0.0;
  double cv2 = 0.0;
};

MeanCv2 mean_and_cv2(const PhaseTypeMixture& mix);

/// Interval density and survival, evaluated in log space so large
/// rate*tau products do not overflow the stage sums.
double log_density(const PhaseTypeMixture& mix, double tau);
double log_survival(const PhaseTypeMixture& mix, double tau);

/// Hazard h(tau) = f(tau) / (1 - F(tau)). Returns +infinity once survival
/// underflows below 1e-300 (event certain).
double hazard_at(const PhaseTypeMixture& mix, double tau);

/// Draws a branch with its probability, then sums `stages` exponential
/// variates at the branch rate.
double sample_interval(const PhaseTypeMixture& mix, RandomStream& rng);

/// Two-moment fit covering every cv2 > 0 with at most two branches:
///   cv2 == 1          -> single exponential
///   1/cv2 integral    -> single Erlang
///   cv2 <  1          -> common-rate mixture of Erlang(m), Erlang(m+1),
///                        m = floor(1/cv2)
///   cv2 >  1          -> balanced-mean two-branch hyperexponential
PhaseTypeMixture fit_mixture(double target_mean, double target_cv2);

}  // namespace ttshs

#endif  // TTSHS_PHASE_TYPE_HPP
