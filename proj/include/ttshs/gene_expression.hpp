#ifndef TTSHS_GENE_EXPRESSION_HPP
#define TTSHS_GENE_EXPRESSION_HPP

#include "ttshs/model.hpp"

namespace ttshs {

/// Bursty protein production with timer-triggered division and binomial
/// partitioning, as a scalar TTSHS preset.
struct GeneModelParams {
  double burst_rate = 10.0;            // k_x, events/time
  double burst_size_mean = 1.0;        // <B>
  double burst_size_second_moment = 2.0;  // <B^2>
  double dilution_rate = 1.0;          // gamma_x, 1/time
  double partition_noise = 1.0;        // beta
  TimingLaw division_timing =
      EmpiricalRenewal{EmpiricalRenewal::Kind::Deterministic, 1.0, 0.0};
  BurstLaw burst_law = BurstLaw::Exponential;  // simulation-only detail
};

/// Division interval implied by the growth rate, and back. The constant
/// lives here so the assumption is auditable in one place.
double division_interval_from_rate(double dilution_rate);
double dilution_rate_from_interval(double mean_interval);

/// Builds the scalar model. Without bursts the production term folds into
/// the drift offset (a_hat = k_x <B>); with bursts the drift is pure
/// dilution and one memoryless additive reset carries the bursts.
TTSHSModel build_ttshs(const GeneModelParams& params, bool with_bursts);

/// The literature closed forms for steady mean and noise; returned as
/// printed, for side-by-side comparison with the engines (they are not
/// required to agree -- see gene_adjudication in the acceptance suite).
struct ClosedFormStats {
  double mean = 0.0;
  double cv2 = 0.0;
};

ClosedFormStats closed_form_stats(const GeneModelParams& params,
                                  bool with_bursts);

}  // namespace ttshs

#endif  // TTSHS_GENE_EXPRESSION_HPP
