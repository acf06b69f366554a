#include "ttshs/gene_expression.hpp"

#include <cmath>

#include "ttshs/errors.hpp"

namespace ttshs {

double division_interval_from_rate(double dilution_rate) {
  return std::log(2.0) / (2.0 * dilution_rate);
}

double dilution_rate_from_interval(double mean_interval) {
  return std::log(2.0) / (2.0 * mean_interval);
}

TTSHSModel build_ttshs(const GeneModelParams& params, bool with_bursts) {
  if (params.burst_size_second_moment <
      params.burst_size_mean * params.burst_size_mean) {
    throw Error(ErrorCode::ValidationError,
                "<B^2> must be at least <B>^2");
  }
  if (!(params.dilution_rate > 0.0) || !(params.burst_rate > 0.0) ||
      !(params.partition_noise > 0.0)) {
    throw Error(ErrorCode::ValidationError,
                "gene parameters must be positive");
  }

  TTSHSModel model;
  model.dynamics.drift_matrix = Matrix::Constant(1, 1, -params.dilution_rate);
  model.dynamics.drift_offset = Vector::Constant(
      1, with_bursts ? 0.0 : params.burst_rate * params.burst_size_mean);
  model.timer_reset = {Matrix::Identity(1, 1),
                       Vector::Zero(1),
                       Matrix::Zero(1, 1),
                       Matrix::Constant(1, 1, params.partition_noise),
                       Matrix::Zero(1, 1),
                       params.division_timing};
  model.initial_state = Vector::Zero(1);
  if (with_bursts) {
    MemorylessResetFamily bursts;
    bursts.rate = params.burst_rate;
    bursts.mean_gain = Matrix::Identity(1, 1);
    bursts.mean_offset = Vector::Constant(1, params.burst_size_mean);
    bursts.cov_quadratic = Matrix::Zero(1, 1);
    bursts.cov_linear = Matrix::Zero(1, 1);
    bursts.cov_constant = Matrix::Constant(
        1, 1,
        params.burst_size_second_moment -
            params.burst_size_mean * params.burst_size_mean);
    bursts.burst_law = params.burst_law;
    model.memoryless_resets.push_back(std::move(bursts));
  }
  return model;
}

ClosedFormStats closed_form_stats(const GeneModelParams& params,
                                  bool with_bursts) {
  ClosedFormStats stats;
  stats.mean =
      params.burst_rate * params.burst_size_mean / params.dilution_rate;
  stats.cv2 = std::log(2.0) * params.partition_noise / (2.0 * stats.mean);
  if (with_bursts) {
    stats.cv2 += 0.5 * params.burst_size_second_moment /
                 (params.burst_size_mean * stats.mean);
  }
  return stats;
}

}  // namespace ttshs
