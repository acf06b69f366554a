#include "ttshs/model.hpp"

#include <algorithm>
#include <cmath>

#include "ttshs/errors.hpp"

namespace ttshs {

namespace {

bool square_of(const Matrix& m, Eigen::Index n) {
  return m.rows() == n && m.cols() == n;
}

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Low-discrepancy points for the PSD probe in higher dimensions.
double halton(int index, int base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

std::vector<Vector> probe_points(Eigen::Index n, double half_extent) {
  std::vector<Vector> points;
  if (n <= 3) {
    const int corners = 1 << n;
    for (int c = 0; c < corners; ++c) {
      Vector x(n);
      for (Eigen::Index i = 0; i < n; ++i)
        x[i] = ((c >> i) & 1) ? half_extent : -half_extent;
      points.push_back(x);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector x = Vector::Zero(n);
      x[i] = half_extent;
      points.push_back(x);
      x[i] = -half_extent;
      points.push_back(x);
    }
    points.push_back(Vector::Zero(n));
  } else {
    constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29,
                              31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    for (int s = 0; s < 64; ++s) {
      Vector x(n);
      for (Eigen::Index i = 0; i < n; ++i)
        x[i] = (2.0 * halton(s + 1, primes[i % 20]) - 1.0) * half_extent;
      points.push_back(x);
    }
  }
  return points;
}

void check_timing(const TimingLaw& timing, ValidationReport& report) {
  if (const auto* mix = std::get_if<PhaseTypeMixture>(&timing)) {
    double total = 0.0;
    for (const auto& b : mix->branches) {
      total += b.probability;
      if (!(b.rate > 0.0))
        report.errors.push_back(
            {"NONPOSITIVE_RATE", "phase-type branch rate must be > 0"});
      if (b.stages < 1)
        report.errors.push_back(
            {"STAGE_COUNT", "phase-type branch needs at least one stage"});
      if (b.probability < 0.0 || b.probability > 1.0)
        report.errors.push_back(
            {"PROBABILITY_RANGE", "branch probability outside [0, 1]"});
    }
    if (mix->branches.empty()) {
      report.errors.push_back({"EMPTY_MIXTURE", "no phase-type branches"});
    } else if (std::abs(total - 1.0) > 1e-12) {
      report.errors.push_back(
          {"PROBABILITY_SUM", "branch probabilities sum to " +
                                  std::to_string(total) + ", expected 1"});
    }
  } else {
    const auto& law = std::get<EmpiricalRenewal>(timing);
    if (!(law.mean > 0.0) || !std::isfinite(law.mean))
      report.errors.push_back(
          {"NONPOSITIVE_MEAN", "interval mean must be finite and > 0"});
    const bool deterministic =
        law.kind == EmpiricalRenewal::Kind::Deterministic;
    if (deterministic && law.cv2 != 0.0)
      report.errors.push_back(
          {"CV2_RANGE", "deterministic law requires cv2 = 0"});
    if (!deterministic && !(law.cv2 > 0.0))
      report.errors.push_back({"CV2_RANGE", "interval cv2 must be > 0"});
  }
}

}  // namespace

double timing_mean(const TimingLaw& law) {
  if (const auto* mix = std::get_if<PhaseTypeMixture>(&law))
    return interval_moment(*mix, 1);
  return std::get<EmpiricalRenewal>(law).mean;
}

double timing_cv2(const TimingLaw& law) {
  if (const auto* mix = std::get_if<PhaseTypeMixture>(&law))
    return mean_and_cv2(*mix).cv2;
  return std::get<EmpiricalRenewal>(law).cv2;
}

Vector steady_state_mean(const LinearDynamics& dynamics, double hurwitz_tol) {
  if (!is_hurwitz(dynamics.drift_matrix, hurwitz_tol)) {
    throw Error(ErrorCode::NotHurwitz,
                "steady-state mean needs a Hurwitz drift matrix");
  }
  return dynamics.drift_matrix.partialPivLu().solve(-dynamics.drift_offset);
}

TTSHSModel make_noise_imparting_model(const LinearDynamics& dynamics,
                                      const Matrix& cov_linear,
                                      const Matrix& cov_constant,
                                      TimingLaw timing,
                                      const Vector& initial_state) {
  const Eigen::Index n = dynamics.dimension();
  TTSHSModel model;
  model.dynamics = dynamics;
  model.timer_reset = {Matrix::Identity(n, n), Vector::Zero(n),
                       Matrix::Zero(n, n),     cov_linear,
                       cov_constant,           std::move(timing)};
  model.initial_state = initial_state;
  return model;
}

bool ValidationReport::contains(const std::string& code) const {
  auto match = [&](const Violation& v) { return v.code == code; };
  return std::any_of(errors.begin(), errors.end(), match) ||
         std::any_of(warnings.begin(), warnings.end(), match);
}

bool is_noise_imparting(const TTSHSModel& model, double tol) {
  const Eigen::Index n = model.dimension();
  const auto& r = model.timer_reset;
  if (!square_of(r.mean_gain, n) || r.mean_offset.size() != n ||
      !square_of(r.cov_quadratic, n))
    return false;
  return (r.mean_gain - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <= tol &&
         r.mean_offset.cwiseAbs().maxCoeff() <= tol &&
         r.cov_quadratic.cwiseAbs().maxCoeff() <= tol;
}

ValidationReport validate_model(const TTSHSModel& model,
                                const ValidateOptions& options) {
  ValidationReport report;
  const Eigen::Index n = model.dimension();
  if (n < 1) {
    report.errors.push_back({"DIMENSION_MISMATCH", "state dimension must be >= 1"});
    return report;
  }

  auto need_square = [&](const Matrix& m, const std::string& name) {
    if (!square_of(m, n))
      report.errors.push_back(
          {"DIMENSION_MISMATCH",
           name + " must be " + std::to_string(n) + "x" + std::to_string(n) +
               ", got " + shape_of(m)});
  };
  auto need_vector = [&](const Vector& v, const std::string& name) {
    if (v.size() != n)
      report.errors.push_back(
          {"DIMENSION_MISMATCH", name + " must have length " +
                                     std::to_string(n) + ", got " +
                                     std::to_string(v.size())});
  };

  need_square(model.dynamics.drift_matrix, "drift_matrix");
  const auto& reset = model.timer_reset;
  need_square(reset.mean_gain, "timer_reset.mean_gain");
  need_vector(reset.mean_offset, "timer_reset.mean_offset");
  need_square(reset.cov_quadratic, "timer_reset.cov_quadratic");
  need_square(reset.cov_linear, "timer_reset.cov_linear");
  need_square(reset.cov_constant, "timer_reset.cov_constant");
  need_vector(model.initial_state, "initial_state");
  for (std::size_t i = 0; i < model.memoryless_resets.size(); ++i) {
    const auto& f = model.memoryless_resets[i];
    const std::string tag = "memoryless_resets[" + std::to_string(i) + "].";
    need_square(f.mean_gain, tag + "mean_gain");
    need_vector(f.mean_offset, tag + "mean_offset");
    need_square(f.cov_quadratic, tag + "cov_quadratic");
    need_square(f.cov_linear, tag + "cov_linear");
    need_square(f.cov_constant, tag + "cov_constant");
    if (!(f.rate > 0.0))
      report.errors.push_back({"NONPOSITIVE_RATE", tag + "rate must be > 0"});
  }
  if (!report.errors.empty()) return report;  // shapes first, the rest assumes them

  if (options.require_hurwitz &&
      !is_hurwitz(model.dynamics.drift_matrix, options.hurwitz_tol)) {
    report.errors.push_back(
        {"NOT_HURWITZ",
         "drift matrix has an eigenvalue with real part >= " +
             std::to_string(-options.hurwitz_tol)});
  }

  if ((reset.cov_constant - reset.cov_constant.transpose())
          .cwiseAbs()
          .maxCoeff() > 1e-12) {
    report.errors.push_back(
        {"E_NOT_SYMMETRIC", "timer_reset.cov_constant must be symmetric"});
  }
  for (std::size_t i = 0; i < model.memoryless_resets.size(); ++i) {
    const auto& f = model.memoryless_resets[i];
    if ((f.cov_constant - f.cov_constant.transpose()).cwiseAbs().maxCoeff() >
        1e-12)
      report.errors.push_back(
          {"E_NOT_SYMMETRIC", "memoryless_resets[" + std::to_string(i) +
                                  "].cov_constant must be symmetric"});
    if (f.burst_law != BurstLaw::MomentMatched) {
      const bool additive =
          (f.mean_gain - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <=
              1e-12 &&
          f.cov_quadratic.cwiseAbs().maxCoeff() <= 1e-12 &&
          f.cov_linear.cwiseAbs().maxCoeff() <= 1e-12;
      if (!additive)
        report.errors.push_back(
            {"BURST_LAW_MISMATCH",
             "memoryless_resets[" + std::to_string(i) +
                 "]: a named burst law needs mean_gain = I and zero "
                 "state-dependent covariance"});
    }
  }

  check_timing(reset.timing, report);

  // PSD probe for the timer reset covariance, around the steady mean when
  // it exists and around the origin otherwise.
  double mean_norm = 0.0;
  if (is_hurwitz(model.dynamics.drift_matrix, options.hurwitz_tol)) {
    mean_norm = steady_state_mean(model.dynamics, options.hurwitz_tol)
                    .cwiseAbs()
                    .maxCoeff();
  }
  const double half_extent = 10.0 * mean_norm + 1.0;
  const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(n);
  double worst = 0.0;
  for (const Vector& x : probe_points(n, half_extent)) {
    const Matrix cov = reset.cov_quadratic * x * x.transpose() +
                       reset.cov_linear * x * ones + reset.cov_constant;
    worst = std::min(worst, min_symmetric_eigenvalue(cov));
  }
  if (worst < -options.psd_tol) {
    report.warnings.push_back(
        {"RESET_COV_NOT_PSD",
         "timer reset covariance has minimum eigenvalue " +
             std::to_string(worst) + " on the probe box (half-extent " +
             std::to_string(half_extent) + ")"});
  }

  return report;
}

}  // namespace ttshs
