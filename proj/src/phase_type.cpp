#include "ttshs/phase_type.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ttshs/errors.hpp"

namespace ttshs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (m + q - 1)! / (m - 1)! = m (m+1) ... (m+q-1).
double rising_factorial(int m, int q) {
  if (m + q <= 171) {
    double prod = 1.0;
    for (int j = 0; j < q; ++j) prod *= static_cast<double>(m + j);
    return prod;
  }
  return std::exp(std::lgamma(static_cast<double>(m + q)) -
                  std::lgamma(static_cast<double>(m)));
}

double log_sum_exp(const std::vector<double>& terms) {
  double peak = -kInf;
  for (double t : terms) peak = std::max(peak, t);
  if (peak == -kInf) return -kInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

}  // namespace

bool is_valid_mixture(const PhaseTypeMixture& mix) {
  if (mix.branches.empty()) return false;
  double total = 0.0;
  for (const auto& b : mix.branches) {
    if (!(b.rate > 0.0) || b.stages < 1) return false;
    if (b.probability < 0.0 || b.probability > 1.0) return false;
    total += b.probability;
  }
  return std::abs(total - 1.0) <= 1e-12;
}

double interval_moment(const PhaseTypeMixture& mix, int q) {
  if (q < 1)
    throw Error(ErrorCode::DimensionMismatch, "moment order must be >= 1");
  double sum = 0.0;
  for (const auto& b : mix.branches) {
    sum += b.probability * rising_factorial(b.stages, q) /
           std::pow(b.rate, static_cast<double>(q));
  }
  return sum;
}

MeanCv2 mean_and_cv2(const PhaseTypeMixture& mix) {
  const double m1 = interval_moment(mix, 1);
  const double m2 = interval_moment(mix, 2);
  return {m1, (m2 - m1 * m1) / (m1 * m1)};
}

double log_density(const PhaseTypeMixture& mix, double tau) {
  if (tau < 0.0) return -kInf;
  std::vector<double> terms;
  terms.reserve(mix.branches.size());
  for (const auto& b : mix.branches) {
    if (b.probability == 0.0) continue;
    const double kt = b.rate * tau;
    if (tau == 0.0 && b.stages > 1) continue;  // density vanishes at 0
    const double log_t_term =
        (b.stages > 1) ? (b.stages - 1) * std::log(tau) : 0.0;
    terms.push_back(std::log(b.probability) + b.stages * std::log(b.rate) +
                    log_t_term - kt - std::lgamma(double(b.stages)));
  }
  return log_sum_exp(terms);
}

double log_survival(const PhaseTypeMixture& mix, double tau) {
  if (tau <= 0.0) return 0.0;
  std::vector<double> terms;
  for (const auto& b : mix.branches) {
    if (b.probability == 0.0) continue;
    const double log_kt = std::log(b.rate * tau);
    // log of sum_{j<m} (k tau)^j / j!, accumulated in log space.
    std::vector<double> stage_terms;
    stage_terms.reserve(b.stages);
    for (int j = 0; j < b.stages; ++j) {
      stage_terms.push_back(j * log_kt - std::lgamma(double(j + 1)));
    }
    terms.push_back(std::log(b.probability) - b.rate * tau +
                    log_sum_exp(stage_terms));
  }
  return log_sum_exp(terms);
}

double hazard_at(const PhaseTypeMixture& mix, double tau) {
  if (tau < 0.0)
    throw Error(ErrorCode::DimensionMismatch, "hazard needs tau >= 0");
  const double log_s = log_survival(mix, tau);
  if (log_s < std::log(1e-300)) return kInf;  // SURVIVAL_UNDERFLOW sentinel
  const double log_f = log_density(mix, tau);
  if (log_f == -kInf) return 0.0;
  return std::exp(log_f - log_s);
}

double sample_interval(const PhaseTypeMixture& mix, RandomStream& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  const ErlangBranch* chosen = &mix.branches.back();
  for (const auto& b : mix.branches) {
    acc += b.probability;
    if (u < acc) {
      chosen = &b;
      break;
    }
  }
  double sum = 0.0;
  for (int j = 0; j < chosen->stages; ++j) sum += rng.exponential(chosen->rate);
  return sum;
}

PhaseTypeMixture fit_mixture(double target_mean, double target_cv2) {
  if (!(target_mean > 0.0) || !(target_cv2 > 0.0)) {
    throw Error(ErrorCode::UnreachableCv2,
                "fit needs mean > 0 and cv2 > 0");
  }
  PhaseTypeMixture mix;
  if (std::abs(target_cv2 - 1.0) <= 1e-12) {
    mix.branches = {{1.0, 1, 1.0 / target_mean}};
    return mix;
  }
  if (target_cv2 > 1.0) {
    // Balanced-mean hyperexponential: each branch carries half the mean.
    const double p1 =
        0.5 * (1.0 + std::sqrt((target_cv2 - 1.0) / (target_cv2 + 1.0)));
    const double p2 = 1.0 - p1;
    mix.branches = {{p1, 1, 2.0 * p1 / target_mean},
                    {p2, 1, 2.0 * p2 / target_mean}};
    return mix;
  }
  const double inv = 1.0 / target_cv2;
  const double rounded = std::round(inv);
  if (std::abs(inv - rounded) <= 1e-9 * inv) {
    const int m = static_cast<int>(rounded);
    mix.branches = {{1.0, m, static_cast<double>(m) / target_mean}};
    return mix;
  }
  // Common-rate Erlang(m)/Erlang(m+1) mixture, m = floor(1/cv2).
  const int m = static_cast<int>(std::floor(inv));
  const double u = static_cast<double>(m + 1);
  const double p =
      (u * target_cv2 - std::sqrt(u * (1.0 - m * target_cv2))) /
      (1.0 + target_cv2);
  const double k = (u - p) / target_mean;
  mix.branches = {{p, m, k}, {1.0 - p, m + 1, k}};
  return mix;
}

}  // namespace ttshs
