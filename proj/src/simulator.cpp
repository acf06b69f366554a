#include "ttshs/simulator.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "ttshs/errors.hpp"

namespace ttshs {

namespace {

constexpr long long kMaxSegmentsPerPath = 200'000'000;

double sample_timing_interval(const TimingLaw& timing, RandomStream& rng) {
  if (const auto* mix = std::get_if<PhaseTypeMixture>(&timing))
    return sample_interval(*mix, rng);
  const auto& law = std::get<EmpiricalRenewal>(timing);
  switch (law.kind) {
    case EmpiricalRenewal::Kind::Deterministic:
      return law.mean;
    case EmpiricalRenewal::Kind::Gamma:
      return rng.gamma(1.0 / law.cv2, law.mean * law.cv2);
    case EmpiricalRenewal::Kind::LogNormal: {
      const double sigma2 = std::log1p(law.cv2);
      const double mu = std::log(law.mean) - 0.5 * sigma2;
      return std::exp(mu + std::sqrt(sigma2) * rng.normal());
    }
  }
  throw Error(ErrorCode::DimensionMismatch, "unknown timing law");
}

Vector gaussian_reset(const Vector& mean, const Matrix& cov,
                      RandomStream& rng, ProjectionStats* stats) {
  const Eigen::Index n = mean.size();
  if (stats != nullptr) ++stats->resets;
  if (cov.cwiseAbs().maxCoeff() == 0.0) return mean;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Vector& values = eig.eigenvalues();
  double clipped = 0.0;
  Vector scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (values[i] < 0.0) {
      clipped += values[i] * values[i];
      scale[i] = 0.0;
    } else {
      scale[i] = std::sqrt(values[i]);
    }
  }
  if (stats != nullptr &&
      std::sqrt(clipped) > 1e-6 * cov.norm()) {
    ++stats->projections;
  }
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return mean + eig.eigenvectors() * (scale.asDiagonal() * z);
}

bool near_zero(const Matrix& m, double tol = 1e-12) {
  return m.size() == 0 || m.cwiseAbs().maxCoeff() <= tol;
}

// Scalar partition reset: molecules of size beta split symmetrically.
// Centered so the conditional mean is exactly x for any x; reduces to
// 2 beta Binomial(x/beta, 1/2) when x is an integer number of molecules.
double partition_reset(double x, double beta, RandomStream& rng) {
  const long long molecules = std::llround(x / beta);
  if (molecules <= 0) return x;
  const auto kept =
      static_cast<long long>(rng.binomial_half(std::uint64_t(molecules)));
  return x + beta * static_cast<double>(2 * kept - molecules);
}

void require_partition_shape(const Matrix& j, const Vector& r,
                             const Matrix& q, const Matrix& d,
                             const Matrix& e) {
  const Eigen::Index n = r.size();
  const bool ok = n == 1 &&
                  near_zero(j - Matrix::Identity(1, 1)) && near_zero(q) &&
                  near_zero(e) && r.cwiseAbs().maxCoeff() <= 1e-12 &&
                  d(0, 0) > 0.0;
  if (!ok) {
    throw Error(ErrorCode::SamplerMismatch,
                "ScaledBinomial needs a scalar reset with J = 1, R = 0, "
                "Q = E = 0 and D > 0");
  }
}

}  // namespace

Vector flow_propagate(const LinearDynamics& dynamics, const Vector& x,
                      double dt) {
  if (dt < 0.0)
    throw Error(ErrorCode::DimensionMismatch, "flow needs dt >= 0");
  if (dt == 0.0) return x;
  const Eigen::Index n = dynamics.dimension();
  if (n == 1) {
    // Closed form of the augmented exponential: [[e^{a dt}, phi], [0, 1]]
    // with phi = a_hat dt expm1(a dt)/(a dt).
    const double a = dynamics.drift_matrix(0, 0);
    const double z = a * dt;
    const double phi =
        (std::abs(z) < 1e-12) ? dt : dt * std::expm1(z) / z;
    Vector out(1);
    out[0] = std::exp(z) * x[0] + dynamics.drift_offset[0] * phi;
    return out;
  }
  Matrix augmented = Matrix::Zero(n + 1, n + 1);
  augmented.topLeftCorner(n, n) = dynamics.drift_matrix * dt;
  augmented.topRightCorner(n, 1) = dynamics.drift_offset * dt;
  const Matrix expm = augmented.exp();
  return expm.topLeftCorner(n, n) * x + expm.topRightCorner(n, 1);
}

Vector sample_reset(const TimerResetFamily& family, ResetSampler sampler,
                    const Vector& x, RandomStream& rng,
                    ProjectionStats* stats) {
  const Eigen::Index n = x.size();
  switch (sampler) {
    case ResetSampler::Deterministic: {
      if (!near_zero(family.cov_quadratic) || !near_zero(family.cov_linear) ||
          !near_zero(family.cov_constant)) {
        throw Error(ErrorCode::SamplerMismatch,
                    "Deterministic sampler needs Q = D = E = 0");
      }
      if (stats != nullptr) ++stats->resets;
      return family.mean_gain * x + family.mean_offset;
    }
    case ResetSampler::ScaledBinomial: {
      require_partition_shape(family.mean_gain, family.mean_offset,
                              family.cov_quadratic, family.cov_linear,
                              family.cov_constant);
      if (stats != nullptr) ++stats->resets;
      Vector out(1);
      out[0] = partition_reset(x[0], family.cov_linear(0, 0), rng);
      return out;
    }
    case ResetSampler::Gaussian: {
      const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(n);
      const Matrix cov =
          symmetrize(family.cov_quadratic * x * x.transpose() +
                     family.cov_linear * x * ones + family.cov_constant);
      return gaussian_reset(family.mean_gain * x + family.mean_offset, cov,
                            rng, stats);
    }
  }
  throw Error(ErrorCode::SamplerMismatch, "unknown sampler");
}

Vector sample_reset(const MemorylessResetFamily& family, ResetSampler sampler,
                    const Vector& x, RandomStream& rng,
                    ProjectionStats* stats) {
  const Eigen::Index n = x.size();
  if (family.burst_law != BurstLaw::MomentMatched) {
    if (n != 1) {
      throw Error(ErrorCode::SamplerMismatch,
                  "named burst laws are scalar-state only");
    }
    if (stats != nullptr) ++stats->resets;
    const double mean_burst = family.mean_offset[0];
    Vector out = x;
    switch (family.burst_law) {
      case BurstLaw::Exponential:
        out[0] += rng.exponential(1.0 / mean_burst);
        return out;
      case BurstLaw::Constant:
        out[0] += mean_burst;
        return out;
      case BurstLaw::Geometric: {
        // Support {1, 2, ...}, success probability 1/mean.
        if (mean_burst < 1.0) {
          throw Error(ErrorCode::SamplerMismatch,
                      "geometric burst needs mean >= 1");
        }
        const double p = 1.0 / mean_burst;
        const double u = rng.uniform();
        const double draws =
            (p >= 1.0) ? 1.0
                       : std::floor(std::log(u) / std::log1p(-p)) + 1.0;
        out[0] += draws;
        return out;
      }
      case BurstLaw::MomentMatched: break;  // unreachable
    }
  }
  if (sampler == ResetSampler::Deterministic) {
    if (!near_zero(family.cov_quadratic) || !near_zero(family.cov_linear) ||
        !near_zero(family.cov_constant)) {
      throw Error(ErrorCode::SamplerMismatch,
                  "Deterministic sampler needs Q = D = E = 0");
    }
    if (stats != nullptr) ++stats->resets;
    return family.mean_gain * x + family.mean_offset;
  }
  const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(n);
  const Matrix cov =
      symmetrize(family.cov_quadratic * x * x.transpose() +
                 family.cov_linear * x * ones + family.cov_constant);
  return gaussian_reset(family.mean_gain * x + family.mean_offset, cov, rng,
                        stats);
}

namespace {

struct IntervalLog {
  long long count = 0;
  double sum = 0.0;
  double sum2 = 0.0;
  double sum3 = 0.0;

  void add(double t) {
    ++count;
    sum += t;
    sum2 += t * t;
    sum3 += t * t * t;
  }
};

// One path of the piecewise-deterministic process. Calls
// observe(grid_index, state, timer_age) for every grid time; grid must be
// sorted and nonnegative. States recorded at an event time are the
// pre-reset flow values.
template <class Observer>
void walk_path(const TTSHSModel& model, ResetSampler sampler,
               RandomStream& rng, std::span<const double> grid,
               Observer&& observe, IntervalLog* intervals,
               ProjectionStats* projections) {
  Vector x = model.initial_state;
  double t = 0.0;
  std::size_t g = 0;
  // Intervals are logged when drawn: every logged value is an i.i.d.
  // sample of the timing law, so pooled moment estimates carry no
  // horizon-censoring bias (the interval straddling the horizon is
  // length-biased and must not be dropped).
  double interval = sample_timing_interval(model.timer_reset.timing, rng);
  if (intervals != nullptr) intervals->add(interval);
  double timer_left = interval;

  for (long long segment = 0; g < grid.size(); ++segment) {
    if (segment > kMaxSegmentsPerPath) {
      throw Error(ErrorCode::NumericalFailure,
                  "event budget exceeded on one path");
    }
    double dt_next = timer_left;
    int fired = -1;
    for (std::size_t f = 0; f < model.memoryless_resets.size(); ++f) {
      const double dt =
          rng.exponential(model.memoryless_resets[f].rate);
      if (dt < dt_next) {
        dt_next = dt;
        fired = static_cast<int>(f);
      }
    }
    const double t_event = t + dt_next;

    while (g < grid.size() && grid[g] <= t_event) {
      const double lag = grid[g] - t;
      observe(g, flow_propagate(model.dynamics, x, lag),
              (interval - timer_left) + lag);
      ++g;
    }
    if (g >= grid.size()) break;

    x = flow_propagate(model.dynamics, x, dt_next);
    t = t_event;
    if (fired < 0) {
      x = sample_reset(model.timer_reset, sampler, x, rng, projections);
      interval = sample_timing_interval(model.timer_reset.timing, rng);
      if (intervals != nullptr) intervals->add(interval);
      timer_left = interval;
    } else {
      x = sample_reset(model.memoryless_resets[fired], sampler, x, rng,
                       projections);
      timer_left -= dt_next;
    }
  }
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

constexpr long long kBlockSize = 1024;

// Runs fn(block_index, first_path, last_path) over fixed-size path blocks
// on a small pool. Block boundaries are independent of the thread count,
// so per-block sums reduce to identical totals under any schedule.
template <class Fn>
void for_each_block(long long paths, int threads, Fn&& fn) {
  const long long blocks = (paths + kBlockSize - 1) / kBlockSize;
  std::atomic<long long> next{0};
  auto worker = [&]() {
    for (;;) {
      const long long b = next.fetch_add(1);
      if (b >= blocks) return;
      const long long first = b * kBlockSize;
      const long long last = std::min(paths, first + kBlockSize);
      fn(b, first, last);
    }
  };
  const int pool = static_cast<int>(
      std::max<long long>(1, std::min<long long>(threads, blocks)));
  if (pool == 1) {
    worker();
    return;
  }
  std::vector<std::thread> team;
  team.reserve(pool);
  for (int i = 0; i < pool; ++i) team.emplace_back(worker);
  for (auto& th : team) th.join();
}

struct PairLayout {
  Eigen::Index n = 0;
  Eigen::Index pairs = 0;

  explicit PairLayout(Eigen::Index dim)
      : n(dim), pairs(dim * (dim + 1) / 2) {}

  Eigen::Index index(Eigen::Index a, Eigen::Index b) const {
    if (a > b) std::swap(a, b);
    return a * n - a * (a - 1) / 2 + (b - a);
  }
};

}  // namespace

Matrix EnsembleSummary::covariance(std::size_t time_index) const {
  const Vector& m = mean[time_index];
  return second_moment[time_index] - m * m.transpose();
}

Matrix EnsembleSummary::se_covariance(std::size_t time_index) const {
  const Eigen::Index n = mean[time_index].size();
  Matrix out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double sm = se_second_moment[time_index](a, b);
      const double ma = mean[time_index][a] * se_mean[time_index][b];
      const double mb = mean[time_index][b] * se_mean[time_index][a];
      out(a, b) = std::sqrt(sm * sm + ma * ma + mb * mb);
    }
  }
  return out;
}

EnsembleSummary run_ensemble(const TTSHSModel& model, ResetSampler sampler,
                             long long paths, std::span<const double> grid,
                             std::uint64_t master_seed,
                             const RunOptions& options) {
  if (paths < 1)
    throw Error(ErrorCode::DimensionMismatch, "need at least one path");
  for (double t : grid)
    if (t < 0.0)
      throw Error(ErrorCode::DimensionMismatch, "grid times must be >= 0");

  const Eigen::Index n = model.dimension();
  const PairLayout pairs(n);
  const Eigen::Index stride = n + 2 * pairs.pairs;
  const std::size_t grid_size = grid.size();
  const long long blocks = (paths + kBlockSize - 1) / kBlockSize;

  std::vector<std::vector<double>> block_sums(
      blocks, std::vector<double>(grid_size * stride, 0.0));
  std::vector<IntervalLog> block_intervals(blocks);
  std::vector<ProjectionStats> block_proj(blocks);

  for_each_block(paths, resolve_threads(options.threads),
                 [&](long long b, long long first, long long last) {
    std::vector<double>& sums = block_sums[b];
    for (long long p = first; p < last; ++p) {
      RandomStream rng(path_seed(master_seed, std::uint64_t(p)));
      walk_path(model, sampler, rng, grid,
                [&](std::size_t g, const Vector& x, double) {
                  double* slot = sums.data() + g * stride;
                  for (Eigen::Index i = 0; i < n; ++i) slot[i] += x[i];
                  for (Eigen::Index a = 0; a < n; ++a) {
                    for (Eigen::Index bb = a; bb < n; ++bb) {
                      const double prod = x[a] * x[bb];
                      const Eigen::Index k = pairs.index(a, bb);
                      slot[n + k] += prod;
                      slot[n + pairs.pairs + k] += prod * prod;
                    }
                  }
                },
                &block_intervals[b], &block_proj[b]);
    }
  });

  std::vector<double> totals(grid_size * stride, 0.0);
  EnsembleSummary summary;
  for (long long b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < totals.size(); ++i)
      totals[i] += block_sums[b][i];
    summary.interval_count += block_intervals[b].count;
    summary.interval_sum += block_intervals[b].sum;
    summary.interval_sum2 += block_intervals[b].sum2;
    summary.interval_sum3 += block_intervals[b].sum3;
    summary.cov_projection_warnings += block_proj[b].projections;
  }

  summary.paths = paths;
  summary.master_seed = master_seed;
  summary.times.assign(grid.begin(), grid.end());
  const double count = static_cast<double>(paths);
  const double bessel = paths > 1 ? count / (count - 1.0) : 1.0;
  for (std::size_t g = 0; g < grid_size; ++g) {
    const double* slot = totals.data() + g * stride;
    Vector mean(n);
    for (Eigen::Index i = 0; i < n; ++i) mean[i] = slot[i] / count;
    Matrix sm(n, n);
    Matrix se_sm(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a; b < n; ++b) {
        const Eigen::Index k = pairs.index(a, b);
        const double m2 = slot[n + k] / count;
        const double m4 = slot[n + pairs.pairs + k] / count;
        const double var = std::max(0.0, (m4 - m2 * m2) * bessel);
        sm(a, b) = sm(b, a) = m2;
        se_sm(a, b) = se_sm(b, a) = std::sqrt(var / count);
      }
    }
    Vector se_mean(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double var =
          std::max(0.0, (sm(i, i) - mean[i] * mean[i]) * bessel);
      se_mean[i] = std::sqrt(var / count);
    }
    summary.mean.push_back(std::move(mean));
    summary.second_moment.push_back(std::move(sm));
    summary.se_mean.push_back(std::move(se_mean));
    summary.se_second_moment.push_back(std::move(se_sm));
  }
  return summary;
}

SteadyEstimate steady_estimate(const TTSHSModel& model, ResetSampler sampler,
                               const SteadyEstimateOptions& options) {
  const Eigen::Index n = model.dimension();
  Matrix effective_gain = model.dynamics.drift_matrix;
  for (const auto& family : model.memoryless_resets) {
    effective_gain +=
        family.rate * (family.mean_gain - Matrix::Identity(n, n));
  }
  if (!is_hurwitz(effective_gain)) {
    throw Error(ErrorCode::NotHurwitz,
                "stationary estimate needs a stable mean drift");
  }
  const double relax = 1.0 / std::abs(spectral_abscissa(effective_gain));
  const double mean_interval = timing_mean(model.timer_reset.timing);
  const double burn =
      options.burn_multiplier * std::max(mean_interval, relax);
  const int window = std::max(1, options.window_samples);
  std::vector<double> grid;
  grid.reserve(window);
  for (int w = 1; w <= window; ++w)
    grid.push_back(burn + (burn * w) / window);

  const PairLayout pairs(n);
  const Eigen::Index stride = n + pairs.pairs;
  const long long paths = options.paths;
  std::vector<double> per_path(static_cast<std::size_t>(paths) * stride, 0.0);
  const long long blocks = (paths + kBlockSize - 1) / kBlockSize;
  std::vector<ProjectionStats> block_proj(blocks);

  for_each_block(paths, resolve_threads(options.threads),
                 [&](long long b, long long first, long long last) {
    for (long long p = first; p < last; ++p) {
      RandomStream rng(path_seed(options.master_seed, std::uint64_t(p)));
      double* slot = per_path.data() + p * stride;
      walk_path(model, sampler, rng, grid,
                [&](std::size_t, const Vector& x, double) {
                  for (Eigen::Index i = 0; i < n; ++i) slot[i] += x[i];
                  for (Eigen::Index a = 0; a < n; ++a)
                    for (Eigen::Index bb = a; bb < n; ++bb)
                      slot[n + pairs.index(a, bb)] += x[a] * x[bb];
                },
                nullptr, &block_proj[b]);
      for (Eigen::Index i = 0; i < stride; ++i) slot[i] /= window;
    }
  });

  SteadyEstimate out;
  out.burn_in = burn;
  out.horizon = 2.0 * burn;
  out.paths = paths;
  for (long long b = 0; b < blocks; ++b)
    out.cov_projection_warnings += block_proj[b].projections;

  const double count = static_cast<double>(paths);
  Vector mean_sum = Vector::Zero(n);
  std::vector<double> pair_sum(pairs.pairs, 0.0);
  for (long long p = 0; p < paths; ++p) {
    const double* slot = per_path.data() + p * stride;
    for (Eigen::Index i = 0; i < n; ++i) mean_sum[i] += slot[i];
    for (Eigen::Index k = 0; k < pairs.pairs; ++k)
      pair_sum[k] += slot[n + k];
  }
  out.mean = mean_sum / count;
  out.second_moment.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b)
      out.second_moment(a, b) = out.second_moment(b, a) =
          pair_sum[pairs.index(a, b)] / count;
  out.covariance = out.second_moment - out.mean * out.mean.transpose();

  // Influence-style per-path covariance statistic: its path average equals
  // the plug-in covariance exactly, and paths are independent, so the
  // spread across paths is a valid standard error.
  Vector mean_var = Vector::Zero(n);
  Matrix cov_var = Matrix::Zero(n, n);
  for (long long p = 0; p < paths; ++p) {
    const double* slot = per_path.data() + p * stride;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = slot[i] - out.mean[i];
      mean_var[i] += d * d;
    }
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a; b < n; ++b) {
        const double c_p = slot[n + pairs.index(a, b)] -
                           slot[a] * out.mean[b] - slot[b] * out.mean[a] +
                           out.mean[a] * out.mean[b];
        const double d = c_p - out.covariance(a, b);
        cov_var(a, b) += d * d;
      }
    }
  }
  const double bessel = paths > 1 ? 1.0 / (count - 1.0) : 1.0;
  out.se_mean.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out.se_mean[i] = std::sqrt(mean_var[i] * bessel / count);
  out.se_covariance.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b)
      out.se_covariance(a, b) = out.se_covariance(b, a) =
          std::sqrt(cov_var(a, b) * bessel / count);
  return out;
}

ConditionalStats timer_conditional_stats(const TTSHSModel& model,
                                         ResetSampler sampler,
                                         long long paths, double t_probe,
                                         int bins, std::uint64_t master_seed,
                                         int component,
                                         const RunOptions& options) {
  if (bins < 1)
    throw Error(ErrorCode::DimensionMismatch, "need at least one bin");
  if (component < 0 || component >= model.dimension())
    throw Error(ErrorCode::DimensionMismatch, "bad state component");
  const double grid[1] = {t_probe};

  std::vector<double> ages(paths);
  std::vector<double> values(paths);
  for_each_block(paths, resolve_threads(options.threads),
                 [&](long long, long long first, long long last) {
    for (long long p = first; p < last; ++p) {
      RandomStream rng(path_seed(master_seed, std::uint64_t(p)));
      walk_path(model, sampler, rng, std::span<const double>(grid, 1),
                [&](std::size_t, const Vector& x, double age) {
                  ages[p] = age;
                  values[p] = x[component];
                },
                nullptr, nullptr);
    }
  });

  ConditionalStats out;
  double total = 0.0;
  double age_max = 0.0;
  for (long long p = 0; p < paths; ++p) {
    total += values[p];
    age_max = std::max(age_max, ages[p]);
  }
  out.global_mean = total / static_cast<double>(paths);

  struct RawBin {
    long long count = 0;
    double age_sum = 0.0;
    double value_sum = 0.0;
    double value_sum2 = 0.0;
  };
  std::vector<RawBin> raw(bins);
  const double width = (age_max > 0.0 ? age_max : 1.0) * (1.0 + 1e-12);
  for (long long p = 0; p < paths; ++p) {
    int idx = static_cast<int>(ages[p] / width * bins);
    idx = std::min(idx, bins - 1);
    RawBin& bin = raw[idx];
    ++bin.count;
    bin.age_sum += ages[p];
    bin.value_sum += values[p];
    bin.value_sum2 += values[p] * values[p];
  }

  // Merge sparse bins forward (EMPTY_BIN handling); a sparse tail merges
  // into its predecessor.
  constexpr long long kMinCount = 10;
  std::vector<RawBin> merged;
  RawBin pending;
  auto flush = [&](const RawBin& bin) {
    if (bin.count == 0) return;
    if (bin.count < kMinCount && !merged.empty()) {
      RawBin& prev = merged.back();
      prev.count += bin.count;
      prev.age_sum += bin.age_sum;
      prev.value_sum += bin.value_sum;
      prev.value_sum2 += bin.value_sum2;
      return;
    }
    merged.push_back(bin);
  };
  for (const RawBin& bin : raw) {
    pending.count += bin.count;
    pending.age_sum += bin.age_sum;
    pending.value_sum += bin.value_sum;
    pending.value_sum2 += bin.value_sum2;
    if (pending.count >= kMinCount) {
      flush(pending);
      pending = RawBin{};
    }
  }
  flush(pending);

  double sw = 0.0, swc = 0.0;
  for (const RawBin& bin : merged) {
    ConditionalBin entry{};
    const double c = static_cast<double>(bin.count);
    entry.count = bin.count;
    entry.tau_center = bin.age_sum / c;
    entry.mean = bin.value_sum / c;
    const double var =
        bin.count > 1
            ? std::max(0.0, (bin.value_sum2 / c - entry.mean * entry.mean) *
                                c / (c - 1.0))
            : 0.0;
    const double se2 = var / c;
    entry.ci_half_width = 1.96 * std::sqrt(se2);
    out.bins.push_back(entry);
    const double w = 1.0 / std::max(se2, 1e-30);
    sw += w;
    swc += w * entry.tau_center;
  }

  if (out.bins.size() < 2) {
    out.slope = 0.0;
    out.slope_ci_half_width = std::numeric_limits<double>::infinity();
    return out;
  }
  const double cbar = swc / sw;
  double sxx = 0.0, sxy = 0.0;
  for (const ConditionalBin& bin : out.bins) {
    const double se = bin.ci_half_width / 1.96;
    const double w = 1.0 / std::max(se * se, 1e-30);
    sxx += w * (bin.tau_center - cbar) * (bin.tau_center - cbar);
    sxy += w * (bin.tau_center - cbar) * bin.mean;
  }
  out.slope = sxy / sxx;
  out.slope_ci_half_width = 1.96 / std::sqrt(sxx);
  return out;
}

std::vector<double> make_time_grid(double t_end, int points) {
  if (points < 2 || !(t_end > 0.0))
    throw Error(ErrorCode::DimensionMismatch,
                "grid needs t_end > 0 and at least two points");
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = t_end * static_cast<double>(i) / (points - 1);
  grid.back() = t_end;
  return grid;
}

}  // namespace ttshs
