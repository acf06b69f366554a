#include "ttshs/phase_engine.hpp"

#include <cmath>

#include "ttshs/errors.hpp"

namespace ttshs {

MomentIndexMap::MomentIndexMap(const PhaseTypeMixture& mixture,
                               Eigen::Index state_dim)
    : state_dim_(state_dim), pair_count_(state_dim * (state_dim + 1) / 2) {
  for (std::size_t i = 0; i < mixture.branches.size(); ++i) {
    const auto& branch = mixture.branches[i];
    branch_first_.push_back(stage_count_);
    branch_exit_.push_back(stage_count_ + branch.stages - 1);
    for (int j = 1; j <= branch.stages; ++j) {
      stage_branch_.push_back(static_cast<int>(i));
      stage_position_.push_back(j);
      stage_rate_.push_back(branch.rate);
    }
    stage_count_ += branch.stages;
  }
  size_ = stage_count_ + stage_count_ * state_dim_ +
          stage_count_ * pair_count_;
}

Eigen::Index MomentIndexMap::pair_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  // Row-major upper triangle: (a, b) with a <= b.
  return static_cast<Eigen::Index>(a) * state_dim_ -
         static_cast<Eigen::Index>(a) * (a - 1) / 2 + (b - a);
}

MomentLabel MomentIndexMap::label(Eigen::Index index) const {
  MomentLabel out;
  if (index < stage_count_) {
    out.kind = MomentKind::StageMean;
    const int flat = static_cast<int>(index);
    out.branch = stage_branch_[flat];
    out.stage = stage_position_[flat];
    return out;
  }
  index -= stage_count_;
  if (index < stage_count_ * state_dim_) {
    out.kind = MomentKind::StateCross;
    const int flat = static_cast<int>(index / state_dim_);
    out.branch = stage_branch_[flat];
    out.stage = stage_position_[flat];
    out.a = static_cast<int>(index % state_dim_);
    return out;
  }
  index -= stage_count_ * state_dim_;
  out.kind = MomentKind::SecondCross;
  const int flat = static_cast<int>(index / pair_count_);
  out.branch = stage_branch_[flat];
  out.stage = stage_position_[flat];
  Eigen::Index pair = index % pair_count_;
  int a = 0;
  Eigen::Index row_len = state_dim_;
  while (pair >= row_len) {
    pair -= row_len;
    --row_len;
    ++a;
  }
  out.a = a;
  out.b = a + static_cast<int>(pair);
  return out;
}

Eigen::Index MomentIndexMap::index(const MomentLabel& label) const {
  const int flat = flat_stage(label.branch, label.stage);
  switch (label.kind) {
    case MomentKind::StageMean: return s_index(flat);
    case MomentKind::StateCross: return xs_index(flat, label.a);
    case MomentKind::SecondCross: return xxs_index(flat, label.a, label.b);
  }
  throw Error(ErrorCode::DimensionMismatch, "bad moment label");
}

double AugmentedMomentSystem::conservation_defect() const {
  const int m = index_map.stage_count();
  double worst = 0.0;
  for (Eigen::Index col = 0; col < generator.cols(); ++col) {
    double sum = 0.0;
    for (int row = 0; row < m; ++row) sum += generator(row, col);
    worst = std::max(worst, std::abs(sum));
  }
  for (int row = 0; row < m; ++row)
    worst = std::max(worst, std::abs(offset[row]));
  return worst;
}

namespace {

// Inflow coefficients for one second-moment row (a, b): the symmetrized
// conditional second moment after a reset with parameters (J, R, Q, D, E),
// expressed over the source stage's (s, xs, xxs) entries and scaled by
// `weight`. Used for both the timer-event inflow (source = exit stages)
// and the memoryless-reset diagonal (source = same stage).
void add_reset_second_moment(Matrix& a1, const MomentIndexMap& map,
                             Eigen::Index row, int source_stage, int a, int b,
                             double weight, const Matrix& j_gain,
                             const Vector& r_off, const Matrix& q,
                             const Matrix& d, const Matrix& e) {
  const Eigen::Index n = map.state_dim();
  // J M J^T over stored pairs (c <= d).
  for (int c = 0; c < n; ++c) {
    for (int dd = c; dd < n; ++dd) {
      double coeff = j_gain(a, c) * j_gain(b, dd);
      if (c != dd) coeff += j_gain(a, dd) * j_gain(b, c);
      a1(row, map.xxs_index(source_stage, c, dd)) += weight * coeff;
    }
  }
  for (int c = 0; c < n; ++c) {
    // J m R^T + R m^T J^T.
    a1(row, map.xs_index(source_stage, c)) +=
        weight * (j_gain(a, c) * r_off[b] + r_off[a] * j_gain(b, c));
    // sym(Q M): 0.5 (QM + (QM)^T).
    a1(row, map.xxs_index(source_stage, std::min(c, b), std::max(c, b))) +=
        weight * 0.5 * q(a, c);
    a1(row, map.xxs_index(source_stage, std::min(c, a), std::max(c, a))) +=
        weight * 0.5 * q(b, c);
    // sym(D m 1_n).
    a1(row, map.xs_index(source_stage, c)) +=
        weight * 0.5 * (d(a, c) + d(b, c));
  }
  // R R^T s and sym(E) s.
  a1(row, map.s_index(source_stage)) +=
      weight * (r_off[a] * r_off[b] + 0.5 * (e(a, b) + e(b, a)));
}

}  // namespace

AugmentedMomentSystem build_augmented_system(const TTSHSModel& model) {
  const auto* mixture =
      std::get_if<PhaseTypeMixture>(&model.timer_reset.timing);
  if (mixture == nullptr) {
    throw Error(ErrorCode::TimingNotPhaseType,
                "augmented moment system needs phase-type timing");
  }
  {
    const ValidationReport report = validate_model(model);
    if (!report.valid()) {
      throw Error(ErrorCode::ValidationError,
                  "model failed validation: " + report.errors.front().code);
    }
  }

  const Eigen::Index n = model.dimension();
  AugmentedMomentSystem system;
  system.index_map = MomentIndexMap(*mixture, n);
  system.mixture = *mixture;
  const MomentIndexMap& map = system.index_map;
  const Eigen::Index size = map.size();
  system.offset = Vector::Zero(size);
  system.generator = Matrix::Zero(size, size);
  Matrix& a1 = system.generator;

  const Matrix& drift = model.dynamics.drift_matrix;
  const Vector& drift_off = model.dynamics.drift_offset;
  const auto& reset = model.timer_reset;
  const int branches = map.branch_count();
  const int stages = map.stage_count();

  for (int t = 0; t < stages; ++t) {
    const int branch = map.branch_of(t);
    const int pos = map.position_of(t);
    const double k = map.rate_of(t);
    const double p = system.mixture.branches[branch].probability;
    const bool entry = (pos == 1);

    // Stage-mean row: cycling within the branch plus event re-entry.
    {
      const Eigen::Index row = map.s_index(t);
      a1(row, map.s_index(t)) -= k;
      if (!entry) a1(row, map.s_index(t - 1)) += k;
      if (entry) {
        for (int src_branch = 0; src_branch < branches; ++src_branch) {
          const int src = map.exit_stage(src_branch);
          a1(row, map.s_index(src)) += p * map.rate_of(src);
        }
      }
    }

    // State-cross rows: flow, stage loss, stage/event inflow, resets.
    for (int a = 0; a < n; ++a) {
      const Eigen::Index row = map.xs_index(t, a);
      for (int c = 0; c < n; ++c)
        a1(row, map.xs_index(t, c)) += drift(a, c);
      a1(row, map.s_index(t)) += drift_off[a];
      a1(row, map.xs_index(t, a)) -= k;
      if (!entry) a1(row, map.xs_index(t - 1, a)) += k;
      if (entry) {
        for (int src_branch = 0; src_branch < branches; ++src_branch) {
          const int src = map.exit_stage(src_branch);
          const double w = p * map.rate_of(src);
          for (int c = 0; c < n; ++c)
            a1(row, map.xs_index(src, c)) += w * reset.mean_gain(a, c);
          a1(row, map.s_index(src)) += w * reset.mean_offset[a];
        }
      }
      for (const auto& family : model.memoryless_resets) {
        for (int c = 0; c < n; ++c) {
          const double identity = (a == c) ? 1.0 : 0.0;
          a1(row, map.xs_index(t, c)) +=
              family.rate * (family.mean_gain(a, c) - identity);
        }
        a1(row, map.s_index(t)) += family.rate * family.mean_offset[a];
      }
    }

    // Second-moment rows.
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        const Eigen::Index row = map.xxs_index(t, a, b);
        for (int c = 0; c < n; ++c) {
          a1(row, map.xxs_index(t, std::min(c, b), std::max(c, b))) +=
              drift(a, c);
          a1(row, map.xxs_index(t, std::min(a, c), std::max(a, c))) +=
              drift(b, c);
        }
        a1(row, map.xs_index(t, b)) += drift_off[a];
        a1(row, map.xs_index(t, a)) += drift_off[b];
        a1(row, map.xxs_index(t, a, b)) -= k;
        if (!entry) a1(row, map.xxs_index(t - 1, a, b)) += k;
        if (entry) {
          for (int src_branch = 0; src_branch < branches; ++src_branch) {
            const int src = map.exit_stage(src_branch);
            add_reset_second_moment(a1, map, row, src, a, b,
                                    p * map.rate_of(src), reset.mean_gain,
                                    reset.mean_offset, reset.cov_quadratic,
                                    reset.cov_linear, reset.cov_constant);
          }
        }
        for (const auto& family : model.memoryless_resets) {
          add_reset_second_moment(a1, map, row, t, a, b, family.rate,
                                  family.mean_gain, family.mean_offset,
                                  family.cov_quadratic, family.cov_linear,
                                  family.cov_constant);
          a1(row, map.xxs_index(t, a, b)) -= family.rate;
        }
      }
    }
  }

  if (system.conservation_defect() > 1e-12) {
    throw Error(ErrorCode::NumericalFailure,
                "stage-occupancy conservation defect " +
                    std::to_string(system.conservation_defect()));
  }
  return system;
}

Vector initial_condition(const AugmentedMomentSystem& system,
                         const Vector& x0) {
  const MomentIndexMap& map = system.index_map;
  if (x0.size() != map.state_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "initial state has wrong dimension");
  }
  Vector mu = Vector::Zero(map.size());
  for (int branch = 0; branch < map.branch_count(); ++branch) {
    const double p = system.mixture.branches[branch].probability;
    const int stage = map.first_stage(branch);
    mu[map.s_index(stage)] = p;
    for (int a = 0; a < map.state_dim(); ++a) {
      mu[map.xs_index(stage, a)] = p * x0[a];
      for (int b = a; b < map.state_dim(); ++b)
        mu[map.xxs_index(stage, a, b)] = p * x0[a] * x0[b];
    }
  }
  return mu;
}

std::vector<std::pair<double, Vector>> integrate_moments(
    const AugmentedMomentSystem& system, const Vector& mu0,
    std::span<const double> grid, const OdeOptions& options) {
  if (mu0.size() != system.index_map.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "moment vector length does not match the system");
  }
  const auto rhs = [&system](double, const Vector& y, Vector& dydt) {
    dydt.noalias() = system.generator * y;
    dydt += system.offset;
  };
  const auto values = integrate_ode(rhs, mu0, grid, options);
  std::vector<std::pair<double, Vector>> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out.emplace_back(grid[i], values[i]);
  return out;
}

Vector steady_state_moments(const AugmentedMomentSystem& system) {
  const MomentIndexMap& map = system.index_map;
  const Eigen::Index size = map.size();
  Matrix constrained = system.generator;
  Vector rhs = -system.offset;
  // The stage-mean rows are linearly dependent (they sum to zero);
  // replace the first one with the occupancy constraint.
  const Eigen::Index replaced = map.s_index(0);
  constrained.row(replaced).setZero();
  for (int t = 0; t < map.stage_count(); ++t)
    constrained(replaced, map.s_index(t)) = 1.0;
  rhs[replaced] = 1.0;

  Eigen::PartialPivLU<Matrix> lu(constrained);
  const Vector mu = lu.solve(rhs);
  const double scale =
      1.0 + system.generator.cwiseAbs().rowwise().sum().maxCoeff() *
                (mu.allFinite() ? mu.cwiseAbs().maxCoeff() : 0.0);
  if (!mu.allFinite()) {
    throw Error(ErrorCode::SingularSystem,
                "constrained steady solve produced non-finite values");
  }
  const double residual =
      (system.generator * mu + system.offset).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10 * scale)) {
    throw Error(ErrorCode::SingularSystem,
                "steady residual " + std::to_string(residual) +
                    " (unstable or mis-built model)");
  }
  return mu;
}

MomentState marginal_moments(const AugmentedMomentSystem& system,
                             const Vector& mu) {
  const MomentIndexMap& map = system.index_map;
  if (mu.size() != map.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "moment vector length does not match the system");
  }
  const Eigen::Index n = map.state_dim();
  MomentState state;
  state.mean = Vector::Zero(n);
  state.second_moment = Matrix::Zero(n, n);
  for (int t = 0; t < map.stage_count(); ++t) {
    for (int a = 0; a < n; ++a) {
      state.mean[a] += mu[map.xs_index(t, a)];
      for (int b = a; b < n; ++b) {
        const double value = mu[map.xxs_index(t, a, b)];
        state.second_moment(a, b) += value;
        if (a != b) state.second_moment(b, a) += value;
      }
    }
  }
  return state;
}

Vector stage_occupancy(const AugmentedMomentSystem& system, const Vector& mu) {
  const int stages = system.index_map.stage_count();
  Vector occupancy(stages);
  for (int t = 0; t < stages; ++t)
    occupancy[t] = mu[system.index_map.s_index(t)];
  return occupancy;
}

}  // namespace ttshs
