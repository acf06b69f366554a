#ifndef TTSHS_PHASE_ENGINE_HPP
#define TTSHS_PHASE_ENGINE_HPP

#include <utility>
#include <vector>

#include "ttshs/model.hpp"
#include "ttshs/ode.hpp"
#include "ttshs/renewal_engine.hpp"

namespace ttshs {

/// Scalar moment kinds tracked by the augmented system. Every entry is
/// conditioned on one timer stage; unconditioned moments are recovered by
/// summing over stages.
enum class MomentKind { StageMean, StateCross, SecondCross };

struct MomentLabel {
  MomentKind kind = MomentKind::StageMean;
  int branch = 0;  // mixture branch index
  int stage = 1;   // 1-based position within the branch
  int a = 0;       // state component (StateCross, SecondCross)
  int b = 0;       // second component, a <= b (SecondCross)

  bool operator==(const MomentLabel&) const = default;
};

/// Bijection between moment labels and positions in the stacked vector
///   mu = [ <s_ij> | <x_a s_ij> | <x_a x_b s_ij> (a <= b) ].
/// Symmetric second-moment pairs are stored once.
class MomentIndexMap {
 public:
  MomentIndexMap() = default;
  MomentIndexMap(const PhaseTypeMixture& mixture, Eigen::Index state_dim);

  Eigen::Index size() const { return size_; }
  Eigen::Index state_dim() const { return state_dim_; }
  int stage_count() const { return stage_count_; }
  int branch_count() const { return static_cast<int>(branch_first_.size()); }

  int flat_stage(int branch, int stage) const {
    return branch_first_[branch] + stage - 1;
  }
  int first_stage(int branch) const { return branch_first_[branch]; }
  int exit_stage(int branch) const { return branch_exit_[branch]; }
  int branch_of(int flat) const { return stage_branch_[flat]; }
  int position_of(int flat) const { return stage_position_[flat]; }
  double rate_of(int flat) const { return stage_rate_[flat]; }

  Eigen::Index pair_index(int a, int b) const;  // a <= b after swap
  Eigen::Index s_index(int flat) const { return flat; }
  Eigen::Index xs_index(int flat, int a) const {
    return stage_count_ + static_cast<Eigen::Index>(flat) * state_dim_ + a;
  }
  Eigen::Index xxs_index(int flat, int a, int b) const {
    return stage_count_ + stage_count_ * state_dim_ +
           static_cast<Eigen::Index>(flat) * pair_count_ + pair_index(a, b);
  }

  MomentLabel label(Eigen::Index index) const;
  Eigen::Index index(const MomentLabel& label) const;

 private:
  Eigen::Index state_dim_ = 0;
  Eigen::Index pair_count_ = 0;
  Eigen::Index size_ = 0;
  int stage_count_ = 0;
  std::vector<int> branch_first_;
  std::vector<int> branch_exit_;
  std::vector<int> stage_branch_;
  std::vector<int> stage_position_;
  std::vector<double> stage_rate_;
};

/// Closed linear moment system mu_dot = offset + generator * mu over the
/// stage-conditioned moments. The stage-mean rows of the generator cancel
/// columnwise (total stage occupancy is conserved) and the offset is zero
/// on that block.
struct AugmentedMomentSystem {
  MomentIndexMap index_map;
  PhaseTypeMixture mixture;
  Vector offset;     // a1
  Matrix generator;  // A1

  /// Worst columnwise defect of the stage-mean block row sum; exact
  /// conservation means 0.
  double conservation_defect() const;
};

/// Assembles the generator pair for a model with phase-type timing.
/// Throws TimingNotPhaseType otherwise.
AugmentedMomentSystem build_augmented_system(const TTSHSModel& model);

/// mu at t = 0 for the deterministic initial state: the timer has just
/// reset, so stage (i, 1) carries probability p_i.
Vector initial_condition(const AugmentedMomentSystem& system,
                         const Vector& x0);

/// Trajectory of the linear moment ODE at the grid times.
std::vector<std::pair<double, Vector>> integrate_moments(
    const AugmentedMomentSystem& system, const Vector& mu0,
    std::span<const double> grid, const OdeOptions& options = {});

/// Steady state of the moment ODE: one redundant stage-mean row is
/// replaced by the constraint sum <s_ij> = 1, the solve is dense LU, and
/// the full unmodified residual is verified afterwards.
Vector steady_state_moments(const AugmentedMomentSystem& system);

/// Marginal moments of x by total expectation over the exclusive stages.
MomentState marginal_moments(const AugmentedMomentSystem& system,
                             const Vector& mu);

/// Stage-occupancy marginals <s_ij> in flat-stage order.
Vector stage_occupancy(const AugmentedMomentSystem& system, const Vector& mu);

}  // namespace ttshs

#endif  // TTSHS_PHASE_ENGINE_HPP
