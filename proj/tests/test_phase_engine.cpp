#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/test_support.hpp"
#include "ttshs/errors.hpp"
#include "ttshs/phase_engine.hpp"
#include "ttshs/renewal_engine.hpp"

using namespace ttshs;
using ttshs::testing::reference_scalar_model;

namespace {

TTSHSModel exponential_jump_model(int n, double rate, std::mt19937_64& gen,
                                  bool with_memoryless) {
  TTSHSModel model;
  model.dynamics = ttshs::testing::random_stable_dynamics(gen, n);
  Matrix j = ttshs::testing::random_matrix(gen, n, -0.5, 0.5);
  Vector r(n);
  for (int i = 0; i < n; ++i) r[i] = ttshs::testing::uniform(gen, -1.0, 1.0);
  const Matrix f = ttshs::testing::random_matrix(gen, n, -0.5, 0.5);
  model.timer_reset = {std::move(j),
                       std::move(r),
                       ttshs::testing::random_matrix(gen, n, -0.1, 0.1),
                       ttshs::testing::random_matrix(gen, n, -0.3, 0.3),
                       f * f.transpose(),
                       PhaseTypeMixture{{{1.0, 1, rate}}}};
  model.initial_state = Vector::Zero(n);
  if (with_memoryless) {
    MemorylessResetFamily family;
    family.rate = ttshs::testing::uniform(gen, 0.5, 2.0);
    family.mean_gain = ttshs::testing::random_matrix(gen, n, -0.4, 0.4);
    family.mean_offset = Vector::Constant(n, 0.3);
    family.cov_quadratic = Matrix::Zero(n, n);
    family.cov_linear = ttshs::testing::random_matrix(gen, n, -0.2, 0.2);
    const Matrix g = ttshs::testing::random_matrix(gen, n, -0.4, 0.4);
    family.cov_constant = g * g.transpose();
    model.memoryless_resets.push_back(std::move(family));
  }
  return model;
}

}  // namespace

TEST_CASE("index map counts and round trips") {
  const PhaseTypeMixture erlang3{{{1.0, 3, 3.0}}};
  const MomentIndexMap map(erlang3, 1);
  CHECK(map.size() == 9);  // 3 + 3*1 + 3*1

  const PhaseTypeMixture mix{{{0.4, 2, 4.0}, {0.6, 3, 2.0}}};
  for (Eigen::Index n : {1, 2, 3, 4}) {
    const MomentIndexMap big(mix, n);
    CHECK(big.size() == 5 + 5 * n + 5 * n * (n + 1) / 2);
    for (Eigen::Index i = 0; i < big.size(); ++i) {
      const MomentLabel label = big.label(i);
      CHECK(big.index(label) == i);
      if (label.kind == MomentKind::SecondCross) CHECK(label.a <= label.b);
    }
  }
}

TEST_CASE("single-stage systems match the jump-linear oracle entrywise") {
  std::mt19937_64 gen(808);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;  // 1-D and 2-D
    const TTSHSModel model = exponential_jump_model(
        n, ttshs::testing::uniform(gen, 0.5, 3.0), gen, trial % 3 == 0);
    const auto system = build_augmented_system(model);
    const Matrix oracle = ttshs::testing::jump_linear_generator(model);
    REQUIRE(system.generator.rows() == oracle.rows());
    CHECK((system.generator - oracle).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(system.offset.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("stage conservation holds by construction") {
  std::mt19937_64 gen(909);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(ttshs::testing::uniform(gen, 0, 2.999));
    const TTSHSModel model =
        ttshs::testing::random_full_reset_model(gen, n);
    const auto system = build_augmented_system(model);
    CHECK(system.conservation_defect() <= 1e-12);
  }
}

TEST_CASE("x-cross rows sum to the plain mean dynamics when noise-imparting") {
  const TTSHSModel model = ttshs::testing::reference_2d_model();
  const auto system = build_augmented_system(model);
  const MomentIndexMap& map = system.index_map;
  const int n = 2;
  std::mt19937_64 gen(17);
  Vector mu(map.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    mu[i] = ttshs::testing::uniform(gen, -1.0, 1.0);

  for (int a = 0; a < n; ++a) {
    double summed = 0.0;
    for (int t = 0; t < map.stage_count(); ++t)
      summed += system.generator.row(map.xs_index(t, a)).dot(mu);
    double occupancy = 0.0;
    Vector xsum = Vector::Zero(n);
    for (int t = 0; t < map.stage_count(); ++t) {
      occupancy += mu[map.s_index(t)];
      for (int c = 0; c < n; ++c) xsum[c] += mu[map.xs_index(t, c)];
    }
    const double expected = model.dynamics.drift_offset[a] * occupancy +
                            model.dynamics.drift_matrix.row(a).dot(xsum);
    CHECK(summed == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("occupancy: trajectory conserves total stage probability") {
  const TTSHSModel model = ttshs::testing::reference_2d_model();
  const auto system = build_augmented_system(model);
  const Vector mu0 = initial_condition(system, model.initial_state);
  const std::vector<double> grid{0.0, 0.4, 1.3, 5.0, 12.0};
  for (const auto& [t, mu] : integrate_moments(system, mu0, grid)) {
    CHECK(stage_occupancy(system, mu).sum() ==
          doctest::Approx(1.0).epsilon(1e-9));
    for (const double s : stage_occupancy(system, mu)) {
      CHECK(s >= -1e-9);
      CHECK(s <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("steady state is a fixed point of the integration") {
  const TTSHSModel model = reference_scalar_model();
  const auto system = build_augmented_system(model);
  const Vector mu_ss = steady_state_moments(system);
  const std::vector<double> grid{0.0, 1.0, 4.0};
  for (const auto& [t, mu] : integrate_moments(system, mu_ss, grid))
    CHECK((mu - mu_ss).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("exponential timing reduces to the closed-form affine mean") {
  std::mt19937_64 gen(42);
  const TTSHSModel model = exponential_jump_model(1, 2.0, gen, false);
  const auto system = build_augmented_system(model);
  const Vector mu0 = initial_condition(system, model.initial_state);
  const std::vector<double> grid{0.0, 0.3, 1.0, 2.5};
  const auto traj = integrate_moments(system, mu0, grid);

  // d<x>/dt = (A + k(J-1))<x> + a + kR for the memoryless special case.
  const double k = 2.0;
  const double gain = model.dynamics.drift_matrix(0, 0) +
                      k * (model.timer_reset.mean_gain(0, 0) - 1.0);
  const double offset =
      model.dynamics.drift_offset[0] + k * model.timer_reset.mean_offset[0];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x0 = model.initial_state[0];
    const double exact =
        std::exp(gain * grid[i]) * x0 +
        offset * (std::expm1(gain * grid[i]) / gain);
    CHECK(marginal_moments(system, traj[i].second).mean[0] ==
          doctest::Approx(exact).epsilon(1e-8));
  }
}

TEST_CASE("marginal mean tracks the renewal engine transient") {
  const TTSHSModel model = ttshs::testing::reference_2d_model();
  const auto system = build_augmented_system(model);
  const Vector mu0 = initial_condition(system, model.initial_state);
  const std::vector<double> grid{0.0, 0.2, 0.9, 2.0, 6.0};
  const auto phase = integrate_moments(system, mu0, grid);
  const auto renewal = renewal_engine::transient_mean(model, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector mean = marginal_moments(system, phase[i].second).mean;
    CHECK((mean - renewal[i].second).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("steady mean for a pure-replacement reset") {
  // J = 0, R = r, exponential timing: <x>_ss = k r / (gamma + k).
  const double gamma = 1.3, k = 2.0, r = 0.7;
  TTSHSModel model;
  model.dynamics = {Vector::Zero(1), Matrix::Constant(1, 1, -gamma)};
  model.timer_reset = {Matrix::Zero(1, 1),     Vector::Constant(1, r),
                       Matrix::Zero(1, 1),     Matrix::Zero(1, 1),
                       Matrix::Zero(1, 1),
                       PhaseTypeMixture{{{1.0, 1, k}}}};
  model.initial_state = Vector::Zero(1);
  const auto system = build_augmented_system(model);
  const MomentState ss = marginal_moments(system, steady_state_moments(system));
  CHECK(ss.mean[0] == doctest::Approx(k * r / (gamma + k)).epsilon(1e-10));
}

TEST_CASE("uniform stage occupancy for a single erlang branch") {
  const TTSHSModel model = reference_scalar_model();  // Erlang(3)
  const auto system = build_augmented_system(model);
  const Vector occupancy =
      stage_occupancy(system, steady_state_moments(system));
  for (int t = 0; t < 3; ++t)
    CHECK(occupancy[t] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("noise-imparting steady moments match the renewal engine") {
  std::mt19937_64 gen(1234);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 1 + static_cast<int>(ttshs::testing::uniform(gen, 0, 2.999));
    const TTSHSModel model =
        ttshs::testing::random_noise_imparting_model(gen, n);
    const auto system = build_augmented_system(model);
    const MomentState phase =
        marginal_moments(system, steady_state_moments(system));
    const Vector mean = renewal_engine::steady_state_mean(model);
    const Matrix cov = renewal_engine::steady_state_covariance(model);
    CHECK((phase.mean - mean).cwiseAbs().maxCoeff() <= 1e-8);
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    CHECK((phase.covariance() - cov).cwiseAbs().maxCoeff() <= 1e-6 * scale);
  }
}

TEST_CASE("steady covariance is positive semidefinite") {
  std::mt19937_64 gen(555);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + static_cast<int>(ttshs::testing::uniform(gen, 0, 2.999));
    const TTSHSModel model =
        ttshs::testing::random_full_reset_model(gen, n);
    const auto system = build_augmented_system(model);
    const MomentState ss =
        marginal_moments(system, steady_state_moments(system));
    CHECK(min_symmetric_eigenvalue(ss.covariance()) >= -1e-8);
  }
}

TEST_CASE("timing shape matters in transient, not at steady state") {
  TTSHSModel erlang1 = reference_scalar_model();
  erlang1.timer_reset.timing = PhaseTypeMixture{{{1.0, 1, 1.0}}};
  TTSHSModel erlang10 = reference_scalar_model();
  erlang10.timer_reset.timing = PhaseTypeMixture{{{1.0, 10, 10.0}}};
  TTSHSModel mixture = reference_scalar_model();
  mixture.timer_reset.timing =
      PhaseTypeMixture{{{0.3, 1, 0.6}, {0.7, 2, 2.8}}};

  std::vector<Matrix> steady;
  std::vector<double> transient;
  for (const TTSHSModel* model : {&erlang1, &erlang10, &mixture}) {
    const auto system = build_augmented_system(*model);
    steady.push_back(
        marginal_moments(system, steady_state_moments(system)).covariance());
    const Vector mu0 = initial_condition(system, model->initial_state);
    const std::vector<double> grid{0.0, 0.5};  // <T>/2
    const auto traj = integrate_moments(system, mu0, grid);
    transient.push_back(
        marginal_moments(system, traj[1].second).covariance()(0, 0));
  }
  CHECK(std::abs(steady[0](0, 0) - steady[1](0, 0)) <=
        1e-6 * std::abs(steady[0](0, 0)));
  CHECK(std::abs(steady[0](0, 0) - steady[2](0, 0)) <=
        1e-6 * std::abs(steady[0](0, 0)));
  CHECK(std::abs(transient[0] - transient[1]) >
        1e-3 * std::abs(transient[0]));
  CHECK(std::abs(transient[0] - transient[2]) >
        1e-3 * std::abs(transient[0]));
}

TEST_CASE("empirical timing is rejected") {
  TTSHSModel model = reference_scalar_model();
  model.timer_reset.timing =
      EmpiricalRenewal{EmpiricalRenewal::Kind::Gamma, 1.0, 0.5};
  CHECK_THROWS_WITH_AS(build_augmented_system(model),
                       doctest::Contains("TIMING_NOT_PHASE_TYPE"), Error);
}

TEST_CASE("marginals sum stage-conditioned moments") {
  const PhaseTypeMixture mix{{{0.5, 2, 1.0}, {0.5, 1, 2.0}}};
  TTSHSModel model = reference_scalar_model();
  model.timer_reset.timing = mix;
  const auto system = build_augmented_system(model);
  Vector mu = Vector::Zero(system.index_map.size());
  const MomentIndexMap& map = system.index_map;
  const double s[3] = {0.2, 0.3, 0.5};
  const double xs[3] = {0.1, 0.2, 0.3};
  for (int t = 0; t < 3; ++t) {
    mu[map.s_index(t)] = s[t];
    mu[map.xs_index(t, 0)] = xs[t];
  }
  const MomentState state = marginal_moments(system, mu);
  CHECK(state.mean[0] == doctest::Approx(0.6).epsilon(1e-15));

  // All mass in one stage: marginals equal that stage's cross moments.
  mu.setZero();
  mu[map.s_index(1)] = 1.0;
  mu[map.xs_index(1, 0)] = 0.8;
  mu[map.xxs_index(1, 0, 0)] = 0.9;
  const MomentState one = marginal_moments(system, mu);
  CHECK(one.mean[0] == 0.8);
  CHECK(one.second_moment(0, 0) == 0.9);
}
