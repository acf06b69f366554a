#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/test_support.hpp"
#include "ttshs/errors.hpp"
#include "ttshs/renewal_engine.hpp"

using namespace ttshs;
using ttshs::testing::reference_scalar_model;

TEST_CASE("transient mean follows the affine solution") {
  const TTSHSModel model = reference_scalar_model();
  const std::vector<double> grid{0.0, std::log(2.0), 2.0};
  const auto traj = renewal_engine::transient_mean(model, grid);
  CHECK(traj[1].second[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(traj[2].second[0] ==
        doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-8));
}

TEST_CASE("fixed point stays put") {
  TTSHSModel model = reference_scalar_model();
  model.initial_state = steady_state_mean(model.dynamics);
  const std::vector<double> grid{0.0, 0.7, 3.0, 11.0};
  for (const auto& [t, mean] : renewal_engine::transient_mean(model, grid))
    CHECK(mean[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("gene-style drift relaxes to the target mean") {
  TTSHSModel model = reference_scalar_model();
  model.dynamics.drift_offset = Vector::Constant(1, 10.0);
  const std::vector<double> grid{0.0, 25.0};
  // 1e-9 absolute on a state of size 10 needs tolerances below default.
  OdeOptions options;
  options.rel_tol = 1e-11;
  options.abs_tol = 1e-13;
  const auto traj = renewal_engine::transient_mean(model, grid, options);
  CHECK(std::abs(traj[1].second[0] - 10.0) <= 1e-9);
}

TEST_CASE("mean trajectory ignores the timing law bitwise") {
  TTSHSModel erlang = reference_scalar_model();
  TTSHSModel heavy = erlang;
  heavy.timer_reset.timing =
      PhaseTypeMixture{{{0.9, 1, 10.0}, {0.1, 1, 0.2}}};
  TTSHSModel fixed = erlang;
  fixed.timer_reset.timing =
      EmpiricalRenewal{EmpiricalRenewal::Kind::Deterministic, 2.5, 0.0};
  const std::vector<double> grid{0.0, 0.37, 1.1, 4.4};
  const auto a = renewal_engine::transient_mean(erlang, grid);
  const auto b = renewal_engine::transient_mean(heavy, grid);
  const auto c = renewal_engine::transient_mean(fixed, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(a[i].second[0] == b[i].second[0]);
    CHECK(a[i].second[0] == c[i].second[0]);
  }
}

TEST_CASE("steady covariance from scalar hand algebra") {
  // A = -1, D = 0.5, E = 0, xbar = 2, <T> = 1: -2C = -(0.5*2)/1.
  TTSHSModel model = make_noise_imparting_model(
      {Vector::Constant(1, 2.0), Matrix::Constant(1, 1, -1.0)},
      Matrix::Constant(1, 1, 0.5), Matrix::Zero(1, 1),
      PhaseTypeMixture{{{1.0, 1, 1.0}}}, Vector::Zero(1));
  CHECK(renewal_engine::steady_state_covariance(model)(0, 0) ==
        doctest::Approx(0.5).epsilon(1e-12));

  model.timer_reset.cov_linear.setZero();
  CHECK(renewal_engine::steady_state_covariance(model)(0, 0) ==
        doctest::Approx(0.0));
}

TEST_CASE("gene preset covariance, deterministic production") {
  // C = beta xbar / (2 gamma <T>) with <T> = ln2/2: 10 / ln2.
  const GeneModelParams params = ttshs::testing::reference_gene_params();
  const TTSHSModel model = build_ttshs(params, false);
  const Matrix c = renewal_engine::steady_state_covariance(model);
  CHECK(c(0, 0) == doctest::Approx(10.0 / std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("covariance depends on the timing law only through its mean") {
  TTSHSModel exp_timing = reference_scalar_model();
  exp_timing.timer_reset.timing = PhaseTypeMixture{{{1.0, 1, 1.0}}};
  TTSHSModel erlang10 = exp_timing;
  erlang10.timer_reset.timing = PhaseTypeMixture{{{1.0, 10, 10.0}}};
  TTSHSModel fixed = exp_timing;
  fixed.timer_reset.timing =
      EmpiricalRenewal{EmpiricalRenewal::Kind::Deterministic, 1.0, 0.0};

  const Matrix a = renewal_engine::steady_state_covariance(exp_timing);
  const Matrix b = renewal_engine::steady_state_covariance(erlang10);
  const Matrix c = renewal_engine::steady_state_covariance(fixed);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a - c).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("lyapunov residual property on random models") {
  std::mt19937_64 gen(606);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(ttshs::testing::uniform(gen, 0, 5.999));
    const TTSHSModel model =
        ttshs::testing::random_noise_imparting_model(gen, n);
    const Matrix c = renewal_engine::steady_state_covariance(model);
    const Vector xbar = steady_state_mean(model.dynamics);
    const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(n);
    const Matrix rhs =
        symmetrize(model.timer_reset.cov_linear * xbar * ones +
                   model.timer_reset.cov_constant) /
        timing_mean(model.timer_reset.timing);
    const Matrix residual = model.dynamics.drift_matrix * c +
                            c * model.dynamics.drift_matrix.transpose() + rhs;
    CHECK(residual.cwiseAbs().maxCoeff() <=
          1e-10 *
              (1.0 + model.timer_reset.cov_constant.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("preconditions are enforced") {
  TTSHSModel shifted = reference_scalar_model();
  shifted.timer_reset.mean_gain(0, 0) = 0.5;
  CHECK_THROWS_WITH_AS(renewal_engine::steady_state_covariance(shifted),
                       doctest::Contains("NOT_NOISE_IMPARTING"), Error);

  TTSHSModel unstable = reference_scalar_model();
  unstable.dynamics.drift_matrix(0, 0) = 0.3;
  CHECK_THROWS_WITH_AS(renewal_engine::steady_state_covariance(unstable),
                       doctest::Contains("NOT_HURWITZ"), Error);
}
