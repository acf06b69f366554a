#include "ttshs/renewal_engine.hpp"

#include "ttshs/errors.hpp"

namespace ttshs::renewal_engine {

namespace {

// Drift of the mean including constant-rate resets:
//   d<x>/dt = a_hat + A<x> + sum_b rate_b ((J_b - I)<x> + R_b).
struct MeanOde {
  Matrix gain;
  Vector offset;
};

MeanOde mean_ode(const TTSHSModel& model) {
  const Eigen::Index n = model.dimension();
  MeanOde ode{model.dynamics.drift_matrix, model.dynamics.drift_offset};
  for (const auto& family : model.memoryless_resets) {
    ode.gain += family.rate * (family.mean_gain - Matrix::Identity(n, n));
    ode.offset += family.rate * family.mean_offset;
  }
  return ode;
}

}  // namespace

void require_noise_imparting(const TTSHSModel& model) {
  if (!is_noise_imparting(model)) {
    throw Error(ErrorCode::NotNoiseImparting,
                "timer reset must satisfy J = I, R = 0, Q = 0");
  }
}

std::vector<std::pair<double, Vector>> transient_mean(
    const TTSHSModel& model, std::span<const double> grid,
    const OdeOptions& options) {
  require_noise_imparting(model);
  const MeanOde ode = mean_ode(model);
  const auto rhs = [&ode](double, const Vector& y, Vector& dydt) {
    dydt = ode.offset + ode.gain * y;
  };
  const auto values = integrate_ode(rhs, model.initial_state, grid, options);
  std::vector<std::pair<double, Vector>> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out.emplace_back(grid[i], values[i]);
  return out;
}

Vector steady_state_mean(const TTSHSModel& model) {
  require_noise_imparting(model);
  const MeanOde ode = mean_ode(model);
  if (!is_hurwitz(ode.gain)) {
    throw Error(ErrorCode::NotHurwitz,
                "effective mean drift is not Hurwitz");
  }
  return ode.gain.partialPivLu().solve(-ode.offset);
}

Matrix steady_state_covariance(const TTSHSModel& model) {
  require_noise_imparting(model);
  const Eigen::Index n = model.dimension();
  if (!is_hurwitz(model.dynamics.drift_matrix)) {
    throw Error(ErrorCode::NotHurwitz,
                "steady-state covariance needs a Hurwitz drift matrix");
  }

  const Vector xbar = steady_state_mean(model);
  const double mean_interval = timing_mean(model.timer_reset.timing);
  const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(n);
  const Matrix& a = model.dynamics.drift_matrix;
  const Matrix id = Matrix::Identity(n, n);

  Matrix rhs = symmetrize(model.timer_reset.cov_linear * xbar * ones +
                          model.timer_reset.cov_constant) /
               mean_interval;
  Matrix op = kron(id, a) + kron(a, id);
  for (const auto& family : model.memoryless_resets) {
    const Vector jump = (family.mean_gain - id) * xbar + family.mean_offset;
    rhs += family.rate *
           symmetrize(jump * jump.transpose() +
                      family.cov_quadratic * xbar * xbar.transpose() +
                      family.cov_linear * xbar * ones + family.cov_constant);
    op += family.rate *
          (kron(family.mean_gain, family.mean_gain) - kron(id, id) +
           0.5 * (kron(id, family.cov_quadratic) +
                  kron(family.cov_quadratic, id)));
  }

  Eigen::PartialPivLU<Matrix> lu(op);
  const Vector c_vec = lu.solve(-vectorize(rhs));
  if (!c_vec.allFinite()) {
    throw Error(ErrorCode::SingularLyapunov,
                "second-moment operator is singular");
  }
  const Matrix c = symmetrize(unvectorize(c_vec, n, n));
  const double residual =
      ((op * vectorize(c) + vectorize(rhs)).cwiseAbs()).maxCoeff();
  if (!(residual <= 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff()))) {
    throw Error(ErrorCode::SingularLyapunov,
                "steady covariance residual " + std::to_string(residual));
  }
  return c;
}

}  // namespace ttshs::renewal_engine
