#include "ttshs/linalg.hpp"

#include <Eigen/Eigenvalues>

#include "ttshs/errors.hpp"

namespace ttshs {

double spectral_abscissa(const Matrix& a) {
  Eigen::EigenSolver<Matrix> eig(a, /*computeEigenvectors=*/false);
  return eig.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Matrix& a, double tol) {
  return spectral_abscissa(a) < -tol;
}

double min_symmetric_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m),
                                            Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

Vector vectorize(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvectorize(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& w) {
  const Eigen::Index n = a.rows();
  const Matrix ws = symmetrize(w);
  const Matrix id = Matrix::Identity(n, n);
  const Matrix op = kron(id, a) + kron(a, id);

  Eigen::PartialPivLU<Matrix> lu(op);
  const Vector x = lu.solve(-vectorize(ws));
  if (!x.allFinite()) {
    throw Error(ErrorCode::SingularLyapunov,
                "Lyapunov operator I(x)A + A(x)I is singular");
  }
  const Matrix sol = symmetrize(unvectorize(x, n, n));
  const double residual = (a * sol + sol * a.transpose() + ws).cwiseAbs().maxCoeff();
  const double scale = 1.0 + ws.cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10 * scale)) {
    throw Error(ErrorCode::SingularLyapunov,
                "Lyapunov residual " + std::to_string(residual) +
                    " exceeds tolerance; A is likely not Hurwitz");
  }
  return sol;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::NotHurwitz: return "NOT_HURWITZ";
    case ErrorCode::NotNoiseImparting: return "NOT_NOISE_IMPARTING";
    case ErrorCode::TimingNotPhaseType: return "TIMING_NOT_PHASE_TYPE";
    case ErrorCode::SingularSystem: return "SINGULAR_SYSTEM";
    case ErrorCode::SingularLyapunov: return "SINGULAR_LYAPUNOV";
    case ErrorCode::SamplerMismatch: return "SAMPLER_MISMATCH";
    case ErrorCode::UnreachableCv2: return "UNREACHABLE_CV2";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::SchemaError: return "SCHEMA_ERROR";
    case ErrorCode::ValidationError: return "VALIDATION_ERROR";
    case ErrorCode::NumericalFailure: return "NUMERICAL_FAILURE";
  }
  return "UNKNOWN";
}

}  // namespace ttshs
