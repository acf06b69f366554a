#ifndef TTSHS_LINALG_HPP
#define TTSHS_LINALG_HPP

#include <Eigen/Dense>

namespace ttshs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// (M + M^T) / 2
inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Largest real part over the spectrum of A.
double spectral_abscissa(const Matrix& a);

/// True if all eigenvalues of A have real part < -tol.
bool is_hurwitz(const Matrix& a, double tol = 1e-9);

/// Smallest eigenvalue of the symmetric part of m.
double min_symmetric_eigenvalue(const Matrix& m);

/// Solves A X + X A^T + W = 0 for X by Kronecker vectorization
/// ((I (x) A + A (x) I) vec X = -vec W) with a dense LU factorization.
/// W is symmetrized before the solve. Throws SingularLyapunov when the
/// factorization is unusable (never for Hurwitz A).
Matrix solve_lyapunov(const Matrix& a, const Matrix& w);

/// vec by columns, the convention used by solve_lyapunov.
Vector vectorize(const Matrix& m);
Matrix unvectorize(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// kron(A, B) built densely; sizes stay at desk scale (n <= ~20).
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace ttshs

#endif  // TTSHS_LINALG_HPP
