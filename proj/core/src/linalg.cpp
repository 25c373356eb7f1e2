#include "mixts/linalg.hpp"

#include "mixts/errors.hpp"

namespace mixts {

Matrix cholesky_with_jitter(const Matrix& m) {
  if (m.rows() != m.cols()) throw InputError("cholesky: matrix is not square");
  const auto d = m.rows();
  if (d == 0) return Matrix(0, 0);
  if (m.isZero(0.0)) return Matrix::Zero(d, d);

  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double scale = m.trace() / static_cast<double>(d);
  if (scale > 0.0) {
    for (double jitter = 1e-12; jitter <= 1e-6 * (1.0 + 1e-9); jitter *= 10.0) {
      Matrix shifted = m;
      shifted.diagonal().array() += jitter * scale;
      llt.compute(shifted);
      if (llt.info() == Eigen::Success) return llt.matrixL();
    }
  }
  throw NumericalError("cholesky: matrix is not positive semi-definite "
                       "within the jitter ladder");
}

Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("spd_inverse: matrix is not positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

Vector sample_gaussian(const Vector& mean, const Matrix& lower_factor,
                       RngStream& rng) {
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + lower_factor * z;
}

bool is_symmetric(const Matrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double max_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

}  // namespace mixts
