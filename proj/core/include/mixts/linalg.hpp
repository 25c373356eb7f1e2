#pragma once

#include <Eigen/Dense>

#include "mixts/mixture_core.hpp"

namespace mixts {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Lower Cholesky factor of a symmetric PSD matrix.
//
// Tries the plain factorization first, then adds diagonal jitter
// 1e-12 * trace/d, growing by 10x up to 1e-6 * trace/d. The all-zero
// matrix yields the zero factor. Throws NumericalError past the ladder.
Matrix cholesky_with_jitter(const Matrix& m);

// Inverse of a symmetric positive-definite matrix via LLT; the result is
// symmetrized. Throws NumericalError if the factorization fails.
Matrix spd_inverse(const Matrix& m);

// mean + factor * z with z ~ N(0, I).
Vector sample_gaussian(const Vector& mean, const Matrix& lower_factor,
                       RngStream& rng);

bool is_symmetric(const Matrix& m, double tol);

double max_eigenvalue(const Matrix& symmetric);

}  // namespace mixts
