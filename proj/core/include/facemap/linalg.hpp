#pragma once

#include "facemap/types.hpp"

namespace facemap {

struct SvdDecomposition {
  Matrix u;                // m x r, orthonormal columns
  Vector singular_values;  // length r = min(m, n), nonincreasing
  Matrix v;                // n x r, orthonormal columns
};

/// Closed-form ridge solution M = (S^T S + lambda I)^-1 S^T T, solved on the
/// d_s x d_s normal-equations system so the cost is O(d_s^3) after the Gram
/// accumulation, independent of the row count. All columns of T share one
/// factorization. With lambda > 0 the system is positive definite for any
/// finite input; with lambda = 0 a rank-deficient S raises NumericalError.
LinearMap ridge_fit(const Matrix& s, const Matrix& t, double lambda);

/// Thin singular value decomposition, singular values nonincreasing.
SvdDecomposition svd(const Matrix& m);

/// Best rank-k approximation in Frobenius norm (keep the k largest singular
/// values). Fit metadata carries over from the input map.
LinearMap truncate_rank(const LinearMap& map, int k);

/// Fraction of squared singular-value mass carried by the top k values.
double variance_explained(const SvdDecomposition& svd, int k);

}  // namespace facemap
