#include "facemap/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <string>

namespace facemap {

LinearMap ridge_fit(const Matrix& s, const Matrix& t, double lambda) {
  if (s.rows() != t.rows()) {
    throw ProtocolError("ridge_fit: S has " + std::to_string(s.rows()) + " rows but T has " +
                        std::to_string(t.rows()));
  }
  if (s.rows() < 1) throw ProtocolError("ridge_fit: need at least one row");
  if (!s.allFinite() || !t.allFinite()) throw NumericalError("ridge_fit: non-finite input");
  if (lambda < 0.0) throw ProtocolError("ridge_fit: lambda must be nonnegative");

  const Eigen::Index d = s.cols();
  if (lambda == 0.0) {
    const Eigen::ColPivHouseholderQR<Matrix> qr(s);
    if (qr.rank() < d) {
      throw NumericalError("ridge_fit: singular normal equations (lambda = 0 and rank(S) = " +
                           std::to_string(qr.rank()) + " < " + std::to_string(d) +
                           "); use lambda > 0");
    }
  }

  Matrix gram = s.transpose() * s;
  gram.diagonal().array() += lambda;
  const Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("ridge_fit: factorization of the normal equations failed");
  }

  LinearMap map;
  map.matrix = ldlt.solve(s.transpose() * t);
  map.lambda = lambda;
  map.n_pairs_used = s.rows();
  if (!map.matrix.allFinite()) {
    throw NumericalError("ridge_fit: solution is not finite; the system is numerically singular");
  }
  return map;
}

SvdDecomposition svd(const Matrix& m) {
  if (!m.allFinite()) throw NumericalError("svd: non-finite input");
  const Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdDecomposition{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

LinearMap truncate_rank(const LinearMap& map, int k) {
  const int max_rank = std::min(map.source_dim(), map.target_dim());
  if (k < 1 || k > max_rank) {
    throw ProtocolError("truncate_rank: k = " + std::to_string(k) + " outside [1, " +
                        std::to_string(max_rank) + "]");
  }
  const SvdDecomposition dec = svd(map.matrix);
  LinearMap result = map;
  result.matrix = dec.u.leftCols(k) * dec.singular_values.head(k).asDiagonal() *
                  dec.v.leftCols(k).transpose();
  return result;
}

double variance_explained(const SvdDecomposition& svd, int k) {
  const Eigen::Index r = svd.singular_values.size();
  if (k < 1 || k > r) {
    throw ProtocolError("variance_explained: k = " + std::to_string(k) + " outside [1, " +
                        std::to_string(r) + "]");
  }
  // Partial sums keep variance_explained(r) == 1.0 bit-exact.
  double top = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) top += svd.singular_values[i] * svd.singular_values[i];
  double total = top;
  for (Eigen::Index i = k; i < r; ++i) total += svd.singular_values[i] * svd.singular_values[i];
  if (total <= 0.0) {
    throw ProtocolError("variance_explained: all singular values are zero");
  }
  return top / total;
}

}  // namespace facemap
