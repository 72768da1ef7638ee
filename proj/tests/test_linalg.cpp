#include <doctest.h>

#include <cmath>

#include "facemap/linalg.hpp"
#include "facemap/rng.hpp"
#include "oracles.hpp"

using namespace facemap;

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.next_normal();
  }
  return m;
}

double ridge_objective(const Matrix& s, const Matrix& t, const Matrix& m, double lambda) {
  return (s * m - t).squaredNorm() + lambda * m.squaredNorm();
}

}  // namespace

TEST_CASE("ridge_fit identity cases") {
  const Matrix eye3 = Matrix::Identity(3, 3);
  const LinearMap unpenalized = ridge_fit(eye3, eye3, 0.0);
  CHECK((unpenalized.matrix - eye3).norm() < 1e-12);

  // (I + I)^-1 I = I/2.
  const Matrix eye2 = Matrix::Identity(2, 2);
  const LinearMap shrunk = ridge_fit(eye2, eye2, 1.0);
  CHECK((shrunk.matrix - 0.5 * eye2).norm() < 1e-12);
  CHECK(shrunk.lambda == 1.0);
  CHECK(shrunk.n_pairs_used == 2);
}

TEST_CASE("ridge_fit matches the normal-equations oracle") {
  Rng rng(21);
  const Matrix s = random_matrix(rng, 20, 4);
  const Matrix t = random_matrix(rng, 20, 3);
  const LinearMap fit = ridge_fit(s, t, 1.0);
  const Matrix expected = oracle::ridge_normal_equations(s, t, 1.0);
  CHECK((fit.matrix - expected).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("ridge_fit error paths") {
  Rng rng(22);
  const Matrix s = random_matrix(rng, 5, 3);
  const Matrix t = random_matrix(rng, 4, 3);
  CHECK_THROWS_AS(ridge_fit(s, t, 1.0), ProtocolError);
  CHECK_THROWS_AS(ridge_fit(Matrix(0, 3), Matrix(0, 2), 1.0), ProtocolError);
  CHECK_THROWS_AS(ridge_fit(s, random_matrix(rng, 5, 2), -1.0), ProtocolError);

  // lambda = 0 with rank-deficient S: fewer rows than columns...
  const Matrix wide = random_matrix(rng, 3, 6);
  CHECK_THROWS_AS(ridge_fit(wide, random_matrix(rng, 3, 2), 0.0), NumericalError);
  // ...or a duplicated column.
  Matrix dup = random_matrix(rng, 8, 4);
  dup.col(3) = dup.col(0);
  CHECK_THROWS_AS(ridge_fit(dup, random_matrix(rng, 8, 2), 0.0), NumericalError);

  Matrix bad = s;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ridge_fit(bad, random_matrix(rng, 5, 2), 1.0), NumericalError);
}

TEST_CASE("ridge_fit with positive lambda accepts underdetermined systems") {
  Rng rng(23);
  const Matrix s = random_matrix(rng, 3, 8);  // m < d_s
  const Matrix t = random_matrix(rng, 3, 4);
  const LinearMap fit = ridge_fit(s, t, 0.5);
  CHECK(fit.matrix.allFinite());
  CHECK(fit.matrix.rows() == 8);
  CHECK(fit.matrix.cols() == 4);
}

TEST_CASE("ridge_fit shrinks toward zero as lambda grows") {
  Rng rng(24);
  const Matrix s = random_matrix(rng, 30, 6);
  const Matrix t = random_matrix(rng, 30, 5);
  const double n0 = ridge_fit(s, t, 0.1).matrix.norm();
  const double n1 = ridge_fit(s, t, 10.0).matrix.norm();
  const double n2 = ridge_fit(s, t, 1000.0).matrix.norm();
  CHECK(n0 > n1);
  CHECK(n1 > n2);
}

TEST_CASE("ridge_fit output is a local minimum of the ridge objective") {
  Rng rng(25);
  const Matrix s = random_matrix(rng, 25, 5);
  const Matrix t = random_matrix(rng, 25, 4);
  const double lambda = 1.0;
  const LinearMap fit = ridge_fit(s, t, lambda);
  const double at_fit = ridge_objective(s, t, fit.matrix, lambda);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix delta = 1e-3 * random_matrix(rng, 5, 4);
    CHECK(at_fit <= ridge_objective(s, t, fit.matrix + delta, lambda) + 1e-12);
  }
}

TEST_CASE("svd basics") {
  Matrix diag = Matrix::Zero(3, 3);
  diag(0, 0) = 3.0;
  diag(1, 1) = 2.0;
  diag(2, 2) = 1.0;
  const SvdDecomposition dec = svd(diag);
  CHECK(dec.singular_values.size() == 3);
  CHECK(dec.singular_values[0] == doctest::Approx(3.0));
  CHECK(dec.singular_values[1] == doctest::Approx(2.0));
  CHECK(dec.singular_values[2] == doctest::Approx(1.0));

  const SvdDecomposition zero = svd(Matrix::Zero(4, 4));
  for (int i = 0; i < 4; ++i) CHECK(zero.singular_values[i] == 0.0);

  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(svd(bad), NumericalError);
}

TEST_CASE("svd reconstructs and matches the Jacobi eigenvalue oracle") {
  Rng rng(26);
  const Matrix m = random_matrix(rng, 8, 8);
  const SvdDecomposition dec = svd(m);

  const Matrix rebuilt = dec.u * dec.singular_values.asDiagonal() * dec.v.transpose();
  CHECK((rebuilt - m).cwiseAbs().maxCoeff() <= 1e-8);

  for (int i = 0; i + 1 < dec.singular_values.size(); ++i) {
    CHECK(dec.singular_values[i] >= dec.singular_values[i + 1]);
  }
  CHECK((dec.u.transpose() * dec.u - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((dec.v.transpose() * dec.v - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-8);

  const std::vector<double> expected = oracle::singular_values(m);
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(dec.singular_values[i] - expected[i]) <= 1e-8);
  }
}

TEST_CASE("truncate_rank basics") {
  Matrix diag = Matrix::Zero(3, 3);
  diag(0, 0) = 3.0;
  diag(1, 1) = 2.0;
  diag(2, 2) = 1.0;
  LinearMap map;
  map.matrix = diag;
  map.lambda = 0.25;
  map.source_tag = "a";
  map.target_tag = "b";

  const LinearMap full = truncate_rank(map, 3);
  CHECK((full.matrix - diag).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(full.lambda == 0.25);
  CHECK(full.source_tag == "a");

  Matrix rank1 = Matrix::Zero(3, 3);
  rank1(0, 0) = 3.0;
  CHECK((truncate_rank(map, 1).matrix - rank1).cwiseAbs().maxCoeff() <= 1e-8);

  CHECK_THROWS_AS(truncate_rank(map, 0), ProtocolError);
  CHECK_THROWS_AS(truncate_rank(map, 4), ProtocolError);
}

TEST_CASE("truncate_rank achieves the Eckart-Young error") {
  Rng rng(27);
  LinearMap map;
  map.matrix = random_matrix(rng, 16, 16);
  const int k = 4;
  const LinearMap truncated = truncate_rank(map, k);

  const double error = (map.matrix - truncated.matrix).norm();
  const std::vector<double> sigma = oracle::singular_values(map.matrix);
  double tail = 0.0;
  for (std::size_t i = k; i < sigma.size(); ++i) tail += sigma[i] * sigma[i];
  CHECK(std::abs(error - std::sqrt(tail)) <= 1e-8);

  // Numerical rank really dropped to k.
  const SvdDecomposition dec = svd(truncated.matrix);
  CHECK(dec.singular_values[k] <= 1e-8);
}

TEST_CASE("variance_explained examples and properties") {
  SvdDecomposition dec;
  dec.u = Matrix::Identity(3, 3);
  dec.v = Matrix::Identity(3, 3);
  dec.singular_values = Vector(3);
  dec.singular_values << 3.0, 2.0, 1.0;

  CHECK(variance_explained(dec, 3) == 1.0);
  CHECK(variance_explained(dec, 1) == doctest::Approx(9.0 / 14.0).epsilon(1e-14));

  SvdDecomposition even;
  even.u = Matrix::Identity(2, 2);
  even.v = Matrix::Identity(2, 2);
  even.singular_values = Vector(2);
  even.singular_values << 1.0, 1.0;
  CHECK(variance_explained(even, 1) == 0.5);

  double previous = 0.0;
  for (int k = 1; k <= 3; ++k) {
    const double value = variance_explained(dec, k);
    CHECK(value >= previous);
    previous = value;
  }

  CHECK_THROWS_AS(variance_explained(dec, 0), ProtocolError);
  CHECK_THROWS_AS(variance_explained(dec, 4), ProtocolError);

  SvdDecomposition zeros;
  zeros.u = Matrix::Identity(2, 2);
  zeros.v = Matrix::Identity(2, 2);
  zeros.singular_values = Vector::Zero(2);
  CHECK_THROWS_AS(variance_explained(zeros, 1), ProtocolError);
}
