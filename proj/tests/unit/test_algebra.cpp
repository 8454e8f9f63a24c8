#include <random>

#include <gtest/gtest.h>

#include "obseq/algebra.hpp"

using namespace obseq;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST(Eigen, IdentityHasUnitEigenvalues) {
  const auto e = eigen(Matrix::Identity(2, 2));
  EXPECT_EQ(e.eigenvalues(0), Complex(1.0));
  EXPECT_EQ(e.eigenvalues(1), Complex(1.0));
  EXPECT_TRUE(e.diagonalizable);
}

TEST(Eigen, TriangularReadsDiagonal) {
  const double beta = 0.99, rho = 0.9;
  const auto e = eigen(mat2(1.0 / beta, -1.0 / beta, 0.0, rho));
  EXPECT_EQ(e.eigenvalues(0), Complex(0.9));
  EXPECT_EQ(e.eigenvalues(1), Complex(1.0 / 0.99));
}

TEST(Eigen, Ar2CompanionFactors) {
  const auto e = eigen(mat2(0.0, 1.0, -0.4, 1.3));
  EXPECT_NEAR(e.eigenvalues(0).real(), 0.5, 1e-14);
  EXPECT_NEAR(e.eigenvalues(1).real(), 0.8, 1e-14);
  EXPECT_EQ(e.eigenvalues(0).imag(), 0.0);
}

TEST(Eigen, SortsByModulusThenArgument) {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = -0.5;
  m(1, 1) = 0.5;
  m(2, 2) = 0.1;
  const auto e = eigen(m);
  EXPECT_NEAR(e.eigenvalues(0).real(), 0.1, 1e-15);
  EXPECT_NEAR(e.eigenvalues(1).real(), 0.5, 1e-15);   // arg 0 before arg pi
  EXPECT_NEAR(e.eigenvalues(2).real(), -0.5, 1e-15);
}

TEST(Eigen, DefectiveMatrixIsFlagged) {
  EXPECT_FALSE(eigen(mat2(1.0, 1.0, 0.0, 1.0)).diagonalizable);
}

TEST(Eigen, RejectsNonSquareAndLarge) {
  try {
    eigen(Matrix::Zero(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonSquare);
  }
  try {
    eigen(Matrix::Identity(9, 9));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionTooLarge);
  }
}

TEST(Eigen, RandomReconstruction) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = u(rng);
    const auto e = eigen(m);
    for (int j = 1; j < n; ++j) EXPECT_LE(std::abs(e.eigenvalues(j - 1)), std::abs(e.eigenvalues(j)) + 1e-15);
    if (inverse_condition(e.eigenvectors) < 1e-6) continue;  // keep to well-conditioned draws
    const ComplexMatrix rebuilt = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.inverse();
    EXPECT_LE(inf_norm(ComplexMatrix(rebuilt - m.cast<Complex>())), 1e-8 * inf_norm(m));
  }
}

TEST(Lyapunov, ScalarCases) {
  EXPECT_NEAR(lyapunov_solve(scalar(0.5), scalar(1.0))(0, 0), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(lyapunov_solve(scalar(0.9), scalar(1.0))(0, 0), 1.0 / 0.19, 1e-12);
}

TEST(Lyapunov, ZeroTransitionReturnsQ) {
  Matrix q(3, 3);
  q << 2, 0.5, 0, 0.5, 1, 0.1, 0, 0.1, 3;
  EXPECT_EQ(lyapunov_solve(Matrix::Zero(3, 3), q), q);
}

TEST(Lyapunov, MatchesTruncatedSeries) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    Matrix t(n, n), l(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        t(i, j) = u(rng);
        l(i, j) = u(rng);
      }
    t *= 0.9 / std::max(spectral_radius(t), 1e-3);
    if (spectral_radius(t) >= 0.95) t *= 0.5;
    const Matrix q = l * l.transpose();
    const Matrix g = lyapunov_solve(t, q);
    Matrix series = Matrix::Zero(n, n), tk = Matrix::Identity(n, n);
    for (int k = 0; k < 2000; ++k) {
      series += tk * q * tk.transpose();
      tk = tk * t;
    }
    EXPECT_LE(inf_norm(Matrix(g - series)), 1e-8 * std::max(1.0, inf_norm(series)));
    EXPECT_LE(inf_norm(Matrix(g - t * g * t.transpose() - q)), 1e-10 * std::max(1.0, inf_norm(q)));
    EXPECT_TRUE(is_symmetric(g));
  }
}

TEST(Lyapunov, Errors) {
  try {
    lyapunov_solve(scalar(1.0), scalar(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnstableTransition);
  }
  try {
    lyapunov_solve(Matrix::Zero(2, 2), mat2(1, 0.2, 0.3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonSymmetricQ);
  }
}

TEST(QuadraticSolvent, ScalarHybridRoot) {
  const auto r = quadratic_solvent(scalar(0.5), scalar(1.0), scalar(0.3));
  // (1 - sqrt(1 - 4 * 0.5 * 0.3)) / (2 * 0.5)
  EXPECT_NEAR(r.C(0, 0), 1.0 - std::sqrt(0.4), 1e-14);
  EXPECT_LE(r.residual, 1e-14);
}

TEST(QuadraticSolvent, LinearCaseReturnsPhi) {
  const Matrix phi = mat2(0.5, 0.1, -0.2, 0.3);
  const auto r = quadratic_solvent(Matrix::Zero(2, 2), Matrix::Identity(2, 2), phi);
  EXPECT_LE(inf_norm(Matrix(r.C - phi)), 1e-14);
}

TEST(QuadraticSolvent, UnitRootPairHasNoStableSolvent) {
  // 0.4 mu^2 - mu + 0.6 has roots 1 and 1.5: nothing strictly inside the circle.
  try {
    quadratic_solvent(scalar(0.4), scalar(1.0), scalar(0.6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoStableSolvent);
  }
  SolventOptions opts;
  opts.allow_boundary = true;
  const auto r = quadratic_solvent(scalar(0.4), scalar(1.0), scalar(0.6), opts);
  EXPECT_NEAR(r.C(0, 0), 1.0, 1e-12);
  EXPECT_TRUE(r.boundary);
}

TEST(QuadraticSolvent, ComplexPairOutsideCircle) {
  try {
    quadratic_solvent(scalar(0.5), scalar(1.0), scalar(0.6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoStableSolvent);
  }
}

TEST(QuadraticSolvent, SingularA0) {
  try {
    quadratic_solvent(Matrix::Zero(2, 2), mat2(1, 1, 1, 1), Matrix::Zero(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularA0);
  }
}

TEST(QuadraticSolvent, RandomStableSystems) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix c(2, 2), a1(2, 2), a0(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        c(i, j) = u(rng);
        a1(i, j) = 0.5 * u(rng);
        a0(i, j) = u(rng) + (i == j ? 2.0 : 0.0);
      }
    c *= 0.8 / std::max(spectral_radius(c), 1e-3);
    const Matrix a2 = a0 * c - a1 * c * c;
    const auto r = quadratic_solvent(a1, a0, a2);
    EXPECT_LE(r.residual, 1e-10 * std::max(inf_norm(a0), 1.0));
    EXPECT_LT(spectral_radius(r.C), 1.0);
    // The solvent spectrum is the n smallest pencil roots.
    const auto ev = eigen(r.C).eigenvalues;
    EXPECT_NEAR(std::abs(ev(1)), std::abs(r.spectrum(1)), 1e-8);
  }
}

TEST(QuadraticSolvent, PencilSplitsIntoSolventAndComplement) {
  // Scalar: roots of a1 mu^2 - a0 mu + a2 are mu1 and mu2 with mu1 mu2 = a2/a1.
  const auto r = quadratic_solvent(scalar(0.5), scalar(1.0), scalar(0.3));
  const auto pencil = quadratic_pencil(scalar(0.5), scalar(1.0), scalar(0.3));
  ASSERT_EQ(pencil.roots.size(), 2);
  EXPECT_NEAR(std::abs(pencil.roots(0) * pencil.roots(1)), 0.6, 1e-13);
  const double small = std::min(std::abs(pencil.roots(0)), std::abs(pencil.roots(1)));
  EXPECT_NEAR(small, r.C(0, 0), 1e-13);
}
