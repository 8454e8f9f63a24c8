#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "obseq/error.hpp"

namespace obseq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Moduli within this distance of 1 are on the unit-root boundary.
inline constexpr double kUnitCircleTol = 1e-9;
inline constexpr int kMaxEigenDim = 8;

enum class Stability { Stable, Boundary, Unstable };

inline Stability classify_modulus(double modulus) {
  if (modulus < 1.0 - kUnitCircleTol) return Stability::Stable;
  if (modulus > 1.0 + kUnitCircleTol) return Stability::Unstable;
  return Stability::Boundary;
}

inline double inf_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double inf_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    fail(ErrorCode::NonSquare, std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                                   std::to_string(m.cols()));
  }
}

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

// Smallest singular value over largest; 0 for an empty or zero matrix.
inline double inverse_condition(const Matrix& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

inline double inverse_condition(const ComplexMatrix& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

/// Eigenvalues sorted by ascending modulus, ties by ascending argument and
/// then by input order. Column j of `eigenvectors` pairs with eigenvalue j.
struct EigenDecomposition {
  ComplexVector eigenvalues;
  ComplexMatrix eigenvectors;
  bool diagonalizable = true;
};

namespace detail {

inline void sort_eigenpairs(ComplexVector& values, ComplexMatrix& vectors) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(values(a));
    const double mb = std::abs(values(b));
    if (ma != mb) return ma < mb;
    return std::arg(values(a)) < std::arg(values(b));
  });
  ComplexVector v(n);
  ComplexMatrix w(vectors.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    v(j) = values(order[static_cast<std::size_t>(j)]);
    w.col(j) = vectors.col(order[static_cast<std::size_t>(j)]);
  }
  values = std::move(v);
  vectors = std::move(w);
}

inline ComplexVector eigvec_2x2(const Matrix& m, Complex lambda, Eigen::Index fallback_axis) {
  const Complex a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  ComplexVector v1(2), v2(2);
  v1 << b, lambda - a;
  v2 << lambda - d, c;
  ComplexVector v = v1.norm() >= v2.norm() ? v1 : v2;
  const double scale = std::max(1.0, inf_norm(m));
  if (v.norm() <= 1e-14 * scale) {
    // m is (numerically) lambda * I: any basis works.
    v.setZero();
    v(fallback_axis) = 1.0;
  }
  return v / v.norm();
}

inline void eigen_2x2(const Matrix& m, ComplexVector& values, ComplexMatrix& vectors) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  values.resize(2);
  if (b == 0.0 || c == 0.0) {
    // Triangular: the spectrum is the diagonal.
    values << Complex(a), Complex(d);
  } else {
    const double tr = a + d;
    const double det = a * d - b * c;
    const double disc = (a - d) * (a - d) + 4.0 * b * c;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      const double big = 0.5 * (tr + std::copysign(s, tr));
      const double small = big != 0.0 ? det / big : 0.5 * (tr - std::copysign(s, tr));
      values << Complex(big), Complex(small);
    } else {
      const double im = 0.5 * std::sqrt(-disc);
      values << Complex(0.5 * tr, im), Complex(0.5 * tr, -im);
    }
  }
  vectors.resize(2, 2);
  vectors.col(0) = eigvec_2x2(m, values(0), 0);
  vectors.col(1) = eigvec_2x2(m, values(1), 1);
}

}  // namespace detail

/// Eigendecomposition of a small square matrix. Dimensions 1 and 2 use closed
/// forms; larger ones go through a Hessenberg/shifted-QR solver.
inline EigenDecomposition eigen(const Matrix& m) {
  require_square(m, "eigen input");
  if (m.rows() > kMaxEigenDim) {
    fail(ErrorCode::DimensionTooLarge,
         "dimension " + std::to_string(m.rows()) + " exceeds " + std::to_string(kMaxEigenDim));
  }
  if (!all_finite(m)) fail(ErrorCode::InvalidModel, "eigen input has non-finite entries");

  EigenDecomposition out;
  const Eigen::Index n = m.rows();
  if (n == 0) return out;
  if (n == 1) {
    out.eigenvalues = ComplexVector::Constant(1, Complex(m(0, 0)));
    out.eigenvectors = ComplexMatrix::Ones(1, 1);
  } else if (n == 2) {
    detail::eigen_2x2(m, out.eigenvalues, out.eigenvectors);
  } else {
    Eigen::EigenSolver<Matrix> solver(m, true);
    if (solver.info() != Eigen::Success) {
      fail(ErrorCode::ConvergenceFailure, "QR iteration did not converge");
    }
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
  }
  detail::sort_eigenpairs(out.eigenvalues, out.eigenvectors);

  const ComplexMatrix mc = m.cast<Complex>();
  const double residual =
      inf_norm(ComplexMatrix(mc * out.eigenvectors -
                             out.eigenvectors * out.eigenvalues.asDiagonal()));
  out.diagonalizable = inverse_condition(out.eigenvectors) > 1e-12 &&
                       residual <= 1e-9 * std::max(inf_norm(m), 1e-300);
  if (inf_norm(m) == 0.0) out.diagonalizable = true;
  return out;
}

inline double spectral_radius(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const auto ev = eigen(m).eigenvalues;
  return std::abs(ev(ev.size() - 1));
}

/// Solves G = T G T' + Q by doubling: G <- G + A G A', A <- A^2.
inline Matrix lyapunov_solve(const Matrix& t, const Matrix& q) {
  require_square(t, "transition");
  require_square(q, "Q");
  if (t.rows() != q.rows()) fail(ErrorCode::NonSquare, "transition and Q differ in dimension");
  if (!is_symmetric(q)) fail(ErrorCode::NonSymmetricQ, "Q is not symmetric");
  const double radius = spectral_radius(t);
  if (!(radius < 1.0 - kUnitCircleTol)) {
    fail(ErrorCode::UnstableTransition,
         "spectral radius " + std::to_string(radius) + " is not below 1");
  }

  Matrix gamma = 0.5 * (q + q.transpose());
  Matrix a = t;
  for (int iter = 0; iter < 200; ++iter) {
    const Matrix increment = a * gamma * a.transpose();
    gamma += increment;
    if (inf_norm(increment) <= 1e-16 * std::max(inf_norm(gamma), 1e-300)) break;
    a = a * a;
    if (inf_norm(a) == 0.0) break;
  }
  return 0.5 * (gamma + gamma.transpose());
}

/// Roots of det(A1 mu^2 - A0 mu + A2) with their null vectors. Infinite roots
/// (from a singular A1) are reported with `infinite[j] == true`.
struct PencilSpectrum {
  ComplexVector roots;
  ComplexMatrix vectors;  // n x 2n, column j is a null vector for roots(j)
  std::vector<bool> infinite;
};

namespace detail {

inline void require_pencil_shapes(const Matrix& a1, const Matrix& a0, const Matrix& a2) {
  require_square(a0, "A0");
  require_square(a1, "A1");
  require_square(a2, "A2");
  if (a1.rows() != a0.rows() || a2.rows() != a0.rows()) {
    fail(ErrorCode::NonSquare, "A0, A1 and A2 must share one dimension");
  }
  if (a0.rows() > kMaxEigenDim) {
    fail(ErrorCode::DimensionTooLarge, "model dimension exceeds " + std::to_string(kMaxEigenDim));
  }
}

}  // namespace detail

inline PencilSpectrum quadratic_pencil(const Matrix& a1, const Matrix& a0, const Matrix& a2) {
  detail::require_pencil_shapes(a1, a0, a2);
  const Eigen::Index n = a0.rows();

  // Substituting mu = s + 1/nu gives a pencil whose leading coefficient P(s)
  // is invertible for a generic shift s; nu = 0 maps to mu = infinity.
  static constexpr double kShifts[] = {0.5123, -0.4871, 0.2377, 0.7519, -0.8093,
                                       1.3171, -1.6911, 2.2307, 0.0917, -0.1931};
  double best_shift = kShifts[0];
  double best_rcond = -1.0;
  Matrix best_ps;
  for (double s : kShifts) {
    Matrix ps = a1 * (s * s) - a0 * s + a2;
    const double rc = inverse_condition(ps);
    if (rc > best_rcond) {
      best_rcond = rc;
      best_shift = s;
      best_ps = std::move(ps);
    }
    if (rc > 1e-3) break;
  }
  if (best_rcond < 1e-14) {
    fail(ErrorCode::ConvergenceFailure, "quadratic pencil is singular for every shift");
  }
  const double s = best_shift;
  const Eigen::PartialPivLU<Matrix> lu(best_ps);
  const Matrix m1 = lu.solve(Matrix(2.0 * s * a1 - a0));
  const Matrix m0 = lu.solve(a1);

  Matrix companion = Matrix::Zero(2 * n, 2 * n);
  companion.topLeftCorner(n, n) = -m1;
  companion.topRightCorner(n, n) = -m0;
  companion.bottomLeftCorner(n, n) = Matrix::Identity(n, n);

  Eigen::EigenSolver<Matrix> solver(companion, true);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::ConvergenceFailure, "companion eigenvalue iteration failed");
  }
  const ComplexVector nu = solver.eigenvalues();
  const ComplexMatrix z = solver.eigenvectors();
  const double scale = std::max(1.0, inf_norm(companion));

  PencilSpectrum out;
  out.roots.resize(2 * n);
  out.vectors.resize(n, 2 * n);
  out.infinite.assign(static_cast<std::size_t>(2 * n), false);
  for (Eigen::Index j = 0; j < 2 * n; ++j) {
    ComplexVector w = z.col(j).tail(n);
    if (w.norm() > 0.0) w /= w.norm();
    out.vectors.col(j) = w;
    if (std::abs(nu(j)) <= 1e-11 * scale) {
      out.infinite[static_cast<std::size_t>(j)] = true;
      out.roots(j) = Complex(std::numeric_limits<double>::infinity(), 0.0);
    } else {
      out.roots(j) = s + 1.0 / nu(j);
    }
  }
  return out;
}

enum class SolventChoice {
  MinimalRadius,  // the n roots of smallest modulus
  MaximalStable,  // the n stable roots of largest modulus (sunspot solutions)
};

struct SolventOptions {
  bool allow_boundary = false;
  SolventChoice choice = SolventChoice::MinimalRadius;
};

struct SolventResult {
  Matrix C;
  ComplexVector spectrum;  // eigenvalues of C
  bool boundary = false;   // some eigenvalue of C lies on the unit circle
  bool multiple = false;   // more than n stable roots were available
  double residual = 0.0;   // ||A1 C^2 - A0 C + A2||_inf
};

inline double solvent_residual(const Matrix& a1, const Matrix& a0, const Matrix& a2,
                               const Matrix& c) {
  return inf_norm(Matrix(a1 * c * c - a0 * c + a2));
}

namespace detail {

// Newton steps on F(C) = A1 C^2 - A0 C + A2; a step is kept only if it
// lowers the residual.
inline Matrix polish_solvent(const Matrix& a1, const Matrix& a0, const Matrix& a2, Matrix c) {
  const Eigen::Index n = c.rows();
  double res = solvent_residual(a1, a0, a2, c);
  for (int step = 0; step < 4 && res > 0.0; ++step) {
    const Matrix f = a1 * c * c - a0 * c + a2;
    const Matrix left = a1 * c - a0;
    Matrix jac = Matrix::Zero(n * n, n * n);
    // vec(L dC) + vec(A1 dC C) = (I kron L + C' kron A1) vec(dC)
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        jac.block(i * n, j * n, n, n) = c(j, i) * a1;
        if (i == j) jac.block(i * n, j * n, n, n) += left;
      }
    }
    Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible()) break;
    const Vector rhs = -Eigen::Map<const Vector>(f.data(), n * n);
    const Vector dvec = lu.solve(rhs);
    Matrix candidate = c + Eigen::Map<const Matrix>(dvec.data(), n, n);
    const double cand_res = solvent_residual(a1, a0, a2, candidate);
    if (!(cand_res < res)) break;
    c = std::move(candidate);
    res = cand_res;
  }
  return c;
}

}  // namespace detail

/// Stable solvent C of A1 C^2 - A0 C + A2 = 0, chosen from the eigenstructure
/// of the companion pencil. Throws NoStableSolvent when fewer than n roots lie
/// strictly inside the unit circle (boundary roots count when allowed).
inline SolventResult quadratic_solvent(const Matrix& a1, const Matrix& a0, const Matrix& a2,
                                       SolventOptions options = {}) {
  detail::require_pencil_shapes(a1, a0, a2);
  const Eigen::Index n = a0.rows();
  if (n == 0) return {};
  if (!all_finite(a0) || !all_finite(a1) || !all_finite(a2)) {
    fail(ErrorCode::InvalidModel, "solvent inputs have non-finite entries");
  }
  if (inverse_condition(a0) < 1e-13) fail(ErrorCode::SingularA0, "A0 is singular");

  const PencilSpectrum pencil = quadratic_pencil(a1, a0, a2);
  std::vector<Eigen::Index> finite;
  for (Eigen::Index j = 0; j < pencil.roots.size(); ++j) {
    if (!pencil.infinite[static_cast<std::size_t>(j)]) finite.push_back(j);
  }
  std::stable_sort(finite.begin(), finite.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(pencil.roots(a));
    const double mb = std::abs(pencil.roots(b));
    if (ma != mb) return ma < mb;
    return std::arg(pencil.roots(a)) < std::arg(pencil.roots(b));
  });

  const auto admissible = [&](Eigen::Index j) {
    const Stability st = classify_modulus(std::abs(pencil.roots(j)));
    return st == Stability::Stable || (options.allow_boundary && st == Stability::Boundary);
  };
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index j : finite) {
    if (admissible(j)) candidates.push_back(j);
  }
  if (static_cast<Eigen::Index>(candidates.size()) < n) {
    fail(ErrorCode::NoStableSolvent, "only " + std::to_string(candidates.size()) + " of " +
                                         std::to_string(n) +
                                         " required roots lie inside the unit circle");
  }

  SolventResult out;
  std::size_t stable_count = 0;
  for (Eigen::Index j : candidates) {
    if (classify_modulus(std::abs(pencil.roots(j))) == Stability::Stable) ++stable_count;
  }
  out.multiple = stable_count > static_cast<std::size_t>(n);

  std::vector<Eigen::Index> chosen;
  if (options.choice == SolventChoice::MinimalRadius) {
    chosen.assign(candidates.begin(), candidates.begin() + n);
  } else {
    chosen.assign(candidates.end() - n, candidates.end());
  }

  ComplexMatrix w(n, n);
  ComplexVector mu(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    w.col(j) = pencil.vectors.col(chosen[static_cast<std::size_t>(j)]);
    mu(j) = pencil.roots(chosen[static_cast<std::size_t>(j)]);
    if (classify_modulus(std::abs(mu(j))) == Stability::Boundary) out.boundary = true;
  }

  Matrix c;
  if (options.choice == SolventChoice::MinimalRadius && a2.cwiseAbs().maxCoeff() == 0.0) {
    // det(A1 mu^2 - A0 mu) carries n zero roots, so C = 0 is the minimal solvent.
    c = Matrix::Zero(n, n);
  } else if (inverse_condition(w) > 1e-10) {
    const ComplexMatrix cc = w * mu.asDiagonal() * w.inverse();
    if (cc.imag().cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, cc.real().cwiseAbs().maxCoeff())) {
      fail(ErrorCode::ConvergenceFailure, "selected roots split a complex-conjugate pair");
    }
    c = cc.real();
  } else if (options.choice == SolventChoice::MinimalRadius) {
    // Defective root set: functional iteration converges to the minimal solvent.
    c = Matrix::Zero(n, n);
    for (int iter = 0; iter < 100000; ++iter) {
      Matrix next = Eigen::FullPivLU<Matrix>(a0 - a1 * c).solve(a2);
      const double change = inf_norm(Matrix(next - c));
      c = std::move(next);
      if (change <= 1e-15 * std::max(1.0, inf_norm(c))) break;
    }
  } else {
    fail(ErrorCode::ConvergenceFailure, "selected null vectors are linearly dependent");
  }

  c = detail::polish_solvent(a1, a0, a2, std::move(c));
  out.C = c;
  out.spectrum = mu;
  out.residual = solvent_residual(a1, a0, a2, c);
  if (!(out.residual <= 1e-10 * std::max(inf_norm(a0), 1.0))) {
    fail(ErrorCode::ConvergenceFailure,
         "solvent residual " + std::to_string(out.residual) + " exceeds tolerance");
  }
  return out;
}

/// Solves L X - M X R = K for X (all small), via the Kronecker form
/// (I kron L - R' kron M) vec X = vec K. Minimum-norm least squares when the
/// operator is singular and `allow_singular` is set.
inline Matrix solve_sylvester_like(const Matrix& l, const Matrix& m, const Matrix& r,
                                   const Matrix& k, bool allow_singular = false,
                                   bool* singular = nullptr) {
  const Eigen::Index p = l.rows();
  const Eigen::Index q = r.rows();
  if (p * q == 0) return Matrix::Zero(p, q);
  Matrix op = Matrix::Zero(p * q, p * q);
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      op.block(i * p, j * p, p, p) = -r(j, i) * m;
      if (i == j) op.block(i * p, j * p, p, p) += l;
    }
  }
  const Vector rhs = Eigen::Map<const Vector>(k.data(), p * q);
  Vector x;
  const bool sing = inverse_condition(op) < 1e-13;
  if (singular != nullptr) *singular = sing;
  if (sing) {
    if (!allow_singular) fail(ErrorCode::ConvergenceFailure, "linear coefficient system is singular");
    x = op.completeOrthogonalDecomposition().solve(rhs);
  } else {
    x = op.fullPivLu().solve(rhs);
  }
  return Eigen::Map<const Matrix>(x.data(), p, q);
}

}  // namespace obseq
