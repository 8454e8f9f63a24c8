#pragma once

#include <optional>
#include <string>
#include <vector>

#include "obseq/algebra.hpp"
#include "obseq/error.hpp"

namespace obseq {

/// Hybrid linear rational-expectations model
///
///   A0 y_t = A1 E_t y_{t+1} + A2 y_{t-1} + A3 x_t + u_t
///   x_t = Phi_x x_{t-1} + v_t,   u_t = Phi_u u_{t-1} + eps_t
///
/// with n endogenous variables y and k observable exogenous variables x.
/// Each endogenous variable is labelled forward-looking or predetermined by
/// the caller; the solver never infers the partition.
struct StructuralREModel {
  std::string name;
  Matrix A0, A1, A2;  // n x n
  Matrix A3;          // n x k
  Matrix phi_x;       // k x k
  Matrix phi_u;       // n x n
  Matrix sigma_eps;   // n x n
  Matrix sigma_v;     // k x k
  std::vector<bool> forward;
  std::vector<std::string> variable_names;
  std::vector<int> observed;  // indices into y; empty means all
  std::optional<double> sunspot_variance;

  Eigen::Index n() const { return A0.rows(); }
  Eigen::Index k() const { return A3.cols(); }

  int forward_count() const {
    int count = 0;
    for (bool f : forward) count += f ? 1 : 0;
    return count;
  }

  std::vector<int> observed_indices() const {
    if (!observed.empty()) return observed;
    std::vector<int> all(static_cast<std::size_t>(n()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return all;
  }
};

/// Convenience constructor for a model with zero forcing blocks; callers fill
/// in whatever is non-zero.
inline StructuralREModel make_model(Eigen::Index n, Eigen::Index k = 0) {
  StructuralREModel m;
  m.A0 = Matrix::Identity(n, n);
  m.A1 = Matrix::Zero(n, n);
  m.A2 = Matrix::Zero(n, n);
  m.A3 = Matrix::Zero(n, k);
  m.phi_x = Matrix::Zero(k, k);
  m.phi_u = Matrix::Zero(n, n);
  m.sigma_eps = Matrix::Identity(n, n);
  m.sigma_v = Matrix::Identity(k, k);
  m.forward.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) m.variable_names.push_back("y" + std::to_string(i + 1));
  return m;
}

struct ModelDiagnostics {
  bool forcing_boundary = false;  // Phi_x or Phi_u has a unit-modulus root
};

namespace detail {

inline bool is_psd(const Matrix& m) {
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -1e-12 * scale;
}

inline void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    fail(ErrorCode::InvalidModel, std::string(what) + " must be " + std::to_string(rows) + "x" +
                                      std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                                      "x" + std::to_string(m.cols()));
  }
}

}  // namespace detail

inline ModelDiagnostics validate(const StructuralREModel& m) {
  const Eigen::Index n = m.n();
  const Eigen::Index k = m.k();
  if (n == 0) fail(ErrorCode::InvalidModel, "model has no endogenous variables");
  if (n > kMaxEigenDim) fail(ErrorCode::DimensionTooLarge, "too many endogenous variables");
  detail::require_shape(m.A0, n, n, "A0");
  detail::require_shape(m.A1, n, n, "A1");
  detail::require_shape(m.A2, n, n, "A2");
  detail::require_shape(m.A3, n, k, "A3");
  detail::require_shape(m.phi_x, k, k, "Phi_x");
  detail::require_shape(m.phi_u, n, n, "Phi_u");
  detail::require_shape(m.sigma_eps, n, n, "Sigma_eps");
  detail::require_shape(m.sigma_v, k, k, "Sigma_v");
  for (const Matrix* mat : {&m.A0, &m.A1, &m.A2, &m.A3, &m.phi_x, &m.phi_u, &m.sigma_eps,
                            &m.sigma_v}) {
    if (!all_finite(*mat)) fail(ErrorCode::InvalidModel, "model matrices must be finite");
  }
  if (m.forward.size() != static_cast<std::size_t>(n)) {
    fail(ErrorCode::InvalidModel, "forward flags must have one entry per endogenous variable");
  }
  for (int idx : m.observed) {
    if (idx < 0 || idx >= n) fail(ErrorCode::InvalidModel, "observed index out of range");
  }
  if (inverse_condition(m.A0) < 1e-13) fail(ErrorCode::SingularA0, "A0 is singular");
  if (!is_symmetric(m.sigma_eps) || !detail::is_psd(m.sigma_eps)) {
    fail(ErrorCode::InvalidModel, "Sigma_eps must be symmetric positive semidefinite");
  }
  if (!is_symmetric(m.sigma_v) || !detail::is_psd(m.sigma_v)) {
    fail(ErrorCode::InvalidModel, "Sigma_v must be symmetric positive semidefinite");
  }
  if (m.sunspot_variance && !(*m.sunspot_variance >= 0.0)) {
    fail(ErrorCode::InvalidModel, "sunspot variance must be non-negative");
  }

  ModelDiagnostics diag;
  for (const Matrix* phi : {&m.phi_x, &m.phi_u}) {
    if (phi->size() == 0) continue;
    switch (classify_modulus(spectral_radius(*phi))) {
      case Stability::Stable: break;
      case Stability::Boundary: diag.forcing_boundary = true; break;
      case Stability::Unstable:
        fail(ErrorCode::InvalidModel, "forcing processes must be stationary");
    }
  }
  return diag;
}

enum class DeterminacyKind { Determinate, Indeterminate, NoStableSolution };

inline const char* to_string(DeterminacyKind k) {
  switch (k) {
    case DeterminacyKind::Determinate: return "Determinate";
    case DeterminacyKind::Indeterminate: return "Indeterminate";
    case DeterminacyKind::NoStableSolution: return "NoStableSolution";
  }
  return "?";
}

struct DeterminacyClass {
  DeterminacyKind kind = DeterminacyKind::Determinate;
  int degree = 0;  // forward_count - unstable_count when indeterminate
  int unstable_count = 0;
  int forward_count = 0;
  bool boundary = false;  // a pencil root (or forcing root) sits on the unit circle
  ComplexVector roots;    // finite roots of det(A1 mu^2 - A0 mu + A2)
};

/// Blanchard-Kahn counting: finite roots of the quadratic pencil strictly
/// outside the unit circle against the number of forward-looking variables.
/// Infinite roots (static rows of A1) and the forcing processes' roots, which
/// validation keeps inside the circle, do not count as unstable.
inline DeterminacyClass classify_determinacy(const StructuralREModel& m) {
  const ModelDiagnostics diag = validate(m);
  const PencilSpectrum pencil = quadratic_pencil(m.A1, m.A0, m.A2);

  DeterminacyClass out;
  out.forward_count = m.forward_count();
  out.boundary = diag.forcing_boundary;
  std::vector<Complex> finite;
  for (Eigen::Index j = 0; j < pencil.roots.size(); ++j) {
    if (pencil.infinite[static_cast<std::size_t>(j)]) continue;
    finite.push_back(pencil.roots(j));
    switch (classify_modulus(std::abs(pencil.roots(j)))) {
      case Stability::Unstable: ++out.unstable_count; break;
      case Stability::Boundary: out.boundary = true; break;
      case Stability::Stable: break;
    }
  }
  out.roots = Eigen::Map<ComplexVector>(finite.data(), static_cast<Eigen::Index>(finite.size()));
  if (out.unstable_count == out.forward_count) {
    out.kind = DeterminacyKind::Determinate;
  } else if (out.unstable_count < out.forward_count) {
    out.kind = DeterminacyKind::Indeterminate;
    out.degree = out.forward_count - out.unstable_count;
  } else {
    out.kind = DeterminacyKind::NoStableSolution;
  }
  return out;
}

/// y_t = C y_{t-1} + G1 x_t + G2 u_t (+ sunspot_loading w_t when indeterminate)
struct SolvedModel {
  Matrix C, G1, G2;
  DeterminacyClass determinacy;
  Matrix sunspot_loading;  // n x d, empty for determinate models
  std::optional<double> sunspot_variance;
  bool boundary = false;
  bool multiple_solvents = false;
  // Set when eps has zero variance and the G2 system is singular (pure
  // sunspot solutions such as pi_t = pi_{t-1} / a + w_t); G2 is then zero.
  bool g2_unconstrained = false;
  double residual = 0.0;
};

/// Largest residual (inf-norm) of the coefficient identities that make the
/// decision rule reproduce the structural equations term by term.
inline double structural_residual(const StructuralREModel& m, const SolvedModel& s) {
  const Matrix d = m.A0 - m.A1 * s.C;
  const Eigen::Index n = m.n();
  double r = solvent_residual(m.A1, m.A0, m.A2, s.C);
  if (m.k() > 0) {
    r = std::max(r, inf_norm(Matrix(d * s.G1 - m.A1 * s.G1 * m.phi_x - m.A3)));
  }
  if (!s.g2_unconstrained) {
    r = std::max(r, inf_norm(Matrix(d * s.G2 - m.A1 * s.G2 * m.phi_u - Matrix::Identity(n, n))));
  }
  if (s.sunspot_loading.size() > 0) r = std::max(r, inf_norm(Matrix(d * s.sunspot_loading)));
  return r;
}

namespace detail {

inline Matrix null_space(const Matrix& a, double rel_tol = 1e-9) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double scale = std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * scale) ++rank;
  }
  Matrix basis = svd.matrixV().rightCols(a.cols() - rank);
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index lead = 0;
    basis.col(j).cwiseAbs().maxCoeff(&lead);
    if (basis(lead, j) < 0.0) basis.col(j) *= -1.0;
  }
  return basis;
}

}  // namespace detail

/// Method-of-undetermined-coefficients solution. Determinate models get the
/// minimal stable solvent; indeterminate ones (only with a sunspot variance)
/// take the largest stable roots and load the sunspot on ker(A0 - A1 C).
inline SolvedModel solve(const StructuralREModel& m) {
  const DeterminacyClass cls = classify_determinacy(m);
  SolventOptions opts;
  opts.allow_boundary = cls.boundary;
  switch (cls.kind) {
    case DeterminacyKind::Determinate: break;
    case DeterminacyKind::NoStableSolution:
      fail(ErrorCode::NotDeterminate, "no stable solution: " + std::to_string(cls.unstable_count) +
                                          " unstable roots for " +
                                          std::to_string(cls.forward_count) + " forward variables");
    case DeterminacyKind::Indeterminate:
      if (!m.sunspot_variance) {
        fail(ErrorCode::NotDeterminate,
             "Indeterminate(" + std::to_string(cls.degree) +
                 "): supply a sunspot variance to select a solution");
      }
      opts.choice = SolventChoice::MaximalStable;
      break;
  }

  const SolventResult solvent = quadratic_solvent(m.A1, m.A0, m.A2, opts);
  SolvedModel s;
  s.determinacy = cls;
  s.C = solvent.C;
  s.boundary = cls.boundary || solvent.boundary;
  s.multiple_solvents = solvent.multiple;

  const Eigen::Index n = m.n();
  const Matrix d = m.A0 - m.A1 * s.C;
  const bool indeterminate = cls.kind == DeterminacyKind::Indeterminate;
  s.G1 = solve_sylvester_like(d, m.A1, m.phi_x, m.A3);
  bool g2_singular = false;
  s.G2 = solve_sylvester_like(d, m.A1, m.phi_u, Matrix::Identity(n, n), indeterminate,
                              &g2_singular);
  if (g2_singular) {
    if (m.sigma_eps.cwiseAbs().maxCoeff() != 0.0) {
      fail(ErrorCode::ConvergenceFailure,
           "fundamental shocks cannot enter the selected sunspot solution");
    }
    s.G2.setZero();
    s.g2_unconstrained = true;
  }
  if (indeterminate) {
    s.sunspot_loading = detail::null_space(d);
    s.sunspot_variance = m.sunspot_variance;
  } else {
    s.sunspot_loading = Matrix::Zero(n, 0);
  }

  s.residual = structural_residual(m, s);
  const double scale = std::max({1.0, inf_norm(m.A0), inf_norm(m.A1), inf_norm(m.A2)});
  if (!(s.residual <= 1e-9 * scale)) {
    fail(ErrorCode::ConvergenceFailure,
         "decision rule residual " + std::to_string(s.residual) + " exceeds tolerance");
  }
  return s;
}

/// Forward-looking variables tied to the latent forcing: y_t = N u_t, hence
/// y_t = N Phi_u N^{-1} y_{t-1} + N eps_t.
struct AnchoredSolution {
  Matrix anchor;              // N
  Matrix transition;          // N Phi_u N^{-1}
  Matrix innovation_loading;  // N
  SolvedModel solved;         // the same law in decision-rule form (C = 0, G2 = N)
};

inline AnchoredSolution anchored_solution(const StructuralREModel& m) {
  validate(m);
  const Eigen::Index n = m.n();
  if (m.A2.cwiseAbs().maxCoeff() != 0.0) {
    fail(ErrorCode::InvalidModel, "anchoring requires A2 = 0");
  }
  if (m.k() > 0 && m.phi_x.cwiseAbs().maxCoeff() != 0.0) {
    fail(ErrorCode::InvalidModel, "anchoring requires Phi_x = 0");
  }
  // Every root of A1^{-1} A0 outside the circle <=> every root of
  // A0^{-1} A1 strictly inside (infinite roots from a singular A1 included).
  const Matrix inner = m.A0.fullPivLu().solve(m.A1);
  if (!(spectral_radius(inner) < 1.0 - kUnitCircleTol)) {
    fail(ErrorCode::NotAllUnstable, "some eigenvalue of A1^{-1} A0 is not outside the unit circle");
  }

  AnchoredSolution out;
  out.anchor = solve_sylvester_like(m.A0, m.A1, m.phi_u, Matrix::Identity(n, n));
  if (inverse_condition(out.anchor) < 1e-13) fail(ErrorCode::SingularN, "anchor matrix is singular");
  const double lead = m.phi_u(0, 0);
  if (m.phi_u == lead * Matrix::Identity(n, n)) {
    out.transition = m.phi_u;  // N (rho I) N^{-1} = rho I without rounding
  } else {
    out.transition = out.anchor * m.phi_u * out.anchor.inverse();
  }
  out.innovation_loading = out.anchor;

  out.solved.C = Matrix::Zero(n, n);
  out.solved.G1 = Matrix::Zero(n, m.k());
  out.solved.G2 = out.anchor;
  out.solved.sunspot_loading = Matrix::Zero(n, 0);
  out.solved.determinacy = classify_determinacy(m);
  out.solved.residual = structural_residual(m, out.solved);
  return out;
}

/// s_{t} = transition s_{t-1} + shock_loading e_t,  e_t ~ (0, innovation_cov),
/// observed variables = observation_selector s_t.
struct StateSpaceForm {
  Matrix transition;
  Matrix shock_loading;
  Matrix observation_selector;
  Matrix innovation_cov;
  std::vector<std::string> state_names;
};

/// Stacks (y, x, u). Forcing blocks with a zero autoregressive matrix are
/// white noise and fold into the shock loading instead of the state.
inline StateSpaceForm to_state_space(const SolvedModel& s, const StructuralREModel& m) {
  if (s.determinacy.kind == DeterminacyKind::NoStableSolution) {
    fail(ErrorCode::NotDeterminate, "model has no stable solution");
  }
  if (s.determinacy.kind == DeterminacyKind::Indeterminate && !s.sunspot_variance) {
    fail(ErrorCode::MissingSunspotVariance, "indeterminate model needs a sunspot variance");
  }
  const Eigen::Index n = m.n();
  const Eigen::Index k = m.k();
  const bool keep_x = k > 0 && m.phi_x.cwiseAbs().maxCoeff() != 0.0;
  const bool keep_u = m.phi_u.cwiseAbs().maxCoeff() != 0.0;
  const Eigen::Index kx = keep_x ? k : 0;
  const Eigen::Index ku = keep_u ? n : 0;
  const Eigen::Index dim = n + kx + ku;
  const Eigen::Index d = s.sunspot_loading.cols();
  const Eigen::Index shocks = k + n + d;

  StateSpaceForm ss;
  ss.transition = Matrix::Zero(dim, dim);
  ss.shock_loading = Matrix::Zero(dim, shocks);
  ss.innovation_cov = Matrix::Zero(shocks, shocks);

  ss.transition.topLeftCorner(n, n) = s.C;
  if (keep_x) {
    ss.transition.block(0, n, n, k) = s.G1 * m.phi_x;
    ss.transition.block(n, n, k, k) = m.phi_x;
    ss.shock_loading.block(n, 0, k, k) = Matrix::Identity(k, k);
  }
  if (keep_u) {
    ss.transition.block(0, n + kx, n, n) = s.G2 * m.phi_u;
    ss.transition.block(n + kx, n + kx, n, n) = m.phi_u;
    ss.shock_loading.block(n + kx, k, n, n) = Matrix::Identity(n, n);
  }
  ss.shock_loading.block(0, 0, n, k) = s.G1;
  ss.shock_loading.block(0, k, n, n) = s.G2;
  if (d > 0) ss.shock_loading.block(0, k + n, n, d) = s.sunspot_loading;

  ss.innovation_cov.block(0, 0, k, k) = m.sigma_v;
  ss.innovation_cov.block(k, k, n, n) = m.sigma_eps;
  if (d > 0) ss.innovation_cov.block(k + n, k + n, d, d) = *s.sunspot_variance * Matrix::Identity(d, d);

  const std::vector<int> obs = m.observed_indices();
  ss.observation_selector = Matrix::Zero(static_cast<Eigen::Index>(obs.size()), dim);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    ss.observation_selector(static_cast<Eigen::Index>(i), obs[i]) = 1.0;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    ss.state_names.push_back(i < static_cast<Eigen::Index>(m.variable_names.size())
                                 ? m.variable_names[static_cast<std::size_t>(i)]
                                 : "y" + std::to_string(i + 1));
  }
  for (Eigen::Index i = 0; i < kx; ++i) ss.state_names.push_back("x" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < ku; ++i) ss.state_names.push_back("u" + std::to_string(i + 1));
  return ss;
}

/// Stationary state covariance of a state-space form.
inline Matrix state_covariance(const StateSpaceForm& ss) {
  const Matrix q = ss.shock_loading * ss.innovation_cov * ss.shock_loading.transpose();
  return lyapunov_solve(ss.transition, 0.5 * (q + q.transpose()));
}

/// Observed autocovariances Gamma_0..Gamma_K, Gamma_j = Z T^j G0 Z'.
inline std::vector<Matrix> autocovariances(const StateSpaceForm& ss, int lags) {
  const Matrix g0 = state_covariance(ss);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(lags) + 1);
  Matrix tj_g0 = g0;
  for (int j = 0; j <= lags; ++j) {
    out.push_back(ss.observation_selector * tj_g0 * ss.observation_selector.transpose());
    tj_g0 = ss.transition * tj_g0;
  }
  return out;
}

}  // namespace obseq
