#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "obseq/algebra.hpp"
#include "obseq/catalog.hpp"
#include "obseq/error.hpp"
#include "obseq/remodel.hpp"

namespace obseq {

using Series = std::vector<double>;
using Generator = std::variant<ARProcess, StateSpaceForm>;

// Draws come from std::mt19937_64 seeded with (seed + replication index) and
// std::normal_distribution<double>. Streams are reproducible for a given
// toolchain; tests only rely on their statistical properties.
struct SimSpec {
  Generator generator;
  int T = 1000;
  int burn_in = 500;
  std::uint64_t seed = 0;
  int replications = 1;
};

namespace detail {

inline StateSpaceForm as_state_space(const Generator& g) {
  if (const auto* ar = std::get_if<ARProcess>(&g)) return ar_state_space(*ar);
  return std::get<StateSpaceForm>(g);
}

inline int generator_order(const Generator& g) {
  if (const auto* ar = std::get_if<ARProcess>(&g)) return ar->order();
  return static_cast<int>(std::get<StateSpaceForm>(g).transition.rows());
}

// Symmetric square root factor F with F F' = cov (cov PSD).
inline Matrix psd_factor(const Matrix& cov) {
  if (cov.size() == 0) return cov;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

inline void validate_spec(const SimSpec& spec) {
  const int order = generator_order(spec.generator);
  if (!(spec.T > 10 * (order + 1))) {
    fail(ErrorCode::InvalidSimSpec, "T must exceed 10 (order + 1)");
  }
  if (spec.burn_in < 100) fail(ErrorCode::InvalidSimSpec, "burn_in must be at least 100");
  if (spec.replications < 1) fail(ErrorCode::InvalidSimSpec, "replications must be at least 1");
}

}  // namespace detail

/// One replication; replication r uses seed + r.
inline Series simulate_replication(const SimSpec& spec, int replication) {
  detail::validate_spec(spec);
  const StateSpaceForm ss = detail::as_state_space(spec.generator);
  if (classify_modulus(spectral_radius(ss.transition)) != Stability::Stable) {
    fail(ErrorCode::UnstableGenerator, "generator is not strictly stationary");
  }
  const Matrix init_factor = detail::psd_factor(state_covariance(ss));
  const Matrix shock_factor = ss.shock_loading * detail::psd_factor(ss.innovation_cov);

  std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(replication));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto draw = [&](Eigen::Index dim) {
    Vector z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z(i) = normal(rng);
    return z;
  };

  Vector state = init_factor * draw(init_factor.cols());
  for (int t = 0; t < spec.burn_in; ++t) {
    state = ss.transition * state + shock_factor * draw(shock_factor.cols());
  }
  Series out(static_cast<std::size_t>(spec.T));
  for (int t = 0; t < spec.T; ++t) {
    state = ss.transition * state + shock_factor * draw(shock_factor.cols());
    out[static_cast<std::size_t>(t)] = ss.observation_selector.row(0).dot(state);
  }
  return out;
}

inline Series simulate(const SimSpec& spec) { return simulate_replication(spec, 0); }

inline std::vector<Series> simulate_all(const SimSpec& spec) {
  std::vector<Series> out;
  out.reserve(static_cast<std::size_t>(spec.replications));
  for (int r = 0; r < spec.replications; ++r) out.push_back(simulate_replication(spec, r));
  return out;
}

struct FitResult {
  std::vector<double> coefficients;
  std::vector<double> standard_errors;
  double innovation_variance_hat = 0.0;  // RSS / n_eff (conditional MLE)
  double loglik = 0.0;
  int effective_sample = 0;
};

/// Conditional Gaussian log-likelihood of residual sum of squares `rss` over
/// `n` terms at innovation variance `var`.
inline double gaussian_loglik(double rss, int n, double var) {
  return -0.5 * n * std::log(2.0 * std::numbers::pi * var) - 0.5 * rss / var;
}

/// Least-squares AR(p) fit without intercept (all generators are zero-mean).
inline FitResult fit_ar(std::span<const double> series, int p) {
  if (p < 0) fail(ErrorCode::InvalidSimSpec, "order must be non-negative");
  const auto len = static_cast<Eigen::Index>(series.size());
  if (!(len > 10 * (p + 1))) {
    fail(ErrorCode::InsufficientData, "series length must exceed 10 (p + 1)");
  }
  const Eigen::Index n = len - p;
  Matrix x(n, p);
  Vector y(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    y(t) = series[static_cast<std::size_t>(t + p)];
    for (int i = 0; i < p; ++i) x(t, i) = series[static_cast<std::size_t>(t + p - 1 - i)];
  }

  FitResult out;
  out.effective_sample = static_cast<int>(n);
  Vector coef = Vector::Zero(p);
  Matrix xtx_inv = Matrix::Zero(p, p);
  if (p > 0) {
    const Matrix xtx = x.transpose() * x;
    if (inverse_condition(xtx) < 1e-12) fail(ErrorCode::SingularRegressor, "lagged regressors are collinear");
    xtx_inv = xtx.inverse();
    coef = xtx_inv * (x.transpose() * y);
  }
  const Vector resid = p > 0 ? Vector(y - x * coef) : y;
  const double rss = resid.squaredNorm();
  if (!(rss > 1e-300 * std::max(1.0, y.squaredNorm())) || !(y.squaredNorm() > 0.0)) {
    fail(ErrorCode::SingularRegressor, "series is constant or exactly autoregressive");
  }
  out.innovation_variance_hat = rss / static_cast<double>(n);
  const double s2 = rss / static_cast<double>(std::max<Eigen::Index>(1, n - p));
  for (int i = 0; i < p; ++i) {
    out.coefficients.push_back(coef(i));
    out.standard_errors.push_back(std::sqrt(s2 * xtx_inv(i, i)));
  }
  out.loglik = gaussian_loglik(rss, static_cast<int>(n), out.innovation_variance_hat);
  return out;
}

/// Residual sum of squares of the AR recursion, conditional on the first p values.
inline double ar_rss(std::span<const double> series, std::span<const double> coefficients) {
  const std::size_t p = coefficients.size();
  double rss = 0.0;
  for (std::size_t t = p; t < series.size(); ++t) {
    double e = series[t];
    for (std::size_t i = 0; i < p; ++i) e -= coefficients[i] * series[t - 1 - i];
    rss += e * e;
  }
  return rss;
}

/// Conditional Gaussian log-likelihood given the first p observations.
inline double loglik(std::span<const double> series, const ARProcess& proc) {
  if (proc.stability() != Stability::Stable) fail(ErrorCode::UnstableProcess, "process is not stationary");
  if (!(proc.innovation_variance > 0.0)) fail(ErrorCode::UnstableProcess, "innovation variance must be positive");
  const std::size_t p = static_cast<std::size_t>(proc.order());
  if (series.size() <= p) fail(ErrorCode::InsufficientData, "no observations beyond the first p");
  const int n = static_cast<int>(series.size() - p);
  return gaussian_loglik(ar_rss(series, proc.coefficients), n, proc.innovation_variance);
}

}  // namespace obseq
