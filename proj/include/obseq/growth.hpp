#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "obseq/error.hpp"

namespace obseq::growth {

/// Neoclassical growth parameters. theta is the relative fluctuation aversion
/// and beta below always means the convergence speed, not a discount factor.
struct GrowthParams {
  double alpha = 0.0;
  double x = 0.0;
  double n = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  double theta = 1.0;

  double zeta() const { return rho - n - (1.0 - theta) * x; }
  double effective_depreciation() const { return n + x + delta; }
};

inline double beta_solow(const GrowthParams& p) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) fail(ErrorCode::ParamOutOfRange, "alpha must lie in (0, 1)");
  if (!(p.effective_depreciation() > 0.0)) fail(ErrorCode::ParamOutOfRange, "n + x + delta must be positive");
  return (1.0 - p.alpha) * p.effective_depreciation();
}

inline double beta_rck(const GrowthParams& p) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) fail(ErrorCode::ParamOutOfRange, "alpha must lie in (0, 1)");
  if (!(p.theta > 0.0)) fail(ErrorCode::ParamOutOfRange, "theta must be positive");
  if (!(p.delta >= 0.0) || !(p.rho >= 0.0)) fail(ErrorCode::ParamOutOfRange, "delta and rho must be non-negative");
  const double zeta = p.zeta();
  if (!(zeta > 0.0)) {
    fail(ErrorCode::ZetaNonPositive,
         "zeta = rho - n - (1 - theta) x = " + std::to_string(zeta) + " must be positive");
  }
  // f'(k*) = rho + delta + theta x on the balanced-growth path.
  const double mpk = p.rho + p.delta + p.theta * p.x;
  const double disc = zeta * zeta + 4.0 * (1.0 - p.alpha) * (mpk / p.theta) *
                                        (mpk / p.alpha - p.effective_depreciation());
  if (disc < 0.0) fail(ErrorCode::NegativeDiscriminant, "discriminant is negative");
  return 0.5 * std::sqrt(disc) - 0.5 * zeta;
}

inline bool coincidence_holds(const GrowthParams& p, double tol) {
  const double lhs = (p.rho + p.delta + p.theta * p.x) / p.theta;
  return std::abs(lhs - p.alpha * p.effective_depreciation()) <= tol;
}

enum class LocusMode { Solow, RckTheta };

struct FixedRates {
  double x = 0.0;
  double n = 0.0;
  double delta = 0.0;
  double rho = 0.0;  // used in RckTheta mode only
};

struct LocusPoint {
  double alpha = 0.0;
  std::optional<double> theta;
  std::optional<double> beta_check;
  std::string note;  // why no admissible root was found
};

inline constexpr double kThetaMin = 1e-3;
inline constexpr double kThetaMax = 1e3;
inline constexpr int kThetaScan = 400;
inline constexpr double kLocusTol = 1e-10;

namespace detail {

inline std::optional<double> rck_or_none(GrowthParams p) {
  try {
    return beta_rck(p);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Bisection in log theta inside [lo, hi], where f changes sign.
inline double bisect_theta(GrowthParams p, double beta_hat, double lo, double hi) {
  const auto f = [&](double log_theta) {
    p.theta = std::exp(log_theta);
    return beta_rck(p) - beta_hat;
  };
  double a = std::log(lo), b = std::log(hi);
  std::uintmax_t max_iter = 200;
  const auto done = [&](double u, double v) {
    const double mid = 0.5 * (u + v);
    return std::abs(f(mid)) <= 0.1 * kLocusTol || std::abs(v - u) <= 1e-15;
  };
  const auto bracket = boost::math::tools::bisect(f, a, b, done, max_iter);
  return std::exp(0.5 * (bracket.first + bracket.second));
}

}  // namespace detail

/// Parameter combinations that produce the convergence speed beta_hat.
/// Solow mode inverts (1 - alpha)(n + x + delta) and ignores the grid.
/// RckTheta mode keeps rho fixed and solves for theta at each grid alpha.
inline std::vector<LocusPoint> equivalence_locus(double beta_hat, const FixedRates& fixed,
                                                 const std::vector<double>& alpha_grid,
                                                 LocusMode mode) {
  if (!(beta_hat > 0.0)) fail(ErrorCode::ParamOutOfRange, "beta_hat must be positive");
  const double ndx = fixed.n + fixed.x + fixed.delta;
  std::vector<LocusPoint> out;
  if (mode == LocusMode::Solow) {
    if (!(ndx > 0.0)) fail(ErrorCode::ParamOutOfRange, "n + x + delta must be positive");
    const double alpha = 1.0 - beta_hat / ndx;
    if (alpha > 0.0 && alpha < 1.0) {
      LocusPoint pt;
      pt.alpha = alpha;
      pt.beta_check = beta_solow({alpha, fixed.x, fixed.n, fixed.delta, fixed.rho, 1.0});
      out.push_back(pt);
    }
    return out;
  }

  for (double alpha : alpha_grid) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::ParamOutOfRange, "grid alpha outside (0, 1)");
    GrowthParams p{alpha, fixed.x, fixed.n, fixed.delta, fixed.rho, kThetaMin};
    LocusPoint pt;
    pt.alpha = alpha;
    const double step = std::log(kThetaMax / kThetaMin) / kThetaScan;
    std::optional<double> prev;
    double prev_theta = kThetaMin;
    for (int i = 0; i <= kThetaScan; ++i) {
      const double theta = kThetaMin * std::exp(step * i);
      p.theta = theta;
      const auto value = detail::rck_or_none(p);
      if (value && std::abs(*value - beta_hat) <= 0.1 * kLocusTol) {
        pt.theta = theta;
        break;
      }
      if (value && prev && (*prev - beta_hat) * (*value - beta_hat) < 0.0) {
        pt.theta = detail::bisect_theta(p, beta_hat, prev_theta, theta);
        break;
      }
      prev = value;
      prev_theta = theta;
    }
    if (pt.theta) {
      p.theta = *pt.theta;
      pt.beta_check = beta_rck(p);
    } else {
      pt.note = to_string(ErrorCode::NoRootInBracket);
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace obseq::growth
