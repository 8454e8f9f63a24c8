#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "obseq/algebra.hpp"
#include "obseq/catalog.hpp"
#include "obseq/error.hpp"
#include "obseq/remodel.hpp"

namespace obseq {

inline constexpr int kDefaultLags = 20;
inline constexpr double kDefaultEquivTol = 1e-8;

/// Second-moment comparison of two observed processes. Discrepancies are
/// relative to the larger lag-0 autocovariance.
struct EquivalenceVerdict {
  bool equivalent = false;
  double max_discrepancy = 0.0;
  int lag_horizon = 0;
  double tolerance = 0.0;
  std::optional<int> witness_lag;    // lag of the largest discrepancy when not equivalent
  std::vector<double> per_lag;       // discrepancy at each lag 0..lag_horizon
};

namespace detail {

inline void require_stable(const StateSpaceForm& ss, const char* which) {
  if (ss.transition.size() == 0) return;
  if (classify_modulus(spectral_radius(ss.transition)) != Stability::Stable) {
    fail(ErrorCode::UnstableInput, std::string(which) + " is not strictly stationary");
  }
}

}  // namespace detail

inline EquivalenceVerdict check(const StateSpaceForm& a, const StateSpaceForm& b,
                                int lags = kDefaultLags, double tol = kDefaultEquivTol) {
  if (lags < 0) fail(ErrorCode::InvalidGrid, "lag horizon must be non-negative");
  detail::require_stable(a, "first process");
  detail::require_stable(b, "second process");
  if (a.observation_selector.rows() != b.observation_selector.rows()) {
    fail(ErrorCode::InvalidModel, "processes observe different numbers of variables");
  }
  const auto ga = autocovariances(a, lags);
  const auto gb = autocovariances(b, lags);
  const double scale = std::max({ga[0].cwiseAbs().maxCoeff(), gb[0].cwiseAbs().maxCoeff(), 1e-300});

  EquivalenceVerdict v;
  v.lag_horizon = lags;
  v.tolerance = tol;
  int worst = 0;
  for (int j = 0; j <= lags; ++j) {
    const double d = (ga[static_cast<std::size_t>(j)] - gb[static_cast<std::size_t>(j)])
                         .cwiseAbs()
                         .maxCoeff() /
                     scale;
    v.per_lag.push_back(d);
    if (d > v.max_discrepancy) {
      v.max_discrepancy = d;
      worst = j;
    }
  }
  v.equivalent = v.max_discrepancy <= tol;
  if (!v.equivalent) v.witness_lag = worst;
  return v;
}

inline EquivalenceVerdict check(const ARProcess& a, const ARProcess& b, int lags = kDefaultLags,
                                double tol = kDefaultEquivTol) {
  if (a.stability() != Stability::Stable || b.stability() != Stability::Stable) {
    fail(ErrorCode::UnstableInput, "AR inputs must be strictly stationary");
  }
  return check(ar_state_space(a), ar_state_space(b), lags, tol);
}

/// Both (lambda, rho) assignments with lambda + rho = S and lambda rho = P.
/// A repeated root yields a single pair.
inline std::vector<std::pair<double, double>> ar2_factorizations(double sum, double product) {
  double disc = sum * sum - 4.0 * product;
  const double slack = 1e-14 * std::max(1.0, sum * sum);
  if (disc < -slack) {
    fail(ErrorCode::ComplexFactorization,
         "S^2 - 4P = " + std::to_string(disc) + " < 0: no real factorization");
  }
  if (std::abs(disc) <= slack) return {{0.5 * sum, 0.5 * sum}};
  const double root = std::sqrt(disc);
  const double hi = 0.5 * (sum + root);
  const double lo = 0.5 * (sum - root);
  return {{hi, lo}, {lo, hi}};
}

struct EquivalentEntry {
  CatalogEntry entry;
  std::string mapping;  // how the member's parameters follow from the source's reduced form
};

/// Representative parameterizations of every catalog family sharing the
/// entry's reduced form.
inline std::vector<EquivalentEntry> equivalence_class(const CatalogEntry& source) {
  const ARProcess reduced = reduce(source);
  const double s = std::sqrt(reduced.innovation_variance);
  std::vector<EquivalentEntry> out;
  const auto add = [&](ModelId id, std::map<std::string, double> params, std::string mapping) {
    CatalogEntry e{id, std::move(params)};
    try {
      check_ranges(e);
    } catch (const Error&) {
      return;
    }
    out.push_back({std::move(e), std::move(mapping)});
  };

  if (reduced.order() == 1) {
    const double phi = reduced.coefficients[0];
    add(ModelId::MA1, {{"lambda", phi}, {"sigma", s}}, "MA1(lambda = phi, sigma = s)");
    add(ModelId::MA2, {{"rho", phi}, {"sigma", s}}, "MA2(rho = phi, sigma = s)");
    for (double beta : {0.5, 0.99}) {
      add(ModelId::MR1, {{"beta", beta}, {"rho", phi}, {"sigma", s * (1.0 - beta * phi)}},
          "MR1(beta, rho = phi, sigma = s (1 - beta phi))");
    }
    for (double frac : {0.5, 0.9}) {
      // mu1(beta, b) = phi  <=>  b = phi (1 - beta phi); admissible for beta < 1 / (1 + phi).
      const double beta = frac / (1.0 + std::abs(phi));
      add(ModelId::MR2,
          {{"beta", beta}, {"b", phi * (1.0 - beta * phi)}, {"sigma", s * (1.0 - beta * phi)}},
          "MR2(beta, b = phi (1 - beta phi), sigma = s (1 - beta phi))");
    }
    if (phi != 0.0) add(ModelId::MR3, {{"a", 1.0 / phi}, {"sigma_w", s}}, "MR3(a = 1 / phi, sigma_w = s)");
  } else if (reduced.order() == 2) {
    const double sum = reduced.coefficients[0];
    const double product = -reduced.coefficients[1];
    std::vector<std::pair<double, double>> pairs;
    try {
      pairs = ar2_factorizations(sum, product);
    } catch (const Error&) {
      return out;
    }
    for (ModelId id : {ModelId::MA3, ModelId::MA4, ModelId::MA5}) {
      for (const auto& [lambda, rho] : pairs) {
        add(id, {{"lambda", lambda}, {"rho", rho}, {"sigma", s}},
            to_string(id) + "(lambda, rho roots of z^2 - S z + P, sigma = s)");
      }
    }
  }
  return out;
}

}  // namespace obseq
