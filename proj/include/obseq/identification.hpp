#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "obseq/algebra.hpp"
#include "obseq/catalog.hpp"
#include "obseq/error.hpp"
#include "obseq/montecarlo.hpp"
#include "obseq/remodel.hpp"

namespace obseq {

/// A structural -> reduced-form map evaluated around theta0.
struct StructuralMap {
  std::string label;
  std::vector<std::string> param_names;
  std::vector<std::string> reduced_names;
  Vector theta0;
  std::function<Vector(const Vector&)> fn;

  Vector operator()(const Vector& theta) const { return fn(theta); }
};

inline CatalogEntry entry_from_theta(ModelId id, const Vector& theta) {
  const auto names = param_names(id);
  std::map<std::string, double> params;
  for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = theta(static_cast<Eigen::Index>(i));
  return CatalogEntry{id, std::move(params)};
}

/// Catalog families map to (AR coefficients..., innovation standard deviation).
inline StructuralMap reduced_map(const CatalogEntry& entry) {
  const auto names = param_names(entry.id);
  StructuralMap map;
  map.label = to_string(entry.id);
  map.param_names = names;
  map.theta0.resize(static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    map.theta0(static_cast<Eigen::Index>(i)) = entry.param(names[i]);
  }
  const ModelId id = entry.id;
  map.fn = [id](const Vector& theta) {
    const ARProcess proc = reduce(entry_from_theta(id, theta));
    Vector out(proc.order() + 1);
    for (int i = 0; i < proc.order(); ++i) out(i) = proc.coefficients[static_cast<std::size_t>(i)];
    out(proc.order()) = std::sqrt(proc.innovation_variance);
    return out;
  };
  const int order = reduce(entry).order();
  for (int i = 0; i < order; ++i) map.reduced_names.push_back("phi" + std::to_string(i + 1));
  map.reduced_names.push_back("innovation_sd");
  return map;
}

/// beta_hat = 2a + b. With `restricted_b` the restriction fixes b and only a
/// remains structural.
inline StructuralMap toy_map(double a, double b, std::optional<double> restricted_b = std::nullopt) {
  StructuralMap map;
  map.reduced_names = {"beta_hat"};
  if (restricted_b) {
    map.label = "toy(b fixed)";
    map.param_names = {"a"};
    map.theta0 = Vector::Constant(1, a);
    const double fixed = *restricted_b;
    map.fn = [fixed](const Vector& theta) { return Vector::Constant(1, 2.0 * theta(0) + fixed); };
  } else {
    map.label = "toy";
    map.param_names = {"a", "b"};
    map.theta0 = Vector(2);
    map.theta0 << a, b;
    map.fn = [](const Vector& theta) { return Vector::Constant(1, 2.0 * theta(0) + theta(1)); };
  }
  return map;
}

/// Decision-rule coefficients (vec C, vec G1, vec G2) and the lower triangle
/// of the endogenous innovation covariance, as functions of every entry of
/// A0, A1, A2 and A3. Forcing processes and shock covariances stay fixed.
inline StructuralMap user_model_map(const StructuralREModel& model) {
  StructuralMap map;
  map.label = model.name.empty() ? "model" : model.name;
  const std::pair<const char*, const Matrix*> blocks[] = {
      {"A0", &model.A0}, {"A1", &model.A1}, {"A2", &model.A2}, {"A3", &model.A3}};
  std::vector<double> theta;
  for (const auto& [name, mat] : blocks) {
    for (Eigen::Index j = 0; j < mat->cols(); ++j) {
      for (Eigen::Index i = 0; i < mat->rows(); ++i) {
        map.param_names.push_back(std::string(name) + "[" + std::to_string(i) + "," +
                                  std::to_string(j) + "]");
        theta.push_back((*mat)(i, j));
      }
    }
  }
  map.theta0 = Eigen::Map<Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));

  const Eigen::Index n = model.n();
  const Eigen::Index k = model.k();
  const auto push_names = [&](const char* name, Eigen::Index rows, Eigen::Index cols) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        map.reduced_names.push_back(std::string(name) + "[" + std::to_string(i) + "," +
                                    std::to_string(j) + "]");
      }
    }
  };
  push_names("C", n, n);
  push_names("G1", n, k);
  push_names("G2", n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      map.reduced_names.push_back("Omega[" + std::to_string(i) + "," + std::to_string(j) + "]");
    }
  }

  map.fn = [model](const Vector& theta) {
    StructuralREModel m = model;
    Eigen::Index pos = 0;
    for (Matrix* mat : {&m.A0, &m.A1, &m.A2, &m.A3}) {
      for (Eigen::Index j = 0; j < mat->cols(); ++j) {
        for (Eigen::Index i = 0; i < mat->rows(); ++i) (*mat)(i, j) = theta(pos++);
      }
    }
    const SolvedModel s = solve(m);
    Matrix omega = s.G2 * m.sigma_eps * s.G2.transpose() + s.G1 * m.sigma_v * s.G1.transpose();
    if (s.sunspot_loading.size() > 0 && s.sunspot_variance) {
      omega += *s.sunspot_variance * s.sunspot_loading * s.sunspot_loading.transpose();
    }
    const Eigen::Index nn = m.n();
    std::vector<double> out(s.C.data(), s.C.data() + s.C.size());
    out.insert(out.end(), s.G1.data(), s.G1.data() + s.G1.size());
    out.insert(out.end(), s.G2.data(), s.G2.data() + s.G2.size());
    for (Eigen::Index j = 0; j < nn; ++j) {
      for (Eigen::Index i = j; i < nn; ++i) out.push_back(omega(i, j));
    }
    return Vector(Eigen::Map<Vector>(out.data(), static_cast<Eigen::Index>(out.size())));
  };
  return map;
}

struct StepRule {
  double relative = 1e-6;  // h_i = relative * max(1, |theta_i|)
  int max_retries = 3;     // each retry shrinks h by 10
};

/// Central-difference Jacobian (reduced-dim x structural-dim).
inline Matrix jacobian_fd(const StructuralMap& map, const Vector& theta0, StepRule rule = {}) {
  const Vector f0 = map(theta0);
  Matrix jac(f0.size(), theta0.size());
  for (Eigen::Index i = 0; i < theta0.size(); ++i) {
    double h = rule.relative * std::max(1.0, std::abs(theta0(i)));
    bool done = false;
    for (int attempt = 0; attempt <= rule.max_retries && !done; ++attempt) {
      try {
        Vector up = theta0, down = theta0;
        up(i) += h;
        down(i) -= h;
        const Vector col = (map(up) - map(down)) / (2.0 * h);
        if (col.allFinite()) {
          jac.col(i) = col;
          done = true;
        }
      } catch (const Error&) {
      }
      h /= 10.0;
    }
    if (!done) {
      fail(ErrorCode::MapUndefinedAtPerturbation,
           "map undefined near " + map.param_names[static_cast<std::size_t>(i)] + " = " +
               std::to_string(theta0(i)));
    }
  }
  return jac;
}

inline constexpr double kRankThreshold = 1e-8;
inline constexpr double kWeakBand = 100.0;

struct IdentificationReport {
  std::string label;
  std::vector<std::string> param_names;
  Vector theta0;
  Matrix jacobian;
  Vector singular_values;  // descending, min(reduced, structural) of them
  int rank = 0;
  Matrix null_basis;  // structural-dim x (structural-dim - rank), orthonormal columns
  bool identified = false;
  bool weak_identification = false;
  std::vector<std::string> warnings;

  int structural_dim() const { return static_cast<int>(param_names.size()); }
};

/// Local identification at theta0: rank of the Jacobian with singular values
/// above 1e-8 * sigma_max. Values within a factor 100 of that threshold are
/// flagged as weak identification.
inline IdentificationReport rank_report(const StructuralMap& map, std::optional<Vector> theta = std::nullopt,
                                        StepRule rule = {}) {
  IdentificationReport r;
  r.label = map.label;
  r.param_names = map.param_names;
  r.theta0 = theta.value_or(map.theta0);
  if (r.theta0.size() != static_cast<Eigen::Index>(map.param_names.size())) {
    fail(ErrorCode::ParamOutOfRange, "evaluation point has the wrong number of coordinates");
  }
  r.jacobian = jacobian_fd(map, r.theta0, rule);

  const Eigen::Index p = r.jacobian.cols();
  Eigen::JacobiSVD<Matrix> svd(r.jacobian, Eigen::ComputeFullV);
  r.singular_values = svd.singularValues();
  const double smax = r.singular_values.size() > 0 ? r.singular_values(0) : 0.0;
  const double threshold = kRankThreshold * smax;
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) {
    const double s = r.singular_values(i);
    if (s > threshold && smax > 0.0) ++r.rank;
    if (smax > 0.0 && s > threshold / kWeakBand && s < threshold * kWeakBand) {
      r.weak_identification = true;
      r.warnings.push_back("singular value " + std::to_string(i) + " (" + std::to_string(s) +
                           ") is within a factor 100 of the rank threshold");
    }
  }
  r.null_basis = svd.matrixV().rightCols(p - r.rank);
  for (Eigen::Index j = 0; j < r.null_basis.cols(); ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (std::abs(r.null_basis(i, j)) > 1e-12) {
        if (r.null_basis(i, j) < 0.0) r.null_basis.col(j) *= -1.0;
        break;
      }
    }
  }
  r.identified = r.rank == p;
  if (!r.identified) {
    r.warnings.push_back(std::to_string(p - r.rank) +
                         " structural direction(s) leave the reduced form unchanged");
  }
  return r;
}

inline IdentificationReport rank_report(const CatalogEntry& entry, std::optional<Vector> theta = std::nullopt) {
  return rank_report(reduced_map(entry), std::move(theta));
}

struct GridAxis {
  std::string name;
  std::vector<double> values;
};

struct ProfileRequest {
  ModelId family = ModelId::MA1;
  std::vector<GridAxis> axes;
  std::map<std::string, double> fixed;  // parameters held at given values
  double ridge_tol = 0.01;
};

struct ProfilePoint {
  std::vector<double> coords;             // one per axis
  std::map<std::string, double> params;   // full parameter vector at the optimum
  double loglik = 0.0;
  bool ridge = false;
};

/// Profile log-likelihood over a parameter grid. Parameters that are neither
/// on an axis nor fixed are concentrated out: innovation scales in closed
/// form, at most one dynamic parameter by Brent maximisation over its
/// admissible interval. Inadmissible grid points are skipped.
struct ProfileSurface {
  std::vector<GridAxis> axes;
  std::vector<ProfilePoint> points;
  std::vector<std::size_t> ridge_points;  // indices into points
  double max_loglik = -std::numeric_limits<double>::infinity();
  double ridge_tol = 0.01;
};

namespace detail {

inline bool is_scale_param(const std::string& name) { return name == "sigma" || name == "sigma_w"; }

// Log-likelihood with the innovation scale either given or concentrated.
inline double scale_profiled_loglik(std::span<const double> data, CatalogEntry entry,
                                    const std::optional<std::string>& scale_name) {
  if (!scale_name) return loglik(data, reduce(entry));
  entry.params[*scale_name] = 1.0;
  const ARProcess unit = reduce(entry);
  if (unit.stability() != Stability::Stable) fail(ErrorCode::UnstableProcess, "non-stationary point");
  const std::size_t p = static_cast<std::size_t>(unit.order());
  if (data.size() <= p) fail(ErrorCode::InsufficientData, "no observations beyond the first p");
  const int n = static_cast<int>(data.size() - p);
  const double rss = ar_rss(data, unit.coefficients);
  return gaussian_loglik(rss, n, rss / n);
}

inline double concentrated_scale(std::span<const double> data, CatalogEntry entry,
                                 const std::string& scale_name) {
  entry.params[scale_name] = 1.0;
  const ARProcess unit = reduce(entry);
  const std::size_t p = static_cast<std::size_t>(unit.order());
  const double var_hat = ar_rss(data, unit.coefficients) / static_cast<double>(data.size() - p);
  return std::sqrt(var_hat / unit.innovation_variance);
}

}  // namespace detail

inline ProfileSurface profile_likelihood(std::span<const double> data, const ProfileRequest& req) {
  if (req.axes.empty()) fail(ErrorCode::InvalidGrid, "profile needs at least one grid axis");
  const auto names = param_names(req.family);
  for (const auto& axis : req.axes) {
    if (std::find(names.begin(), names.end(), axis.name) == names.end()) {
      fail(ErrorCode::InvalidGrid, to_string(req.family) + " has no parameter '" + axis.name + "'");
    }
    if (axis.values.empty()) fail(ErrorCode::InvalidGrid, "axis '" + axis.name + "' is empty");
  }
  std::optional<std::string> scale_name;
  std::optional<std::string> dynamic_nuisance;
  for (const auto& name : names) {
    const bool on_axis = std::any_of(req.axes.begin(), req.axes.end(),
                                     [&](const GridAxis& a) { return a.name == name; });
    if (on_axis || req.fixed.count(name)) continue;
    if (detail::is_scale_param(name)) {
      scale_name = name;
    } else if (dynamic_nuisance) {
      fail(ErrorCode::InvalidGrid, "at most one dynamic parameter can be concentrated out");
    } else {
      dynamic_nuisance = name;
    }
  }

  ProfileSurface surface;
  surface.axes = req.axes;
  surface.ridge_tol = req.ridge_tol;
  std::vector<std::size_t> index(req.axes.size(), 0);
  const auto advance = [&]() {
    for (std::size_t a = req.axes.size(); a-- > 0;) {
      if (++index[a] < req.axes[a].values.size()) return true;
      index[a] = 0;
    }
    return false;
  };

  do {
    CatalogEntry entry{req.family, req.fixed};
    ProfilePoint point;
    for (std::size_t a = 0; a < req.axes.size(); ++a) {
      const double v = req.axes[a].values[index[a]];
      point.coords.push_back(v);
      entry.params[req.axes[a].name] = v;
    }
    try {
      double ll = 0.0;
      if (dynamic_nuisance) {
        // Validate everything but the nuisance before searching over it.
        if (scale_name) entry.params[*scale_name] = 1.0;
        auto [lo, hi] = param_interval(entry, *dynamic_nuisance);
        if (!(hi > lo)) fail(ErrorCode::ParamOutOfRange, "empty nuisance interval");
        if (!std::isfinite(hi)) hi = lo + 100.0;
        const double margin = 1e-9 * (hi - lo);
        const auto negative = [&](double x) {
          CatalogEntry trial = entry;
          trial.params[*dynamic_nuisance] = x;
          try {
            return -detail::scale_profiled_loglik(data, trial, scale_name);
          } catch (const Error&) {
            return std::numeric_limits<double>::max();
          }
        };
        std::uintmax_t max_iter = 500;
        const auto best =
            boost::math::tools::brent_find_minima(negative, lo + margin, hi - margin, 40, max_iter);
        entry.params[*dynamic_nuisance] = best.first;
        check_ranges(entry);
        ll = -best.second;
      } else {
        if (scale_name) entry.params[*scale_name] = 1.0;
        check_ranges(entry);
        ll = detail::scale_profiled_loglik(data, entry, scale_name);
      }
      if (scale_name) entry.params[*scale_name] = detail::concentrated_scale(data, entry, *scale_name);
      if (!std::isfinite(ll)) continue;
      point.loglik = ll;
      point.params = entry.params;
      surface.points.push_back(std::move(point));
    } catch (const Error&) {
      // outside the admissible region
    }
  } while (advance());

  if (surface.points.empty()) fail(ErrorCode::EmptyAdmissibleGrid, "no admissible grid point");
  for (const auto& p : surface.points) surface.max_loglik = std::max(surface.max_loglik, p.loglik);
  for (std::size_t i = 0; i < surface.points.size(); ++i) {
    if (surface.points[i].loglik >= surface.max_loglik - req.ridge_tol) {
      surface.points[i].ridge = true;
      surface.ridge_points.push_back(i);
    }
  }
  return surface;
}

}  // namespace obseq
