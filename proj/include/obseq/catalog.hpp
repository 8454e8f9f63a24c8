#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "obseq/algebra.hpp"
#include "obseq/error.hpp"
#include "obseq/remodel.hpp"

namespace obseq {

/// Scalar AR(p): y_t = sum_i coefficients[i] y_{t-1-i} + e_t, Var(e_t) = innovation_variance.
struct ARProcess {
  std::vector<double> coefficients;
  double innovation_variance = 1.0;
  std::string label;

  int order() const { return static_cast<int>(coefficients.size()); }

  Matrix companion() const {
    const Eigen::Index p = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(coefficients.size()));
    Matrix t = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
      t(0, static_cast<Eigen::Index>(i)) = coefficients[i];
    }
    if (p > 1) t.bottomLeftCorner(p - 1, p - 1) = Matrix::Identity(p - 1, p - 1);
    return t;
  }

  Stability stability() const { return classify_modulus(spectral_radius(companion())); }
};

inline StateSpaceForm ar_state_space(const ARProcess& proc) {
  if (!(proc.innovation_variance > 0.0) || !std::isfinite(proc.innovation_variance)) {
    fail(ErrorCode::InvalidModel, "AR innovation variance must be positive");
  }
  if (proc.order() > kMaxEigenDim) fail(ErrorCode::DimensionTooLarge, "AR order too large");
  StateSpaceForm ss;
  ss.transition = proc.companion();
  const Eigen::Index p = ss.transition.rows();
  ss.shock_loading = Matrix::Zero(p, 1);
  ss.shock_loading(0, 0) = 1.0;
  ss.innovation_cov = Matrix::Constant(1, 1, proc.innovation_variance);
  ss.observation_selector = Matrix::Zero(1, p);
  ss.observation_selector(0, 0) = 1.0;
  for (Eigen::Index i = 0; i < p; ++i) ss.state_names.push_back("y_lag" + std::to_string(i));
  return ss;
}

enum class ModelId { MA1, MA2, MA3, MA4, MA5, MR1, MR2, MR3 };

inline constexpr ModelId kAllModels[] = {ModelId::MA1, ModelId::MA2, ModelId::MA3, ModelId::MA4,
                                         ModelId::MA5, ModelId::MR1, ModelId::MR2, ModelId::MR3};

inline std::string to_string(ModelId id) {
  switch (id) {
    case ModelId::MA1: return "MA1";
    case ModelId::MA2: return "MA2";
    case ModelId::MA3: return "MA3";
    case ModelId::MA4: return "MA4";
    case ModelId::MA5: return "MA5";
    case ModelId::MR1: return "MR1";
    case ModelId::MR2: return "MR2";
    case ModelId::MR3: return "MR3";
  }
  return "?";
}

inline std::optional<ModelId> parse_model_id(const std::string& text) {
  for (ModelId id : kAllModels) {
    if (to_string(id) == text) return id;
  }
  return std::nullopt;
}

/// Structural parameters in their canonical order.
inline std::vector<std::string> param_names(ModelId id) {
  switch (id) {
    case ModelId::MA1: return {"lambda", "sigma"};
    case ModelId::MA2: return {"rho", "sigma"};
    case ModelId::MA3:
    case ModelId::MA4:
    case ModelId::MA5: return {"lambda", "rho", "sigma"};
    case ModelId::MR1: return {"beta", "rho", "sigma"};
    case ModelId::MR2: return {"beta", "b", "sigma"};
    case ModelId::MR3: return {"a", "sigma_w"};
  }
  return {};
}

inline int structural_param_count(ModelId id) { return static_cast<int>(param_names(id).size()); }

struct CatalogEntry {
  ModelId id = ModelId::MA1;
  std::map<std::string, double> params;

  double param(const std::string& name) const {
    const auto it = params.find(name);
    if (it == params.end()) {
      fail(ErrorCode::ParamOutOfRange, to_string(id) + " is missing parameter '" + name + "'");
    }
    return it->second;
  }

  bool has(const std::string& name) const { return params.count(name) != 0; }

  int structural_param_count() const { return obseq::structural_param_count(id); }

  std::string describe() const {
    std::ostringstream os;
    os.precision(12);
    os << to_string(id) << '(';
    bool first = true;
    for (const auto& name : param_names(id)) {
      if (!has(name)) continue;
      os << (first ? "" : ", ") << name << '=' << params.at(name);
      first = false;
    }
    os << ')';
    return os.str();
  }
};

/// Entry with defaults filled in (sigma = 1 for families that have it).
/// Unknown parameter names are rejected.
inline CatalogEntry make_entry(ModelId id, std::map<std::string, double> params) {
  const auto names = param_names(id);
  for (const auto& [key, value] : params) {
    if (std::find(names.begin(), names.end(), key) == names.end()) {
      fail(ErrorCode::ParseError, to_string(id) + " has no parameter '" + key + "'");
    }
  }
  if (std::find(names.begin(), names.end(), "sigma") != names.end() && !params.count("sigma")) {
    params["sigma"] = 1.0;
  }
  return CatalogEntry{id, std::move(params)};
}

/// Parses "MR2?beta=0.5&b=0.3&sigma=1".
inline CatalogEntry parse_catalog_spec(const std::string& spec) {
  const auto qpos = spec.find('?');
  const std::string name = spec.substr(0, qpos);
  const auto id = parse_model_id(name);
  if (!id) fail(ErrorCode::UnknownModel, "unknown catalog model '" + name + "'");
  std::map<std::string, double> params;
  if (qpos != std::string::npos) {
    std::stringstream rest(spec.substr(qpos + 1));
    std::string item;
    while (std::getline(rest, item, '&')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) fail(ErrorCode::ParseError, "expected key=value in '" + item + "'");
      const std::string key = item.substr(0, eq);
      const std::string text = item.substr(eq + 1);
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != text.size() || text.empty() || !std::isfinite(value)) {
        fail(ErrorCode::ParseError, "bad number '" + text + "' for " + key);
      }
      params[key] = value;
    }
  }
  return make_entry(*id, std::move(params));
}

/// Open admissible interval for one parameter given the others.
inline std::pair<double, double> param_interval(const CatalogEntry& e, const std::string& name) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (name == "sigma" || name == "sigma_w") return {0.0, kInf};
  if (name == "lambda" || name == "rho") return {0.0, 1.0};
  if (name == "beta") return {0.0, 1.0};
  if (name == "b") {
    const double beta = e.param("beta");
    return {0.0, 1.0 - beta};
  }
  if (name == "a") return {1.0, kInf};  // |a| > 1; the negative branch is checked separately
  fail(ErrorCode::ParamOutOfRange, "unknown parameter '" + name + "'");
}

inline void check_ranges(const CatalogEntry& e) {
  for (const auto& name : param_names(e.id)) {
    if (name == "sigma_w" && !e.has(name)) continue;
    const double v = e.param(name);
    if (!std::isfinite(v)) fail(ErrorCode::ParamOutOfRange, name + " must be finite");
    if (name == "a") {
      if (!(std::abs(v) > 1.0)) fail(ErrorCode::ParamOutOfRange, "|a| > 1 violated (a=" + std::to_string(v) + ")");
      continue;
    }
    if (name == "b") {
      const double beta = e.param("beta");
      if (!(v > 0.0)) fail(ErrorCode::ParamOutOfRange, "b > 0 violated");
      if (!(v < 1.0 - beta)) {
        fail(ErrorCode::ParamOutOfRange, "b < 1 - beta violated (b=" + std::to_string(v) +
                                             ", beta=" + std::to_string(beta) + ")");
      }
      continue;
    }
    const auto [lo, hi] = param_interval(e, name);
    if (!(v > lo && v < hi)) {
      std::ostringstream os;
      os << name << " must lie in (" << lo << ", " << hi << "), got " << v;
      fail(ErrorCode::ParamOutOfRange, os.str());
    }
  }
}

struct HybridRoots {
  double mu1;  // stable root
  double mu2;
};

/// Roots of beta mu^2 - mu + b = 0, mu1 <= mu2.
inline HybridRoots hybrid_roots(double beta, double b) {
  if (!(beta > 0.0 && beta < 1.0)) fail(ErrorCode::ParamOutOfRange, "beta must lie in (0, 1)");
  if (!(b > 0.0)) fail(ErrorCode::ParamOutOfRange, "b must be positive");
  if (beta + b == 1.0) {
    // beta mu^2 - mu + b = (mu - 1)(beta mu - b): the unit root splits off exactly.
    return {1.0, 1.0 / beta - 1.0};
  }
  const double disc = std::fma(-4.0 * b, beta, 1.0);
  if (disc < 0.0) {
    throw ComplexRootsError(std::sqrt(b / beta),
                            "4 b beta > 1: complex pair with modulus sqrt(b/beta)");
  }
  const double root = std::sqrt(disc);
  // mu1 via the product of roots avoids cancellation as beta -> 0.
  return {2.0 * b / (1.0 + root), (1.0 + root) / (2.0 * beta)};
}

/// Structural a implied by beta_hat = 2a + b under the restriction on b.
inline double toy_structural_given_restriction(double beta_hat, double b) {
  return (beta_hat - b) / 2.0;
}

namespace detail {

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline StructuralREModel scalar_model(const std::string& name) {
  StructuralREModel m = make_model(1);
  m.name = name;
  m.variable_names = {"pi"};
  return m;
}

inline StructuralREModel ar2_model(const std::string& name, double sigma) {
  StructuralREModel m = make_model(2);
  m.name = name;
  m.variable_names = {"pi", "pi_lag"};
  m.observed = {0};
  m.sigma_eps = Matrix::Zero(2, 2);
  m.sigma_eps(0, 0) = sigma * sigma;
  return m;
}

}  // namespace detail

/// Matrix encoding without the admissibility check, so that the solver can
/// classify parameter points outside the catalog's stated ranges.
inline StructuralREModel encode(const CatalogEntry& e) {
  const std::string name = e.describe();
  switch (e.id) {
    case ModelId::MA1: {
      auto m = detail::scalar_model(name);
      m.A2 = detail::scalar(e.param("lambda"));
      m.sigma_eps = detail::scalar(std::pow(e.param("sigma"), 2));
      return m;
    }
    case ModelId::MA2: {
      auto m = detail::scalar_model(name);
      m.phi_u = detail::scalar(e.param("rho"));
      m.sigma_eps = detail::scalar(std::pow(e.param("sigma"), 2));
      return m;
    }
    case ModelId::MA3: {
      const double lambda = e.param("lambda"), rho = e.param("rho");
      auto m = detail::ar2_model(name, e.param("sigma"));
      m.A2 << lambda + rho, -lambda * rho, 1.0, 0.0;
      return m;
    }
    case ModelId::MA4: {
      // pi_t = u_t with u_t = (lambda + rho) u_{t-1} - lambda rho u_{t-2} + eps_t,
      // the lagged shock carried as a second latent coordinate.
      const double lambda = e.param("lambda"), rho = e.param("rho");
      auto m = detail::ar2_model(name, e.param("sigma"));
      m.variable_names = {"pi", "u_lag"};
      m.phi_u << lambda + rho, -lambda * rho, 1.0, 0.0;
      return m;
    }
    case ModelId::MA5: {
      auto m = detail::scalar_model(name);
      m.A2 = detail::scalar(e.param("lambda"));
      m.phi_u = detail::scalar(e.param("rho"));
      m.sigma_eps = detail::scalar(std::pow(e.param("sigma"), 2));
      return m;
    }
    case ModelId::MR1: {
      auto m = detail::scalar_model(name);
      m.A1 = detail::scalar(e.param("beta"));
      m.phi_u = detail::scalar(e.param("rho"));
      m.sigma_eps = detail::scalar(std::pow(e.param("sigma"), 2));
      m.forward = {true};
      return m;
    }
    case ModelId::MR2: {
      auto m = detail::scalar_model(name);
      m.A1 = detail::scalar(e.param("beta"));
      m.A2 = detail::scalar(e.param("b"));
      m.sigma_eps = detail::scalar(std::pow(e.param("sigma"), 2));
      m.forward = {true};
      return m;
    }
    case ModelId::MR3: {
      auto m = detail::scalar_model(name);
      m.A1 = detail::scalar(e.param("a"));
      m.sigma_eps = detail::scalar(0.0);
      m.forward = {true};
      if (e.has("sigma_w")) m.sunspot_variance = std::pow(e.param("sigma_w"), 2);
      return m;
    }
  }
  fail(ErrorCode::UnknownModel, "unhandled model id");
}

/// Matrix encoding of an admissible catalog model.
inline StructuralREModel build(const CatalogEntry& e) {
  check_ranges(e);
  return encode(e);
}

/// Canonical AR reduced form of a catalog model, in closed form.
inline ARProcess reduce(const CatalogEntry& e) {
  check_ranges(e);
  ARProcess out;
  out.label = "reduce(" + e.describe() + ")";
  switch (e.id) {
    case ModelId::MA1:
      out.coefficients = {e.param("lambda")};
      out.innovation_variance = std::pow(e.param("sigma"), 2);
      break;
    case ModelId::MA2:
      out.coefficients = {e.param("rho")};
      out.innovation_variance = std::pow(e.param("sigma"), 2);
      break;
    case ModelId::MA3:
    case ModelId::MA4:
    case ModelId::MA5: {
      const double lambda = e.param("lambda"), rho = e.param("rho");
      out.coefficients = {lambda + rho, -(lambda * rho)};
      out.innovation_variance = std::pow(e.param("sigma"), 2);
      break;
    }
    case ModelId::MR1: {
      const double beta = e.param("beta"), rho = e.param("rho");
      const double anchor = 1.0 / (1.0 - beta * rho);
      out.coefficients = {rho};
      out.innovation_variance = std::pow(e.param("sigma") * anchor, 2);
      break;
    }
    case ModelId::MR2: {
      const double beta = e.param("beta");
      const double mu = hybrid_roots(beta, e.param("b")).mu1;
      out.coefficients = {mu};
      out.innovation_variance = std::pow(e.param("sigma") / (1.0 - beta * mu), 2);
      break;
    }
    case ModelId::MR3:
      if (!e.has("sigma_w")) {
        fail(ErrorCode::MissingSunspotVariance,
             "Indeterminate(1): MR3 needs sigma_w to select a sunspot solution");
      }
      out.coefficients = {1.0 / e.param("a")};
      out.innovation_variance = std::pow(e.param("sigma_w"), 2);
      break;
  }
  return out;
}

}  // namespace obseq
