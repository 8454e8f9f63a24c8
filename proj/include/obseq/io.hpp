#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "obseq/algebra.hpp"
#include "obseq/error.hpp"
#include "obseq/remodel.hpp"

namespace obseq::io {

using Json = nlohmann::ordered_json;

inline constexpr int kModelSchema = 1;

/// 12 significant digits, the precision of every number the tools print.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Rounds through the 12-digit text form so JSON and CSV outputs agree.
inline double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::stod(fmt(v)) + 0.0;  // + 0.0 maps -0 to 0
}

inline Json to_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round12(v);
}

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

inline Json to_json(const ComplexVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back({{"re", to_json(v(i).real())}, {"im", to_json(v(i).imag())}, {"modulus", to_json(std::abs(v(i)))}});
  }
  return out;
}

namespace detail {

// Accepts a flat row-major list or a list of rows.
inline Matrix read_matrix(const Json& doc, const char* key, Eigen::Index rows, Eigen::Index cols,
                          bool required) {
  if (!doc.contains(key)) {
    if (required && rows * cols > 0) fail(ErrorCode::ParseError, std::string("missing field ") + key);
    return Matrix::Zero(rows, cols);
  }
  const Json& node = doc.at(key);
  if (!node.is_array()) fail(ErrorCode::ParseError, std::string(key) + " must be an array");
  std::vector<double> flat;
  for (const auto& item : node) {
    if (item.is_array()) {
      if (static_cast<Eigen::Index>(item.size()) != cols) {
        fail(ErrorCode::ParseError, std::string(key) + " row length does not match");
      }
      for (const auto& v : item) {
        if (!v.is_number()) fail(ErrorCode::ParseError, std::string(key) + " has a non-numeric entry");
        flat.push_back(v.get<double>());
      }
    } else if (item.is_number()) {
      flat.push_back(item.get<double>());
    } else {
      fail(ErrorCode::ParseError, std::string(key) + " has a non-numeric entry");
    }
  }
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    fail(ErrorCode::ParseError, std::string(key) + " expected " + std::to_string(rows * cols) +
                                    " entries, got " + std::to_string(flat.size()));
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = flat[static_cast<std::size_t>(i * cols + j)];
  }
  return m;
}

}  // namespace detail

/// Parses a model document. Shape errors surface as ParseError; numerical
/// admissibility is left to validate().
inline StructuralREModel parse_model(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed JSON: ") + e.what());
  }
  try {
    if (!doc.is_object()) fail(ErrorCode::ParseError, "model document must be an object");
    if (doc.contains("schema") && doc.at("schema").get<int>() != kModelSchema) {
      fail(ErrorCode::ParseError, "unsupported schema version");
    }
    const auto n = doc.at("n").get<Eigen::Index>();
    const auto k = doc.value("k", Eigen::Index{0});
    if (n < 1 || k < 0) fail(ErrorCode::ParseError, "n must be positive and k non-negative");

    StructuralREModel m = make_model(n, k);
    m.name = doc.value("name", std::string("model"));
    m.A0 = detail::read_matrix(doc, "A0", n, n, true);
    m.A1 = detail::read_matrix(doc, "A1", n, n, false);
    m.A2 = detail::read_matrix(doc, "A2", n, n, false);
    m.A3 = detail::read_matrix(doc, "A3", n, k, false);
    m.phi_x = detail::read_matrix(doc, "Phi_x", k, k, false);
    m.phi_u = detail::read_matrix(doc, "Phi_u", n, n, false);
    if (doc.contains("Sigma_eps")) m.sigma_eps = detail::read_matrix(doc, "Sigma_eps", n, n, true);
    if (doc.contains("Sigma_v")) m.sigma_v = detail::read_matrix(doc, "Sigma_v", k, k, true);

    if (doc.contains("forward_flags")) {
      const auto flags = doc.at("forward_flags").get<std::vector<bool>>();
      if (static_cast<Eigen::Index>(flags.size()) != n) fail(ErrorCode::ParseError, "forward_flags length must equal n");
      m.forward = flags;
    }
    if (doc.contains("variable_names")) {
      m.variable_names = doc.at("variable_names").get<std::vector<std::string>>();
      if (static_cast<Eigen::Index>(m.variable_names.size()) != n) {
        fail(ErrorCode::ParseError, "variable_names length must equal n");
      }
    }
    if (doc.contains("observed")) {
      m.observed = doc.at("observed").get<std::vector<int>>();
      for (int idx : m.observed) {
        if (idx < 0 || idx >= n) fail(ErrorCode::ParseError, "observed index out of range");
      }
    }
    if (doc.contains("sunspot_variance")) m.sunspot_variance = doc.at("sunspot_variance").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad model field: ") + e.what());
  }
}

inline StructuralREModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

inline Json model_to_json(const StructuralREModel& m) {
  const auto flat = [](const Matrix& a) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) out.push_back(a(i, j));
    }
    return out;
  };
  Json doc;
  doc["schema"] = kModelSchema;
  doc["name"] = m.name;
  doc["n"] = m.n();
  doc["k"] = m.k();
  doc["forward_flags"] = m.forward;
  doc["variable_names"] = m.variable_names;
  doc["A0"] = flat(m.A0);
  doc["A1"] = flat(m.A1);
  doc["A2"] = flat(m.A2);
  doc["A3"] = flat(m.A3);
  doc["Phi_x"] = flat(m.phi_x);
  doc["Phi_u"] = flat(m.phi_u);
  doc["Sigma_eps"] = flat(m.sigma_eps);
  doc["Sigma_v"] = flat(m.sigma_v);
  if (!m.observed.empty()) doc["observed"] = m.observed;
  if (m.sunspot_variance) doc["sunspot_variance"] = *m.sunspot_variance;
  return doc;
}

/// Comma-separated output with a header row and LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& names) { row(names); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ostream& out_;
};

}  // namespace obseq::io
