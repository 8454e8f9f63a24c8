#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "obseq/error.hpp"

namespace obseq::docsmap {

// module.op names the manifest may cite.
inline const std::vector<std::string>& known_operations() {
  static const std::vector<std::string> ops = {
      "algebra.eigen",
      "algebra.lyapunov_solve",
      "algebra.quadratic_solvent",
      "remodel.classify_determinacy",
      "remodel.solve",
      "remodel.anchored_solution",
      "remodel.to_state_space",
      "catalog.build",
      "catalog.reduce",
      "catalog.hybrid_roots",
      "catalog.toy_structural_given_restriction",
      "catalog.structural_param_count",
      "equivalence.check",
      "equivalence.ar2_factorizations",
      "equivalence.equivalence_class",
      "identification.jacobian_fd",
      "identification.rank_report",
      "identification.profile_likelihood",
      "growth.beta_solow",
      "growth.beta_rck",
      "growth.coincidence_holds",
      "growth.equivalence_locus",
      "montecarlo.simulate",
      "montecarlo.fit_ar",
      "montecarlo.loglik",
      "cli.cmd_solve",
      "cli.cmd_equiv",
      "cli.cmd_identify",
      "cli.cmd_growth",
      "cli.cmd_fig1",
      "cli.cmd_simulate",
      "docsmap.verify_manifest",
  };
  return ops;
}

struct TraceEntry {
  std::string location;
  std::string quote;
  std::vector<std::string> operations;
  std::vector<std::string> tests;
};

struct Manifest {
  std::vector<std::string> scope;  // locations that must each have an entry
  std::vector<TraceEntry> entries;
};

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> missing_items;     // scope items without an entry
  std::vector<std::string> incomplete_items;  // entries lacking operations or tests
  std::vector<std::string> unknown_operations;
  std::vector<std::string> missing_tests;     // cited tests absent from the suite
  std::vector<std::string> duplicate_items;

  std::string summary() const {
    std::ostringstream out;
    const auto list = [&](const char* what, const std::vector<std::string>& items) {
      if (items.empty()) return;
      out << what << ":";
      for (const auto& s : items) out << " \"" << s << "\"";
      out << "\n";
    };
    list("missing entries", missing_items);
    list("entries without operations or tests", incomplete_items);
    list("unknown operations", unknown_operations);
    list("tests not in suite", missing_tests);
    list("duplicate entries", duplicate_items);
    return ok ? std::string("manifest complete\n") : out.str();
  }
};

inline Manifest parse_manifest(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    Manifest m;
    m.scope = doc.at("scope").get<std::vector<std::string>>();
    for (const auto& e : doc.at("entries")) {
      TraceEntry t;
      t.location = e.at("paper_location").get<std::string>();
      t.quote = e.value("quote", std::string());
      t.operations = e.value("operations", std::vector<std::string>{});
      t.tests = e.value("tests", std::vector<std::string>{});
      m.entries.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

/// Test identifiers ("Suite.Name") from `--gtest_list_tests` output.
inline std::set<std::string> parse_gtest_listing(const std::string& listing) {
  std::set<std::string> ids;
  std::istringstream in(listing);
  std::string line, suite;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
    if (line.empty()) continue;
    if (line[0] != ' ') {
      suite = line;  // keeps the trailing '.'
    } else {
      ids.insert(suite + line.substr(line.find_first_not_of(' ')));
    }
  }
  return ids;
}

inline VerifyReport verify_manifest(const Manifest& m, const std::set<std::string>& suite) {
  VerifyReport r;
  const auto& ops = known_operations();
  std::set<std::string> seen;
  for (const auto& e : m.entries) {
    if (!seen.insert(e.location).second) r.duplicate_items.push_back(e.location);
    if (e.operations.empty() || e.tests.empty()) r.incomplete_items.push_back(e.location);
    for (const auto& op : e.operations) {
      if (std::find(ops.begin(), ops.end(), op) == ops.end()) r.unknown_operations.push_back(op);
    }
    for (const auto& t : e.tests) {
      if (!suite.count(t)) r.missing_tests.push_back(t);
    }
  }
  for (const auto& item : m.scope) {
    if (!seen.count(item)) r.missing_items.push_back(item);
  }
  r.ok = r.missing_items.empty() && r.incomplete_items.empty() && r.unknown_operations.empty() &&
         r.missing_tests.empty() && r.duplicate_items.empty();
  return r;
}

/// Throws ManifestIncomplete listing every problem.
inline void require_complete(const Manifest& m, const std::set<std::string>& suite) {
  const auto r = verify_manifest(m, suite);
  if (!r.ok) fail(ErrorCode::ManifestIncomplete, r.summary());
}

}  // namespace obseq::docsmap
