#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "obseq/cli.hpp"
#include "obseq/docsmap.hpp"

using namespace obseq;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "obseq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::string source(const std::string& rel) { return std::string(OBSEQ_SOURCE_DIR) + "/" + rel; }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::set<std::string> registered_tests() {
  std::set<std::string> ids;
  const auto* unit = ::testing::UnitTest::GetInstance();
  for (int i = 0; i < unit->total_test_suite_count(); ++i) {
    const auto* suite = unit->GetTestSuite(i);
    for (int j = 0; j < suite->total_test_count(); ++j) {
      ids.insert(std::string(suite->name()) + "." + suite->GetTestInfo(j)->name());
    }
  }
  return ids;
}

}  // namespace

TEST(CliSolve, CatalogHybridModel) {
  const auto r = run({"solve", "--catalog", "MR2?beta=0.5&b=0.3&sigma=1"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto doc = io::Json::parse(r.out);
  EXPECT_EQ(doc["determinacy"]["kind"], "Determinate");
  EXPECT_NEAR(doc["C"][0][0].get<double>(), 0.36754, 1e-5);
}

TEST(CliSolve, ModelFileMatchesCatalog) {
  const auto a = run({"solve", "--model", source("samples/mr2_hybrid.json")});
  ASSERT_EQ(a.status, 0) << a.err;
  const auto b = run({"solve", "--catalog", "MR2?beta=0.5&b=0.3"});
  EXPECT_EQ(io::Json::parse(a.out)["C"], io::Json::parse(b.out)["C"]);
}

TEST(CliSolve, ExitCodes) {
  const auto indeterminate = run({"solve", "--catalog", "MR3?a=1.5"});
  EXPECT_EQ(indeterminate.status, 3);
  EXPECT_NE(indeterminate.err.find("Indeterminate"), std::string::npos);
  EXPECT_EQ(run({"solve", "--catalog", "MR2?beta=0.5&b=0.6"}).status, 3);
  EXPECT_EQ(run({"solve", "--model", source("tests/data/malformed.json")}).status, 2);
  EXPECT_EQ(run({"solve", "--model", "/nonexistent.json"}).status, 2);
  EXPECT_EQ(run({"solve"}).status, 2);
  EXPECT_EQ(run({"bogus"}).status, 2);
}

TEST(CliSolve, WritesOutputFile) {
  const auto path = std::filesystem::temp_directory_path() / "obseq_solve.json";
  ASSERT_EQ(run({"solve", "--catalog", "MA1?lambda=0.9", "--out", path.string()}).status, 0);
  std::ifstream in(path);
  const auto doc = io::Json::parse(in);
  EXPECT_EQ(doc["C"][0][0].get<double>(), 0.9);
  std::filesystem::remove(path);
}

TEST(CliEquiv, Verdicts) {
  const auto same = run({"equiv", "--a", "MR1?beta=0.99&rho=0.9&sigma=1", "--b", "MA1?lambda=0.9&sigma=9.174311926605505"});
  EXPECT_EQ(same.status, 0) << same.out;
  const auto diff = run({"equiv", "--a", "MA1?lambda=0.9&sigma=1", "--b", "MA1?lambda=0.8&sigma=1"});
  EXPECT_EQ(diff.status, 1);
  EXPECT_EQ(io::Json::parse(diff.out)["witness_lag"], 1);
  EXPECT_EQ(run({"equiv", "--a", "MA5?lambda=0.8&rho=0.5&sigma=1", "--b", "MA5?lambda=0.5&rho=0.8&sigma=1"}).status, 0);
  EXPECT_EQ(run({"equiv", "--a", "MA1?lambda=0.9", "--b", "nope.json"}).status, 2);
}

TEST(CliEquiv, RoundedAnchorNeedsLooserTolerance) {
  // sigma printed to four decimals differs from 1 / (1 - 0.891) by about 1e-5 relative.
  const std::vector<std::string> args{"equiv", "--a", "MR1?beta=0.99&rho=0.9&sigma=1", "--b", "MA1?lambda=0.9&sigma=9.1743"};
  EXPECT_EQ(run(args).status, 1);
  auto loose = args;
  loose.insert(loose.end(), {"--tol", "1e-4"});
  EXPECT_EQ(run(loose).status, 0);
}

TEST(CliIdentify, Reports) {
  auto r = run({"identify", "--catalog", "MA1?lambda=0.9&sigma=1"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(io::Json::parse(r.out)["identified"].get<bool>());
  r = run({"identify", "--catalog", "MR2?beta=0.5&b=0.3&sigma=1"});
  auto doc = io::Json::parse(r.out);
  EXPECT_FALSE(doc["identified"].get<bool>());
  EXPECT_EQ(doc["rank"], 2);
  EXPECT_EQ(doc["parameter_count"], 3);
  r = run({"identify", "--catalog", "toy?a=0.5&b=0"});
  doc = io::Json::parse(r.out);
  EXPECT_EQ(doc["rank"], 1);
  EXPECT_EQ(doc["null_basis"].size(), 1u);
  r = run({"identify", "--catalog", "toy?a=0.5", "--restrict-b", "0"});
  EXPECT_TRUE(io::Json::parse(r.out)["identified"].get<bool>());
  r = run({"identify", "--catalog", "MR1?beta=0.5&rho=0.5", "--at", "0.99,0.9,1"});
  EXPECT_EQ(io::Json::parse(r.out)["at"][0], 0.99);
  r = run({"identify", "--model", source("samples/degenerate_forward.json")});
  EXPECT_EQ(r.status, 0) << r.err;
}

TEST(CliGrowth, ValuesAndErrors) {
  auto r = run({"growth", "--alpha", "0.75", "--n", "0.01", "--x", "0.02", "--delta", "0.05"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NEAR(io::Json::parse(r.out)["beta_solow"].get<double>(), 0.02, 1e-12);
  r = run({"growth", "--alpha", "0.333333333333333333", "--n", "0.01", "--x", "0.02", "--delta", "0.05", "--rho",
           "0.0166666666666666667", "--theta", "10"});
  const auto doc = io::Json::parse(r.out);
  EXPECT_NEAR(doc["beta_rck"].get<double>(), doc["beta_solow"].get<double>(), 1e-12);
  EXPECT_TRUE(doc["coincidence"].get<bool>());
  r = run({"growth", "--alpha", "0.3", "--n", "0.05", "--x", "0.02", "--delta", "0.05", "--rho", "0.01", "--theta", "0.5"});
  EXPECT_EQ(r.status, 5);
  EXPECT_NE(r.err.find("zeta"), std::string::npos);
}

TEST(CliGrowth, LocusCsv) {
  const auto r = run({"growth", "--n", "0.01", "--x", "0.02", "--delta", "0.05", "--rho", "0.02", "--invert", "0.02",
                      "--grid", "0.5:0.9:0.05"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = parse_csv(r.out);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"alpha", "theta", "beta_check", "note"}));
  EXPECT_EQ(rows.size(), 10u);
  const auto solow = run({"growth", "--n", "0.01", "--x", "0.02", "--delta", "0.05", "--invert", "0.02", "--mode", "solow"});
  EXPECT_EQ(parse_csv(solow.out)[1][0], "0.75");
}

TEST(CliFig1, CurvesSatisfyOrdering) {
  const auto r = run({"fig1", "--steps", "1000"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = parse_csv(r.out);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"beta", "b", "mu", "color"}));
  ASSERT_EQ(rows.size(), 4001u);
  double last_half = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double beta = std::stod(rows[i][0]), b = std::stod(rows[i][1]), mu = std::stod(rows[i][2]);
    if (beta == 0.0) {
      EXPECT_EQ(rows[i][1], rows[i][2]);
      EXPECT_EQ(rows[i][3], "lightgreen");
    } else {
      EXPECT_LT(b, mu);
    }
    if (beta == 0.5) last_half = mu;
  }
  EXPECT_GT(last_half, 0.99);
  const auto one = cli::fig1_curve(0.6, 1);
  EXPECT_NEAR(hybrid_roots(0.6, 0.2).mu1, 0.23241, 1e-5);
  EXPECT_NEAR(one[0].b, 0.2, 1e-15);
}

TEST(CliFig1, RejectsBetaOutOfRange) {
  EXPECT_EQ(run({"fig1", "--betas", "1.0"}).status, 2);
}

TEST(CliSimulate, DeterministicFitTable) {
  const std::vector<std::string> args{"simulate", "--catalog", "MA5?lambda=0.8&rho=0.5&sigma=1", "--T", "20000",
                                      "--fit", "2", "--reps", "3", "--seed", "11"};
  const auto a = run(args);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, run(args).out);
  const auto rows = parse_csv(a.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[4][0], "mean");
  EXPECT_NEAR(std::stod(rows[4][1]), 1.3, 0.03);
  EXPECT_NEAR(std::stod(rows[4][2]), -0.4, 0.03);
}

TEST(CliSimulate, Mr1RecoversRho) {
  const auto r = run({"simulate", "--catalog", "MR1?beta=0.99&rho=0.9&sigma=1", "--T", "100000", "--fit", "1"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NEAR(std::stod(parse_csv(r.out)[1][1]), 0.9, 0.01);
}

TEST(CliOutput, TwelveSignificantDigits) {
  EXPECT_EQ(io::fmt(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(io::fmt(0.02), "0.02");
  EXPECT_EQ(io::round12(2.0 / 3.0), 0.666666666667);
}

TEST(ModelFile, RoundTrip) {
  const auto m = io::load_model(source("samples/anchored_two_variable.json"));
  const auto back = io::parse_model(io::model_to_json(m).dump());
  EXPECT_EQ(back.A0, m.A0);
  EXPECT_EQ(back.A1, m.A1);
  EXPECT_EQ(back.phi_u, m.phi_u);
  EXPECT_EQ(back.forward, m.forward);
  EXPECT_EQ(back.variable_names, m.variable_names);
}

TEST(ModelFile, ShapeErrors) {
  const auto code = [](const std::string& text) {
    try {
      io::parse_model(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidModel;
  };
  EXPECT_EQ(code(R"({"n": 2, "A0": [1, 0, 0]})"), ErrorCode::ParseError);
  EXPECT_EQ(code(R"({"n": 1, "A0": [1], "forward_flags": [true, false]})"), ErrorCode::ParseError);
  EXPECT_EQ(code(R"({"schema": 2, "n": 1, "A0": [1]})"), ErrorCode::ParseError);
  EXPECT_EQ(code(R"({"n": 1})"), ErrorCode::ParseError);
  EXPECT_EQ(code("not json"), ErrorCode::ParseError);
}

TEST(Docsmap, ManifestCoversSuite) {
  const auto manifest = docsmap::load_manifest(source("trace.json"));
  const auto report = docsmap::verify_manifest(manifest, registered_tests());
  EXPECT_TRUE(report.ok) << report.summary();
}

TEST(Docsmap, MissingEntryIsNamed) {
  auto manifest = docsmap::load_manifest(source("trace.json"));
  const std::string dropped = manifest.entries.at(1).location;
  manifest.entries.erase(manifest.entries.begin() + 1);
  try {
    docsmap::require_complete(manifest, registered_tests());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ManifestIncomplete);
    EXPECT_NE(std::string(e.what()).find(dropped), std::string::npos);
  }
}

TEST(Docsmap, DeletedTestIsNamed) {
  auto manifest = docsmap::load_manifest(source("trace.json"));
  manifest.entries.front().tests.push_back("Gone.Missing");
  const auto report = docsmap::verify_manifest(manifest, registered_tests());
  EXPECT_FALSE(report.ok);
  EXPECT_NE(report.summary().find("Gone.Missing"), std::string::npos);
}

TEST(Docsmap, ParsesGtestListing) {
  const auto ids = docsmap::parse_gtest_listing("Suite.\n  One\n  Two  # GetParam() = 3\nOther.\n  Three\n");
  EXPECT_EQ(ids, (std::set<std::string>{"Suite.One", "Suite.Two", "Other.Three"}));
}
