#include <random>

#include <gtest/gtest.h>

#include "obseq/catalog.hpp"
#include "obseq/equivalence.hpp"
#include "obseq/io.hpp"
#include "obseq/remodel.hpp"

using namespace obseq;

namespace {

// pi_t = beta E pi_{t+1} + u_t written with u as a second, predetermined variable.
StructuralREModel mr1_two_variable(double beta, double rho, double sigma) {
  StructuralREModel m = make_model(2);
  m.A0 << 1.0, -1.0, 0.0, 1.0;
  m.A1(0, 0) = beta;
  m.A2(1, 1) = rho;
  m.sigma_eps << 0.0, 0.0, 0.0, sigma * sigma;
  m.forward = {true, false};
  m.observed = {0};
  return m;
}

StructuralREModel sample(const std::string& file) {
  return io::load_model(std::string(OBSEQ_SOURCE_DIR) + "/samples/" + file);
}

}  // namespace

TEST(Determinacy, Mr1TwoVariableIsDeterminate) {
  const auto cls = classify_determinacy(mr1_two_variable(0.99, 0.9, 1.0));
  EXPECT_EQ(cls.kind, DeterminacyKind::Determinate);
  EXPECT_EQ(cls.unstable_count, 1);
  EXPECT_EQ(cls.forward_count, 1);
  bool has_inverse_beta = false;
  for (Eigen::Index i = 0; i < cls.roots.size(); ++i) {
    if (std::abs(cls.roots(i) - Complex(1.0 / 0.99)) < 1e-12) has_inverse_beta = true;
  }
  EXPECT_TRUE(has_inverse_beta);
}

TEST(Determinacy, Mr3IsIndeterminateOfDegreeOne) {
  const auto cls = classify_determinacy(build(make_entry(ModelId::MR3, {{"a", 1.5}})));
  EXPECT_EQ(cls.kind, DeterminacyKind::Indeterminate);
  EXPECT_EQ(cls.degree, 1);
}

TEST(Determinacy, Mr2OutsideRegionHasNoStableSolution) {
  const auto cls = classify_determinacy(encode(make_entry(ModelId::MR2, {{"beta", 0.5}, {"b", 0.6}})));
  EXPECT_EQ(cls.kind, DeterminacyKind::NoStableSolution);
  EXPECT_EQ(cls.unstable_count, 2);
}

TEST(Determinacy, Mr2DeterminateOnAdmissibleGrid) {
  for (int i = 1; i < 40; ++i) {
    for (int j = 1; j < 40; ++j) {
      if (i + j >= 40) continue;
      const double beta = i / 40.0, b = j / 40.0;
      const auto cls = classify_determinacy(build(make_entry(ModelId::MR2, {{"beta", beta}, {"b", b}})));
      EXPECT_EQ(cls.kind, DeterminacyKind::Determinate) << beta << " " << b;
      EXPECT_FALSE(cls.boundary);
    }
  }
}

TEST(Determinacy, UnitRootLimitIsFlagged) {
  // beta + b = 1 with beta < 0.5: roots 1 and (1 - beta) / beta.
  const auto m = encode(make_entry(ModelId::MR2, {{"beta", 0.4}, {"b", 0.6}}));
  const auto cls = classify_determinacy(m);
  EXPECT_TRUE(cls.boundary);
  EXPECT_EQ(cls.kind, DeterminacyKind::Determinate);
  const auto s = solve(m);
  EXPECT_TRUE(s.boundary);
  EXPECT_NEAR(s.C(0, 0), 1.0, 1e-10);
  try {
    to_state_space(s, m);
    autocovariances(to_state_space(s, m), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnstableTransition);
  }
}

TEST(Solve, BackwardModelSolvesItself) {
  StructuralREModel m = make_model(2);
  m.A2 = 0.9 * Matrix::Identity(2, 2);
  const auto s = solve(m);
  EXPECT_LE(inf_norm(Matrix(s.C - 0.9 * Matrix::Identity(2, 2))), 1e-14);
  EXPECT_LE(inf_norm(Matrix(s.G2 - Matrix::Identity(2, 2))), 1e-14);
}

TEST(Solve, Mr2HybridRootAndScale) {
  const auto s = solve(build(make_entry(ModelId::MR2, {{"beta", 0.5}, {"b", 0.3}})));
  const double mu1 = 1.0 - std::sqrt(0.4);
  EXPECT_NEAR(s.C(0, 0), mu1, 1e-14);
  EXPECT_NEAR(s.G2(0, 0), 1.0 / (1.0 - 0.5 * mu1), 1e-13);
  EXPECT_NEAR(s.G2(0, 0), 1.22515, 1e-5);
}

TEST(Solve, DegenerateModelWithoutPredeterminedVariables) {
  const auto m = sample("degenerate_forward.json");
  const auto s = solve(m);
  EXPECT_EQ(s.determinacy.kind, DeterminacyKind::Determinate);
  EXPECT_EQ(s.C, Matrix::Zero(2, 2));
  EXPECT_LE(inf_norm(Matrix(s.G2 - m.A0.inverse())), 1e-13);
}

TEST(Solve, IndeterminateNeedsSunspotVariance) {
  try {
    solve(build(make_entry(ModelId::MR3, {{"a", 1.5}})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotDeterminate);
    EXPECT_NE(std::string(e.what()).find("Indeterminate(1)"), std::string::npos);
  }
  const auto m = build(make_entry(ModelId::MR3, {{"a", 2.0}, {"sigma_w", 1.0}}));
  const auto s = solve(m);
  EXPECT_NEAR(s.C(0, 0), 0.5, 1e-14);
  ASSERT_EQ(s.sunspot_loading.cols(), 1);
  const auto g = autocovariances(to_state_space(s, m), 1);
  EXPECT_NEAR(g[0](0, 0), 1.0 / 0.75, 1e-12);
}

TEST(Solve, RandomRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 100; ++trial) {
    const double beta = u(rng), rho = u(rng);
    const auto e1 = make_entry(ModelId::MR1, {{"beta", beta}, {"rho", rho}, {"sigma", 0.5 + u(rng)}});
    EXPECT_LE(solve(build(e1)).residual, 1e-9);
    const double b = (1.0 - beta) * u(rng);
    const auto e2 = make_entry(ModelId::MR2, {{"beta", beta}, {"b", b}});
    EXPECT_LE(solve(build(e2)).residual, 1e-9);
    // Two-variable model with an exogenous observable x and AR(1) shocks.
    StructuralREModel m = make_model(2, 1);
    m.A0 << 1.0, -0.2 * u(rng), 0.1 * u(rng), 1.0;
    m.A1 << 0.5 * beta, 0.0, 0.1 * u(rng), 0.2 * u(rng);
    m.A2 << 0.3 * b, 0.1, 0.0, 0.4 * rho;
    m.A3 << u(rng), -u(rng);
    m.phi_x << 0.5 * rho;
    m.phi_u << 0.3 * u(rng), 0.0, 0.0, 0.6 * u(rng);
    m.forward = {true, false};
    const auto cls = classify_determinacy(m);
    if (cls.kind != DeterminacyKind::Determinate) continue;
    const auto s = solve(m);
    EXPECT_LE(s.residual, 1e-9);
    // One-step check: E_t y_{t+1} = C y_t + G1 Phi_x x_t + G2 Phi_u u_t.
    Vector ylag(2), x(1), shock(2);
    ylag << u(rng), -u(rng);
    x << u(rng);
    shock << u(rng), u(rng);
    const Vector y = s.C * ylag + s.G1 * x + s.G2 * shock;
    const Vector ey = s.C * y + s.G1 * m.phi_x * x + s.G2 * m.phi_u * shock;
    const Vector gap = m.A0 * y - m.A1 * ey - m.A2 * ylag - m.A3 * x - shock;
    EXPECT_LE(gap.cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Anchored, Mr1AnchorValue) {
  const auto a = anchored_solution(build(make_entry(ModelId::MR1, {{"beta", 0.99}, {"rho", 0.9}})));
  EXPECT_NEAR(a.anchor(0, 0), 1.0 / (1.0 - 0.99 * 0.9), 1e-12);
  EXPECT_NEAR(a.anchor(0, 0), 9.1743, 1e-4);
  EXPECT_NEAR(a.transition(0, 0), 0.9, 1e-15);
}

TEST(Anchored, NoForwardTermGivesUnitAnchor) {
  StructuralREModel m = make_model(1);
  m.phi_u << 0.5;
  EXPECT_EQ(anchored_solution(m).anchor(0, 0), 1.0);
}

TEST(Anchored, ScalarShockTransitionIsExact) {
  const auto m = sample("anchored_two_variable.json");
  const auto a = anchored_solution(m);
  EXPECT_EQ(a.transition, 0.7 * Matrix::Identity(2, 2));
  const auto s = solve(m);
  EXPECT_LE(inf_norm(Matrix(s.C - a.solved.C)), 1e-14);
  EXPECT_LE(inf_norm(Matrix(s.G2 - a.anchor)), 1e-12);
}

TEST(Anchored, Preconditions) {
  StructuralREModel m = make_model(1);
  m.A1 << 2.0;  // A0^{-1} A1 has a root outside the circle
  m.forward = {true};
  try {
    anchored_solution(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotAllUnstable);
  }
}

TEST(StateSpace, Ma1IsAlreadyAr1) {
  const auto m = build(make_entry(ModelId::MA1, {{"lambda", 0.9}}));
  const auto ss = to_state_space(solve(m), m);
  ASSERT_EQ(ss.transition.rows(), 1);
  EXPECT_EQ(ss.transition(0, 0), 0.9);
  EXPECT_EQ(ss.innovation_cov(0, 0), 1.0);
}

TEST(StateSpace, Mr1ObservedMomentsCarryAnchorScale) {
  const auto m = build(make_entry(ModelId::MR1, {{"beta", 0.99}, {"rho", 0.9}}));
  const auto g = autocovariances(to_state_space(solve(m), m), 1);
  const double n = 1.0 / (1.0 - 0.99 * 0.9);
  EXPECT_NEAR(g[0](0, 0), n * n / 0.19, 1e-9 * n * n / 0.19);
  EXPECT_NEAR(g[1](0, 0) / g[0](0, 0), 0.9, 1e-12);
  const auto two = mr1_two_variable(0.99, 0.9, 1.0);
  const auto g2 = autocovariances(to_state_space(solve(two), two), 1);
  EXPECT_NEAR(g2[0](0, 0), g[0](0, 0), 1e-9 * g[0](0, 0));
}

TEST(StateSpace, Ma5MatchesAr2Moments) {
  const auto m = build(make_entry(ModelId::MA5, {{"lambda", 0.8}, {"rho", 0.5}}));
  const auto g = autocovariances(to_state_space(solve(m), m), 3);
  EXPECT_NEAR(g[1](0, 0) / g[0](0, 0), 1.3 / 1.4, 1e-12);
  const auto ar = autocovariances(ar_state_space(ARProcess{{1.3, -0.4}, 1.0, "ar2"}), 3);
  for (int j = 0; j <= 3; ++j) EXPECT_NEAR(g[j](0, 0), ar[j](0, 0), 1e-10 * ar[0](0, 0));
}

TEST(StateSpace, AutocovarianceClosedForms) {
  const auto g = autocovariances(ar_state_space(ARProcess{{0.9}, 1.0, "ar1"}), 2);
  EXPECT_NEAR(g[0](0, 0), 1.0 / 0.19, 1e-12);
  EXPECT_NEAR(g[1](0, 0), 0.9 / 0.19, 1e-12);
  const auto z = autocovariances(ar_state_space(ARProcess{{0.0}, 2.0, "wn"}), 2);
  EXPECT_EQ(z[1](0, 0), 0.0);
  EXPECT_EQ(z[2](0, 0), 0.0);
}

TEST(StateSpace, InvariantToStateOrdering) {
  // Swap the two endogenous variables of a model: observed moments of the
  // same variable are unchanged.
  const auto m = mr1_two_variable(0.7, 0.6, 1.3);
  Matrix p(2, 2);
  p << 0, 1, 1, 0;
  StructuralREModel q = m;
  q.A0 = p * m.A0 * p;
  q.A1 = p * m.A1 * p;
  q.A2 = p * m.A2 * p;
  q.sigma_eps = p * m.sigma_eps * p;
  q.forward = {false, true};
  q.observed = {1};
  const auto ga = autocovariances(to_state_space(solve(m), m), 4);
  const auto gb = autocovariances(to_state_space(solve(q), q), 4);
  for (int j = 0; j <= 4; ++j) EXPECT_NEAR(ga[j](0, 0), gb[j](0, 0), 1e-10 * ga[0](0, 0));
}

TEST(StateSpace, IndeterminateWithoutSunspotIsRefused) {
  auto m = build(make_entry(ModelId::MR3, {{"a", 1.5}, {"sigma_w", 1.0}}));
  auto s = solve(m);
  s.sunspot_variance.reset();
  try {
    to_state_space(s, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingSunspotVariance);
  }
}
