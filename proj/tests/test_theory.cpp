#include <gtest/gtest.h>

#include <cmath>

#include "dsrr/dualsolve.hpp"
#include "dsrr/theory.hpp"
#include "oracles.hpp"

using namespace dsrr;

namespace {

SolverConfig tight(LossKind loss, double lambda) {
  SolverConfig c;
  c.loss = Loss{loss};
  c.lambda = lambda;
  c.gap_tol = 1e-12;
  c.max_epochs = 200000;
  return c;
}

std::vector<double> random_alpha(const LabeledDataset& ds, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> a(ds.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = -ds.labels[i] * rng.uniform();
  return a;
}

LabeledDataset duplicate_columns() { return parse_svmlight("+1 1:1\n-1 1:1\n", std::size_t{2}); }

}  // namespace

TEST(Delta, IdentityIsZero) {
  const auto ds = oracle::random_dataset(12, 6, 1);
  const auto w = recover_primal(ds, random_alpha(ds, 1), 0.1);
  for (double v : delta_vector(ds, ReductionOperator::scaled_identity(6), w)) EXPECT_EQ(v, 0.0);
}

TEST(Delta, ScaledIdentity) {
  const auto ds = oracle::random_dataset(12, 6, 2);
  const auto w = recover_primal(ds, random_alpha(ds, 2), 0.1);
  const auto delta = delta_vector(ds, ReductionOperator::scaled_identity(6, 2.0), w);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_NEAR(delta[i], 3.0 * ds.examples[i].dot(w), 1e-12);
}

TEST(Delta, MatchesGramForm) {
  // small example: n=5, d=4, gaussian m=3
  const auto ds = oracle::random_dataset(5, 4, 3);
  const auto op = make_operator(OperatorKind::gaussian, 4, 3, 9);
  const auto alpha = random_alpha(ds, 3);
  const double lambda = 0.2;
  const auto delta = delta_vector(ds, op, recover_primal(ds, alpha, lambda));
  const auto X = oracle::dense(ds);
  const auto ref = oracle::delta_gram(X, oracle::dense(op) * X, alpha, lambda);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(delta[i], ref[i], 1e-10);
}

TEST(Delta, MatchesGramFormProperty) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    CounterRng rng(seed + 100);
    const std::size_t n = 2 + rng.below(60), d = 2 + rng.below(100);
    ASSERT_LE(n * d, 10000u);
    const auto kind = static_cast<OperatorKind>(rng.below(6));
    const std::size_t m = 1 + rng.below(d);
    const auto ds = oracle::random_dataset(n, d, seed);
    const auto op = make_operator(kind, d, m, seed);
    const auto alpha = random_alpha(ds, seed);
    const auto delta = delta_vector(ds, op, recover_primal(ds, alpha, 0.05));
    const auto X = oracle::dense(ds);
    const auto ref = oracle::delta_gram(X, oracle::dense(op) * X, alpha, 0.05);
    double scale = 1.0;
    for (double v : ref) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(delta[i], ref[i], 1e-10 * scale) << kind_name(kind) << " seed " << seed;
  }
}

TEST(Delta, DimensionMismatchThrows) {
  const auto ds = oracle::random_dataset(4, 3, 0);
  EXPECT_THROW(delta_vector(ds, ReductionOperator::scaled_identity(3), std::vector<double>(2)), std::invalid_argument);
  EXPECT_THROW(delta_vector(ds, ReductionOperator::scaled_identity(4), std::vector<double>(3)), std::invalid_argument);
}

TEST(TauMin, Examples) {
  EXPECT_EQ(tau_min(std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(tau_min(std::vector<double>{0.1, -0.3, 0.2}), 0.6);
  EXPECT_DOUBLE_EQ(tau_min(std::vector<double>{0.1, -0.3, 0.2}, 0.05), 0.7);
}

TEST(SupportSet, Examples) {
  const auto S = support_set(std::vector<double>{0.5, 1e-12, -0.2, 0.0}, 1e-8);
  EXPECT_EQ(S.indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(S.member, (std::vector<char>{1, 0, 1, 0}));
  EXPECT_EQ(support_set(std::vector<double>{0.0, 0.0}, 1e-8).size(), 0u);
  EXPECT_THROW(support_set(std::vector<double>{1.0}, 0.0), std::invalid_argument);
  EXPECT_EQ(restrict_to(std::vector<double>{0.5, 1e-12, -0.2, 0.0}, S), (std::vector<double>{0.5, 0.0, -0.2, 0.0}));
}

TEST(Cone, ExactRecovery) {
  const std::vector<double> a{1.0, -0.5, 0.0, 0.0};
  const auto S = support_set(a, 1e-8);
  const auto r = cone_and_bounds(a, a, S, 0.3, 1.0, 0.2);
  EXPECT_EQ(r.cone_ratio, 0.0);
  EXPECT_EQ(r.err2, 0.0);
  EXPECT_EQ(r.cone, Check::pass);
  EXPECT_EQ(r.tau_ok, Check::pass);
  EXPECT_TRUE(r.all_pass());
}

TEST(Cone, Example) {
  const std::vector<double> ref{1.0, 0.0}, tilde{0.9, 0.05};
  const auto S = support_set(ref, 1e-8);
  const auto r = cone_and_bounds(tilde, ref, S, 0.5, kInf, 0.0);
  EXPECT_NEAR(r.cone_ratio, 0.5, 1e-12);
  EXPECT_NEAR(r.err2, std::sqrt(0.0125), 1e-15);
  EXPECT_NEAR(r.err1, 0.15, 1e-15);
  EXPECT_EQ(r.cone, Check::pass);
  EXPECT_EQ(r.err2_ok, Check::not_applicable);
}

TEST(Cone, InfiniteRatioFails) {
  const std::vector<double> ref{1.0, 0.0}, tilde{1.0, 0.01};
  const auto r = cone_and_bounds(tilde, ref, support_set(ref, 1e-8), 0.5, 2.0, 0.6);
  EXPECT_TRUE(std::isinf(r.cone_ratio));
  EXPECT_EQ(r.cone, Check::fail);
  EXPECT_EQ(r.tau_ok, Check::fail);
  EXPECT_FALSE(r.all_pass());
}

TEST(Cone, BoundsFormulas) {
  const std::vector<double> ref{1.0, 0.5, 0.0, 0.0}, tilde{0.8, 0.6, 0.1, 0.0};
  const auto r = cone_and_bounds(tilde, ref, support_set(ref, 1e-8), 0.2, 2.0);
  EXPECT_DOUBLE_EQ(r.bound2, 3 * 0.2 * 2 * std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(r.bound1, 12 * 0.2 * 2 * 2);
  EXPECT_DOUBLE_EQ(r.boundS, 3 * 0.2 * 2 * 2);
  EXPECT_DOUBLE_EQ(r.boundSc, 9 * 0.2 * 2 * 2);
  EXPECT_NEAR(r.on_support_err1, 0.3, 1e-15);
  EXPECT_NEAR(r.off_support_l1, 0.1, 1e-15);
}

TEST(Cone, ReducedSolutionSatisfiesCone) {
  // above tau_min the reduced solution satisfies the cone condition
  const auto ds = synth_sparse_dual({.n = 120, .d = 256, .s_target = 12, .margin = 4.0, .noise = 1.0, .seed = 3});
  const double lambda = 0.01;
  const auto star = solve_original(ds, tight(LossKind::squared_hinge, lambda));
  ASSERT_TRUE(star.converged);
  const auto S = support_set(star.alpha, 1e-8);
  const auto op = make_operator(OperatorKind::hashing, 256, 256, 3);
  const auto red = op.apply_dataset(ds);
  const double tm = tau_min(delta_vector(ds, red, op, star.primal));
  ASSERT_LT(1.05 * tm, 1.0);
  auto c = tight(LossKind::squared_hinge, lambda);
  c.tau = 1.05 * tm;
  const auto tilde = solve_reduced_sparse(red, c);
  const auto rep = cone_and_bounds(tilde.alpha, restrict_to(star.alpha, S), S, c.tau, Loss{LossKind::squared_hinge}.smoothness(), tm);
  EXPECT_EQ(rep.tau_ok, Check::pass);
  EXPECT_EQ(rep.cone, Check::pass) << rep.cone_ratio;
  EXPECT_TRUE(rep.all_pass());
}

TEST(NearSparsity, FullSupportVanishes) {
  const auto ds = oracle::random_dataset(40, 10, 4, 0.3);
  const auto star = solve_original(ds, tight(LossKind::squared_hinge, 0.05));
  ASSERT_TRUE(star.converged);
  EXPECT_LE(near_sparsity_xi(ds, star.alpha, ds.size(), 0.05).xi, 1e-5);
}

TEST(NearSparsity, ZeroAlpha) {
  const auto ds = oracle::random_dataset(10, 4, 5);
  const auto ns = near_sparsity_xi(ds, std::vector<double>(10, 0.0), 3, 0.1);
  EXPECT_EQ(ns.xi, 1.0);
}

TEST(NearSparsity, MatchesDenseOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ds = oracle::random_dataset(30, 8, seed, 0.4);
    const auto star = solve_original(ds, tight(LossKind::squared_hinge, 0.02));
    for (std::size_t s : {1, 5, 15, 30}) {
      const auto ns = near_sparsity_xi(ds, star.alpha, s, 0.02);
      std::size_t nnz = 0;
      for (double a : ns.alpha_s) nnz += a != 0.0;
      EXPECT_LE(nnz, s);
      EXPECT_NEAR(ns.xi, oracle::xi_dense(oracle::dense(ds), ds.labels, ns.alpha_s, 0.02), 1e-12);
    }
  }
}

TEST(NearSparsity, Errors) {
  const auto ds = oracle::random_dataset(4, 2, 0);
  EXPECT_THROW(near_sparsity_xi(ds, std::vector<double>(4), 2, 0.1, Loss{LossKind::hinge}), std::domain_error);
  EXPECT_THROW(near_sparsity_xi(ds, std::vector<double>(3), 2, 0.1), std::invalid_argument);
  EXPECT_THROW(near_sparsity_xi(ds, std::vector<double>(4), 5, 0.1), std::invalid_argument);
}

TEST(TopS, KeepsLargest) {
  EXPECT_EQ(top_s(std::vector<double>{0.1, -0.9, 0.5, 0.0}, 2), (std::vector<double>{0.0, -0.9, 0.5, 0.0}));
  EXPECT_EQ(top_s(std::vector<double>{0.1, -0.9}, 5), (std::vector<double>{0.1, -0.9}));
}

TEST(Spectrum, DuplicateColumns) {
  const auto ds = duplicate_columns();
  const auto one = restricted_spectrum_bruteforce(ds, nullptr, 1);
  EXPECT_DOUBLE_EQ(one.rho_plus, 0.5);
  EXPECT_DOUBLE_EQ(one.rho_minus, 0.5);
  const auto two = restricted_spectrum_bruteforce(ds, nullptr, 2);
  EXPECT_NEAR(two.rho_plus, 1.0, 1e-12);
  EXPECT_NEAR(two.rho_minus, 0.0, 1e-12);
  EXPECT_TRUE(two.full_level);
}

TEST(Spectrum, IdentityOperatorHasNoPerturbation) {
  const auto ds = oracle::random_dataset(8, 5, 1);
  const auto red = ReductionOperator::scaled_identity(5).apply_dataset(ds);
  const auto rep = restricted_spectrum_bruteforce(ds, &red, 2);
  EXPECT_EQ(rep.sigma_s, 0.0);
  EXPECT_EQ(rep.sigma_diag, 0.0);
}

TEST(Spectrum, BudgetAndArguments) {
  const auto ds = oracle::random_dataset(30, 3, 0);
  EXPECT_THROW(restricted_spectrum_bruteforce(ds, nullptr, 15), std::invalid_argument);  // C(30,15) > 1e6
  const auto red = ReductionOperator::scaled_identity(3).apply_dataset(ds);
  EXPECT_THROW(restricted_spectrum_bruteforce(ds, &red, 5), std::invalid_argument);  // C(30,5)² > 1e6
  EXPECT_NO_THROW(restricted_spectrum_bruteforce(ds, &red, 2));
  EXPECT_THROW(restricted_spectrum_bruteforce(ds, nullptr, 0), std::invalid_argument);
  EXPECT_THROW(restricted_spectrum_bruteforce(ds, nullptr, 31), std::invalid_argument);
}

TEST(Spectrum, MatchesOracle) {
  // n=10, d=8, s=2, gaussian
  for (std::size_t m : {4, 8, 16, 32})
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto ds = synth_sparse_dual({.n = 10, .d = 8, .s_target = 2, .margin = 4.0, .noise = 1.0, .seed = seed});
      const auto op = make_operator(OperatorKind::gaussian, 8, m, seed);
      const auto red = op.apply_dataset(ds);
      const auto rep = restricted_spectrum_bruteforce(ds, &red, 2);
      const auto X = oracle::dense(ds);
      const Eigen::MatrixXd Xh = oracle::dense(op) * X;
      const auto ref = oracle::spectrum(X, &Xh, 2);
      EXPECT_NEAR(rep.rho_plus, ref.rho_plus, 1e-10);
      EXPECT_NEAR(rep.rho_minus, ref.rho_minus, 1e-10);
      EXPECT_NEAR(rep.sigma_s, ref.sigma, 1e-10);
      EXPECT_LE(rep.sigma_diag, rep.sigma_s + 1e-12);
    }
}

TEST(Spectrum, MonotoneInSparsity) {
  const auto ds = oracle::random_dataset(9, 6, 7);
  const auto red = make_operator(OperatorKind::rademacher, 6, 4, 7).apply_dataset(ds);
  double prev_sigma = 0.0, prev_plus = 0.0, prev_minus = kInf;
  double min_norm = kInf;
  for (const auto& x : ds.examples) min_norm = std::min(min_norm, x.squared_norm() / 9.0);
  for (std::size_t s = 1; s <= 3; ++s) {
    const auto rep = restricted_spectrum_bruteforce(ds, &red, s);
    EXPECT_GE(rep.sigma_s, prev_sigma - 1e-12);
    EXPECT_GE(rep.rho_plus, prev_plus - 1e-12);
    EXPECT_LE(rep.rho_minus, prev_minus + 1e-12);
    EXPECT_GE(rep.rho_plus, min_norm - 1e-12);
    prev_sigma = rep.sigma_s;
    prev_plus = rep.rho_plus;
    prev_minus = rep.rho_minus;
  }
}

TEST(Nonsmooth, IdentityConditionHolds) {
  const auto ds = oracle::random_dataset(6, 10, 2);
  const auto red = ReductionOperator::scaled_identity(10).apply_dataset(ds);
  const auto rep = restricted_spectrum_bruteforce(ds, &red, 3);
  ASSERT_GT(rep.rho_minus, 0.0);
  const auto c = check_nonsmooth_condition(rep, 1, 0.1, 0.2);
  EXPECT_TRUE(c.condition);
  EXPECT_TRUE(std::isfinite(c.bound2));
}

TEST(Nonsmooth, DegenerateConditionFails) {
  const auto rep = restricted_spectrum_bruteforce(duplicate_columns(), nullptr, 2);
  const auto c = check_nonsmooth_condition(rep, 1, 0.1, 0.2);
  EXPECT_FALSE(c.condition);
  EXPECT_TRUE(std::isinf(c.bound2));
  EXPECT_TRUE(std::isinf(c.bound1));
}

TEST(Nonsmooth, BoundFormula) {
  RestrictedSpectrumReport rep;
  rep.rho_minus = 0.5;
  rep.sigma_s = 0.1;
  const auto c = check_nonsmooth_condition(rep, 16, 0.01, 0.3);
  EXPECT_NEAR(c.bound2, 3 * 0.01 * 0.3 * 4.0 / (2 * 0.4), 1e-12);
  EXPECT_NEAR(c.bound1, 6 * 0.01 * 0.3 * 16 / 0.4, 1e-12);
}

TEST(Nonsmooth, FullLevelSpectrumAtSixteen) {
  // s=1, level 16s = n = 16: one subset, exact over the unit ball
  const auto ds = synth_sparse_dual({.n = 16, .d = 256, .s_target = 2, .margin = 1.0, .noise = 4.0, .seed = 2});
  const auto red = make_operator(OperatorKind::gaussian, 256, 1024, 2).apply_dataset(ds);
  const auto rep = restricted_spectrum_bruteforce(ds, &red, 16);
  EXPECT_TRUE(rep.full_level);
  EXPECT_EQ(rep.subsets, 1u);
  const auto X = oracle::dense(ds);
  const Eigen::MatrixXd Xh = dense_matrix(red);
  const Eigen::MatrixXd G = X.transpose() * X / 16.0, U = G - Xh.transpose() * Xh / 16.0;
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues();
  const double sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(U).singularValues()(0);
  EXPECT_NEAR(rep.rho_minus, std::max(0.0, ev.minCoeff()), 1e-12);
  EXPECT_NEAR(rep.sigma_s, sigma, 1e-12);
  const auto c = check_nonsmooth_condition(rep, 1, 0.1, 0.4);
  const double gap = rep.rho_minus - rep.sigma_s;
  EXPECT_EQ(c.condition, gap > 0.0);
  if (c.condition) {
    EXPECT_NEAR(c.bound2, 3 * 0.1 * 0.4 * 1.0 / (2 * gap), 1e-12);
    EXPECT_NEAR(c.bound1, 6 * 0.1 * 0.4 * 1.0 / gap, 1e-12);
  }
}

TEST(PrimalBound, Formula) {
  EXPECT_DOUBLE_EQ(primal_error_bound(2.0, 0.5, 4, 2.0, 0.1, 9), 2.0 / 2.0 * 3 * 2 * 0.1 * 3);
}

TEST(MaxSingularValue, MatchesEigen) {
  const auto ds = oracle::random_dataset(7, 4, 3);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(oracle::dense(ds));
  EXPECT_NEAR(max_singular_value(ds), svd.singularValues()(0), 1e-12);
}

TEST(LogLogSlope, PowerLaw) {
  const std::vector<double> x{1, 2, 4, 8}, y{3, 3 / std::sqrt(2.0), 1.5, 3 / std::sqrt(8.0)};
  EXPECT_NEAR(loglog_slope(x, y), -0.5, 1e-12);
  EXPECT_THROW(loglog_slope(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST(Subsets, EnumerationCount) {
  for (std::size_t n = 0; n <= 8; ++n)
    for (std::size_t s = 1; s <= n; ++s) {
      std::size_t k = 0;
      for_each_subset(n, s, [&](std::span<const std::size_t>) { ++k; });
      EXPECT_EQ(static_cast<double>(k), binomial(n, s));
    }
}
