#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "dsrr/experiments.hpp"

using namespace dsrr;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("dsrr_test_" + name);
  std::ofstream(p) << text;
  return p;
}

struct ThreadsEnv {
  explicit ThreadsEnv(const char* v) { ::setenv("DSRR_THREADS", v, 1); }
  ~ThreadsEnv() { ::unsetenv("DSRR_THREADS"); }
};

}  // namespace

TEST(Sweep, IdentityOperatorRecoversOptimum) {
  SweepConfig cfg;
  cfg.data.path = temp_file("two.svm", "+1 1:1\n-1 1:-1\n").string();
  cfg.data.dim = 2;
  cfg.ops = {OperatorKind::identity};
  cfg.m = {2};
  cfg.tau = {0.0, 0.5};
  cfg.lambda = {0.5};
  cfg.losses = {LossKind::hinge};
  cfg.seeds = {0};
  cfg.gap_tol = cfg.original_gap_tol = 1e-12;
  const auto res = run_sweep(cfg);
  ASSERT_EQ(res.rows.size(), 2u);
  EXPECT_EQ(res.dataset, "dsrr_test_two.svm");
  const auto& r0 = res.rows[0];
  EXPECT_FALSE(r0.failed);
  EXPECT_EQ(r0.tau, 0.0);
  EXPECT_NEAR(r0.rel_dual_err, 0.0, 1e-9);
  EXPECT_NEAR(r0.rel_primal_err, 0.0, 1e-9);
  EXPECT_NEAR(r0.rel_naive_err, 0.0, 1e-9);
  EXPECT_TRUE(std::isnan(r0.test_error));  // no test file
  // margin 0.5 halves the dual solution
  EXPECT_NEAR(res.rows[1].rel_dual_err, 0.5, 1e-9);
  ASSERT_EQ(res.means.size(), 2u);
  EXPECT_EQ(res.means[0].trials, 1u);
}

TEST(Sweep, GridValidation) {
  SweepConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.tau = {0.0, 1.0};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.tau = {-0.1};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.tau = {0.1};
  cfg.lambda = {0.0};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.lambda = {0.1};
  cfg.m = {};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Sweep, SmallGridShapeAndDeterminism) {
  SweepConfig cfg;
  cfg.data = synthetic_source({.n = 60, .d = 32, .s_target = 6, .margin = 2.0, .noise = 1.0}, 20);
  cfg.ops = {OperatorKind::hashing, OperatorKind::gaussian};
  cfg.m = {8, 16};
  cfg.tau = {0.0, 0.5};
  cfg.seeds = {0, 1};
  const auto a = run_sweep(cfg);
  EXPECT_EQ(a.rows.size(), 2u * 2u * 2u * 2u);
  EXPECT_EQ(a.means.size(), 2u * 2u * 2u);
  for (const auto& r : a.rows) EXPECT_FALSE(std::isnan(r.test_error));
  EXPECT_EQ(a.table().str(), run_sweep(cfg).table().str());
  const auto curves = sweep_curves(a, "hash", 0.01, LossKind::squared_hinge);
  ASSERT_EQ(curves.size(), 2u);
  EXPECT_EQ(curves.at(8).size(), 2u);
  EXPECT_EQ(sweep_svgs(cfg, a).size(), 2u * 3u);
}

TEST(ParallelMap, KeepsOrderAcrossThreadCounts) {
  for (const char* threads : {"1", "4"}) {
    ThreadsEnv env(threads);
    const auto out = parallel_map(100, [](std::size_t j) { return j * j; });
    ASSERT_EQ(out.size(), 100u);
    for (std::size_t j = 0; j < 100; ++j) EXPECT_EQ(out[j], j * j);
  }
}

TEST(ParallelMap, RethrowsAndHandlesEmpty) {
  ThreadsEnv env("3");
  EXPECT_THROW(parallel_map(10,
                            [](std::size_t j) {
                              if (j == 7) throw std::runtime_error("boom");
                              return j;
                            }),
               std::runtime_error);
  EXPECT_TRUE(parallel_map(0, [](std::size_t j) { return j; }).empty());
}

TEST(WorkerCount, EnvCap) {
  {
    ThreadsEnv env("2");
    EXPECT_EQ(worker_count(10), 2u);
    EXPECT_EQ(worker_count(1), 1u);
  }
  ThreadsEnv env("junk");
  EXPECT_GE(worker_count(10), 1u);
}

TEST(Report, FmtRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) EXPECT_EQ(std::stod(fmt(v)), v);
  EXPECT_EQ(fmt(0.5), "0.5");
  const CsvTable t{"a,b", {"1,2", "3,4"}};
  EXPECT_EQ(t.str(), "a,b\n1,2\n3,4\n");
}

TEST(Suites, DefaultsAreConsistent) {
  const TheoremSetup t;
  EXPECT_EQ(t.seeds.size(), 20u);
  EXPECT_EQ(t.m, t.synth.d);
  const auto r = restricted_setup();
  EXPECT_EQ(r.synth.n, 16u);
  EXPECT_LE(binomial(r.synth.n, r.synth.n), 1e6);
  EXPECT_GT(near_sparse_setup().keep_fraction, 0.0);
}

TEST(Suites, Thm1SmallInstances) {
  TheoremSetup t;
  t.synth = {.n = 80, .d = 128, .s_target = 8, .margin = 4.0, .noise = 1.0};
  t.m = 128;
  t.seeds = seed_range(3);
  const auto res = suite_thm1(t);
  EXPECT_EQ(res.instances + res.skipped, 3u);
  EXPECT_EQ(res.table.rows.size(), 3u);
  EXPECT_TRUE(res.passed) << res.summary();
  EXPECT_NE(res.summary().find("thm1: PASS"), std::string::npos);
}

TEST(Suites, FinishNeedsInstances) {
  SuiteResult r;
  r.name = "x";
  r.finish();
  EXPECT_FALSE(r.passed);
  r.instances = 2;
  r.finish();
  EXPECT_TRUE(r.passed);
  r.violations = 1;
  r.finish();
  EXPECT_FALSE(r.passed);
}

TEST(Distsim, SmallRun) {
  DistsimConfig cfg;
  cfg.data = synthetic_source({.n = 200, .d = 50, .s_target = 20, .margin = 4.0, .noise = 1.0}, 200);
  cfg.k_nodes = 2;
  cfg.m = 16;
  cfg.seeds = {0, 1};
  const auto rep = run_distsim(cfg);
  ASSERT_EQ(rep.seeds.size(), 2u);
  for (const auto& s : rep.seeds) {
    EXPECT_TRUE(s.cold.converged);
    EXPECT_LE(s.tau, cfg.tau_cap);
    EXPECT_EQ(s.timing.size(), 2u + cfg.warm_rounds.size() + 1u);
    const auto methods = rep.methods(s, cfg.warm_rounds, cfg.k_nodes);
    ASSERT_EQ(methods.size(), 5u);
    EXPECT_EQ(methods[2].method, "DSRR-DisDCA-1");
    EXPECT_EQ(methods[2].comm_vectors, 1u + cfg.k_nodes);
    EXPECT_EQ(methods.back().method, "DisDCA");
  }
  EXPECT_EQ(distsim_rounds(rep).str(), distsim_rounds(run_distsim(cfg)).str());
}

TEST(Distsim, RequiresTestSet) {
  DistsimConfig cfg;
  cfg.data = synthetic_source({.n = 40, .d = 10, .s_target = 4, .margin = 4.0, .noise = 1.0}, 0);
  cfg.k_nodes = 2;
  cfg.seeds = {0};
  EXPECT_THROW(run_distsim(cfg), std::invalid_argument);
}

TEST(Data, LoadSynthKeepsSplitSizes) {
  const auto d = load_data(synthetic_source({.n = 100, .d = 20, .s_target = 10, .margin = 4.0, .noise = 1.0}, 50), 3);
  EXPECT_EQ(d.train.size(), 100u);
  EXPECT_EQ(d.test.size(), 50u);
  EXPECT_EQ(d.train.d, d.test.d);
  EXPECT_EQ(seed_range(3, 5), (std::vector<std::uint64_t>{5, 6, 7}));
}

TEST(Data, LoadFilesAlignsDimensions) {
  DataSource src;
  src.path = temp_file("tr.svm", "+1 1:3 2:4\n-1 1:-1\n").string();
  src.test_path = temp_file("te.svm", "+1 5:2\n").string();
  const auto d = load_data(src, 0);
  EXPECT_EQ(d.train.d, 5u);
  EXPECT_EQ(d.test.d, 5u);
  EXPECT_DOUBLE_EQ(d.train.examples[0].values[0], 0.6);
  EXPECT_DOUBLE_EQ(d.test.examples[0].values[0], 1.0);
}
