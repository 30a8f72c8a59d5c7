#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dsrr/dataset.hpp"
#include "dsrr/distsim.hpp"
#include "dsrr/dualsolve.hpp"
#include "dsrr/report.hpp"
#include "dsrr/sketch.hpp"
#include "dsrr/theory.hpp"

namespace dsrr {

// ---------------------------------------------------------------------------
// Data

struct DataSource {
  std::optional<std::string> path;       ///< svmlight training file; synthetic when empty
  std::optional<std::string> test_path;  ///< svmlight test file
  SynthSpec synth;
  std::size_t n_test = 0;  ///< synthetic only: extra examples drawn from the same clusters
  std::optional<std::size_t> dim;

  std::string name() const {
    if (path) return std::filesystem::path(*path).filename().string();
    char buf[128];
    std::snprintf(buf, sizeof buf, "synth-%zux%zu-s%zu-m%g-z%g", synth.n, synth.d, synth.s_target, synth.margin, synth.noise);
    return buf;
  }
};

inline DataSource synthetic_source(SynthSpec spec, std::size_t n_test = 0) {
  DataSource src;
  src.synth = spec;
  src.n_test = n_test;
  return src;
}

struct LoadedData {
  std::string name;
  LabeledDataset train, test;
};

/**
 * Files are l2-normalized per example. Synthetic data uses `seed` as the
 * generator seed; the test examples are the trailing n_test draws, and the
 * slab size is scaled so the training part keeps about s_target of them.
 */
inline LoadedData load_data(const DataSource& src, std::uint64_t seed) {
  LoadedData out;
  out.name = src.name();
  if (src.path) {
    auto train = load_svmlight(*src.path, src.dim);
    if (src.test_path) {
      auto test = load_svmlight(*src.test_path, src.dim);
      const std::size_t d = std::max(train.d, test.d);
      train.d = test.d = d;
      for (auto& x : train.examples) x.dim = d;
      for (auto& x : test.examples) x.dim = d;
      out.test = normalize_l2(std::move(test));
    }
    out.train = normalize_l2(std::move(train));
    return out;
  }
  SynthSpec spec = src.synth;
  spec.seed = seed;
  if (src.n_test == 0) {
    out.train = synth_sparse_dual(spec);
    return out;
  }
  const std::size_t total = spec.n + src.n_test;
  spec.s_target = std::max<std::size_t>(1, (spec.s_target * total + spec.n / 2) / spec.n);
  spec.n = total;
  const auto all = synth_sparse_dual(spec);
  std::vector<std::size_t> tr(src.synth.n), te(src.n_test);
  std::iota(tr.begin(), tr.end(), std::size_t{0});
  std::iota(te.begin(), te.end(), src.synth.n);
  out.train = all.subset(tr);
  out.test = all.subset(te);
  return out;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t count, std::uint64_t first = 0) {
  std::vector<std::uint64_t> s(count);
  std::iota(s.begin(), s.end(), first);
  return s;
}

// ---------------------------------------------------------------------------
// Theorem suites

struct TheoremSetup {
  SynthSpec synth{.n = 200, .d = 512, .s_target = 20, .margin = 4.0, .noise = 1.0};
  OperatorKind op = OperatorKind::hashing;
  std::size_t m = 512;
  double lambda = 0.01;
  std::vector<std::uint64_t> seeds = seed_range(20);
  double tau_factor = 1.05;    ///< τ = tau_factor · tau_min
  std::optional<double> tau;   ///< fixed τ instead of the factor
  double gap_tol = 1e-10;
  std::size_t max_epochs = 20000;
  double support_rel_tol = 1e-8;
  double keep_fraction = 0.5;  ///< near-sparse suite: s = ceil(keep_fraction · |supp α*|)
};

/// A few large dual entries over a long tail of small ones.
inline TheoremSetup near_sparse_setup() {
  TheoremSetup t;
  t.synth = {.n = 200, .d = 512, .s_target = 10, .margin = 2.5, .noise = 1.0};
  t.keep_fraction = 0.8;
  return t;
}

/// n = 16 so that the level min(16s, n) is enumerable; noise-dominated so X is well conditioned.
inline TheoremSetup restricted_setup() {
  TheoremSetup t;
  t.synth = {.n = 16, .d = 256, .s_target = 2, .margin = 1.0, .noise = 4.0};
  t.op = OperatorKind::gaussian;
  t.m = 1024;
  t.lambda = 0.1;
  return t;
}

struct SuiteResult {
  std::string name;
  CsvTable table;
  std::size_t instances = 0;   ///< rows whose inequalities were evaluated
  std::size_t skipped = 0;     ///< rows outside the suite's hypotheses (reason in the status column)
  std::size_t violations = 0;
  std::vector<std::string> failures;
  std::vector<std::string> notes;
  bool passed = false;

  std::string summary() const {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s: %s (instances=%zu skipped=%zu violations=%zu)", name.c_str(), passed ? "PASS" : "FAIL",
                  instances, skipped, violations);
    return buf;
  }

  void finish() { passed = violations == 0 && instances > 0; }
};

namespace detail {

struct Instance {
  LabeledDataset ds;
  SolveResult star;
  SupportSet S;
  std::vector<double> alpha_ref;
  std::optional<ReductionOperator> op;
  ReducedDataset reduced;
  std::vector<double> delta;
  double tau_min = 0.0;
  std::string skip;  ///< nonempty: instance unusable
};

inline SolverConfig solver_config(const TheoremSetup& t, LossKind loss, std::uint64_t seed, double tau = 0.0) {
  SolverConfig c;
  c.lambda = t.lambda;
  c.tau = tau;
  c.loss = Loss{loss};
  c.max_epochs = t.max_epochs;
  c.gap_tol = t.gap_tol;
  c.seed = seed;
  return c;
}

inline Instance build_instance(const TheoremSetup& t, LossKind loss, std::uint64_t seed) {
  Instance in;
  SynthSpec spec = t.synth;
  spec.seed = seed;
  in.ds = synth_sparse_dual(spec);
  in.star = solve_original(in.ds, solver_config(t, loss, seed));
  if (!in.star.converged) {
    in.skip = "original-not-converged";
    return in;
  }
  in.S = support_set(in.star.alpha, t.support_rel_tol);
  in.alpha_ref = restrict_to(in.star.alpha, in.S);
  in.op.emplace(make_operator(t.op, spec.d, t.m, seed));
  in.reduced = in.op->apply_dataset(in.ds);
  in.delta = delta_vector(in.ds, in.reduced, *in.op, in.star.primal);
  in.tau_min = tau_min(in.delta);
  return in;
}

inline double pick_tau(const TheoremSetup& t, double tau_min_value) { return t.tau ? *t.tau : t.tau_factor * tau_min_value; }

inline std::string row_prefix(std::string_view suite, std::uint64_t seed, const TheoremSetup& t, LossKind loss,
                              std::string_view status) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.*s,%llu,%.*s,%zu,%.17g,%.*s,%.*s", static_cast<int>(suite.size()), suite.data(),
                static_cast<unsigned long long>(seed), static_cast<int>(kind_name(t.op).size()), kind_name(t.op).data(), t.m,
                t.lambda, static_cast<int>(loss_name(loss).size()), loss_name(loss).data(), static_cast<int>(status.size()),
                status.data());
  return buf;
}

inline constexpr std::string_view kRowKeys = "suite,seed,op,m,lambda,loss,status";

inline std::string empty_report_fields() {
  std::string out;
  const auto cols = std::count(TheoremReport::csv_header.begin(), TheoremReport::csv_header.end(), ',');
  for (long k = 0; k < cols; ++k) out += ',';
  return out;
}

inline void record(SuiteResult& res, const std::string& row, bool evaluated, bool ok) {
  res.table.rows.push_back(row);
  if (!evaluated) {
    ++res.skipped;
    return;
  }
  ++res.instances;
  if (!ok) {
    ++res.violations;
    res.failures.push_back(row);
  }
}

/// Cone/bound suite shared by the exactly sparse smooth and non-smooth cases.
inline SuiteResult cone_suite(std::string name, const TheoremSetup& t, LossKind loss) {
  SuiteResult res;
  res.name = std::move(name);
  res.table.header = std::string(kRowKeys) + ',' + std::string(TheoremReport::csv_header);
  const auto rows = parallel_map(t.seeds.size(), [&](std::size_t j) -> std::pair<std::string, int> {
    const auto seed = t.seeds[j];
    const auto in = build_instance(t, loss, seed);
    if (!in.skip.empty()) return {row_prefix(res.name, seed, t, loss, "skip:" + in.skip) + empty_report_fields(), -1};
    const double tau = pick_tau(t, in.tau_min);
    if (!(tau < 1.0)) return {row_prefix(res.name, seed, t, loss, "skip:tau>=1") + empty_report_fields(), -1};
    const auto tilde = solve_reduced_sparse(in.reduced, solver_config(t, loss, seed, tau));
    if (!tilde.converged) return {row_prefix(res.name, seed, t, loss, "skip:reduced-not-converged") + empty_report_fields(), -1};
    auto rep = cone_and_bounds(tilde.alpha, in.alpha_ref, in.S, tau, Loss{loss}.smoothness(), in.tau_min);
    rep.delta_inf = norm_inf(in.delta);
    const bool ok = rep.all_pass();
    return {row_prefix(res.name, seed, t, loss, ok ? "ok" : "violation") + ',' + rep.csv_fields(), ok ? 1 : 0};
  });
  for (const auto& [row, flag] : rows) record(res, row, flag >= 0, flag == 1);
  res.finish();
  return res;
}

}  // namespace detail

/// Exactly sparse α*, squared hinge: cone condition and the four recovery bounds.
inline SuiteResult suite_thm1(const TheoremSetup& t) { return detail::cone_suite("thm1", t, LossKind::squared_hinge); }

/// Hinge loss: cone condition only (the bounds need a finite smoothness constant).
inline SuiteResult suite_thm2_cone(const TheoremSetup& t) { return detail::cone_suite("thm2", t, LossKind::hinge); }

/**
 * Hinge loss on instances small enough to enumerate supports. The
 * restricted spectrum is taken at level min(16s, n); when 16s ≥ n this is
 * the full unit ball and the quantities are exact. Bounds are checked only
 * where σ < ρ⁻ holds; other rows are reported as skipped.
 */
inline SuiteResult suite_thm2_restricted(const TheoremSetup& t) {
  SuiteResult res;
  res.name = "thm2-restricted";
  res.table.header = std::string(detail::kRowKeys) +
                     ",s,level,tau,tau_min,rho_minus,sigma,cone_ratio,err2,bound2,err1,bound1,tau_ok,cone_ok,err2_ok,err1_ok";
  const auto rows = parallel_map(t.seeds.size(), [&](std::size_t j) -> std::pair<std::string, int> {
    const auto seed = t.seeds[j];
    const LossKind loss = LossKind::hinge;
    const auto in = detail::build_instance(t, loss, seed);
    if (!in.skip.empty()) return {detail::row_prefix(res.name, seed, t, loss, "skip:" + in.skip), -1};
    const double tau = detail::pick_tau(t, in.tau_min);
    if (!(tau < 1.0)) return {detail::row_prefix(res.name, seed, t, loss, "skip:tau>=1"), -1};
    const std::size_t s = in.S.size(), n = in.ds.size();
    if (s == 0) return {detail::row_prefix(res.name, seed, t, loss, "skip:empty-support"), -1};
    const std::size_t level = std::min(16 * s, n);
    const auto spec = restricted_spectrum_bruteforce(in.ds, &in.reduced, level);
    const auto tilde = solve_reduced_sparse(in.reduced, detail::solver_config(t, loss, seed, tau));
    const auto rep = cone_and_bounds(tilde.alpha, in.alpha_ref, in.S, tau, kInf, in.tau_min);
    const auto chk = check_nonsmooth_condition(spec, s, t.lambda, tau);
    char buf[512];
    auto flag = [](bool b) { return b ? "pass" : "fail"; };
    const bool e2 = rep.err2 <= chk.bound2 * kBoundSlack, e1 = rep.err1 <= chk.bound1 * kBoundSlack;
    const bool cone_ok = rep.cone == Check::pass, tau_ok = rep.tau_ok == Check::pass;
    std::snprintf(buf, sizeof buf, ",%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%s,%s,%s", s, level, tau,
                  in.tau_min, spec.rho_minus, spec.sigma_s, rep.cone_ratio, rep.err2, chk.bound2, rep.err1, chk.bound1,
                  flag(tau_ok), flag(cone_ok), chk.condition ? flag(e2) : "n/a", chk.condition ? flag(e1) : "n/a");
    if (!chk.condition) return {detail::row_prefix(res.name, seed, t, loss, "skip:sigma>=rho_minus") + buf, -1};
    const bool ok = tau_ok && cone_ok && e2 && e1;
    return {detail::row_prefix(res.name, seed, t, loss, ok ? "ok" : "violation") + buf, ok ? 1 : 0};
  });
  for (const auto& [row, flag] : rows) detail::record(res, row, flag >= 0, flag == 1);
  res.finish();
  return res;
}

/**
 * Nearly sparse α*: α^s keeps the top s = ceil(keep_fraction·|supp α*|)
 * entries and τ = factor·(2‖Δ‖∞ + 2ξ). ‖Δ‖∞ is the larger of the values at
 * α* and at α^s, so both forms of the threshold are met.
 */
inline SuiteResult suite_thm4(const TheoremSetup& t) {
  SuiteResult res;
  res.name = "thm4";
  res.table.header = std::string(detail::kRowKeys) + ',' + std::string(TheoremReport::csv_header);
  const auto rows = parallel_map(t.seeds.size(), [&](std::size_t j) -> std::pair<std::string, int> {
    const auto seed = t.seeds[j];
    const LossKind loss = LossKind::squared_hinge;
    const auto in = detail::build_instance(t, loss, seed);
    auto skip = [&](std::string why) {
      return std::pair<std::string, int>{detail::row_prefix(res.name, seed, t, loss, "skip:" + why) + detail::empty_report_fields(), -1};
    };
    if (!in.skip.empty()) return skip(in.skip);
    const auto s = static_cast<std::size_t>(std::ceil(t.keep_fraction * static_cast<double>(in.S.size())));
    if (s == 0) return skip("empty-support");
    const auto ns = near_sparsity_xi(in.ds, in.star.alpha, s, t.lambda);
    const auto w_s = recover_primal(in.ds, ns.alpha_s, t.lambda);
    const auto delta_s = delta_vector(in.ds, in.reduced, *in.op, w_s);
    const double dinf = std::max(norm_inf(in.delta), norm_inf(delta_s));
    const double tmin = 2.0 * dinf + 2.0 * ns.xi;
    const double tau = detail::pick_tau(t, tmin);
    if (!(tau < 1.0)) return skip("tau>=1");
    SupportSet S;
    S.member.assign(ns.alpha_s.size(), 0);
    for (std::size_t i = 0; i < ns.alpha_s.size(); ++i)
      if (ns.alpha_s[i] != 0.0) {
        S.indices.push_back(i);
        S.member[i] = 1;
      }
    const auto tilde = solve_reduced_sparse(in.reduced, detail::solver_config(t, loss, seed, tau));
    if (!tilde.converged) return skip("reduced-not-converged");
    auto rep = cone_and_bounds(tilde.alpha, ns.alpha_s, S, tau, Loss{loss}.smoothness(), tmin);
    rep.delta_inf = dinf;
    rep.xi = ns.xi;
    const bool ok = rep.all_pass();
    return {detail::row_prefix(res.name, seed, t, loss, ok ? "ok" : "violation") + ',' + rep.csv_fields(), ok ? 1 : 0};
  });
  for (const auto& [row, flag] : rows) detail::record(res, row, flag >= 0, flag == 1);
  res.finish();
  return res;
}

/// ‖w̃ − w*‖₂ ≤ (σ₁/(λn))·3Lτ√s on the exactly sparse squared-hinge instances.
inline SuiteResult suite_thm5(const TheoremSetup& t) {
  SuiteResult res;
  res.name = "thm5";
  res.table.header = std::string(detail::kRowKeys) + ",s,tau,tau_min,sigma1,w_err,w_bound,tau_ok,w_ok";
  const auto rows = parallel_map(t.seeds.size(), [&](std::size_t j) -> std::pair<std::string, int> {
    const auto seed = t.seeds[j];
    const LossKind loss = LossKind::squared_hinge;
    const auto in = detail::build_instance(t, loss, seed);
    if (!in.skip.empty()) return {detail::row_prefix(res.name, seed, t, loss, "skip:" + in.skip) + ",,,,,,,,", -1};
    const double tau = detail::pick_tau(t, in.tau_min);
    if (!(tau < 1.0)) return {detail::row_prefix(res.name, seed, t, loss, "skip:tau>=1") + ",,,,,,,,", -1};
    const auto tilde = solve_reduced_sparse(in.reduced, detail::solver_config(t, loss, seed, tau));
    const auto w_tilde = recover_primal(in.ds, tilde.alpha, t.lambda);
    const double sigma1 = max_singular_value(in.ds);
    const double err = dist2(w_tilde, in.star.primal);
    const double bound = primal_error_bound(sigma1, t.lambda, in.ds.size(), 2.0, tau, in.S.size());
    const bool tau_ok = tau >= in.tau_min, w_ok = err <= bound * kBoundSlack;
    char buf[256];
    std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%s", in.S.size(), tau, in.tau_min, sigma1, err, bound,
                  tau_ok ? "pass" : "fail", w_ok ? "pass" : "fail");
    const bool ok = tau_ok && w_ok;
    return {detail::row_prefix(res.name, seed, t, loss, ok ? "ok" : "violation") + buf, ok ? 1 : 0};
  });
  for (const auto& [row, flag] : rows) detail::record(res, row, flag >= 0, flag == 1);
  res.finish();
  return res;
}

/// ‖Δ‖∞ against m: per-kind medians over operator seeds and their log-log slope.
struct DeltaScalingSetup {
  SynthSpec synth{.n = 200, .d = 512, .s_target = 20, .margin = 4.0, .noise = 1.0};
  double lambda = 0.01;
  std::vector<OperatorKind> kinds{OperatorKind::gaussian, OperatorKind::hashing, OperatorKind::hadamard};
  std::vector<std::size_t> m{64, 128, 256, 512};
  std::vector<std::uint64_t> seeds = seed_range(10);
  double slope_lo = -0.8, slope_hi = -0.2;
  std::size_t spiky_n = 200, spiky_nnz = 4;  ///< sampling-vs-projection comparison data (same d)
};

namespace detail {

/// median over seeds of ‖Δ‖∞ for each m; one solve of the original problem.
inline std::vector<double> delta_medians(const LabeledDataset& ds, double lambda, OperatorKind kind,
                                         std::span<const std::size_t> ms, std::span<const std::uint64_t> seeds,
                                         CsvTable& table, std::string_view dataset) {
  SolverConfig c;
  c.lambda = lambda;
  c.loss = Loss{LossKind::squared_hinge};
  c.gap_tol = 1e-10;
  c.max_epochs = 20000;
  const auto star = solve_original(ds, c);
  std::vector<std::pair<std::size_t, std::uint64_t>> jobs;
  for (std::size_t m : ms)
    for (auto s : seeds) jobs.emplace_back(m, s);
  const auto vals = parallel_map(jobs.size(), [&](std::size_t j) {
    const auto op = make_operator(kind, ds.d, jobs[j].first, jobs[j].second);
    return norm_inf(delta_vector(ds, op, star.primal));
  });
  std::vector<double> med;
  for (std::size_t a = 0; a < ms.size(); ++a) {
    std::vector<double> v(vals.begin() + static_cast<std::ptrdiff_t>(a * seeds.size()),
                          vals.begin() + static_cast<std::ptrdiff_t>((a + 1) * seeds.size()));
    for (std::size_t b = 0; b < seeds.size(); ++b)
      table.rows.push_back(std::string(dataset) + ',' + std::string(kind_name(kind)) + ',' + std::to_string(ms[a]) + ',' +
                           std::to_string(seeds[b]) + ',' + fmt(v[b]));
    med.push_back(median(v));
  }
  return med;
}

}  // namespace detail

inline SuiteResult suite_thm6(const DeltaScalingSetup& cfg) {
  SuiteResult res;
  res.name = "thm6";
  res.table.header = "dataset,op,m,seed,delta_inf";
  const auto ds = synth_sparse_dual(cfg.synth);
  std::vector<double> mx(cfg.m.begin(), cfg.m.end());
  std::vector<double> gauss_med;
  for (auto kind : cfg.kinds) {
    const auto med = detail::delta_medians(ds, cfg.lambda, kind, cfg.m, cfg.seeds, res.table, "synth");
    if (kind == OperatorKind::gaussian) gauss_med = med;
    const double slope = loglog_slope(mx, med);
    const bool ok = slope >= cfg.slope_lo && slope <= cfg.slope_hi;
    ++res.instances;
    char buf[160];
    std::snprintf(buf, sizeof buf, "slope %s = %.4f (target [%g, %g]) %s", std::string(kind_name(kind)).c_str(), slope,
                  cfg.slope_lo, cfg.slope_hi, ok ? "pass" : "fail");
    res.notes.push_back(buf);
    if (!ok) {
      ++res.violations;
      res.failures.push_back(buf);
    }
  }
  // Sampling against Gaussian projection on spiky data: one comparison per m.
  const auto spiky = synth_spiky(cfg.spiky_n, cfg.synth.d, cfg.spiky_nnz, cfg.synth.seed);
  const auto g = detail::delta_medians(spiky, cfg.lambda, OperatorKind::gaussian, cfg.m, cfg.seeds, res.table, "spiky");
  const auto s = detail::delta_medians(spiky, cfg.lambda, OperatorKind::sampling, cfg.m, cfg.seeds, res.table, "spiky");
  for (std::size_t a = 0; a < cfg.m.size(); ++a) {
    const bool ok = s[a] > g[a];
    ++res.instances;
    char buf[160];
    std::snprintf(buf, sizeof buf, "spiky m=%zu: median delta_inf sample=%.6g gauss=%.6g %s", cfg.m[a], s[a], g[a],
                  ok ? "pass" : "fail");
    res.notes.push_back(buf);
    if (!ok) {
      ++res.violations;
      res.failures.push_back(buf);
    }
  }
  res.finish();
  return res;
}

/// Brute-force σ_s over Gaussian projections of a tiny synthetic set.
struct SigmaSetup {
  SynthSpec synth{.n = 10, .d = 8, .s_target = 2, .margin = 4.0, .noise = 1.0};
  std::size_t s = 2;
  OperatorKind op = OperatorKind::gaussian;
  std::vector<std::size_t> m{4, 8, 16, 32};
  std::vector<std::uint64_t> seeds = seed_range(20);
  double slope_lo = -0.8, slope_hi = -0.2;
};

struct SigmaGrid {
  CsvTable table;
  std::vector<double> medians;  ///< per m
  double slope = 0.0;
};

/// Data and operator both follow the seed.
inline SigmaGrid sigma_grid(const SigmaSetup& cfg) {
  SigmaGrid g;
  g.table.header = "op,m,seed,s," + std::string(RestrictedSpectrumReport::csv_header).substr(2);
  std::vector<std::pair<std::size_t, std::uint64_t>> jobs;
  for (std::size_t m : cfg.m)
    for (auto s : cfg.seeds) jobs.emplace_back(m, s);
  const auto reps = parallel_map(jobs.size(), [&](std::size_t j) {
    SynthSpec spec = cfg.synth;
    spec.seed = jobs[j].second;
    const auto ds = synth_sparse_dual(spec);
    const auto op = make_operator(cfg.op, spec.d, jobs[j].first, jobs[j].second);
    const auto red = op.apply_dataset(ds);
    return restricted_spectrum_bruteforce(ds, &red, cfg.s);
  });
  for (std::size_t a = 0; a < cfg.m.size(); ++a) {
    std::vector<double> v;
    for (std::size_t b = 0; b < cfg.seeds.size(); ++b) {
      const auto& r = reps[a * cfg.seeds.size() + b];
      v.push_back(r.sigma_s);
      g.table.rows.push_back(std::string(kind_name(cfg.op)) + ',' + std::to_string(cfg.m[a]) + ',' + std::to_string(cfg.seeds[b]) +
                             ',' + r.csv_fields());
    }
    g.medians.push_back(median(v));
  }
  std::vector<double> mx(cfg.m.begin(), cfg.m.end());
  g.slope = loglog_slope(mx, g.medians);
  return g;
}

/// Median σ_s strictly decreases at every doubling of m in the grid.
inline SuiteResult suite_thm7(const SigmaSetup& cfg) {
  SuiteResult res;
  res.name = "thm7";
  auto grid = sigma_grid(cfg);
  res.table = std::move(grid.table);
  for (std::size_t a = 0; a + 1 < cfg.m.size(); ++a) {
    ++res.instances;
    const bool ok = grid.medians[a + 1] < grid.medians[a];
    char buf[160];
    std::snprintf(buf, sizeof buf, "median sigma_%zu m=%zu: %.6g -> m=%zu: %.6g %s", cfg.s, cfg.m[a], grid.medians[a], cfg.m[a + 1],
                  grid.medians[a + 1], ok ? "pass" : "fail");
    res.notes.push_back(buf);
    if (!ok) {
      ++res.violations;
      res.failures.push_back(buf);
    }
  }
  res.finish();
  return res;
}

inline SuiteResult suite_thm7_scaling(const SigmaSetup& cfg) {
  SuiteResult res;
  res.name = "thm7-scaling";
  auto grid = sigma_grid(cfg);
  res.table = std::move(grid.table);
  res.instances = 1;
  const bool ok = grid.slope >= cfg.slope_lo && grid.slope <= cfg.slope_hi;
  char buf[160];
  std::snprintf(buf, sizeof buf, "slope log sigma_%zu vs log m = %.4f (target [%g, %g]) %s", cfg.s, grid.slope, cfg.slope_lo,
                cfg.slope_hi, ok ? "pass" : "fail");
  res.notes.push_back(buf);
  if (!ok) {
    res.violations = 1;
    res.failures.push_back(buf);
  }
  res.finish();
  return res;
}

// ---------------------------------------------------------------------------
// JL grid

struct JLSetup {
  std::vector<OperatorKind> kinds{OperatorKind::gaussian, OperatorKind::hashing};
  std::size_t d = 512;
  std::vector<std::size_t> m{64, 128, 256, 512};
  std::size_t probes = 200;
  std::uint64_t probe_seed = 0;
  std::vector<std::uint64_t> seeds{0};
};

struct JLGrid {
  CsvTable table;
  std::vector<JLDiagnostic> diags;                 ///< kinds × m × seeds, in that order
  std::vector<std::vector<double>> median_by_kind;  ///< per kind, per m: mean over seeds of q50
  std::vector<double> slopes;
};

inline JLGrid jl_grid(const JLSetup& cfg) {
  JLGrid g;
  g.table.header = std::string(JLDiagnostic::csv_header);
  const auto probes = unit_probes(cfg.d, cfg.probes, cfg.probe_seed);
  std::vector<std::tuple<OperatorKind, std::size_t, std::uint64_t>> jobs;
  for (auto k : cfg.kinds)
    for (auto m : cfg.m)
      for (auto s : cfg.seeds) jobs.emplace_back(k, m, s);
  g.diags = parallel_map(jobs.size(), [&](std::size_t j) {
    const auto [k, m, s] = jobs[j];
    return jl_distortion(make_operator(k, cfg.d, m, s), probes);
  });
  for (const auto& dg : g.diags) {
    auto rows = dg.csv_rows();
    rows.pop_back();
    std::size_t pos = 0, nl;
    while ((nl = rows.find('\n', pos)) != std::string::npos) {
      g.table.rows.push_back(rows.substr(pos, nl - pos));
      pos = nl + 1;
    }
    g.table.rows.push_back(rows.substr(pos));
  }
  std::vector<double> mx(cfg.m.begin(), cfg.m.end());
  std::size_t idx = 0;
  for (std::size_t a = 0; a < cfg.kinds.size(); ++a) {
    std::vector<double> med;
    for (std::size_t b = 0; b < cfg.m.size(); ++b) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cfg.seeds.size(); ++c) acc += g.diags[idx++].q50;
      med.push_back(acc / static_cast<double>(cfg.seeds.size()));
    }
    g.slopes.push_back(cfg.m.size() >= 2 ? loglog_slope(mx, med) : 0.0);
    g.median_by_kind.push_back(std::move(med));
  }
  return g;
}

inline std::string jl_svg(const JLSetup& cfg, const JLGrid& g) {
  std::vector<Series> series;
  for (std::size_t a = 0; a < cfg.kinds.size(); ++a)
    series.push_back({std::string(kind_name(cfg.kinds[a])), {cfg.m.begin(), cfg.m.end()}, g.median_by_kind[a]});
  return svg_line_plot({"median JL distortion", "m", "median |‖Ax‖²−‖x‖²|/‖x‖²", true, true}, series);
}

// ---------------------------------------------------------------------------
// τ × m × λ sweep

struct SweepConfig {
  // Overlapping classes: a large share of the examples end up as support vectors.
  DataSource data = synthetic_source({.n = 1000, .d = 512, .s_target = 10, .margin = 1.0, .noise = 1.0}, 200);
  std::vector<OperatorKind> ops{OperatorKind::hashing};
  std::vector<std::size_t> m{32, 64, 128, 256};
  std::vector<double> tau{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> lambda{0.01};
  std::vector<LossKind> losses{LossKind::squared_hinge};
  std::vector<std::uint64_t> seeds = seed_range(5);
  double gap_tol = 1e-4;            ///< reduced solves
  double original_gap_tol = 1e-9;  ///< reference solve
  std::size_t max_epochs = 5000;
  double support_rel_tol = 1e-8;

  void validate() const {
    if (ops.empty() || m.empty() || tau.empty() || lambda.empty() || losses.empty() || seeds.empty())
      throw std::invalid_argument("sweep: every grid must be nonempty");
    for (double t : tau)
      if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("sweep: tau values must lie in [0, 1)");
    for (double l : lambda)
      if (!(l > 0.0)) throw std::invalid_argument("sweep: lambda values must be > 0");
    for (std::size_t v : m)
      if (v == 0) throw std::invalid_argument("sweep: m values must be >= 1");
  }
};

struct SweepRow {
  std::string op;
  std::size_t m = 0;
  double tau = 0.0, lambda = 0.0;
  LossKind loss = LossKind::squared_hinge;
  std::uint64_t seed = 0;
  std::size_t trials = 1;  ///< seeds averaged into this row (1 for per-seed rows)
  double cone_ratio = 0.0, rel_dual_err = 0.0, rel_primal_err = 0.0, rel_naive_err = 0.0;
  double delta_inf = 0.0, tau_min = 0.0, s = 0.0, nnz_tilde = 0.0;
  double test_error = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;

  static constexpr std::string_view csv_header =
      "op,m,tau,lambda,loss,seed,cone_ratio,rel_dual_err,rel_primal_err,rel_naive_err,delta_inf,tau_min,s,nnz_tilde,test_error,failed";
  static constexpr std::string_view mean_csv_header =
      "op,m,tau,lambda,loss,trials,cone_ratio,rel_dual_err,rel_primal_err,rel_naive_err,delta_inf,tau_min,s,nnz_tilde,test_error,failed";

  auto key() const { return std::make_tuple(op, m, lambda, loss_name(loss), tau); }

  std::string csv(bool mean_row) const {
    std::string out = op + ',' + std::to_string(m) + ',' + fmt(tau) + ',' + fmt(lambda) + ',' + std::string(loss_name(loss)) + ',' +
                      std::to_string(mean_row ? trials : seed);
    for (double v : {cone_ratio, rel_dual_err, rel_primal_err, rel_naive_err, delta_inf, tau_min, s, nnz_tilde, test_error})
      out += ',' + fmt(v);
    out += failed ? ",1" : ",0";
    return out;
  }
};

struct SweepResult {
  std::string dataset;
  std::vector<SweepRow> rows;   ///< sorted by (op, m, λ, loss, τ, seed)
  std::vector<SweepRow> means;  ///< sorted by (op, m, λ, loss, τ)

  CsvTable table() const {
    CsvTable t{std::string(SweepRow::csv_header), {}};
    for (const auto& r : rows) t.rows.push_back(r.csv(false));
    return t;
  }
  CsvTable mean_table() const {
    CsvTable t{std::string(SweepRow::mean_csv_header), {}};
    for (const auto& r : means) t.rows.push_back(r.csv(true));
    return t;
  }
};

/**
 * One reference solve per (dataset seed, λ, loss), then one job per
 * (operator, m, λ, loss, seed) covering the τ grid. A cell whose reduced
 * solve throws or misses its gap is kept with failed = 1.
 */
inline SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepResult out;
  out.dataset = cfg.data.name();

  struct Ref {
    LoadedData data;
    SolveResult star;
    SupportSet S;
    std::vector<double> alpha_ref;
    double norm_alpha = 0.0, norm_w = 0.0;
  };
  std::vector<std::tuple<std::uint64_t, double, LossKind>> ref_jobs;
  for (auto seed : cfg.seeds)
    for (double lam : cfg.lambda)
      for (auto loss : cfg.losses) ref_jobs.emplace_back(seed, lam, loss);
  const auto refs = parallel_map(ref_jobs.size(), [&](std::size_t j) {
    const auto [seed, lam, loss] = ref_jobs[j];
    Ref r;
    r.data = load_data(cfg.data, seed);
    SolverConfig c;
    c.lambda = lam;
    c.loss = Loss{loss};
    c.gap_tol = cfg.original_gap_tol;
    c.max_epochs = cfg.max_epochs;
    c.seed = seed;
    r.star = solve_original(r.data.train, c);
    r.S = support_set(r.star.alpha, cfg.support_rel_tol);
    r.alpha_ref = restrict_to(r.star.alpha, r.S);
    r.norm_alpha = norm2(r.star.alpha);
    r.norm_w = norm2(r.star.primal);
    return r;
  });

  std::vector<std::tuple<OperatorKind, std::size_t, std::size_t>> jobs;  // op, m, ref index
  for (auto op : cfg.ops)
    for (auto m : cfg.m)
      for (std::size_t r = 0; r < refs.size(); ++r) jobs.emplace_back(op, m, r);
  const auto blocks = parallel_map(jobs.size(), [&](std::size_t j) {
    const auto [kind, m, ri] = jobs[j];
    const auto& ref = refs[ri];
    const auto [seed, lam, loss] = ref_jobs[ri];
    std::vector<SweepRow> rows;
    auto base = [&, seed = seed, lam = lam, loss = loss] {
      SweepRow r;
      r.op = std::string(kind_name(kind));
      r.m = m;
      r.lambda = lam;
      r.loss = loss;
      r.seed = seed;
      r.s = static_cast<double>(ref.S.size());
      return r;
    };
    try {
      const auto op = make_operator(kind, ref.data.train.d, m, seed);
      const auto reduced = op.apply_dataset(ref.data.train);
      const auto delta = delta_vector(ref.data.train, reduced, op, ref.star.primal);
      const double tmin = tau_min(delta);
      std::optional<ReducedDataset> reduced_test;
      for (double tau : cfg.tau) {
        SweepRow row = base();
        row.tau = tau;
        row.delta_inf = norm_inf(delta);
        row.tau_min = tmin;
        SolverConfig c;
        c.lambda = lam;
        c.tau = tau;
        c.loss = Loss{loss};
        c.gap_tol = cfg.gap_tol;
        c.max_epochs = cfg.max_epochs;
        c.seed = seed;
        const auto tilde = solve_reduced_sparse(reduced, c);
        const auto rep = cone_and_bounds(tilde.alpha, ref.alpha_ref, ref.S, std::max(tau, 1e-300), kInf, tmin);
        const auto w_tilde = recover_primal(ref.data.train, tilde.alpha, lam);
        const auto naive = naive_recover(op, tilde.primal);
        row.cone_ratio = rep.cone_ratio;
        row.rel_dual_err = ref.norm_alpha > 0 ? dist2(tilde.alpha, ref.star.alpha) / ref.norm_alpha : kInf;
        row.rel_primal_err = ref.norm_w > 0 ? dist2(w_tilde, ref.star.primal) / ref.norm_w : kInf;
        row.rel_naive_err = ref.norm_w > 0 ? dist2(naive, ref.star.primal) / ref.norm_w : kInf;
        row.nnz_tilde = static_cast<double>(tilde.nnz_alpha());
        if (ref.data.test.size() > 0) row.test_error = predict_error(w_tilde, ref.data.test);
        if (!tilde.converged) {
          row.failed = true;
          row.error = "reduced solve did not reach gap_tol";
        }
        rows.push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      for (double tau : cfg.tau) {
        SweepRow row = base();
        row.tau = tau;
        row.failed = true;
        row.error = e.what();
        for (double* v : {&row.cone_ratio, &row.rel_dual_err, &row.rel_primal_err, &row.rel_naive_err, &row.delta_inf,
                          &row.tau_min, &row.nnz_tilde})
          *v = std::numeric_limits<double>::quiet_NaN();
        rows.push_back(std::move(row));
      }
    }
    return rows;
  });
  for (const auto& b : blocks) out.rows.insert(out.rows.end(), b.begin(), b.end());
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.op, a.m, a.lambda, a.loss, a.tau, a.seed) < std::tie(b.op, b.m, b.lambda, b.loss, b.tau, b.seed);
  });

  // Means over seeds; a cell is failed if any of its trials failed.
  for (std::size_t i = 0; i < out.rows.size();) {
    std::size_t j = i;
    SweepRow mean = out.rows[i];
    mean.trials = 0;
    mean.failed = false;
    for (double* v : {&mean.cone_ratio, &mean.rel_dual_err, &mean.rel_primal_err, &mean.rel_naive_err, &mean.delta_inf,
                      &mean.tau_min, &mean.s, &mean.nnz_tilde, &mean.test_error})
      *v = 0.0;
    while (j < out.rows.size() && out.rows[j].key() == out.rows[i].key()) {
      const auto& r = out.rows[j];
      mean.cone_ratio += r.cone_ratio;
      mean.rel_dual_err += r.rel_dual_err;
      mean.rel_primal_err += r.rel_primal_err;
      mean.rel_naive_err += r.rel_naive_err;
      mean.delta_inf += r.delta_inf;
      mean.tau_min += r.tau_min;
      mean.s += r.s;
      mean.nnz_tilde += r.nnz_tilde;
      mean.test_error += r.test_error;
      mean.failed = mean.failed || r.failed;
      ++mean.trials;
      ++j;
    }
    const double k = static_cast<double>(mean.trials);
    for (double* v : {&mean.cone_ratio, &mean.rel_dual_err, &mean.rel_primal_err, &mean.rel_naive_err, &mean.delta_inf,
                      &mean.tau_min, &mean.s, &mean.nnz_tilde, &mean.test_error})
      *v /= k;
    out.means.push_back(std::move(mean));
    i = j;
  }
  return out;
}

/// Mean rows of one (op, λ, loss) slice, grouped by m, each ordered by τ.
inline std::map<std::size_t, std::vector<SweepRow>> sweep_curves(const SweepResult& r, std::string_view op, double lambda,
                                                                 LossKind loss) {
  std::map<std::size_t, std::vector<SweepRow>> out;
  for (const auto& row : r.means)
    if (row.op == op && row.lambda == lambda && row.loss == loss) out[row.m].push_back(row);
  return out;
}

/// One SVG per metric and (op, λ, loss) slice: metric against τ, one curve per m.
inline std::vector<std::pair<std::string, std::string>> sweep_svgs(const SweepConfig& cfg, const SweepResult& r) {
  std::vector<std::pair<std::string, std::string>> files;
  const std::pair<const char*, double SweepRow::*> metrics[] = {{"cone_ratio", &SweepRow::cone_ratio},
                                                                {"rel_dual_err", &SweepRow::rel_dual_err},
                                                                {"rel_primal_err", &SweepRow::rel_primal_err}};
  for (auto op : cfg.ops)
    for (double lam : cfg.lambda)
      for (auto loss : cfg.losses) {
        const auto curves = sweep_curves(r, kind_name(op), lam, loss);
        for (const auto& [metric, field] : metrics) {
          std::vector<Series> series;
          for (const auto& [m, rows] : curves) {
            Series s{"m=" + std::to_string(m), {}, {}};
            for (const auto& row : rows) {
              s.x.push_back(row.tau);
              s.y.push_back(row.*field);
            }
            series.push_back(std::move(s));
          }
          char name[160];
          std::snprintf(name, sizeof name, "%s_%s_lambda%g_%s.svg", metric, std::string(kind_name(op)).c_str(), lam,
                        std::string(loss_name(loss)).c_str());
          char title[200];
          std::snprintf(title, sizeof title, "%s vs tau (%s, lambda=%g, %s)", metric, std::string(kind_name(op)).c_str(), lam,
                        std::string(loss_name(loss)).c_str());
          files.emplace_back(name, svg_line_plot({title, "tau", metric, false, false}, series));
        }
      }
  return files;
}

// ---------------------------------------------------------------------------
// Distributed warm start

struct DistsimConfig {
  DataSource data = synthetic_source({.n = 2000, .d = 200, .s_target = 200, .margin = 4.0, .noise = 1.0}, 4000);
  std::size_t k_nodes = 4;
  std::vector<std::size_t> warm_rounds{1, 2};  ///< k in DSRR-DisDCA-k
  OperatorKind op = OperatorKind::hashing;
  std::size_t m = 32;
  double tau_factor = 1.1;    ///< τ = min(tau_factor·tau_min, tau_cap) unless fixed
  double tau_cap = 0.9;
  std::optional<double> tau;
  double lambda = 0.01;
  LossKind loss = LossKind::squared_hinge;
  std::vector<std::uint64_t> seeds = seed_range(5);
  std::size_t max_rounds = 500;
  double gap_tol = 1e-6;
  double reduced_gap_tol = 1e-6;
  double target_tol = 1e-3;   ///< rounds-to-target: test error stays ≤ converged error + target_tol
};

struct DistsimSeed {
  std::uint64_t seed = 0;
  double tau = 0.0, tau_min = 0.0;
  DistRunTrace cold, warm;
  double dsrr_error = 0.0, rec_error = 0.0;
  std::optional<std::size_t> cold_rounds, warm_rounds;
  std::size_t clamped = 0;
  double reduce_seconds = 0.0, reduced_solve_seconds = 0.0, original_seconds = 0.0;
  std::vector<TimingRow> timing;
};

struct MethodResult {
  std::string method;
  double test_error = 0.0;
  std::size_t comm_vectors = 0;
};

struct DistsimReport {
  DatasetCard card;
  std::vector<DistsimSeed> seeds;

  std::vector<MethodResult> methods(const DistsimSeed& s, std::span<const std::size_t> ks, std::size_t k_nodes) const {
    std::vector<MethodResult> out;
    out.push_back({"DSRR", s.dsrr_error, 0});
    out.push_back({"DSRR-Rec", s.rec_error, 0});
    for (std::size_t k : ks) {
      const std::size_t idx = std::min(k, s.warm.rounds.size() - 1);
      out.push_back({"DSRR-DisDCA-" + std::to_string(k), s.warm.rounds[idx].test_error, 1 + k_nodes * idx});
    }
    out.push_back({"DisDCA", s.cold.final_round().test_error, s.cold.total_comm_vectors});
    return out;
  }
};

inline std::optional<std::size_t> median_rounds(const std::vector<std::optional<std::size_t>>& v) {
  std::vector<double> x;
  for (const auto& r : v) {
    if (!r) return std::nullopt;
    x.push_back(static_cast<double>(*r));
  }
  return static_cast<std::size_t>(std::ceil(median(x)));
}

/**
 * Per seed: partition, cold DisDCA to the gap tolerance, DSRR warm start
 * (reduce, solve the dual-sparse reduced problem, lift), warm DisDCA.
 * Seeds run in parallel; each run is single-threaded.
 */
inline DistsimReport run_distsim(const DistsimConfig& cfg) {
  using clock = std::chrono::steady_clock;
  DistsimReport rep;
  rep.seeds = parallel_map(cfg.seeds.size(), [&](std::size_t j) {
    DistsimSeed out;
    out.seed = cfg.seeds[j];
    const auto data = load_data(cfg.data, out.seed);
    if (data.test.size() == 0) throw std::invalid_argument("distsim: a test set is required");
    const auto parts = partition(data.train, cfg.k_nodes, out.seed);
    LabeledDataset cat;
    cat.d = data.train.d;
    for (const auto& p : parts) {
      cat.examples.insert(cat.examples.end(), p.examples.begin(), p.examples.end());
      cat.labels.insert(cat.labels.end(), p.labels.begin(), p.labels.end());
    }
    DistConfig dc;
    dc.k_nodes = cfg.k_nodes;
    dc.max_rounds = cfg.max_rounds;
    dc.lambda = cfg.lambda;
    dc.loss = Loss{cfg.loss};
    dc.seed = out.seed;
    dc.gap_tol = cfg.gap_tol;
    auto t0 = clock::now();
    out.cold = disdca_run(parts, data.test, dc);
    out.original_seconds = std::chrono::duration<double>(clock::now() - t0).count();

    t0 = clock::now();
    const auto op = make_operator(cfg.op, cat.d, cfg.m, out.seed);
    const auto reduced = op.apply_dataset(cat);
    out.reduce_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    // τ needs Δ at the converged solution; the cold run provides it.
    out.tau_min = tau_min(delta_vector(cat, reduced, op, out.cold.w));
    out.tau = cfg.tau ? *cfg.tau : std::min(cfg.tau_factor * out.tau_min, cfg.tau_cap);
    SolverConfig rc;
    rc.lambda = cfg.lambda;
    rc.tau = out.tau;
    rc.loss = Loss{cfg.loss};
    rc.gap_tol = cfg.reduced_gap_tol;
    rc.max_epochs = 5000;
    rc.seed = out.seed;
    t0 = clock::now();
    auto ws = dsrr_warmstart(cat, reduced, rc, cfg.lambda);
    out.reduced_solve_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    out.clamped = ws.clamped;
    out.dsrr_error = predict_error(ws.u, op.apply_dataset(data.test));
    out.rec_error = predict_error(ws.w, data.test);
    dc.warm_start = std::move(ws);
    out.warm = disdca_run(parts, data.test, dc);

    const double target = out.cold.final_round().test_error;
    out.cold_rounds = out.cold.rounds_to_target(target, cfg.target_tol);
    out.warm_rounds = out.warm.rounds_to_target(target, cfg.target_tol);
    out.timing = timing_breakdown(out.warm, cfg.warm_rounds, out.reduce_seconds, out.reduced_solve_seconds, out.original_seconds);
    return out;
  });
  const auto first = load_data(cfg.data, cfg.seeds.front());
  rep.card = {first.name, first.train.size(), first.test.size(), first.train.d, cfg.k_nodes};
  return rep;
}

/// Per-seed method table (test error, communication); deterministic.
inline CsvTable distsim_comparison(const DistsimConfig& cfg, const DistsimReport& rep) {
  CsvTable t{"dataset,seed,method,test_error,comm_vectors", {}};
  for (const auto& s : rep.seeds)
    for (const auto& m : rep.methods(s, cfg.warm_rounds, cfg.k_nodes))
      t.rows.push_back(rep.card.name + ',' + std::to_string(s.seed) + ',' + m.method + ',' + fmt(m.test_error) + ',' +
                       std::to_string(m.comm_vectors));
  return t;
}

/// Mean and range of the test error per method over seeds.
inline CsvTable distsim_summary(const DistsimConfig& cfg, const DistsimReport& rep) {
  CsvTable t{"dataset,method,seeds,mean_test_error,min_test_error,max_test_error,mean_comm_vectors", {}};
  if (rep.seeds.empty()) return t;
  const auto names = rep.methods(rep.seeds.front(), cfg.warm_rounds, cfg.k_nodes);
  for (std::size_t k = 0; k < names.size(); ++k) {
    double sum = 0.0, lo = kInf, hi = -kInf, comm = 0.0;
    for (const auto& s : rep.seeds) {
      const auto m = rep.methods(s, cfg.warm_rounds, cfg.k_nodes)[k];
      sum += m.test_error;
      lo = std::min(lo, m.test_error);
      hi = std::max(hi, m.test_error);
      comm += static_cast<double>(m.comm_vectors);
    }
    const double n = static_cast<double>(rep.seeds.size());
    t.rows.push_back(rep.card.name + ',' + names[k].method + ',' + std::to_string(rep.seeds.size()) + ',' + fmt(sum / n) + ',' +
                     fmt(lo) + ',' + fmt(hi) + ',' + fmt(comm / n));
  }
  return t;
}

/// Rounds to the converged test error, cold against warm, per seed.
inline CsvTable distsim_rounds(const DistsimReport& rep) {
  CsvTable t{"seed,tau_min,tau,clamped,cold_rounds_to_target,warm_rounds_to_target,cold_rounds_run,warm_rounds_run,cold_final_error,warm_final_error",
             {}};
  auto r = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string("inf"); };
  for (const auto& s : rep.seeds)
    t.rows.push_back(std::to_string(s.seed) + ',' + fmt(s.tau_min) + ',' + fmt(s.tau) + ',' + std::to_string(s.clamped) + ',' +
                     r(s.cold_rounds) + ',' + r(s.warm_rounds) + ',' + std::to_string(s.cold.rounds_run) + ',' +
                     std::to_string(s.warm.rounds_run) + ',' + fmt(s.cold.final_round().test_error) + ',' +
                     fmt(s.warm.final_round().test_error));
  return t;
}

/// Wall-clock breakdown; not reproducible, so kept out of the other tables.
inline CsvTable distsim_timing(const DistsimReport& rep) {
  CsvTable t{"dataset,seed,method,reduce_s,reduced_solve_s,original_s,total_s", {}};
  for (const auto& s : rep.seeds)
    for (const auto& row : s.timing)
      t.rows.push_back(rep.card.name + ',' + std::to_string(s.seed) + ',' + row.method + ',' + fmt(row.reduce_seconds) + ',' +
                       fmt(row.reduced_solve_seconds) + ',' + fmt(row.original_seconds) + ',' + fmt(row.total_seconds));
  return t;
}

inline std::string distsim_svg(const DistsimConfig& cfg, const DistsimReport& rep) {
  std::vector<Bar> err, time;
  if (!rep.seeds.empty()) {
    const auto names = rep.methods(rep.seeds.front(), cfg.warm_rounds, cfg.k_nodes);
    for (std::size_t k = 0; k < names.size(); ++k) {
      Bar e{names[k].method, 0.0, kInf, -kInf}, tm{names[k].method, 0.0, kInf, -kInf};
      for (const auto& s : rep.seeds) {
        const double v = rep.methods(s, cfg.warm_rounds, cfg.k_nodes)[k].test_error;
        const double sec = s.timing[k].total_seconds;
        e.value += v;
        e.lo = std::min(e.lo, v);
        e.hi = std::max(e.hi, v);
        tm.value += sec;
        tm.lo = std::min(tm.lo, sec);
        tm.hi = std::max(tm.hi, sec);
      }
      e.value /= static_cast<double>(rep.seeds.size());
      tm.value /= static_cast<double>(rep.seeds.size());
      err.push_back(e);
      time.push_back(tm);
    }
  }
  return svg_bar_panels(rep.card.name + " (" + std::to_string(cfg.k_nodes) + " nodes)",
                        {{"test error", err}, {"training time (s)", time}});
}

}  // namespace dsrr
