// dsrr: sweeps, theorem checks, JL diagnostics and the distributed warm-start
// simulation from the command line. Every flag can also come from a flat
// key=value file given with --config (repeat a key for a list); the command
// line wins.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dsrr/experiments.hpp"

namespace fs = std::filesystem;
using namespace dsrr;

namespace {

struct Options {
  std::string data, test, out = "dsrr_out";
  std::size_t dim = 0, n_test = 0;
  std::vector<double> synth;
  std::vector<std::string> ops, losses, seeds, suites{"thm1"};
  std::vector<std::size_t> m, warm_rounds;
  std::vector<double> tau, lambda;
  double gap_tol = 0.0, tau_factor = 0.0, tau_cap = 0.9, keep_fraction = 0.0;
  std::size_t nodes = 4, max_rounds = 500, d = 512, probes = 200, probe_seed = 0;
};

std::vector<std::uint64_t> parse_seeds(const std::vector<std::string>& toks) {
  std::vector<std::uint64_t> out;
  for (const auto& t : toks) {
    const auto dash = t.find('-');
    if (dash == std::string::npos) {
      out.push_back(std::stoull(t));
    } else {
      const auto a = std::stoull(t.substr(0, dash)), b = std::stoull(t.substr(dash + 1));
      if (b < a) throw std::invalid_argument("bad seed range " + t);
      for (auto s = a; s <= b; ++s) out.push_back(s);
    }
  }
  return out;
}

SynthSpec synth_from(const std::vector<double>& v, SynthSpec base) {
  if (v.empty()) return base;
  if (v.size() != 5) throw std::invalid_argument("--synth expects n,d,s,margin,noise");
  base.n = static_cast<std::size_t>(v[0]);
  base.d = static_cast<std::size_t>(v[1]);
  base.s_target = static_cast<std::size_t>(v[2]);
  base.margin = v[3];
  base.noise = v[4];
  return base;
}

DataSource source_from(const Options& o, DataSource base) {
  if (!o.data.empty()) base.path = o.data;
  if (!o.test.empty()) base.test_path = o.test;
  if (o.dim) base.dim = o.dim;
  base.synth = synth_from(o.synth, base.synth);
  if (o.n_test) base.n_test = o.n_test;
  return base;
}

std::vector<OperatorKind> kinds_from(const std::vector<std::string>& v, std::vector<OperatorKind> fallback) {
  if (v.empty()) return fallback;
  std::vector<OperatorKind> out;
  for (const auto& s : v) out.push_back(parse_kind(s));
  return out;
}

std::vector<LossKind> losses_from(const std::vector<std::string>& v, std::vector<LossKind> fallback) {
  if (v.empty()) return fallback;
  std::vector<LossKind> out;
  for (const auto& s : v) out.push_back(parse_loss(s));
  return out;
}

void write_table(const fs::path& p, const CsvTable& t) { write_text(p, t.str()); }

int cmd_sweep(const Options& o) {
  SweepConfig cfg;
  cfg.data = source_from(o, cfg.data);
  cfg.ops = kinds_from(o.ops, cfg.ops);
  if (!o.m.empty()) cfg.m = o.m;
  if (!o.tau.empty()) cfg.tau = o.tau;
  if (!o.lambda.empty()) cfg.lambda = o.lambda;
  cfg.losses = losses_from(o.losses, cfg.losses);
  if (!o.seeds.empty()) cfg.seeds = parse_seeds(o.seeds);
  if (o.gap_tol > 0) cfg.gap_tol = o.gap_tol;
  const auto res = run_sweep(cfg);
  const fs::path out = o.out;
  write_table(out / "sweep.csv", res.table());
  write_table(out / "sweep_mean.csv", res.mean_table());
  for (const auto& [name, svg] : sweep_svgs(cfg, res)) write_text(out / name, svg);
  std::size_t failed = 0;
  for (const auto& r : res.rows)
    if (r.failed) {
      ++failed;
      std::cerr << "cell failed: op=" << r.op << " m=" << r.m << " tau=" << r.tau << " seed=" << r.seed << ": " << r.error << '\n';
    }
  std::printf("sweep %s: %zu rows, %zu cells, %zu failed -> %s\n", res.dataset.c_str(), res.rows.size(), res.means.size(), failed,
              out.string().c_str());
  return 0;
}

TheoremSetup with_overrides(const Options& o, TheoremSetup t) {
  t.synth = synth_from(o.synth, t.synth);
  if (!o.ops.empty()) t.op = parse_kind(o.ops.front());
  if (!o.m.empty()) t.m = o.m.front();
  if (!o.lambda.empty()) t.lambda = o.lambda.front();
  if (!o.seeds.empty()) t.seeds = parse_seeds(o.seeds);
  if (!o.tau.empty()) t.tau = o.tau.front();
  if (o.tau_factor > 0) t.tau_factor = o.tau_factor;
  if (o.gap_tol > 0) t.gap_tol = o.gap_tol;
  if (o.keep_fraction > 0) t.keep_fraction = o.keep_fraction;
  return t;
}

int cmd_verify(const Options& o) {
  const TheoremSetup t = with_overrides(o, {});
  std::vector<std::string> suites = o.suites;
  if (suites.size() == 1 && suites.front() == "all")
    suites = {"thm1", "thm2", "thm2-restricted", "thm4", "thm5", "thm6", "thm7", "thm7-scaling"};
  bool all_ok = true;
  for (const auto& name : suites) {
    SuiteResult r;
    if (name == "thm1") {
      r = suite_thm1(t);
    } else if (name == "thm2") {
      r = suite_thm2_cone(t);
    } else if (name == "thm2-restricted") {
      r = suite_thm2_restricted(with_overrides(o, restricted_setup()));
    } else if (name == "thm4") {
      r = suite_thm4(with_overrides(o, near_sparse_setup()));
    } else if (name == "thm5") {
      r = suite_thm5(t);
    } else if (name == "thm6") {
      DeltaScalingSetup c;
      if (!o.synth.empty()) c.synth = t.synth;
      if (!o.lambda.empty()) c.lambda = t.lambda;
      c.kinds = kinds_from(o.ops, c.kinds);
      if (!o.m.empty()) c.m = o.m;
      if (!o.seeds.empty()) c.seeds = t.seeds;
      r = suite_thm6(c);
    } else if (name == "thm7" || name == "thm7-scaling") {
      SigmaSetup c;
      if (!o.synth.empty()) c.synth = t.synth;
      if (!o.ops.empty()) c.op = t.op;
      if (!o.m.empty()) c.m = o.m;
      if (!o.seeds.empty()) c.seeds = t.seeds;
      r = name == "thm7" ? suite_thm7(c) : suite_thm7_scaling(c);
    } else {
      throw CLI::ValidationError("--suite", "unknown suite '" + name + "'");
    }
    write_table(fs::path(o.out) / ("verify_" + name + ".csv"), r.table);
    std::printf("%s\n", r.summary().c_str());
    for (const auto& n : r.notes) std::printf("  %s\n", n.c_str());
    for (const auto& f : r.failures) std::fprintf(stderr, "violation: %s\n", f.c_str());
    all_ok = all_ok && r.passed;
  }
  return all_ok ? 0 : 1;
}

int cmd_distsim(const Options& o) {
  DistsimConfig cfg;
  cfg.data = source_from(o, cfg.data);
  if (!o.ops.empty()) cfg.op = parse_kind(o.ops.front());
  if (!o.m.empty()) cfg.m = o.m.front();
  if (!o.tau.empty()) cfg.tau = o.tau.front();
  if (o.tau_factor > 0) cfg.tau_factor = o.tau_factor;
  cfg.tau_cap = o.tau_cap;
  if (!o.lambda.empty()) cfg.lambda = o.lambda.front();
  if (!o.losses.empty()) cfg.loss = parse_loss(o.losses.front());
  if (!o.seeds.empty()) cfg.seeds = parse_seeds(o.seeds);
  if (o.gap_tol > 0) cfg.gap_tol = o.gap_tol;
  if (!o.warm_rounds.empty()) cfg.warm_rounds = o.warm_rounds;
  cfg.k_nodes = o.nodes;
  cfg.max_rounds = o.max_rounds;
  const auto rep = run_distsim(cfg);
  const fs::path out = o.out;
  const std::string card = rep.card.header_line() + '\n';
  write_text(out / "distsim_comparison.csv", card + distsim_comparison(cfg, rep).str());
  write_text(out / "distsim_summary.csv", card + distsim_summary(cfg, rep).str());
  write_table(out / "distsim_rounds.csv", distsim_rounds(rep));
  write_table(out / "timing.csv", distsim_timing(rep));
  for (const auto& s : rep.seeds) {
    write_text(out / "traces" / ("cold_seed" + std::to_string(s.seed) + ".csv"), s.cold.csv());
    write_text(out / "traces" / ("warm_seed" + std::to_string(s.seed) + ".csv"), s.warm.csv());
  }
  write_text(out / "distsim.svg", distsim_svg(cfg, rep));
  std::printf("%s\n%s", rep.card.header_line().c_str(), distsim_summary(cfg, rep).str().c_str());
  return 0;
}

int cmd_jl(const Options& o) {
  JLSetup cfg;
  cfg.kinds = kinds_from(o.ops, cfg.kinds);
  cfg.d = o.d;
  if (!o.m.empty()) cfg.m = o.m;
  if (!o.seeds.empty()) cfg.seeds = parse_seeds(o.seeds);
  cfg.probes = o.probes;
  cfg.probe_seed = o.probe_seed;
  const auto g = jl_grid(cfg);
  write_table(fs::path(o.out) / "jl.csv", g.table);
  write_text(fs::path(o.out) / "jl.svg", jl_svg(cfg, g));
  for (std::size_t k = 0; k < cfg.kinds.size(); ++k)
    std::printf("%s: median-distortion slope vs m = %.4f\n", std::string(kind_name(cfg.kinds[k])).c_str(), g.slopes[k]);
  return 0;
}

int cmd_solve(const Options& o) {
  const auto seeds = o.seeds.empty() ? std::vector<std::uint64_t>{0} : parse_seeds(o.seeds);
  const auto data = load_data(source_from(o, {}), seeds.front());
  SolverConfig cfg;
  cfg.lambda = o.lambda.empty() ? cfg.lambda : o.lambda.front();
  cfg.loss = Loss{o.losses.empty() ? cfg.loss.kind : parse_loss(o.losses.front())};
  cfg.seed = seeds.front();
  if (o.gap_tol > 0) cfg.gap_tol = o.gap_tol;
  SolveResult res;
  if (!o.ops.empty()) {
    if (o.m.empty()) throw CLI::ValidationError("--m", "a reduced solve needs --m");
    const auto op = make_operator(parse_kind(o.ops.front()), data.train.d, o.m.front(), cfg.seed);
    cfg.tau = o.tau.empty() ? 0.0 : o.tau.front();
    res = solve_reduced_sparse(op.apply_dataset(data.train), cfg);
    write_text(fs::path(o.out) / "operator.txt", op.spec() + '\n');
    write_text(fs::path(o.out) / "w_recovered.txt", vector_dump(recover_primal(data.train, res.alpha, cfg.lambda)));
  } else {
    res = solve_original(data.train, cfg);
  }
  write_text(fs::path(o.out) / "solve.csv", std::string(SolveResult::csv_header) + '\n' + res.csv_row() + '\n');
  write_text(fs::path(o.out) / "alpha.txt", vector_dump(res.alpha));
  write_text(fs::path(o.out) / "primal.txt", vector_dump(res.primal));
  std::printf("%s\n%s\n", std::string(SolveResult::csv_header).c_str(), res.csv_row().c_str());
  if (!res.converged) std::fprintf(stderr, "warning: gap %.3g above tolerance after %zu epochs\n", res.gap, res.epochs_run);
  return 0;
}

int cmd_reduce(const Options& o) {
  if (o.ops.empty() || o.m.empty()) throw CLI::ValidationError("--op/--m", "reduce needs an operator and m");
  const auto seeds = o.seeds.empty() ? std::vector<std::uint64_t>{0} : parse_seeds(o.seeds);
  const auto data = load_data(source_from(o, {}), seeds.front());
  const auto op = make_operator(parse_kind(o.ops.front()), data.train.d, o.m.front(), seeds.front());
  const auto red = op.apply_dataset(data.train);
  LabeledDataset out;
  out.d = red.m;
  out.labels = red.labels;
  for (std::size_t i = 0; i < red.size(); ++i) out.examples.push_back(SparseVector::from_dense(red.column(i)));
  write_text(fs::path(o.out) / "reduced.svm", to_svmlight(out));
  write_text(fs::path(o.out) / "operator.txt", op.spec() + '\n');
  std::printf("%s n=%zu\n", op.spec().c_str(), red.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-sparse regularized randomized reduction: experiments and checks"};
  app.set_config("--config", "", "flat key=value file; repeat a key for lists");
  app.require_subcommand(1);
  Options o;

  app.add_option("--data", o.data, "svmlight training file (synthetic data when omitted)");
  app.add_option("--test", o.test, "svmlight test file");
  app.add_option("--dim", o.dim, "force the feature dimension of loaded files");
  app.add_option("--synth", o.synth, "synthetic spec n,d,s,margin,noise")->delimiter(',')->expected(5);
  app.add_option("--n-test", o.n_test, "synthetic test examples");
  app.add_option("--op", o.ops, "gauss|rademacher|discrete|hash|hadamard|sample|identity")->delimiter(',');
  app.add_option("--m", o.m, "reduced dimensions")->delimiter(',');
  app.add_option("--tau", o.tau, "dual-sparse weights in [0,1)")->delimiter(',');
  app.add_option("--lambda", o.lambda, "regularization values")->delimiter(',');
  app.add_option("--loss", o.losses, "hinge|sqhinge")->delimiter(',');
  app.add_option("--seeds", o.seeds, "seeds, e.g. 0-4 or 1,3,7")->delimiter(',');
  app.add_option("--gap-tol", o.gap_tol, "duality-gap tolerance");
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--suite", o.suites, "verify: thm1|thm2|thm2-restricted|thm4|thm5|thm6|thm7|thm7-scaling|all")->delimiter(',');
  app.add_option("--tau-factor", o.tau_factor, "tau = factor * tau_min");
  app.add_option("--tau-cap", o.tau_cap, "distsim: upper limit on tau")->capture_default_str();
  app.add_option("--keep-fraction", o.keep_fraction, "thm4: fraction of the support kept in alpha^s");
  app.add_option("--nodes", o.nodes, "distsim: node count")->capture_default_str();
  app.add_option("--warm-rounds", o.warm_rounds, "distsim: k for DSRR-DisDCA-k")->delimiter(',');
  app.add_option("--max-rounds", o.max_rounds, "distsim: communication round limit")->capture_default_str();
  app.add_option("--d", o.d, "jl: dimension")->capture_default_str();
  app.add_option("--probes", o.probes, "jl: probe count")->capture_default_str();
  app.add_option("--probe-seed", o.probe_seed, "jl: probe seed")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "tau x m x lambda sweep with recovery metrics");
  auto* verify = app.add_subcommand("verify", "theorem verification suites; exit 1 on any violation");
  auto* distsim = app.add_subcommand("distsim", "cold vs warm-started distributed dual coordinate ascent");
  auto* jl = app.add_subcommand("jl", "empirical JL distortion over a grid of m");
  auto* solve = app.add_subcommand("solve", "solve the original problem, or a reduced one with --op/--m/--tau");
  auto* reduce = app.add_subcommand("reduce", "apply an operator and write the reduced data");
  for (auto* sub : {sweep, verify, distsim, jl, solve, reduce}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sweep) return cmd_sweep(o);
    if (*verify) return cmd_verify(o);
    if (*distsim) return cmd_distsim(o);
    if (*jl) return cmd_jl(o);
    if (*solve) return cmd_solve(o);
    if (*reduce) return cmd_reduce(o);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
