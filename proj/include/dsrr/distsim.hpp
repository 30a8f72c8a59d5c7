#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsrr/dataset.hpp"
#include "dsrr/dualsolve.hpp"
#include "dsrr/sketch.hpp"

namespace dsrr {

/// Initial dual/primal pair for the distributed solver, in partition-concatenation order.
struct WarmStart {
  std::vector<double> alpha;
  std::vector<double> w;
  std::vector<double> u;        ///< reduced-space model the pair was recovered from (may be empty)
  std::size_t clamped = 0;      ///< entries moved back into the loss's dual domain
};

struct DistConfig {
  std::size_t k_nodes = 1;
  std::size_t local_updates_per_round = 0;  ///< 0: one pass over each node's examples
  std::size_t max_rounds = 100;
  double lambda = 1e-3;
  Loss loss{};
  std::uint64_t seed = 0;
  double gap_tol = 1e-6;
  std::size_t patience = 0;  ///< stop after this many rounds without test-error improvement (0: off)
  std::optional<WarmStart> warm_start;

  void validate() const {
    if (k_nodes < 1) throw std::invalid_argument("DistConfig: k_nodes must be >= 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("DistConfig: lambda must be > 0");
  }
};

struct RoundRecord {
  std::size_t round = 0;
  std::size_t comm_vectors = 0;  ///< d-dimensional vectors exchanged in this round
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double gap = 0.0;
  double test_error = std::numeric_limits<double>::quiet_NaN();
  std::size_t updates = 0;  ///< cumulative coordinate updates
  double seconds = 0.0;     ///< cumulative wall time (not part of the CSV)
};

struct DistRunTrace {
  std::vector<RoundRecord> rounds;  ///< rounds[0] is the initial state
  std::size_t k_nodes = 1;
  std::size_t rounds_run = 0;
  std::size_t total_comm_vectors = 0;
  bool converged = false;
  std::vector<double> alpha;
  std::vector<double> w;

  static constexpr std::string_view csv_header = "round,comm_vectors,primal_obj,gap,test_error";

  std::string csv() const {
    std::ostringstream os;
    os << csv_header << '\n';
    char buf[200];
    for (const auto& r : rounds) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g\n", r.round, r.comm_vectors, r.primal_obj, r.gap, r.test_error);
      os << buf;
    }
    return os.str();
  }

  const RoundRecord& final_round() const { return rounds.back(); }

  /// First round from which the test error stays at or below target + tol; nullopt if the last round misses.
  std::optional<std::size_t> rounds_to_target(double target, double tol) const {
    std::size_t k = rounds.size();
    while (k > 0 && rounds[k - 1].test_error <= target + tol) --k;
    if (k == rounds.size()) return std::nullopt;
    return rounds[k].round;
  }
};

/**
 * DisDCA over k in-process nodes, basic (averaging) variant.
 *
 * Each round every node starts from the broadcast w, runs its local dual
 * coordinate updates against a local copy of w, and the new state is the
 * average of the nodes' results: β_k ← (1/K)β_k^local + (1 − 1/K)β_k and
 * w ← (1/K)Σ_k w_k. Concavity of the dual makes every round an ascent step.
 * Nodes run in index order; node k's permutations come from
 * permutation_stream(seed, k), so one node reproduces solve_original.
 */
inline DistRunTrace disdca_run(std::span<const LabeledDataset> parts, const LabeledDataset& test, const DistConfig& cfg) {
  cfg.validate();
  if (parts.size() != cfg.k_nodes) throw std::invalid_argument("disdca_run: need exactly k_nodes partitions");
  const std::size_t d = parts.front().d;
  std::size_t N = 0;
  for (const auto& p : parts) {
    if (p.d != d) throw std::invalid_argument("disdca_run: partitions disagree on d");
    N += p.size();
  }
  if (N == 0) throw std::invalid_argument("disdca_run: no examples");
  const std::size_t K = cfg.k_nodes;
  const double scale = 1.0 / (cfg.lambda * static_cast<double>(N));
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::vector<double>> beta(K);
  for (std::size_t k = 0; k < K; ++k) beta[k].assign(parts[k].size(), 0.0);
  std::vector<double> w(d, 0.0);

  if (cfg.warm_start) {
    const auto& ws = *cfg.warm_start;
    if (ws.alpha.size() != N) throw std::invalid_argument("disdca_run: warm start alpha length != total examples");
    if (ws.w.size() != d) throw std::invalid_argument("disdca_run: warm start w length != d");
    std::vector<double> w_check(d, 0.0);
    std::size_t off = 0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < parts[k].size(); ++i) {
        const double a = ws.alpha[off + i];
        const double b = a == 0.0 ? 0.0 : -a * parts[k].labels[i];
        if (!cfg.loss.feasible(b)) throw std::invalid_argument("disdca_run: warm start alpha outside the dual domain");
        beta[k][i] = b;
        if (a != 0.0) parts[k].examples[i].axpy_into(-scale * a, w_check);
      }
      off += parts[k].size();
    }
    double diff = 0.0, wmax = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      diff = std::max(diff, std::abs(w_check[j] - ws.w[j]));
      wmax = std::max(wmax, std::abs(ws.w[j]));
    }
    if (diff > 1e-8 * wmax) throw std::invalid_argument("disdca_run: warm start w inconsistent with alpha");
    w = ws.w;
  }

  std::vector<SdcaState<LabeledDataset>> nodes;
  std::vector<CounterRng> streams;
  std::vector<std::vector<std::size_t>> order(K);
  std::vector<std::size_t> pos(K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    nodes.emplace_back(parts[k], cfg.loss, cfg.lambda, 1.0, N);
    streams.push_back(permutation_stream(cfg.seed, k));
    pos[k] = parts[k].size();  // forces a fresh permutation on first use
  }

  DistRunTrace trace;
  trace.k_nodes = K;
  std::size_t updates = 0;
  auto record = [&](std::size_t round, std::size_t comm) {
    RoundRecord r;
    r.round = round;
    r.comm_vectors = comm;
    double loss = 0.0, dual = 0.0, reg = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t i = 0; i < parts[k].size(); ++i) {
        loss += cfg.loss.value(1.0, parts[k].labels[i] * parts[k].examples[i].dot(w));
        dual += cfg.loss.dual_term(1.0, beta[k][i]);
      }
    for (double v : w) reg += v * v;
    reg *= 0.5 * cfg.lambda;
    r.primal_obj = loss / static_cast<double>(N) + reg;
    r.dual_obj = dual / static_cast<double>(N) - reg;
    r.gap = r.primal_obj - r.dual_obj;
    if (test.size() > 0) r.test_error = predict_error(w, test);
    r.updates = updates;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.rounds.push_back(r);
    return r.gap <= cfg.gap_tol;
  };

  bool done = record(0, cfg.warm_start ? 1 : 0);
  double best_err = trace.rounds.back().test_error;
  std::size_t since_best = 0;
  std::vector<double> w_sum(d);
  for (std::size_t round = 1; round <= cfg.max_rounds && !done; ++round) {
    std::fill(w_sum.begin(), w_sum.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      auto& st = nodes[k];
      st.set_state(beta[k], w);
      const std::size_t nk = parts[k].size();
      const std::size_t steps = cfg.local_updates_per_round ? cfg.local_updates_per_round : nk;
      for (std::size_t t = 0; t < steps && nk > 0; ++t) {
        if (pos[k] == nk) {
          order[k].resize(nk);
          std::iota(order[k].begin(), order[k].end(), std::size_t{0});
          streams[k].shuffle(order[k]);
          pos[k] = 0;
        }
        st.step(order[k][pos[k]++]);
        ++updates;
      }
      const auto b = st.beta();
      const double keep = 1.0 - 1.0 / static_cast<double>(K);
      for (std::size_t i = 0; i < nk; ++i) beta[k][i] = b[i] / static_cast<double>(K) + keep * beta[k][i];
      const auto wk = st.w();
      for (std::size_t j = 0; j < d; ++j) w_sum[j] += wk[j];
    }
    for (std::size_t j = 0; j < d; ++j) w[j] = w_sum[j] / static_cast<double>(K);
    trace.rounds_run = round;
    done = record(round, K);
    const double err = trace.rounds.back().test_error;
    if (cfg.patience > 0 && !std::isnan(err)) {
      if (err < best_err) {
        best_err = err;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }
  trace.converged = trace.rounds.back().gap <= cfg.gap_tol;
  trace.total_comm_vectors = K * trace.rounds_run + (cfg.warm_start ? 1 : 0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < parts[k].size(); ++i)
      trace.alpha.push_back(beta[k][i] == 0.0 ? 0.0 : -parts[k].labels[i] * beta[k][i]);
  trace.w = w;
  return trace;
}

/**
 * Solves the dual-sparse reduced problem on `reduced` (= A applied to ds) and
 * lifts it back: α̃ clamped into the loss's dual domain, w̃ = −(1/λn)Xα̃.
 */
inline WarmStart dsrr_warmstart(const LabeledDataset& ds, const ReducedDataset& reduced, SolverConfig cfg_reduced,
                                double lambda) {
  cfg_reduced.lambda = lambda;
  const auto res = solve_reduced_sparse(reduced, cfg_reduced);
  WarmStart ws;
  ws.alpha = res.alpha;
  for (std::size_t i = 0; i < ws.alpha.size(); ++i) {
    const double b = -ws.alpha[i] * ds.labels[i];
    const double c = cfg_reduced.loss.clamp_beta(b);
    if (c != b) {
      ws.alpha[i] = c == 0.0 ? 0.0 : -c * ds.labels[i];
      ++ws.clamped;
    }
  }
  ws.w = recover_primal(ds, ws.alpha, lambda);
  ws.u = res.primal;
  return ws;
}

inline WarmStart dsrr_warmstart(const LabeledDataset& ds, const ReductionOperator& op, SolverConfig cfg_reduced, double lambda) {
  return dsrr_warmstart(ds, op.apply_dataset(ds), cfg_reduced, lambda);
}

struct TimingRow {
  std::string method;
  double reduce_seconds = 0.0;
  double reduced_solve_seconds = 0.0;
  double original_seconds = 0.0;
  double total_seconds = 0.0;
};

/**
 * Wall-clock accounting per method: DSRR and DSRR-Rec pay for reduction and
 * the reduced solve, DSRR-DisDCA-k additionally for k rounds of the warm
 * distributed run, DisDCA only for its own run.
 */
inline std::vector<TimingRow> timing_breakdown(const DistRunTrace& warm_trace, std::span<const std::size_t> ks,
                                               double reduce_seconds, double reduced_solve_seconds,
                                               double original_seconds) {
  std::vector<TimingRow> rows;
  auto add = [&](std::string name, double red, double rsolve, double orig) {
    rows.push_back({std::move(name), red, rsolve, orig, red + rsolve + orig});
  };
  add("DSRR", reduce_seconds, reduced_solve_seconds, 0.0);
  add("DSRR-Rec", reduce_seconds, reduced_solve_seconds, 0.0);
  for (std::size_t k : ks) {
    double step3 = 0.0;
    if (k > 0 && !warm_trace.rounds.empty()) {
      const std::size_t idx = std::min(k, warm_trace.rounds.size() - 1);
      step3 = warm_trace.rounds[idx].seconds - warm_trace.rounds[0].seconds;
    }
    add("DSRR-DisDCA-" + std::to_string(k), reduce_seconds, reduced_solve_seconds, step3);
  }
  add("DisDCA", 0.0, 0.0, original_seconds);
  return rows;
}

}  // namespace dsrr
