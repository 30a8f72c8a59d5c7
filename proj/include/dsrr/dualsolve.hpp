#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
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
#include "dsrr/rng.hpp"
#include "dsrr/sketch.hpp"

namespace dsrr {

/// Column access shared by the sparse original data and the dense reduced data.
template <class D>
concept DualColumns = requires(const D& ds, std::size_t i, std::span<const double> cw, std::span<double> w) {
  { ds.size() } -> std::convertible_to<std::size_t>;
  { ds.dim() } -> std::convertible_to<std::size_t>;
  { ds.label(i) } -> std::convertible_to<int>;
  { ds.column_dot(i, cw) } -> std::convertible_to<double>;
  { ds.column_sq_norm(i) } -> std::convertible_to<double>;
  ds.column_axpy(i, 1.0, w);
};

enum class LossKind { hinge, squared_hinge };

inline std::string_view loss_name(LossKind k) { return k == LossKind::hinge ? "hinge" : "sqhinge"; }

inline LossKind parse_loss(std::string_view s) {
  if (s == "hinge") return LossKind::hinge;
  if (s == "sqhinge" || s == "squared_hinge") return LossKind::squared_hinge;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "'");
}

/**
 * Margin losses written in terms of z = y w^T x and the scaled dual
 * variable beta = -alpha y >= 0.
 *
 *   hinge:         l(z) = max(0, gamma - z),   dual term gamma*beta,          beta in [0, 1]
 *   squared hinge: l(z) = max(0, gamma - z)^2, dual term gamma*beta - beta^2/4, beta >= 0
 */
struct Loss {
  LossKind kind = LossKind::squared_hinge;

  /// Lipschitz constant of the loss gradient; infinite for hinge.
  double smoothness() const noexcept {
    return kind == LossKind::hinge ? std::numeric_limits<double>::infinity() : 2.0;
  }

  double value(double margin, double z) const noexcept {
    const double h = std::max(0.0, margin - z);
    return kind == LossKind::hinge ? h : h * h;
  }

  double dual_term(double margin, double beta) const noexcept {
    return kind == LossKind::hinge ? margin * beta : margin * beta - 0.25 * beta * beta;
  }

  double clamp_beta(double beta) const noexcept {
    return kind == LossKind::hinge ? std::clamp(beta, 0.0, 1.0) : std::max(0.0, beta);
  }

  bool feasible(double beta) const noexcept {
    return beta >= 0.0 && (kind != LossKind::hinge || beta <= 1.0);
  }
};

struct SolverConfig {
  double lambda = 1e-3;
  double tau = 0.0;
  Loss loss{};
  std::size_t max_epochs = 500;
  double gap_tol = 1e-8;
  std::uint64_t seed = 0;
  bool record_dual_trace = false;

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("SolverConfig: lambda must be > 0");
    if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("SolverConfig: tau must lie in [0, 1)");
    if (max_epochs == 0) throw std::invalid_argument("SolverConfig: max_epochs must be >= 1");
  }
};

struct SolveResult {
  std::vector<double> alpha;   ///< original sign convention, alpha_i = -y_i beta_i
  std::vector<double> primal;  ///< w (d) for the original problem, u (m) for a reduced one
  double objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  std::size_t epochs_run = 0;
  std::size_t updates = 0;
  bool converged = false;
  std::size_t degenerate_columns = 0;  ///< zero-norm columns under hinge, pinned at beta = 1
  std::vector<double> dual_trace;      ///< dual objective after each epoch (if requested)

  std::size_t nnz_alpha() const noexcept {
    return static_cast<std::size_t>(std::count_if(alpha.begin(), alpha.end(), [](double a) { return a != 0.0; }));
  }

  static constexpr std::string_view csv_header = "objective,dual_objective,gap,epochs,nnz_alpha";

  std::string csv_row() const {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%zu,%zu", objective, dual_objective, gap, epochs_run, nnz_alpha());
    return buf;
  }
};

/// One value per line, %.17g.
inline std::string vector_dump(std::span<const double> v) {
  std::string out;
  char buf[40];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    out += buf;
  }
  return out;
}

/**
 * Closed-form maximizer of the dual along coordinate i.
 * qnorm = ‖x_i‖²/(λ n); z = y_i wᵀx_i at the current w.
 */
inline double coordinate_step(const Loss& loss, double margin, double beta, double z, double qnorm) noexcept {
  if (loss.kind == LossKind::hinge) {
    if (qnorm <= 0.0) return 1.0;  // no quadratic cost: the linear term pushes beta to the box edge
    return std::clamp(beta + (margin - z) / qnorm, 0.0, 1.0);
  }
  return std::max(0.0, beta + (margin - z - 0.5 * beta) / (qnorm + 0.5));
}

/// Seeded permutation stream for dual block `block` (block 0 is the single-machine solver).
inline CounterRng permutation_stream(std::uint64_t seed, std::uint64_t block = 0) {
  return CounterRng(stream_key("sdca-perm", seed ^ mix64(block)));
}

/**
 * Stochastic dual coordinate ascent state over columns `data` for the
 * margin-gamma loss. `scale_n` is the example count that normalizes the
 * objective (the global n when `data` is one block of a larger problem).
 *
 *   w = (1/(λ scale_n)) Σ beta_i y_i x_i
 */
template <DualColumns Data>
class SdcaState {
 public:
  SdcaState(const Data& data, Loss loss, double lambda, double margin, std::size_t scale_n = 0)
      : data_(&data), loss_(loss), lambda_(lambda), margin_(margin),
        scale_n_(scale_n ? scale_n : data.size()), beta_(data.size(), 0.0), w_(data.dim(), 0.0),
        qnorm_(data.size()) {
    for (std::size_t i = 0; i < data.size(); ++i)
      qnorm_[i] = data.column_sq_norm(i) / (lambda_ * static_cast<double>(scale_n_));
  }

  /// Starts from beta (w recomputed from scratch).
  void set_beta(std::span<const double> beta) {
    if (beta.size() != beta_.size()) throw std::invalid_argument("SdcaState: beta length mismatch");
    beta_.assign(beta.begin(), beta.end());
    recompute_w();
  }

  /// Starts from a given (beta, w) pair without recomputing w.
  void set_state(std::span<const double> beta, std::span<const double> w) {
    if (beta.size() != beta_.size() || w.size() != w_.size()) throw std::invalid_argument("SdcaState: state length mismatch");
    beta_.assign(beta.begin(), beta.end());
    w_.assign(w.begin(), w.end());
  }

  void recompute_w() {
    std::fill(w_.begin(), w_.end(), 0.0);
    const double c = 1.0 / (lambda_ * static_cast<double>(scale_n_));
    for (std::size_t i = 0; i < beta_.size(); ++i)
      if (beta_[i] != 0.0) data_->column_axpy(i, c * beta_[i] * data_->label(i), w_);
  }

  void step(std::size_t i) {
    const int y = data_->label(i);
    const double z = y * data_->column_dot(i, w_);
    const double nb = coordinate_step(loss_, margin_, beta_[i], z, qnorm_[i]);
    const double delta = nb - beta_[i];
    if (delta != 0.0) {
      data_->column_axpy(i, delta * y / (lambda_ * static_cast<double>(scale_n_)), w_);
      beta_[i] = nb;
    }
    ++updates_;
  }

  /// One pass in a fresh permutation drawn from `rng`.
  void epoch(CounterRng& rng) {
    std::vector<std::size_t> order(beta_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t i : order) step(i);
  }

  double regularizer() const noexcept {
    double s = 0.0;
    for (double v : w_) s += v * v;
    return 0.5 * lambda_ * s;
  }

  /// (1/n) Σ l_gamma(y_i wᵀx_i) + λ/2 ‖w‖²  (sum restricted to this block)
  double primal_objective() const {
    double loss = 0.0;
    for (std::size_t i = 0; i < beta_.size(); ++i)
      loss += loss_.value(margin_, data_->label(i) * data_->column_dot(i, w_));
    return loss / static_cast<double>(scale_n_) + regularizer();
  }

  double dual_objective() const {
    double s = 0.0;
    for (double b : beta_) s += loss_.dual_term(margin_, b);
    return s / static_cast<double>(scale_n_) - regularizer();
  }

  std::size_t degenerate_columns() const noexcept {
    if (loss_.kind != LossKind::hinge) return 0;
    return static_cast<std::size_t>(std::count(qnorm_.begin(), qnorm_.end(), 0.0));
  }

  std::span<const double> beta() const noexcept { return beta_; }
  std::span<const double> w() const noexcept { return w_; }
  std::size_t updates() const noexcept { return updates_; }

  std::vector<double> alpha() const {
    std::vector<double> a(beta_.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = beta_[i] == 0.0 ? 0.0 : -data_->label(i) * beta_[i];
    return a;
  }

 private:
  const Data* data_;
  Loss loss_;
  double lambda_, margin_;
  std::size_t scale_n_;
  std::vector<double> beta_, w_, qnorm_;
  std::size_t updates_ = 0;
};

namespace detail {

template <DualColumns Data>
SolveResult run_sdca(const Data& data, const SolverConfig& cfg, double margin, std::span<const double> warm_alpha) {
  SdcaState<Data> st(data, cfg.loss, cfg.lambda, margin);
  if (!warm_alpha.empty()) {
    if (warm_alpha.size() != data.size()) throw std::invalid_argument("solve: warm start length mismatch");
    std::vector<double> beta(data.size());
    for (std::size_t i = 0; i < beta.size(); ++i) beta[i] = cfg.loss.clamp_beta(-warm_alpha[i] * data.label(i));
    st.set_beta(beta);
  }
  SolveResult res;
  auto rng = permutation_stream(cfg.seed);
  const bool empty = data.size() == 0;
  for (std::size_t e = 0; e < cfg.max_epochs && !empty; ++e) {
    st.epoch(rng);
    ++res.epochs_run;
    const double dual = st.dual_objective();
    if (cfg.record_dual_trace) res.dual_trace.push_back(dual);
    if (st.primal_objective() - dual <= cfg.gap_tol) break;
  }
  res.objective = st.primal_objective();
  res.dual_objective = st.dual_objective();
  res.gap = res.objective - res.dual_objective;
  res.converged = res.gap <= cfg.gap_tol;
  res.alpha = st.alpha();
  res.primal.assign(st.w().begin(), st.w().end());
  res.updates = st.updates();
  res.degenerate_columns = st.degenerate_columns();
  return res;
}

}  // namespace detail

/**
 * Original dual (margin 1), by SDCA with a seeded permutation per epoch.
 * Also solves the plain reduced dual when given reduced data.
 * Non-convergence is reported through `converged`, not thrown.
 */
template <DualColumns Data>
SolveResult solve_original(const Data& data, const SolverConfig& cfg, std::span<const double> warm_alpha = {}) {
  cfg.validate();
  if (cfg.tau != 0.0) throw std::invalid_argument("solve_original: tau must be 0");
  return detail::run_sdca(data, cfg, 1.0, warm_alpha);
}

/**
 * Dual with the added τ‖α‖₁/n penalty, solved as the ordinary dual of the
 * margin-(1-τ) loss. Returns α̃ and u; the gap is measured against the
 * margin-shifted primal.
 */
template <DualColumns Data>
SolveResult solve_reduced_sparse(const Data& data, const SolverConfig& cfg, std::span<const double> warm_alpha = {}) {
  cfg.validate();
  return detail::run_sdca(data, cfg, 1.0 - cfg.tau, warm_alpha);
}

/// w̃ = −(1/(λn)) X α
inline std::vector<double> recover_primal(const LabeledDataset& ds, std::span<const double> alpha, double lambda) {
  if (alpha.size() != ds.size()) throw std::invalid_argument("recover_primal: alpha length mismatch");
  if (!(lambda > 0.0)) throw std::invalid_argument("recover_primal: lambda must be > 0");
  std::vector<double> w(ds.d, 0.0);
  if (ds.size() == 0) return w;
  const double c = -1.0 / (lambda * static_cast<double>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (alpha[i] != 0.0) ds.examples[i].axpy_into(c * alpha[i], w);
  return w;
}

/// Aᵀu, the naive lift of a reduced-space model.
inline std::vector<double> naive_recover(const ReductionOperator& op, std::span<const double> u) { return op.adjoint(u); }

/// Fraction of test examples with sign(wᵀx) != y; a zero score counts as an error.
inline double predict_error(std::span<const double> w, const LabeledDataset& test) {
  if (test.size() == 0) throw std::invalid_argument("predict_error: empty test set");
  if (w.size() != test.d) throw std::invalid_argument("predict_error: dimension mismatch");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double score = test.examples[i].dot(w);
    if (!(score * test.labels[i] > 0.0)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

/// Same for a reduced-space model u applied to reduced test data.
inline double predict_error(std::span<const double> u, const ReducedDataset& test) {
  if (test.size() == 0) throw std::invalid_argument("predict_error: empty test set");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (!(test.column_dot(i, u) * test.labels[i] > 0.0)) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

}  // namespace dsrr
