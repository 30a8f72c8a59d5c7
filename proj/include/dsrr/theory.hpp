#pragma once

#include <Eigen/Dense>

#include <algorithm>
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

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double norm_inf(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double norm1(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline double norm2(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dist2: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/**
 * Δ_i = (Ax_i)ᵀ(Aw*) − x_iᵀw* = x_iᵀ(AᵀA − I)w*. With w* = −(1/λn)Xα* this is
 * −(1/λn)[(X̂ᵀX̂ − XᵀX)α*]_i: same magnitudes, opposite sign. One application
 * of A to w* plus n dot products; the n×n Gram difference is never formed.
 */
inline std::vector<double> delta_vector(const LabeledDataset& ds, const ReducedDataset& reduced,
                                        const ReductionOperator& op, std::span<const double> w_star) {
  if (w_star.size() != ds.d || op.d() != ds.d) throw std::invalid_argument("delta_vector: dimension mismatch");
  if (reduced.size() != ds.size() || reduced.m != op.m()) throw std::invalid_argument("delta_vector: reduced data mismatch");
  const auto aw = op.apply_dense(w_star);
  std::vector<double> delta(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) delta[i] = reduced.column_dot(i, aw) - ds.examples[i].dot(w_star);
  return delta;
}

inline std::vector<double> delta_vector(const LabeledDataset& ds, const ReductionOperator& op, std::span<const double> w_star) {
  return delta_vector(ds, op.apply_dataset(ds), op, w_star);
}

/// 2‖Δ‖∞ + 2ξ
inline double tau_min(std::span<const double> delta, double xi = 0.0) noexcept { return 2.0 * norm_inf(delta) + 2.0 * xi; }

struct SupportSet {
  std::vector<std::size_t> indices;
  std::vector<char> member;
  std::size_t size() const noexcept { return indices.size(); }
};

/// S = { i : |α_i| > rel_tol · max_j |α_j| }; empty for α = 0.
inline SupportSet support_set(std::span<const double> alpha, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("support_set: rel_tol must lie in (0, 1)");
  SupportSet s;
  s.member.assign(alpha.size(), 0);
  const double mx = norm_inf(alpha);
  if (mx == 0.0) return s;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (std::abs(alpha[i]) > rel_tol * mx) {
      s.indices.push_back(i);
      s.member[i] = 1;
    }
  return s;
}

/// α with every entry outside S set to zero.
inline std::vector<double> restrict_to(std::span<const double> alpha, const SupportSet& s) {
  std::vector<double> out(alpha.size(), 0.0);
  for (std::size_t i : s.indices) out[i] = alpha[i];
  return out;
}

enum class Check { pass, fail, not_applicable };

inline std::string_view check_name(Check c) {
  switch (c) {
    case Check::pass: return "pass";
    case Check::fail: return "fail";
    default: return "n/a";
  }
}

/// Recovery-error report for one (α̃, α_ref) pair against the smooth-loss bounds.
struct TheoremReport {
  double delta_inf = 0.0;
  double xi = 0.0;
  double tau_used = 0.0;
  double tau_min = 0.0;
  double L = 0.0;
  std::size_t s = 0;
  std::vector<std::size_t> S;
  double on_support_err1 = 0.0;  ///< ‖[α̃]_S − [α_ref]_S‖₁
  double off_support_l1 = 0.0;   ///< ‖[α̃]_{S^c}‖₁
  double cone_ratio = 0.0;
  double err2 = 0.0, err1 = 0.0;
  double bound2 = kInf, bound1 = kInf, boundS = kInf, boundSc = kInf;

  Check tau_ok = Check::fail;
  Check cone = Check::fail;
  Check err2_ok = Check::not_applicable, err1_ok = Check::not_applicable;
  Check errS_ok = Check::not_applicable, errSc_ok = Check::not_applicable;

  bool all_pass() const noexcept {
    for (Check c : {tau_ok, cone, err2_ok, err1_ok, errS_ok, errSc_ok})
      if (c == Check::fail) return false;
    return true;
  }

  static constexpr std::string_view csv_header =
      "delta_inf,xi,tau,tau_min,L,s,cone_ratio,err2,err1,errS,errSc,bound2,bound1,boundS,boundSc,"
      "tau_ok,cone_ok,err2_ok,err1_ok,errS_ok,errSc_ok";

  std::string csv_fields() const {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  delta_inf, xi, tau_used, tau_min, L, s, cone_ratio, err2, err1, on_support_err1, off_support_l1, bound2,
                  bound1, boundS, boundSc);
    std::string out = buf;
    for (Check c : {tau_ok, cone, err2_ok, err1_ok, errS_ok, errSc_ok}) {
      out += ',';
      out += check_name(c);
    }
    return out;
  }
};

inline constexpr double kBoundSlack = 1.0 + 1e-9;

/**
 * Cone condition ‖[α̃]_{S^c}‖₁ ≤ 3‖[α̃]_S − [α_ref]_S‖₁ and, for finite L,
 * the bounds 3τL√s, 12τLs, 3τLs, 9τLs. α_ref is α* (exactly sparse) or α^s.
 * Inequalities are checked with multiplicative slack 1 + 1e-9; `tau_ok`
 * records whether the hypothesis τ ≥ tau_min holds.
 */
inline TheoremReport cone_and_bounds(std::span<const double> alpha_tilde, std::span<const double> alpha_ref,
                                     const SupportSet& S, double tau, double L, double tau_min_value = 0.0) {
  if (alpha_tilde.size() != alpha_ref.size() || S.member.size() != alpha_ref.size())
    throw std::invalid_argument("cone_and_bounds: length mismatch");
  TheoremReport r;
  r.tau_used = tau;
  r.tau_min = tau_min_value;
  r.L = L;
  r.s = S.size();
  r.S = S.indices;
  double sq = 0.0;
  for (std::size_t i = 0; i < alpha_ref.size(); ++i) {
    const double diff = alpha_tilde[i] - alpha_ref[i];
    sq += diff * diff;
    r.err1 += std::abs(diff);
    if (S.member[i])
      r.on_support_err1 += std::abs(diff);
    else
      r.off_support_l1 += std::abs(alpha_tilde[i]);
  }
  r.err2 = std::sqrt(sq);
  if (r.off_support_l1 == 0.0)
    r.cone_ratio = 0.0;
  else
    r.cone_ratio = r.on_support_err1 == 0.0 ? kInf : r.off_support_l1 / r.on_support_err1;

  r.tau_ok = tau >= tau_min_value ? Check::pass : Check::fail;
  r.cone = r.off_support_l1 <= 3.0 * r.on_support_err1 * kBoundSlack ? Check::pass : Check::fail;
  if (std::isfinite(L)) {
    const double s = static_cast<double>(r.s);
    r.bound2 = 3.0 * tau * L * std::sqrt(s);
    r.bound1 = 12.0 * tau * L * s;
    r.boundS = 3.0 * tau * L * s;
    r.boundSc = 9.0 * tau * L * s;
    auto le = [](double lhs, double rhs) { return lhs <= rhs * kBoundSlack ? Check::pass : Check::fail; };
    r.err2_ok = le(r.err2, r.bound2);
    r.err1_ok = le(r.err1, r.bound1);
    r.errS_ok = le(r.on_support_err1, r.boundS);
    r.errSc_ok = le(r.off_support_l1, r.boundSc);
  }
  return r;
}

struct NearSparsity {
  std::vector<double> alpha_s;
  double xi = 0.0;
};

/// Top-s entries by magnitude (ties to the lower index), rest zeroed.
inline std::vector<double> top_s(std::span<const double> alpha, std::size_t s) {
  std::vector<std::size_t> order(alpha.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(alpha[a]) > std::abs(alpha[b]); });
  std::vector<double> out(alpha.size(), 0.0);
  for (std::size_t k = 0; k < std::min(s, alpha.size()); ++k) out[order[k]] = alpha[order[k]];
  return out;
}

/**
 * Near-sparsity residual ξ = ‖g(α^s) + (1/λn)XᵀXα^s‖∞ for the squared hinge
 * loss, with (1/λn)XᵀXα^s = −Xᵀw(α^s). Off the boundary g_i = y_i + α_i/2.
 * At α_i = 0 the conjugate sits on the edge of its domain {α_i y_i ≤ 0} and
 * g_i ranges over {c y_i : c ≥ 1}; the residual uses the closest element,
 * so ξ vanishes at the exact optimum.
 */
inline NearSparsity near_sparsity_xi(const LabeledDataset& ds, std::span<const double> alpha_star, std::size_t s,
                                     double lambda, Loss loss = {LossKind::squared_hinge}) {
  if (loss.kind != LossKind::squared_hinge) throw std::domain_error("near_sparsity_xi: requires a smooth loss");
  if (alpha_star.size() != ds.size()) throw std::invalid_argument("near_sparsity_xi: length mismatch");
  if (s > ds.size()) throw std::invalid_argument("near_sparsity_xi: s exceeds n");
  NearSparsity out;
  out.alpha_s = top_s(alpha_star, s);
  const auto w = recover_primal(ds, out.alpha_s, lambda);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double y = ds.labels[i];
    const double xw = ds.examples[i].dot(w);
    double r = 0.0;
    if (out.alpha_s[i] == 0.0) {
      r = std::max(0.0, 1.0 - y * xw);
    } else {
      r = std::abs(y + 0.5 * out.alpha_s[i] - xw);
    }
    out.xi = std::max(out.xi, r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Restricted eigenvalues, brute force

/// Dense d x n matrix of the columns.
inline Eigen::MatrixXd dense_matrix(const LabeledDataset& ds) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.d), static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& x = ds.examples[i];
    for (std::size_t k = 0; k < x.nnz(); ++k) X(static_cast<Eigen::Index>(x.indices[k]), static_cast<Eigen::Index>(i)) = x.values[k];
  }
  return X;
}

inline Eigen::MatrixXd dense_matrix(const ReducedDataset& r) {
  return Eigen::Map<const Eigen::MatrixXd>(r.values.data(), static_cast<Eigen::Index>(r.m), static_cast<Eigen::Index>(r.size()));
}

/// Largest singular value of X (dense, desk scale only).
inline double max_singular_value(const LabeledDataset& ds) {
  if (ds.size() == 0 || ds.d == 0) return 0.0;
  const Eigen::MatrixXd X = dense_matrix(ds);
  const Eigen::MatrixXd G = X.rows() <= X.cols() ? Eigen::MatrixXd(X * X.transpose()) : Eigen::MatrixXd(X.transpose() * X);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

/// Calls f(T) for every size-s subset T of {0..n-1} in lexicographic order.
template <class F>
void for_each_subset(std::size_t n, std::size_t s, F&& f) {
  if (s > n) return;
  std::vector<std::size_t> t(s);
  std::iota(t.begin(), t.end(), std::size_t{0});
  while (true) {
    f(std::span<const std::size_t>(t));
    std::size_t k = s;
    while (k > 0 && t[k - 1] == n - s + k - 1) --k;
    if (k == 0) return;
    ++t[k - 1];
    for (std::size_t j = k; j < s; ++j) t[j] = t[j - 1] + 1;
  }
}

struct RestrictedSpectrumReport {
  std::size_t s = 0;
  double rho_plus = 0.0;    ///< max over |T| = s of λ_max((1/n) X_TᵀX_T)
  double rho_minus = 0.0;   ///< min over |T| = s of λ_min((1/n) X_TᵀX_T)
  double sigma_s = 0.0;     ///< max over (T1, T2) of ‖U[T1,T2]‖₂, U = (XᵀX − X̂ᵀX̂)/n
  double sigma_diag = 0.0;  ///< max over T of spectral radius of U[T,T]; sup over s-sparse unit α
  double kappa = kInf;
  double relaxation_factor = 4.0;  ///< sup over K_{n,s} ≤ 4 · pairwise sup over S_{n,s}
  bool full_level = false;         ///< s == n: all quantities are exact over the unit ball
  std::size_t subsets = 0;

  static constexpr std::string_view csv_header = "s,rho_plus,rho_minus,sigma_s,sigma_diag,kappa,relaxation_factor,full_level";

  std::string csv_fields() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d", s, rho_plus, rho_minus, sigma_s, sigma_diag,
                  kappa, relaxation_factor, full_level ? 1 : 0);
    return buf;
  }
};

inline constexpr double kSubsetBudget = 1e6;

/**
 * Brute-force restricted eigenvalues at sparsity s over exactly-s-sparse
 * unit vectors. With no operator (or an empty reduced set) U = 0.
 * Throws std::invalid_argument when C(n,s) or C(n,s)² exceeds 1e6.
 */
inline RestrictedSpectrumReport restricted_spectrum_bruteforce(const LabeledDataset& ds, const ReducedDataset* reduced,
                                                               std::size_t s) {
  const std::size_t n = ds.size();
  if (s == 0 || s > n) throw std::invalid_argument("restricted_spectrum: need 1 <= s <= n");
  const double count = binomial(n, s);
  if (count > kSubsetBudget || (reduced && count * count > kSubsetBudget))
    throw std::invalid_argument("restricted_spectrum: combinatorial budget exceeded (C(n,s) = " + std::to_string(count) + ")");
  if (reduced && reduced->size() != n) throw std::invalid_argument("restricted_spectrum: reduced data mismatch");

  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd X = dense_matrix(ds);
  const Eigen::MatrixXd G = (X.transpose() * X) * inv_n;
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (reduced) {
    const Eigen::MatrixXd Xh = dense_matrix(*reduced);
    U = G - (Xh.transpose() * Xh) * inv_n;
  }

  RestrictedSpectrumReport rep;
  rep.s = s;
  rep.full_level = s == n;
  rep.rho_minus = kInf;
  rep.subsets = static_cast<std::size_t>(count);
  const auto si = static_cast<Eigen::Index>(s);
  Eigen::MatrixXd block(si, si);
  std::vector<std::vector<std::size_t>> subsets;
  subsets.reserve(rep.subsets);
  for_each_subset(n, s, [&](std::span<const std::size_t> T) {
    subsets.emplace_back(T.begin(), T.end());
    for (Eigen::Index a = 0; a < si; ++a)
      for (Eigen::Index b = 0; b < si; ++b) block(a, b) = G(static_cast<Eigen::Index>(T[a]), static_cast<Eigen::Index>(T[b]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block, Eigen::EigenvaluesOnly);
    rep.rho_plus = std::max(rep.rho_plus, es.eigenvalues().maxCoeff());
    rep.rho_minus = std::min(rep.rho_minus, es.eigenvalues().minCoeff());
    for (Eigen::Index a = 0; a < si; ++a)
      for (Eigen::Index b = 0; b < si; ++b) block(a, b) = U(static_cast<Eigen::Index>(T[a]), static_cast<Eigen::Index>(T[b]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eu(block, Eigen::EigenvaluesOnly);
    rep.sigma_diag = std::max(rep.sigma_diag, eu.eigenvalues().cwiseAbs().maxCoeff());
  });
  rep.rho_minus = std::max(0.0, rep.rho_minus);
  if (reduced) {
    for (const auto& T1 : subsets)
      for (const auto& T2 : subsets) {
        for (Eigen::Index a = 0; a < si; ++a)
          for (Eigen::Index b = 0; b < si; ++b)
            block(a, b) = U(static_cast<Eigen::Index>(T1[a]), static_cast<Eigen::Index>(T2[b]));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
        rep.sigma_s = std::max(rep.sigma_s, svd.singularValues()(0));
      }
  }
  rep.kappa = rep.rho_minus > 0.0 ? rep.rho_plus / rep.rho_minus : kInf;
  return rep;
}

/// Restricted-eigenvalue hypothesis and the resulting non-smooth-loss bounds.
struct NonsmoothCheck {
  bool condition = false;  ///< σ < ρ⁻ at the checked level
  double bound2 = kInf;    ///< 3λτ√s / (2(ρ⁻ − σ))
  double bound1 = kInf;    ///< 6λτs / (ρ⁻ − σ)
};

/// `level_report` is the spectrum at level min(16s, n); s is the dual sparsity.
inline NonsmoothCheck check_nonsmooth_condition(const RestrictedSpectrumReport& level_report, std::size_t s, double lambda,
                                                double tau) {
  NonsmoothCheck c;
  const double gap = level_report.rho_minus - level_report.sigma_s;
  c.condition = gap > 0.0;
  if (!c.condition) return c;
  const double sd = static_cast<double>(s);
  c.bound2 = 3.0 * lambda * tau * std::sqrt(sd) / (2.0 * gap);
  c.bound1 = 6.0 * lambda * tau * sd / gap;
  return c;
}

/// (σ₁/(λn))·3Lτ√s
inline double primal_error_bound(double sigma1, double lambda, std::size_t n, double L, double tau, std::size_t s) {
  return sigma1 / (lambda * static_cast<double>(n)) * 3.0 * L * tau * std::sqrt(static_cast<double>(s));
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 paired points");
  double mx = 0, my = 0;
  const double k = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= k;
  my /= k;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace dsrr
