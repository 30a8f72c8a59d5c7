#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dsrr/dataset.hpp"
#include "dsrr/rng.hpp"

namespace dsrr {

enum class OperatorKind {
  gaussian,    ///< A_ij ~ N(0, 1/m)
  rademacher,  ///< A_ij = +-1/sqrt(m)
  discrete,    ///< A_ij = +-sqrt(3/m) w.p. 1/6 each, 0 w.p. 2/3
  hashing,     ///< A = HD, one bucket and one sign per feature
  hadamard,    ///< A = sqrt(d/m) P H D on the zero-padded power-of-two dimension
  sampling,    ///< A = sqrt(d/m) P, coordinates sampled with replacement
  identity,    ///< test hook: c * I (c = 1 for the identity embedding)
};

inline std::string_view kind_name(OperatorKind k) {
  switch (k) {
    case OperatorKind::gaussian: return "gauss";
    case OperatorKind::rademacher: return "rademacher";
    case OperatorKind::discrete: return "discrete";
    case OperatorKind::hashing: return "hash";
    case OperatorKind::hadamard: return "hadamard";
    case OperatorKind::sampling: return "sample";
    case OperatorKind::identity: return "identity";
  }
  return "?";
}

inline OperatorKind parse_kind(std::string_view name) {
  for (auto k : {OperatorKind::gaussian, OperatorKind::rademacher, OperatorKind::discrete, OperatorKind::hashing,
                 OperatorKind::hadamard, OperatorKind::sampling, OperatorKind::identity})
    if (kind_name(k) == name) return k;
  throw std::invalid_argument("unknown operator kind '" + std::string(name) + "'");
}

/// Unnormalized in-place fast Walsh-Hadamard transform; size must be a power of two.
inline void fwht(std::span<double> a) noexcept {
  const std::size_t n = a.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = a[j], y = a[j + h];
        a[j] = x + y;
        a[j + h] = x - y;
      }
    }
  }
}

struct OperatorOptions {
  /// Dense projections with d*m above this are regenerated column-wise on demand.
  std::size_t materialize_limit = std::size_t{1} << 26;
};

namespace detail {

struct DenseProjection {
  CounterRng rng{0};
  double forced_value = std::numeric_limits<double>::quiet_NaN();  // test hook: all entries equal
  std::vector<double> columns;                                     // d blocks of m entries, empty if not materialized
};

struct Hashing {
  std::vector<std::size_t> bucket;
  std::vector<double> sign;
};

struct Hadamard {
  std::size_t d_pad = 1;
  std::vector<double> sign;
  std::vector<std::size_t> coords;
};

struct Sampling {
  std::vector<std::size_t> coords;
  std::vector<std::size_t> first_hit;  // CSR over features: rows sampling feature j
  std::vector<std::size_t> hit_rows;
};

struct ScaledIdentity {
  double scale = 1.0;
};

inline Sampling build_sampling(std::vector<std::size_t> coords, std::size_t d) {
  Sampling s;
  s.first_hit.assign(d + 1, 0);
  for (std::size_t c : coords) ++s.first_hit[c + 1];
  for (std::size_t j = 0; j < d; ++j) s.first_hit[j + 1] += s.first_hit[j];
  s.hit_rows.resize(coords.size());
  std::vector<std::size_t> fill(s.first_hit.begin(), s.first_hit.end() - 1);
  for (std::size_t r = 0; r < coords.size(); ++r) s.hit_rows[fill[coords[r]]++] = r;
  s.coords = std::move(coords);
  return s;
}

}  // namespace detail

/// Reduced data matrix X^ (m x n, column-major) with the original labels.
struct ReducedDataset {
  std::size_t m = 0;
  std::vector<double> values;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return m; }
  int label(std::size_t i) const noexcept { return labels[i]; }

  std::span<const double> column(std::size_t i) const noexcept { return {values.data() + i * m, m}; }

  double column_dot(std::size_t i, std::span<const double> w) const noexcept {
    const double* c = values.data() + i * m;
    double s = 0.0;
    for (std::size_t r = 0; r < m; ++r) s += c[r] * w[r];
    return s;
  }
  void column_axpy(std::size_t i, double a, std::span<double> w) const noexcept {
    const double* c = values.data() + i * m;
    for (std::size_t r = 0; r < m; ++r) w[r] += a * c[r];
  }
  double column_sq_norm(std::size_t i) const noexcept {
    const double* c = values.data() + i * m;
    double s = 0.0;
    for (std::size_t r = 0; r < m; ++r) s += c[r] * c[r];
    return s;
  }

  ReducedDataset subset(std::span<const std::size_t> rows) const {
    ReducedDataset out;
    out.m = m;
    for (std::size_t r : rows) {
      auto c = column(r);
      out.values.insert(out.values.end(), c.begin(), c.end());
      out.labels.push_back(labels.at(r));
    }
    return out;
  }
};

/**
 * A seeded linear map R^d -> R^m. Immutable after construction; the same
 * (kind, d, m, seed) always yields the same map.
 */
class ReductionOperator {
 public:
  OperatorKind kind() const noexcept { return kind_; }
  std::size_t d() const noexcept { return d_; }
  std::size_t m() const noexcept { return m_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool materialized() const noexcept {
    auto* p = std::get_if<detail::DenseProjection>(&impl_);
    return p && !p->columns.empty();
  }

  /// Padded dimension for the Hadamard operator, d otherwise.
  std::size_t padded_dim() const noexcept {
    if (auto* h = std::get_if<detail::Hadamard>(&impl_)) return h->d_pad;
    return d_;
  }

  /// "kind=<k> d=<d> m=<m> seed=<s>"
  std::string spec() const {
    std::ostringstream os;
    os << "kind=" << kind_name(kind_) << " d=" << d_ << " m=" << m_ << " seed=" << seed_;
    return os.str();
  }

  friend ReductionOperator make_operator(OperatorKind, std::size_t, std::size_t, std::uint64_t, const OperatorOptions&);

  // ---- test hooks with explicit parameters ----
  static ReductionOperator scaled_identity(std::size_t d, double scale = 1.0) {
    if (d < 1) throw std::invalid_argument("operator: d must be >= 1");
    ReductionOperator op(OperatorKind::identity, d, d, 0);
    op.impl_ = detail::ScaledIdentity{scale};
    return op;
  }

  static ReductionOperator hashing(std::size_t m, std::vector<std::size_t> bucket, std::vector<double> sign) {
    if (m < 1 || bucket.empty() || bucket.size() != sign.size()) throw std::invalid_argument("operator: bad hashing table");
    for (std::size_t b : bucket)
      if (b >= m) throw std::invalid_argument("operator: hash bucket out of range");
    ReductionOperator op(OperatorKind::hashing, bucket.size(), m, 0);
    op.impl_ = detail::Hashing{std::move(bucket), std::move(sign)};
    return op;
  }

  static ReductionOperator hadamard(std::size_t d, std::vector<double> sign, std::vector<std::size_t> coords) {
    if (d < 1 || coords.empty()) throw std::invalid_argument("operator: bad hadamard parameters");
    const std::size_t d_pad = std::bit_ceil(d);
    if (sign.size() != d_pad) throw std::invalid_argument("operator: hadamard needs d_pad signs");
    for (std::size_t c : coords)
      if (c >= d_pad) throw std::invalid_argument("operator: hadamard coordinate out of range");
    ReductionOperator op(OperatorKind::hadamard, d, coords.size(), 0);
    op.impl_ = detail::Hadamard{d_pad, std::move(sign), std::move(coords)};
    return op;
  }

  static ReductionOperator sampling(std::size_t d, std::vector<std::size_t> coords) {
    if (d < 1 || coords.empty()) throw std::invalid_argument("operator: bad sampling parameters");
    if (coords.size() > d) throw std::invalid_argument("operator: sampling requires m <= d");
    for (std::size_t c : coords)
      if (c >= d) throw std::invalid_argument("operator: sampling coordinate out of range");
    ReductionOperator op(OperatorKind::sampling, d, coords.size(), 0);
    op.impl_ = detail::build_sampling(std::move(coords), d);
    return op;
  }

  /// Gaussian-kind projection whose entries all equal `value`.
  static ReductionOperator constant_projection(std::size_t d, std::size_t m, double value) {
    if (d < 1 || m < 1) throw std::invalid_argument("operator: d and m must be >= 1");
    ReductionOperator op(OperatorKind::gaussian, d, m, 0);
    detail::DenseProjection p;
    p.forced_value = value;
    op.impl_ = std::move(p);
    return op;
  }

  /// Entry A(r, j) of a dense projection (regenerated from the counter stream).
  double dense_entry(std::size_t r, std::size_t j) const {
    const auto& p = std::get<detail::DenseProjection>(impl_);
    return generate_entry(p, r, j);
  }

  /// A x for a sparse x with x.dim == d.
  std::vector<double> apply(const SparseVector& x) const {
    if (x.dim != d_) throw std::invalid_argument("apply: dimension mismatch (" + std::to_string(x.dim) + " vs " + std::to_string(d_) + ")");
    return apply_entries(x.indices, x.values);
  }

  /// A x for a dense x of length d.
  std::vector<double> apply_dense(std::span<const double> x) const {
    if (x.size() != d_) throw std::invalid_argument("apply: dimension mismatch");
    std::vector<std::size_t> idx;
    std::vector<double> val;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j] != 0.0) {
        idx.push_back(j);
        val.push_back(x[j]);
      }
    return apply_entries(idx, val);
  }

  /// A^T u. The Hadamard adjoint works on the padded dimension and truncates to d.
  std::vector<double> adjoint(std::span<const double> u) const {
    if (u.size() != m_) throw std::invalid_argument("adjoint: dimension mismatch");
    std::vector<double> out(d_, 0.0);
    std::visit(
        [&](const auto& impl) {
          using T = std::decay_t<decltype(impl)>;
          if constexpr (std::is_same_v<T, detail::DenseProjection>) {
            for (std::size_t j = 0; j < d_; ++j) {
              double s = 0.0;
              for (std::size_t r = 0; r < m_; ++r) s += entry(impl, r, j) * u[r];
              out[j] = s;
            }
          } else if constexpr (std::is_same_v<T, detail::Hashing>) {
            for (std::size_t j = 0; j < d_; ++j) out[j] = impl.sign[j] * u[impl.bucket[j]];
          } else if constexpr (std::is_same_v<T, detail::Hadamard>) {
            std::vector<double> z(impl.d_pad, 0.0);
            for (std::size_t r = 0; r < m_; ++r) z[impl.coords[r]] += u[r];
            fwht(z);
            const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
            for (std::size_t j = 0; j < d_; ++j) out[j] = z[j] * impl.sign[j] * scale;
          } else if constexpr (std::is_same_v<T, detail::Sampling>) {
            const double scale = std::sqrt(static_cast<double>(d_) / static_cast<double>(m_));
            for (std::size_t r = 0; r < m_; ++r) out[impl.coords[r]] += scale * u[r];
          } else {
            for (std::size_t j = 0; j < d_; ++j) out[j] = impl.scale * u[j];
          }
        },
        impl_);
    return out;
  }

  /// Column-wise A x_i; labels copied.
  ReducedDataset apply_dataset(const LabeledDataset& ds) const {
    if (ds.size() > 0 && ds.d != d_) throw std::invalid_argument("apply_dataset: dimension mismatch");
    ReducedDataset out;
    out.m = m_;
    out.labels = ds.labels;
    out.values.reserve(ds.size() * m_);
    for (const auto& x : ds.examples) {
      auto c = apply(x);
      out.values.insert(out.values.end(), c.begin(), c.end());
    }
    return out;
  }

  /// Dense m x d matrix (row-major) for oracles; built by applying A to basis vectors.
  std::vector<double> to_dense_matrix() const {
    std::vector<double> a(m_ * d_, 0.0);
    SparseVector e;
    e.dim = d_;
    e.indices = {0};
    e.values = {1.0};
    for (std::size_t j = 0; j < d_; ++j) {
      e.indices[0] = j;
      const auto col = apply(e);
      for (std::size_t r = 0; r < m_; ++r) a[r * d_ + j] = col[r];
    }
    return a;
  }

 private:
  ReductionOperator(OperatorKind k, std::size_t d, std::size_t m, std::uint64_t seed) : kind_(k), d_(d), m_(m), seed_(seed) {}

  double generate_entry(const detail::DenseProjection& p, std::size_t r, std::size_t j) const {
    if (!std::isnan(p.forced_value)) return p.forced_value;
    const std::uint64_t c = static_cast<std::uint64_t>(j) * m_ + r;
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m_));
    switch (kind_) {
      case OperatorKind::gaussian: return p.rng.normal_at(c) * inv_sqrt_m;
      case OperatorKind::rademacher: return (p.rng.bits_at(c) >> 63) ? inv_sqrt_m : -inv_sqrt_m;
      case OperatorKind::discrete: {
        const auto u = p.rng.below_at(c, 6);
        const double v = std::sqrt(3.0) * inv_sqrt_m;
        return u == 0 ? v : (u == 1 ? -v : 0.0);
      }
      default: throw std::logic_error("dense entry requested for non-dense operator");
    }
  }

  double entry(const detail::DenseProjection& p, std::size_t r, std::size_t j) const {
    return p.columns.empty() ? generate_entry(p, r, j) : p.columns[j * m_ + r];
  }

  std::vector<double> apply_entries(std::span<const std::size_t> idx, std::span<const double> val) const {
    std::vector<double> out(m_, 0.0);
    std::visit(
        [&](const auto& impl) {
          using T = std::decay_t<decltype(impl)>;
          if constexpr (std::is_same_v<T, detail::DenseProjection>) {
            for (std::size_t k = 0; k < idx.size(); ++k) {
              const std::size_t j = idx[k];
              const double xj = val[k];
              if (impl.columns.empty()) {
                for (std::size_t r = 0; r < m_; ++r) out[r] += generate_entry(impl, r, j) * xj;
              } else {
                const double* col = impl.columns.data() + j * m_;
                for (std::size_t r = 0; r < m_; ++r) out[r] += col[r] * xj;
              }
            }
          } else if constexpr (std::is_same_v<T, detail::Hashing>) {
            for (std::size_t k = 0; k < idx.size(); ++k) out[impl.bucket[idx[k]]] += val[k] * impl.sign[idx[k]];
          } else if constexpr (std::is_same_v<T, detail::Hadamard>) {
            std::vector<double> z(impl.d_pad, 0.0);
            for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = val[k] * impl.sign[idx[k]];
            fwht(z);
            // (1/sqrt(d_pad)) H, then sqrt(d_pad/m) sampling scale
            const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
            for (std::size_t r = 0; r < m_; ++r) out[r] = z[impl.coords[r]] * scale;
          } else if constexpr (std::is_same_v<T, detail::Sampling>) {
            const double scale = std::sqrt(static_cast<double>(d_) / static_cast<double>(m_));
            for (std::size_t k = 0; k < idx.size(); ++k)
              for (std::size_t h = impl.first_hit[idx[k]]; h < impl.first_hit[idx[k] + 1]; ++h)
                out[impl.hit_rows[h]] = scale * val[k];
          } else {
            for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = impl.scale * val[k];
          }
        },
        impl_);
    return out;
  }

  OperatorKind kind_;
  std::size_t d_, m_;
  std::uint64_t seed_;
  std::variant<detail::DenseProjection, detail::Hashing, detail::Hadamard, detail::Sampling, detail::ScaledIdentity> impl_;
};

/// Builds a seeded operator. Stream key = stream_key(kind name, seed).
inline ReductionOperator make_operator(OperatorKind kind, std::size_t d, std::size_t m, std::uint64_t seed,
                                       const OperatorOptions& opts = {}) {
  if (d < 1) throw std::invalid_argument("make_operator: d must be >= 1");
  if (m < 1) throw std::invalid_argument("make_operator: m must be >= 1");
  CounterRng rng(stream_key(kind_name(kind), seed));
  ReductionOperator op(kind, d, m, seed);
  switch (kind) {
    case OperatorKind::gaussian:
    case OperatorKind::rademacher:
    case OperatorKind::discrete: {
      detail::DenseProjection p;
      p.rng = rng;
      op.impl_ = p;
      if (d * m <= opts.materialize_limit) {
        std::vector<double> cols(d * m);
        for (std::size_t j = 0; j < d; ++j)
          for (std::size_t r = 0; r < m; ++r) cols[j * m + r] = op.generate_entry(p, r, j);
        std::get<detail::DenseProjection>(op.impl_).columns = std::move(cols);
      }
      break;
    }
    case OperatorKind::hashing: {
      detail::Hashing h;
      h.bucket.resize(d);
      h.sign.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        h.bucket[j] = static_cast<std::size_t>(rng.below_at(2 * j, m));
        h.sign[j] = (rng.bits_at(2 * j + 1) >> 63) ? 1.0 : -1.0;
      }
      op.impl_ = std::move(h);
      break;
    }
    case OperatorKind::hadamard: {
      detail::Hadamard h;
      h.d_pad = std::bit_ceil(d);
      h.sign.resize(h.d_pad);
      for (std::size_t j = 0; j < h.d_pad; ++j) h.sign[j] = (rng.bits_at(j) >> 63) ? 1.0 : -1.0;
      h.coords.resize(m);
      for (std::size_t r = 0; r < m; ++r) h.coords[r] = static_cast<std::size_t>(rng.below_at(h.d_pad + r, h.d_pad));
      op.impl_ = std::move(h);
      break;
    }
    case OperatorKind::sampling: {
      if (m > d) throw std::invalid_argument("make_operator: sampling requires m <= d");
      std::vector<std::size_t> coords(m);
      for (std::size_t r = 0; r < m; ++r) coords[r] = static_cast<std::size_t>(rng.below_at(r, d));
      op.impl_ = detail::build_sampling(std::move(coords), d);
      break;
    }
    case OperatorKind::identity:
      if (m != d) throw std::invalid_argument("make_operator: identity requires m == d");
      op.impl_ = detail::ScaledIdentity{1.0};
      break;
  }
  return op;
}

/// Parses the header written by ReductionOperator::spec().
inline ReductionOperator parse_operator_spec(std::string_view header, const OperatorOptions& opts = {}) {
  std::istringstream is{std::string(header)};
  std::string tok, kind;
  std::size_t d = 0, m = 0;
  std::uint64_t seed = 0;
  bool have_kind = false, have_d = false, have_m = false, have_seed = false;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("operator spec: malformed token '" + tok + "'");
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "kind") kind = val, have_kind = true;
    else if (key == "d") d = std::stoull(val), have_d = true;
    else if (key == "m") m = std::stoull(val), have_m = true;
    else if (key == "seed") seed = std::stoull(val), have_seed = true;
    else throw std::invalid_argument("operator spec: unknown key '" + key + "'");
  }
  if (!(have_kind && have_d && have_m && have_seed)) throw std::invalid_argument("operator spec: need kind, d, m, seed");
  return make_operator(parse_kind(kind), d, m, seed, opts);
}

// ---------------------------------------------------------------------------
// JL diagnostics

/// Empirical distortion |‖Ax‖² − ‖x‖²| / ‖x‖² over a probe set.
struct JLDiagnostic {
  std::string kind;
  std::size_t d = 0, m = 0;
  std::uint64_t seed = 0;
  std::vector<double> distortions;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;
  double R = 0.0;                ///< max ‖p‖₂ over probes
  double max_inf_ratio = 0.0;    ///< max ‖p‖∞/‖p‖₂, reported only (hashing condition has no checkable constant)

  static constexpr std::string_view csv_header = "kind,d,m,seed,quantile,value";

  std::string csv_rows() const {
    std::ostringstream os;
    char buf[160];
    const std::pair<const char*, double> qs[] = {{"0.5", q50}, {"0.9", q90}, {"0.99", q99}};
    for (auto [q, v] : qs) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%llu,%s,%.17g\n", kind.c_str(), d, m,
                    static_cast<unsigned long long>(seed), q, v);
      os << buf;
    }
    return os.str();
  }
};

/// Linear-interpolation quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

inline JLDiagnostic jl_distortion(const ReductionOperator& op, std::span<const SparseVector> probes) {
  if (probes.empty()) throw std::invalid_argument("jl_distortion: no probes");
  JLDiagnostic diag;
  diag.kind = std::string(kind_name(op.kind()));
  diag.d = op.d();
  diag.m = op.m();
  diag.seed = op.seed();
  for (const auto& p : probes) {
    const double n2 = p.squared_norm();
    if (n2 == 0.0) throw std::invalid_argument("jl_distortion: zero probe");
    const auto ax = op.apply(p);
    double a2 = 0.0;
    for (double v : ax) a2 += v * v;
    diag.distortions.push_back(std::abs(a2 - n2) / n2);
    diag.R = std::max(diag.R, std::sqrt(n2));
    double inf = 0.0;
    for (double v : p.values) inf = std::max(inf, std::abs(v));
    diag.max_inf_ratio = std::max(diag.max_inf_ratio, inf / std::sqrt(n2));
  }
  diag.q50 = quantile(diag.distortions, 0.5);
  diag.q90 = quantile(diag.distortions, 0.9);
  diag.q99 = quantile(diag.distortions, 0.99);
  return diag;
}

/// `count` dense Gaussian probes scaled to unit norm.
inline std::vector<SparseVector> unit_probes(std::size_t d, std::size_t count, std::uint64_t seed) {
  CounterRng rng(stream_key("probes", seed));
  std::vector<SparseVector> out;
  std::vector<double> x(d);
  for (std::size_t k = 0; k < count; ++k) {
    double n2 = 0.0;
    for (double& v : x) {
      v = rng.normal();
      n2 += v * v;
    }
    const double nrm = std::sqrt(n2);
    for (double& v : x) v /= nrm;
    out.push_back(SparseVector::from_dense(x));
  }
  return out;
}

}  // namespace dsrr
