#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dsrr/rng.hpp"

namespace dsrr {

/// Sparse column x_i: strictly ascending 0-based indices, no stored zeros.
struct SparseVector {
  std::vector<std::size_t> indices;
  std::vector<double> values;
  std::size_t dim = 0;

  std::size_t nnz() const noexcept { return indices.size(); }

  double squared_norm() const noexcept {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }

  double dot(std::span<const double> dense) const noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) s += values[k] * dense[indices[k]];
    return s;
  }

  /// dense += a * x
  void axpy_into(double a, std::span<double> dense) const noexcept {
    for (std::size_t k = 0; k < indices.size(); ++k) dense[indices[k]] += a * values[k];
  }

  std::vector<double> to_dense() const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
    return out;
  }

  static SparseVector from_dense(std::span<const double> dense) {
    SparseVector v;
    v.dim = dense.size();
    for (std::size_t j = 0; j < dense.size(); ++j) {
      if (dense[j] != 0.0) {
        v.indices.push_back(j);
        v.values.push_back(dense[j]);
      }
    }
    return v;
  }

  void validate() const {
    if (indices.size() != values.size()) throw std::invalid_argument("SparseVector: indices/values length mismatch");
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] >= dim) throw std::invalid_argument("SparseVector: index out of range");
      if (k > 0 && indices[k] <= indices[k - 1]) throw std::invalid_argument("SparseVector: indices not strictly ascending");
      if (values[k] == 0.0) throw std::invalid_argument("SparseVector: stored explicit zero");
    }
  }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// Column-oriented example matrix X (d x n) with labels in {+1, -1}.
struct LabeledDataset {
  std::vector<SparseVector> examples;
  std::vector<int> labels;
  std::size_t d = 0;

  std::size_t size() const noexcept { return examples.size(); }
  std::size_t dim() const noexcept { return d; }
  int label(std::size_t i) const noexcept { return labels[i]; }

  double column_dot(std::size_t i, std::span<const double> w) const noexcept { return examples[i].dot(w); }
  void column_axpy(std::size_t i, double a, std::span<double> w) const noexcept { examples[i].axpy_into(a, w); }
  double column_sq_norm(std::size_t i) const noexcept { return examples[i].squared_norm(); }

  std::size_t total_nnz() const noexcept {
    std::size_t s = 0;
    for (const auto& x : examples) s += x.nnz();
    return s;
  }

  void validate() const {
    if (examples.size() != labels.size()) throw std::invalid_argument("LabeledDataset: examples/labels length mismatch");
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (labels[i] != 1 && labels[i] != -1) throw std::invalid_argument("LabeledDataset: label not in {+1,-1}");
      if (examples[i].dim != d) throw std::invalid_argument("LabeledDataset: example dimension mismatch");
      examples[i].validate();
    }
  }

  LabeledDataset subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.d = d;
    out.examples.reserve(rows.size());
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) {
      out.examples.push_back(examples.at(r));
      out.labels.push_back(labels.at(r));
    }
    return out;
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// One row of a dataset statistics table.
struct DatasetCard {
  std::string name;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t d = 0;
  std::size_t n_nodes = 0;

  void validate() const {
    if (n_train == 0 || n_test == 0 || d == 0 || n_nodes == 0)
      throw std::invalid_argument("DatasetCard: all counts must be positive");
  }

  /// "# dataset name=<name> n_train=<..> n_test=<..> d=<..> nodes=<..>"
  std::string header_line() const {
    std::ostringstream os;
    os << "# dataset name=" << name << " n_train=" << n_train << " n_test=" << n_test << " d=" << d
       << " nodes=" << n_nodes;
    return os.str();
  }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const char* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

}  // namespace detail

/**
 * Reads svmlight/libsvm text: `<label> <idx>:<val> ...` per line, indices
 * 1-based in the file. Labels 1/+1 map to +1, -1/0 to -1. Text after '#'
 * is ignored. Explicit zero values are dropped. d is the largest index seen
 * unless `dim_override` is given (it must not be smaller).
 */
inline LabeledDataset parse_svmlight(std::istream& in, std::optional<std::size_t> dim_override = std::nullopt) {
  LabeledDataset ds;
  std::size_t max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::size_t, double>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto toks = detail::split_ws(view);
    if (toks.empty()) continue;

    double label_value = 0.0;
    if (!detail::parse_double(toks[0], label_value)) throw ParseError(lineno, "malformed label '" + std::string(toks[0]) + "'");
    int label = 0;
    if (label_value == 1.0)
      label = 1;
    else if (label_value == -1.0 || label_value == 0.0)
      label = -1;
    else
      throw ParseError(lineno, "label must be one of 1, +1, -1, 0");

    entries.clear();
    for (std::size_t t = 1; t < toks.size(); ++t) {
      const auto tok = toks[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0) throw ParseError(lineno, "malformed token '" + std::string(tok) + "'");
      std::size_t idx = 0;
      const auto key = tok.substr(0, colon);
      auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || p != key.data() + key.size() || idx == 0)
        throw ParseError(lineno, "malformed index in '" + std::string(tok) + "'");
      double v = 0.0;
      if (!detail::parse_double(tok.substr(colon + 1), v)) throw ParseError(lineno, "malformed value in '" + std::string(tok) + "'");
      entries.emplace_back(idx - 1, v);
      max_index = std::max(max_index, idx);
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    SparseVector x;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (k > 0 && entries[k].first == entries[k - 1].first)
        throw ParseError(lineno, "duplicate index " + std::to_string(entries[k].first + 1));
      if (entries[k].second == 0.0) continue;
      x.indices.push_back(entries[k].first);
      x.values.push_back(entries[k].second);
    }
    ds.examples.push_back(std::move(x));
    ds.labels.push_back(label);
  }
  std::size_t d = max_index;
  if (dim_override) {
    if (*dim_override < max_index)
      throw std::invalid_argument("parse_svmlight: dimension override " + std::to_string(*dim_override) +
                                  " smaller than max index " + std::to_string(max_index));
    d = *dim_override;
  }
  ds.d = d;
  for (auto& x : ds.examples) x.dim = d;
  return ds;
}

inline LabeledDataset parse_svmlight(std::string_view text, std::optional<std::size_t> dim_override = std::nullopt) {
  std::istringstream is{std::string(text)};
  return parse_svmlight(is, dim_override);
}

inline LabeledDataset load_svmlight(const std::string& path, std::optional<std::size_t> dim_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_svmlight(in, dim_override);
}

/// Writes with %.17g so values reparse bit-exactly.
inline void write_svmlight(std::ostream& out, const LabeledDataset& ds) {
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << (ds.labels[i] > 0 ? "+1" : "-1");
    const auto& x = ds.examples[i];
    for (std::size_t k = 0; k < x.nnz(); ++k) {
      std::snprintf(buf, sizeof buf, " %zu:%.17g", x.indices[k] + 1, x.values[k]);
      out << buf;
    }
    out << '\n';
  }
}

inline std::string to_svmlight(const LabeledDataset& ds) {
  std::ostringstream os;
  write_svmlight(os, ds);
  return os.str();
}

/// Scales every non-empty example to unit l2 norm.
inline LabeledDataset normalize_l2(LabeledDataset ds) {
  for (auto& x : ds.examples) {
    const double nrm = std::sqrt(x.squared_norm());
    if (nrm == 0.0 || nrm == 1.0) continue;
    for (double& v : x.values) v /= nrm;
  }
  return ds;
}

/**
 * Row indices of k disjoint pieces whose sizes differ by at most one.
 * k == 1 keeps the original order; otherwise rows are shuffled with the
 * seed, dealt into contiguous chunks, and each chunk is re-sorted.
 */
inline std::vector<std::vector<std::size_t>> partition_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("partition: k must be >= 1");
  if (k > n) throw std::invalid_argument("partition: k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (k > 1) CounterRng(stream_key("partition", seed)).shuffle(order);
  std::vector<std::vector<std::size_t>> parts(k);
  const std::size_t base = n / k, extra = n % k;
  std::size_t pos = 0;
  for (std::size_t p = 0; p < k; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    parts[p].assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    std::sort(parts[p].begin(), parts[p].end());
    pos += len;
  }
  return parts;
}

inline std::vector<LabeledDataset> partition(const LabeledDataset& ds, std::size_t k, std::uint64_t seed) {
  std::vector<LabeledDataset> out;
  for (const auto& rows : partition_indices(ds.size(), k, seed)) out.push_back(ds.subset(rows));
  return out;
}

/**
 * Parameters of the two-cluster generator.
 *
 * Bulk examples sit at y * a * v + noise * g with a ~ margin * U[1, 1.5],
 * v a random unit direction and g ~ N(0, I/d). `s_target` examples form a
 * thin slab with a ~ margin * slab_width * U(0, 1]; these are the ones the
 * solver keeps as support vectors. All examples are l2-normalized.
 */
struct SynthSpec {
  std::size_t n = 200;
  std::size_t d = 50;
  std::size_t s_target = 20;
  double margin = 4.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
  double slab_width = 0.1;
};

inline LabeledDataset synth_sparse_dual(const SynthSpec& spec) {
  if (spec.s_target == 0 || spec.s_target > spec.n) throw std::invalid_argument("synth: need 0 < s_target <= n");
  if (!(spec.margin > 0.0)) throw std::invalid_argument("synth: margin must be positive");
  if (spec.d == 0) throw std::invalid_argument("synth: d must be positive");
  CounterRng rng(stream_key("synth", spec.seed));

  std::vector<double> v(spec.d);
  double vn = 0.0;
  for (double& e : v) {
    e = rng.normal();
    vn += e * e;
  }
  vn = std::sqrt(vn);
  for (double& e : v) e /= vn;

  std::vector<std::size_t> order(spec.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<char> in_slab(spec.n, 0);
  for (std::size_t k = 0; k < spec.s_target; ++k) in_slab[order[k]] = 1;

  LabeledDataset ds;
  ds.d = spec.d;
  const double g_scale = spec.noise / std::sqrt(static_cast<double>(spec.d));
  std::vector<double> x(spec.d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int y = (i % 2 == 0) ? 1 : -1;
    const double a = in_slab[i] ? spec.margin * spec.slab_width * (1.0 - rng.uniform())
                                : spec.margin * (1.0 + 0.5 * rng.uniform());
    for (std::size_t j = 0; j < spec.d; ++j) x[j] = y * a * v[j] + g_scale * rng.normal();
    ds.examples.push_back(SparseVector::from_dense(x));
    ds.labels.push_back(y);
  }
  return normalize_l2(std::move(ds));
}

/**
 * Examples with only `nnz` active coordinates each, drawn around a sparse
 * class direction. Used where the sampling operator's sensitivity to
 * ||x||_inf / ||x||_2 matters.
 */
inline LabeledDataset synth_spiky(std::size_t n, std::size_t d, std::size_t nnz, std::uint64_t seed) {
  if (nnz == 0 || nnz > d) throw std::invalid_argument("synth_spiky: need 0 < nnz <= d");
  CounterRng rng(stream_key("synth-spiky", seed));
  LabeledDataset ds;
  ds.d = d;
  std::vector<double> x(d);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = (i % 2 == 0) ? 1 : -1;
    std::fill(x.begin(), x.end(), 0.0);
    // class-indicative coordinate plus random spikes
    x[y > 0 ? 0 : 1] = 1.0 + rng.uniform();
    for (std::size_t k = 1; k < nnz; ++k) x[static_cast<std::size_t>(rng.below(d))] += rng.normal();
    ds.examples.push_back(SparseVector::from_dense(x));
    ds.labels.push_back(y);
  }
  return normalize_l2(std::move(ds));
}

}  // namespace dsrr
