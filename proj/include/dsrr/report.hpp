#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace dsrr {

/// Shortest round-trip representation used in every CSV.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvTable {
  std::string header;
  std::vector<std::string> rows;

  std::string str() const {
    std::string out = header + '\n';
    for (const auto& r : rows) out += r + '\n';
    return out;
  }
};

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

/// DSRR_THREADS caps the pool; default is the hardware concurrency.
inline std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DSRR_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

/**
 * Runs f(0..jobs-1) on a small pool and returns the results in job order,
 * so output never depends on scheduling. The first exception is rethrown.
 */
template <class F>
auto parallel_map(std::size_t jobs, F&& f) -> std::vector<decltype(f(std::size_t{0}))> {
  using R = decltype(f(std::size_t{0}));
  std::vector<std::optional<R>> slots(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        slots[j].emplace(f(j));
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t threads = worker_count(jobs);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  std::vector<R> out;
  out.reserve(jobs);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

inline std::string num_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace detail

/// Polyline plot, one curve per series. Non-finite (or non-positive on log axes) points are dropped.
inline std::string svg_line_plot(const PlotSpec& spec, const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
  auto tx = [&](double v) { return spec.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.logy ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.logx || x > 0) && (!spec.logy || y > 0);
  };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, tx(s.x[i]));
        x1 = std::max(x1, tx(s.x[i]));
        y0 = std::min(y0, ty(s.y[i]));
        y1 = std::max(y1, ty(s.y[i]));
      }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };

  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" font-size=\"11\">\n",
                W, H);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"22\" font-size=\"14\">", L);
  out += buf + detail::xml_escape(spec.title) + "</text>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", L, T,
                W - L - R, H - T - B);
  out += buf;
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double lx = spec.logx ? std::pow(10.0, fx) : fx, ly = spec.logy ? std::pow(10.0, fy) : fy;
    const double gx = L + (W - L - R) * k / 4.0, gy = H - B - (H - T - B) * k / 4.0;
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", gx, H - B, gx, H - B + 5);
    out += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n", gx, H - B + 18,
                  detail::num_label(lx).c_str());
    out += buf;
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L - 5, gy, L, gy);
    out += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%s</text>\n", L - 8, gy + 4,
                  detail::num_label(ly).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">", L + (W - L - R) / 2, H - 15);
  out += buf + detail::xml_escape(spec.xlabel) + "</text>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"15\" y=\"%g\" transform=\"rotate(-90 15 %g)\" text-anchor=\"middle\">",
                T + (H - T - B) / 2, T + (H - T - B) / 2);
  out += buf + detail::xml_escape(spec.ylabel) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    out += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"";
    out += detail::palette(k);
    out += "\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
      out += buf;
    }
    out += "\"/>\n";
    const double ly = T + 14 + 16 * static_cast<double>(k);
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                  W - R + 10, ly - 4, W - R + 30, ly - 4, detail::palette(k));
    out += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\">", W - R + 35, ly);
    out += buf + detail::xml_escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

struct Bar {
  std::string label;
  double value = 0.0, lo = 0.0, hi = 0.0;  ///< lo/hi drawn as a range whisker
};

/// Vertically stacked bar-chart panels sharing one set of labels.
inline std::string svg_bar_panels(const std::string& title, const std::vector<std::pair<std::string, std::vector<Bar>>>& panels) {
  constexpr double W = 640, PH = 220, L = 70, T = 40, B = 50;
  const double H = T + PH * static_cast<double>(panels.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" font-size=\"11\">\n",
                W, H);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"70\" y=\"22\" font-size=\"14\">" + detail::xml_escape(title) + "</text>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& [name, bars] = panels[p];
    const double top = T + PH * static_cast<double>(p), plot_h = PH - B - 20;
    double vmax = 0.0;
    for (const auto& b : bars)
      if (std::isfinite(b.hi)) vmax = std::max(vmax, std::max(b.value, b.hi));
    if (vmax <= 0.0) vmax = 1.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\">", L, top + 12);
    out += buf + detail::xml_escape(name) + "</text>\n";
    const double base = top + 20 + plot_h;
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, base, W - 20, base);
    out += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%s</text>\n", L - 6, top + 24,
                  detail::num_label(vmax).c_str());
    out += buf;
    const double slot = (W - 20 - L) / static_cast<double>(std::max<std::size_t>(1, bars.size()));
    for (std::size_t i = 0; i < bars.size(); ++i) {
      const auto& b = bars[i];
      const double h = std::isfinite(b.value) ? b.value / vmax * plot_h : 0.0;
      const double x = L + slot * static_cast<double>(i) + slot * 0.2;
      std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"/>\n", x, base - h,
                    slot * 0.6, h, detail::palette(i));
      out += buf;
      if (std::isfinite(b.lo) && std::isfinite(b.hi) && b.hi > b.lo) {
        const double cx = x + slot * 0.3;
        std::snprintf(buf, sizeof buf, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", cx,
                      base - b.lo / vmax * plot_h, cx, base - b.hi / vmax * plot_h);
        out += buf;
      }
      std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">", x + slot * 0.3, base + 14);
      out += buf + detail::xml_escape(b.label) + "</text>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace dsrr
