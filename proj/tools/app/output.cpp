// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vmouse/error.hpp"

namespace vmouse::app {

nlohmann::json RunManifest::to_json() const {
  return {{"tool", "vmouse"},
          {"version", kToolVersion},
          {"command", command},
          {"argv", argv},
          {"seed", seed},
          {"seed_origin", seed_origin},
          {"parameters", parameters},
          {"inputs", inputs},
          {"outputs", outputs},
          {"results", results}};
}

std::filesystem::path RunManifest::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const auto path = dir / "manifest.json";
  write_text(path, to_json().dump(2) + "\n");
  return path;
}

std::pair<std::uint64_t, std::string> resolve_seed(std::optional<std::uint64_t> flag,
                                                   std::uint64_t fallback) {
  if (flag) return {*flag, "flag"};
  if (const char* env = std::getenv("VMOUSE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return {v, "env"};
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("VMOUSE_SEED is not an unsigned integer: ") + env);
  }
  return {fallback, "default"};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  constexpr double kW = 640, kH = 420, kL = 70, kR = 150, kT = 40, kB = 55;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      const double b = i < s.band.size() ? s.band[i] : 0.0;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - b);
      y1 = std::max(y1, s.y[i] + b);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = kW - kL - kR, ph = kH - kT - kB;
  if (spec.equal_aspect) {
    const double scale = std::max((x1 - x0) / pw, (y1 - y0) / ph);
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    x0 = cx - 0.5 * scale * pw, x1 = cx + 0.5 * scale * pw;
    y0 = cy - 0.5 * scale * ph, y1 = cy + 0.5 * scale * ph;
  }
  auto sx = [&](double x) { return kL + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kT + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kL << "\" y=\"22\" font-size=\"14\">" << esc(spec.title) << "</text>\n";
  o << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << sx(xv) << "\" y=\"" << kT + ph + 16 << "\" text-anchor=\"middle\">" << num(xv)
      << "</text>\n";
    o << "<text x=\"" << kL - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << num(yv)
      << "</text>\n";
  }
  o << "<text x=\"" << kL + pw / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">"
    << esc(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << kT + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << esc(spec.y_label) << "</text>\n";
  if (spec.marker_x) {
    o << "<line x1=\"" << sx(*spec.marker_x) << "\" x2=\"" << sx(*spec.marker_x) << "\" y1=\"" << kT
      << "\" y2=\"" << kT + ph << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (!s.band.empty() && n > 1) {
      o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < n; ++i) o << sx(s.x[i]) << ',' << sy(s.y[i] + s.band[i]) << ' ';
      for (std::size_t i = n; i-- > 0;) o << sx(s.x[i]) << ',' << sy(s.y[i] - s.band[i]) << ' ';
      o << "\"/>\n";
    }
    if (s.line && n > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < n; ++i) o << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
      o << "\"/>\n";
    }
    if (s.markers) {
      for (std::size_t i = 0; i < n; ++i) {
        o << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i]) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
      }
    }
    const double ly = kT + 14 + 18.0 * static_cast<double>(k);
    o << "<rect x=\"" << kL + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"10\" fill=\""
      << color << "\"/><text x=\"" << kL + pw + 30 << "\" y=\"" << ly << "\">" << esc(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace vmouse::app
