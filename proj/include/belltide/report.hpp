// report.hpp
// CSV and SVG emitters for sweeps and fidelity tables, and atomic file output.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "belltide/optimizer.hpp"
#include "belltide/protocols.hpp"

namespace belltide {

inline constexpr std::string_view kVersion = "0.1.0";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest round-trippable text of the value rounded to 12 significant
// digits; always uses '.' regardless of locale.
inline std::string format_g12(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  if (res.ec != std::errc{}) throw std::logic_error("format_g12: conversion failed");
  return {buf, res.ptr};
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct CsvTable {
  std::vector<std::string> comments;  // '#'-prefixed lines, prefix stripped
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::out_of_range("CsvTable: no column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      t.comments.push_back(line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1));
    } else if (t.header.empty()) {
      t.header = split_csv_line(line);
    } else {
      t.rows.push_back(split_csv_line(line));
    }
  }
  return t;
}

// Writes to a sibling temporary file and renames it into place, so a failed
// run never leaves a partial file at `path`.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move output into '" + path.string() + "': " + ec.message());
  }
}

// theta,value,converged,evaluations
inline std::string sweep_csv(const SweepResult& sweep, const std::vector<std::string>& comments = {}) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "theta,value,converged,evaluations\n";
  for (const auto& p : sweep.points) {
    out += format_g12(p.theta) + "," + format_g12(p.value) + "," + (p.converged ? "1" : "0") + "," +
           std::to_string(p.evaluations) + "\n";
  }
  return out;
}

struct FidelityRow {
  double theta;
  double closed;
  double numeric;
};

inline std::vector<FidelityRow> fidelity_table(const std::vector<double>& thetas, const SphereQuadrature& q) {
  std::vector<FidelityRow> rows;
  rows.reserve(thetas.size());
  for (double t : thetas) rows.push_back({t, teleport_fidelity_closed(t), teleport_fidelity_numeric(t, q)});
  return rows;
}

// theta,F_closed,F_numeric,abs_err followed by a '# threshold' footer at pi/8.
inline std::string fidelity_csv(const std::vector<FidelityRow>& rows, const std::vector<std::string>& comments = {}) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "theta,F_closed,F_numeric,abs_err\n";
  for (const auto& r : rows)
    out += format_g12(r.theta) + "," + format_g12(r.closed) + "," + format_g12(r.numeric) + "," +
           format_g12(std::abs(r.closed - r.numeric)) + "\n";
  const double t8 = kPi / 8.0;
  out += "# threshold theta=" + format_g12(t8) + " F=" + format_g12(teleport_fidelity_closed(t8)) + "\n";
  return out;
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return {buf, res.ptr};
}

}  // namespace detail

// Self-contained line plot of one or more sweeps, with reference lines at the
// local bound 2 and at 2*sqrt(2).
inline std::string sweep_svg(const std::vector<SweepResult>& sweeps, std::string_view title = "") {
  constexpr double width = 720, height = 480, left = 70, right = 20, top = 40, bottom = 60;
  constexpr double plot_w = width - left - right, plot_h = height - top - bottom;
  static constexpr std::array<std::string_view, 6> colors = {"#1f77b4", "#d62728", "#2ca02c",
                                                             "#9467bd", "#ff7f0e", "#8c564b"};

  double y_min = 0.0, y_max = 3.0;
  double x_max = kThetaMax;
  for (const auto& s : sweeps)
    for (double v : s.values) {
      y_min = std::min(y_min, std::floor(v * 4.0) / 4.0);
      y_max = std::max(y_max, std::ceil(v * 4.0) / 4.0);
    }
  auto sx = [&](double x) { return left + plot_w * x / x_max; };
  auto sy = [&](double y) { return top + plot_h * (y_max - y) / (y_max - y_min); };
  using detail::fixed;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << detail::xml_escape(title) << "</text>\n";

  // Axes and ticks.
  svg << "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h
      << "\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h << "\"/>\n";
  svg << "</g>\n<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = x_max * i / 4.0;
    svg << "<line x1=\"" << fixed(sx(x)) << "\" y1=\"" << top + plot_h << "\" x2=\"" << fixed(sx(x)) << "\" y2=\""
        << top + plot_h + 5 << "\" stroke=\"black\"/>";
    svg << "<text x=\"" << fixed(sx(x)) << "\" y=\"" << top + plot_h + 20 << "\" text-anchor=\"middle\">"
        << fixed(x, 3) << "</text>\n";
  }
  for (double y = y_min; y <= y_max + 1e-9; y += 0.5) {
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << fixed(sy(y)) << "\" x2=\"" << left << "\" y2=\"" << fixed(sy(y))
        << "\" stroke=\"black\"/>";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << fixed(sy(y) + 4) << "\" text-anchor=\"end\">" << fixed(y, 1)
        << "</text>\n";
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\" font-size=\"14\">\xCE\xB8 (radians)</text>\n";
  svg << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << top + plot_h / 2 << ")\">correlator value</text>\n";
  svg << "</g>\n";

  // Reference lines.
  for (const auto& [level, label] : {std::pair{2.0, std::string("2")}, std::pair{kTsirelson, std::string("2\xE2\x88\x9A" "2")}}) {
    if (level < y_min || level > y_max) continue;
    svg << "<line class=\"reference\" x1=\"" << left << "\" y1=\"" << fixed(sy(level)) << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << fixed(sy(level)) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>";
    svg << "<text x=\"" << left + plot_w - 4 << "\" y=\"" << fixed(sy(level) - 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"gray\">" << label << "</text>\n";
  }

  for (std::size_t i = 0; i < sweeps.size(); ++i) {
    const auto& s = sweeps[i];
    const auto color = colors[i % colors.size()];
    svg << "<polyline class=\"series\" data-scenario=\"" << to_string(s.kind) << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"" << (sweeps.size() > 1 ? 3.0 - 0.7 * static_cast<double>(i) : 2.0) << "\" points=\"";
    for (std::size_t k = 0; k < s.values.size(); ++k)
      svg << (k ? " " : "") << fixed(sx(s.theta_grid[k])) << ',' << fixed(sy(s.values[k]));
    svg << "\"/>\n";
    svg << "<text x=\"" << left + 12 << "\" y=\"" << top + 16 + 16 * static_cast<double>(i)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">" << to_string(s.kind)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace belltide
