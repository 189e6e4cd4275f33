#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "peh/errors.hpp"
#include "peh/pipeline.hpp"

namespace peh {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

// Fixed-size plot frame with linear axes and a deterministic text layout.
class SvgPlot {
public:
  SvgPlot(double x_min, double x_max, double y_min, double y_max, std::string title,
          std::string x_label, std::string y_label)
      : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
    if (x_max_ <= x_min_) x_max_ = x_min_ + 1.0;
    if (y_max_ <= y_min_) y_max_ = y_min_ + 1.0;
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
          << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    body_ << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    body_ << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
          << title << "</text>\n";
    body_ << "<rect x=\"" << kMx << "\" y=\"" << kMy << "\" width=\"" << kW - 2 * kMx
          << "\" height=\"" << kH - 2 * kMy << "\" fill=\"none\" stroke=\"#444\"/>\n";
    body_ << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 8
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
          << "</text>\n";
    body_ << "<text x=\"14\" y=\"" << kH / 2
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
          << kH / 2 << ")\">" << y_label << "</text>\n";
    axis_ticks();
  }

  double px(double x) const { return kMx + (x - x_min_) / (x_max_ - x_min_) * (kW - 2 * kMx); }
  double py(double y) const {
    return kH - kMy - (y - y_min_) / (y_max_ - y_min_) * (kH - 2 * kMy);
  }

  void polyline(const std::vector<double>& x, const std::vector<double>& y, const char* color) {
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < x.size(); ++i)
      body_ << fmt(px(x[i])) << ',' << fmt(py(y[i])) << (i + 1 < x.size() ? " " : "");
    body_ << "\"/>\n";
  }

  void circle(double x, double y, double r_px, const char* color, bool filled = true) {
    body_ << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y)) << "\" r=\"" << fmt(r_px)
          << "\" fill=\"" << (filled ? color : "none") << "\" stroke=\"" << color
          << "\" fill-opacity=\"" << (filled ? "0.55" : "0") << "\"/>\n";
  }

  void cross(double x, double y, const char* color) {
    const double cx = px(x), cy = py(y), s = 5.0;
    body_ << "<path stroke=\"" << color << "\" stroke-width=\"2\" d=\"M" << fmt(cx - s) << ' '
          << fmt(cy - s) << " L" << fmt(cx + s) << ' ' << fmt(cy + s) << " M" << fmt(cx - s) << ' '
          << fmt(cy + s) << " L" << fmt(cx + s) << ' ' << fmt(cy - s) << "\"/>\n";
  }

  void marker(double x, double y, const char* color) {
    body_ << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
          << "\" r=\"4\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
  }

  void label(double x, double y, const std::string& text, const char* color = "#222") {
    body_ << "<text x=\"" << fmt(px(x)) << "\" y=\"" << fmt(py(y))
          << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">" << text
          << "</text>\n";
  }

  void annotate_center(const std::string& text) {
    body_ << "<text x=\"" << kW / 2 << "\" y=\"" << kH / 2
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#888\">"
          << text << "</text>\n";
  }

  void save(const fs::path& path) {
    body_ << "</svg>\n";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write '" + path.string() + "'");
    out << body_.str();
  }

private:
  void axis_ticks() {
    for (int i = 0; i <= 4; ++i) {
      const double xv = x_min_ + (x_max_ - x_min_) * i / 4.0;
      const double yv = y_min_ + (y_max_ - y_min_) * i / 4.0;
      body_ << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << kH - kMy + 16
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(xv)
            << "</text>\n";
      body_ << "<text x=\"" << kMx - 6 << "\" y=\"" << fmt(py(yv) + 3)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(yv)
            << "</text>\n";
    }
  }

  static constexpr int kW = 640, kH = 480, kMx = 64, kMy = 48;
  double x_min_, x_max_, y_min_, y_max_;
  std::ostringstream body_;
};

void write_csv(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << content;
}

void plot_frf_overlay(const LocationReport& loc, const fs::path& dir) {
  const fs::path svg_path = dir / ("frf_overlay_" + loc.location_id + ".svg");
  const fs::path csv_path = dir / ("frf_overlay_" + loc.location_id + ".csv");

  if (loc.candidates.empty()) {
    SvgPlot plot(0, 1, 0, 1, "FRF overlay " + loc.location_id, "frequency [Hz]", "|H_v| [V/(m/s^2)]");
    plot.annotate_center("no candidates");
    plot.save(svg_path);
    write_csv(csv_path, "candidate,peak_frequency_hz,peak_magnitude\n");
    return;
  }

  double f_hi = 0, m_hi = 0;
  for (const auto& c : loc.candidates) {
    if (!c.frf_frequencies_hz.empty()) f_hi = std::max(f_hi, c.frf_frequencies_hz.back());
    for (double m : c.frf_magnitude) m_hi = std::max(m_hi, m);
  }
  SvgPlot plot(0, f_hi, 0, 1.05 * m_hi, "FRF overlay " + loc.location_id, "frequency [Hz]",
               "|H_v| [V/(m/s^2)]");
  std::ostringstream csv;
  csv << "candidate,peak_frequency_hz,peak_magnitude\n";
  for (size_t i = 0; i < loc.candidates.size(); ++i) {
    const auto& c = loc.candidates[i];
    const char* color = kPalette[i % 6];
    plot.polyline(c.frf_frequencies_hz, c.frf_magnitude, color);
    plot.marker(c.frf_peak_frequency_hz, c.frf_peak_magnitude, color);
    plot.label(0.02 * f_hi, (0.98 - 0.05 * i) * 1.05 * m_hi,
               "candidate " + std::to_string(i) + " (" + fmt(c.fundamental_frequency_hz) + " Hz)",
               color);
    csv << i << ',' << fmt(c.frf_peak_frequency_hz) << ',' << fmt(c.frf_peak_magnitude) << '\n';
  }
  plot.save(svg_path);
  write_csv(csv_path, csv.str());
}

void plot_silhouette(const LocationReport& loc, const fs::path& dir) {
  const fs::path svg_path = dir / ("silhouette_" + loc.location_id + ".svg");
  const fs::path csv_path = dir / ("silhouette_" + loc.location_id + ".csv");
  std::ostringstream csv;
  csv << "k,mean_silhouette\n";
  if (loc.clustering.silhouette_by_k.empty()) {
    SvgPlot plot(0, 1, 0, 1, "Silhouette " + loc.location_id, "k", "mean silhouette");
    plot.annotate_center("no candidates");
    plot.save(svg_path);
    write_csv(csv_path, csv.str());
    return;
  }
  std::vector<double> ks, sil;
  for (const auto& [k, s] : loc.clustering.silhouette_by_k) {
    ks.push_back(k);
    sil.push_back(s);
    csv << k << ',' << fmt(s) << '\n';
  }
  SvgPlot plot(ks.front() - 0.5, ks.back() + 0.5, -1.0, 1.0, "Silhouette " + loc.location_id, "k",
               "mean silhouette");
  plot.polyline(ks, sil, kPalette[0]);
  for (size_t i = 0; i < ks.size(); ++i)
    plot.circle(ks[i], sil[i], 3.5, ks[i] == loc.clustering.k_chosen ? kPalette[3] : kPalette[0]);
  plot.save(svg_path);
  write_csv(csv_path, csv.str());
}

void plot_param_scatter(const LocationReport& loc, const fs::path& dir) {
  const fs::path svg_path = dir / ("params_scatter_" + loc.location_id + ".svg");
  const fs::path csv_path = dir / ("params_scatter_" + loc.location_id + ".csv");
  std::ostringstream csv;
  csv << "length_m,piezo_length_ratio,piezo_thickness_ratio,cluster\n";
  SvgPlot plot(ShapeParams::kLengthLo, ShapeParams::kLengthHi, ShapeParams::kLenRatioLo,
               ShapeParams::kLenRatioHi, "Optimal designs " + loc.location_id, "L [m]",
               "piezo length ratio l");
  if (loc.optima.empty()) {
    plot.annotate_center("no candidates");
  } else {
    for (size_t i = 0; i < loc.optima.size(); ++i) {
      const auto& p = loc.optima[i].best;
      const int cl = i < loc.clustering.assignments.size() ? loc.clustering.assignments[i] : 0;
      plot.circle(p.length, p.piezo_length_ratio, 4.0, kPalette[cl % 6]);
      csv << fmt(p.length) << ',' << fmt(p.piezo_length_ratio) << ','
          << fmt(p.piezo_thickness_ratio) << ',' << cl << '\n';
    }
    for (size_t c = 0; c < loc.candidates.size(); ++c) {
      const auto& cen = loc.candidates[c].centroid;
      plot.cross(cen.length, cen.piezo_length_ratio, kPalette[c % 6]);
    }
  }
  plot.save(svg_path);
  write_csv(csv_path, csv.str());
}

void plot_energy_bubble(const CampaignReport& report, const fs::path& dir) {
  const fs::path svg_path = dir / "energy_bubble.svg";
  const fs::path csv_path = dir / "energy_bubble.csv";
  std::ostringstream csv;
  csv << "location,energy_24h_joule,bubble_radius_px\n";

  std::vector<std::pair<std::string, double>> entries;
  for (const auto& loc : report.locations)
    if (loc.status == "ok" && loc.best_candidate_index >= 0)
      entries.emplace_back(loc.location_id,
                           loc.candidates[loc.best_candidate_index].energy_24h_joule);
  if (entries.empty()) {
    SvgPlot plot(0, 1, 0, 1, "Best-candidate energy by location", "location", "energy [J]");
    plot.annotate_center("no candidates");
    plot.save(svg_path);
    write_csv(csv_path, csv.str());
    return;
  }

  double e_max = 0;
  for (const auto& [id, e] : entries) e_max = std::max(e_max, e);
  if (e_max <= 0) e_max = 1.0;
  SvgPlot plot(-0.5, static_cast<double>(entries.size()) - 0.5, 0, 1.15 * e_max,
               "Best-candidate energy by location", "location", "energy [J]");
  const double r_max = 22.0;
  for (size_t i = 0; i < entries.size(); ++i) {
    // Bubble area proportional to energy.
    const double r = r_max * std::sqrt(entries[i].second / e_max);
    plot.circle(static_cast<double>(i), entries[i].second, r, kPalette[i % 6]);
    plot.label(static_cast<double>(i) - 0.2, -0.04 * e_max, entries[i].first);
    csv << entries[i].first << ',' << fmt(entries[i].second) << ',' << fmt(r) << '\n';
  }
  plot.save(svg_path);
  write_csv(csv_path, csv.str());
}

}  // namespace

void emit_plots(const CampaignReport& report, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  plot_energy_bubble(report, dir);
  for (const auto& loc : report.locations) {
    plot_frf_overlay(loc, dir);
    plot_silhouette(loc, dir);
    plot_param_scatter(loc, dir);
  }
}

}  // namespace peh
