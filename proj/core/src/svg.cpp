#include "elinspect/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "elinspect/errors.hpp"

namespace elinspect {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMargin = 56;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void svg_header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"16\">"
     << title << "</text>\n";
}

void axes(std::ostringstream& os, const std::string& x_label, const std::string& y_label) {
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
     << "\" height=\"" << kHeight - 2 * kMargin
     << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
     << "</text>\n"
     << "<text x=\"16\" y=\"" << kHeight / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 "
        "16 "
     << kHeight / 2 << ")\">" << y_label << "</text>\n";
}

}  // namespace

std::string roc_svg(const std::vector<std::pair<std::string, RocCurve>>& curves,
                    const std::string& title) {
  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  auto px = [&](double fpr) { return kMargin + fpr * plot_w; };
  auto py = [&](double tpr) { return kHeight - kMargin - tpr * plot_h; };

  std::ostringstream os;
  svg_header(os, title);
  axes(os, "false positive rate", "true positive rate");
  for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    os << "<text x=\"" << num(px(tick)) << "\" y=\"" << kHeight - kMargin + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << num(tick)
       << "</text>\n";
    os << "<text x=\"" << kMargin - 6 << "\" y=\"" << num(py(tick) + 3)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(tick)
       << "</text>\n";
  }
  // Random-classifier baseline.
  os << "<line x1=\"" << num(px(0)) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(px(1))
     << "\" y2=\"" << num(py(1)) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const RocCurve& curve = curves[c].second;
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[c % 8] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < curve.fpr.size(); ++i)
      os << num(px(curve.fpr[i])) << ',' << num(py(curve.tpr[i])) << ' ';
    os << "\"/>\n";
    const double ly = kMargin + 18 + 16 * static_cast<double>(c);
    os << "<line x1=\"" << kMargin + 12 << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << kMargin + 36
       << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << kPalette[c % 8] << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << kMargin + 42 << "\" y=\"" << num(ly)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << curves[c].first << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string boxplot_svg(const std::vector<std::pair<std::string, BoxplotStats>>& groups,
                        const std::string& title, const std::string& y_label) {
  if (groups.empty()) throw ConfigError("boxplot of zero groups");
  double lo = groups[0].second.whisker_low, hi = groups[0].second.whisker_high;
  for (const auto& [_, s] : groups) {
    lo = std::min({lo, s.whisker_low, s.outliers.empty() ? s.whisker_low : *std::min_element(s.outliers.begin(), s.outliers.end())});
    hi = std::max({hi, s.whisker_high, s.outliers.empty() ? s.whisker_high : *std::max_element(s.outliers.begin(), s.outliers.end())});
  }
  if (hi <= lo) hi = lo + 1.0;
  const double pad = 0.08 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  auto py = [&](double v) { return kHeight - kMargin - (v - lo) / (hi - lo) * plot_h; };

  std::ostringstream os;
  svg_header(os, title);
  axes(os, "", y_label);
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    os << "<text x=\"" << kMargin - 6 << "\" y=\"" << num(py(v) + 3)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(v)
       << "</text>\n";
  }

  const double slot = plot_w / static_cast<double>(groups.size());
  const double box_w = std::min(60.0, slot * 0.5);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const BoxplotStats& s = groups[g].second;
    const double cx = kMargin + slot * (static_cast<double>(g) + 0.5);
    const char* color = kPalette[g % 8];
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(py(s.whisker_low)) << "\" x2=\"" << num(cx)
       << "\" y2=\"" << num(py(s.whisker_high)) << "\" stroke=\"black\"/>\n";
    for (double v : {s.whisker_low, s.whisker_high})
      os << "<line x1=\"" << num(cx - box_w / 4) << "\" y1=\"" << num(py(v)) << "\" x2=\""
         << num(cx + box_w / 4) << "\" y2=\"" << num(py(v)) << "\" stroke=\"black\"/>\n";
    os << "<rect x=\"" << num(cx - box_w / 2) << "\" y=\"" << num(py(s.q3)) << "\" width=\""
       << num(box_w) << "\" height=\"" << num(py(s.q1) - py(s.q3)) << "\" fill=\"" << color
       << "\" fill-opacity=\"0.35\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << num(cx - box_w / 2) << "\" y1=\"" << num(py(s.median)) << "\" x2=\""
       << num(cx + box_w / 2) << "\" y2=\"" << num(py(s.median))
       << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double v : s.outliers)
      os << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(py(v))
         << "\" r=\"3\" fill=\"none\" stroke=\"" << color << "\"/>\n";
    os << "<text x=\"" << num(cx) << "\" y=\"" << kHeight - kMargin + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << groups[g].first
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << content;
  if (!out) throw DataError("failed writing file: " + path.string());
}

}  // namespace elinspect
