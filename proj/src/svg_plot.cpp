#include "spectral_edge/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "spectral_edge/harness.hpp"

namespace spectral_edge {

namespace {

constexpr double kWidth = 760;
constexpr double kLabelWidth = 380;
constexpr double kBarArea = 320;
constexpr double kRowHeight = 18;
constexpr double kHeader = 34;
constexpr double kGap = 24;

std::string escape(const std::string& s) {
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

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double panel_height(const BarPanel& p) { return kHeader + kRowHeight * static_cast<double>(p.bars.size()) + 20; }

void draw_panel(std::ostringstream& os, const BarPanel& panel, double top) {
  double hi = panel.reference.value_or(0.0);
  for (const auto& b : panel.bars)
    if (std::isfinite(b.value)) hi = std::max(hi, b.value + b.se.value_or(0.0));
  if (!(hi > 0)) hi = 1;
  const double x0 = kLabelWidth;
  const auto px = [&](double v) { return x0 + kBarArea * std::clamp(v / hi, 0.0, 1.0); };

  os << "<text x=\"10\" y=\"" << top + 20 << "\" font-size=\"14\" font-weight=\"bold\">" << escape(panel.title)
     << "</text>\n";
  double y = top + kHeader;
  for (const auto& b : panel.bars) {
    os << "<text x=\"" << x0 - 6 << "\" y=\"" << y + 12 << "\" font-size=\"11\" text-anchor=\"end\">"
       << escape(b.label) << "</text>\n";
    if (std::isfinite(b.value)) {
      os << "<rect x=\"" << x0 << "\" y=\"" << y + 3 << "\" width=\"" << px(b.value) - x0
         << "\" height=\"" << kRowHeight - 6 << "\" fill=\"#4a7ab5\"/>\n";
      if (b.se) {
        os << "<line x1=\"" << px(b.value - *b.se) << "\" x2=\"" << px(b.value + *b.se) << "\" y1=\"" << y + 9
           << "\" y2=\"" << y + 9 << "\" stroke=\"black\"/>\n";
      }
      os << "<text x=\"" << px(b.value) + 4 << "\" y=\"" << y + 12 << "\" font-size=\"10\">" << fmt(b.value)
         << "</text>\n";
    } else {
      os << "<text x=\"" << x0 + 4 << "\" y=\"" << y + 12 << "\" font-size=\"10\" fill=\"#b00\">n/a</text>\n";
    }
    y += kRowHeight;
  }
  if (panel.reference) {
    os << "<line x1=\"" << px(*panel.reference) << "\" x2=\"" << px(*panel.reference) << "\" y1=\""
       << top + kHeader - 4 << "\" y2=\"" << y + 4 << "\" stroke=\"#c0392b\" stroke-dasharray=\"4,3\"/>\n";
  }
}

std::string strip_stat(const std::string& cell, std::string& stat) {
  std::string out;
  std::stringstream ss(cell);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.rfind("stat=", 0) == 0) {
      stat = part.substr(5);
      continue;
    }
    if (!out.empty()) out += ';';
    out += part;
  }
  return out;
}

}  // namespace

std::string bar_panels_svg(const std::vector<BarPanel>& panels) {
  double height = kGap;
  for (const auto& p : panels) height += panel_height(p) + kGap;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
     << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double top = kGap;
  for (const auto& p : panels) {
    draw_panel(os, p, top);
    top += panel_height(p) + kGap;
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_result_charts(const std::vector<ResultRow>& rows) {
  std::vector<BarPanel> panels;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    std::string stat;
    const auto label = strip_stat(r.cell, stat);
    std::string title = r.experiment + ": " + r.metric;
    if (!stat.empty()) title += " (" + stat + ")";
    auto it = index.find(title);
    if (it == index.end()) {
      it = index.emplace(title, panels.size()).first;
      panels.push_back({title, {}, std::nullopt});
    }
    panels[it->second].bars.push_back({label, r.value, r.se});
  }
  return bar_panels_svg(panels);
}

}  // namespace spectral_edge
