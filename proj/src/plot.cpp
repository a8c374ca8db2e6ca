#include "demandcast/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace demandcast {

namespace {

constexpr int kWidth = 960;
constexpr int kHeight = 480;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
constexpr const char* kActualColour = "#1f77b4";
constexpr const char* kPredictedColour = "#d62728";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

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

}  // namespace

std::string render_forecast_svg(const ForecastResult& f, const std::string& title) {
  const std::size_t n = f.time.size();
  if (n == 0 || f.actual.size() != n || f.predicted.size() != n) {
    throw DataError("plot: forecast has no points");
  }
  double lo = std::min(*std::min_element(f.actual.begin(), f.actual.end()),
                       *std::min_element(f.predicted.begin(), f.predicted.end()));
  double hi = std::max(*std::max_element(f.actual.begin(), f.actual.end()),
                       *std::max_element(f.predicted.begin(), f.predicted.end()));
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto x_of = [&](std::size_t i) { return kLeft + (n == 1 ? plot_w / 2 : plot_w * double(i) / double(n - 1)); };
  auto y_of = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    s << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">" << escape(title) << "</text>\n";
  }

  // Axes and ticks.
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
    << kTop + plot_h << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
    << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt(y_of(v) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v) << "</text>\n";
  }
  const std::size_t ticks = std::min<std::size_t>(n, 5);
  for (std::size_t k = 0; k < ticks; ++k) {
    const std::size_t i = ticks == 1 ? 0 : k * (n - 1) / (ticks - 1);
    s << "<text x=\"" << fmt(x_of(i)) << "\" y=\"" << kTop + plot_h + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << f.time[i].str() << "</text>\n";
  }
  s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">time</text>\n";
  s << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"13\" transform=\"rotate(-90 18 " << kTop + plot_h / 2 << ")\">kWh</text>\n";

  auto series = [&](const std::vector<double>& v, const char* colour) {
    if (n == 1) {
      s << "<circle cx=\"" << fmt(x_of(0)) << "\" cy=\"" << fmt(y_of(v[0])) << "\" r=\"4\" fill=\"" << colour
        << "\"/>\n";
      return;
    }
    s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) s << (i ? " " : "") << fmt(x_of(i)) << ',' << fmt(y_of(v[i]));
    s << "\"/>\n";
  };
  series(f.actual, kActualColour);
  series(f.predicted, kPredictedColour);

  // Legend.
  const double lx = kLeft + plot_w - 150, ly = kTop + 10;
  s << "<rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\"" << kActualColour << "\"/>\n";
  s << "<text x=\"" << lx + 18 << "\" y=\"" << ly + 11 << "\" font-family=\"sans-serif\" font-size=\"12\">actual</text>\n";
  s << "<rect x=\"" << lx << "\" y=\"" << ly + 20 << "\" width=\"12\" height=\"12\" fill=\"" << kPredictedColour
    << "\"/>\n";
  s << "<text x=\"" << lx + 18 << "\" y=\"" << ly + 31
    << "\" font-family=\"sans-serif\" font-size=\"12\">predicted</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace demandcast
