#include "tasep/render.hpp"

#include <algorithm>
#include <cstdio>

namespace tasep {

namespace {

constexpr double kCell = 8.0;
constexpr double kRowGap = 1.0;
constexpr double kBandGap = 6.0;
constexpr double kMargin = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string render_trajectories_svg(std::span<const TrajectorySample> samples) {
  if (samples.empty()) throw Error(Errc::insufficient_data, "no trajectory samples to render");
  const std::size_t trajectories = samples.front().states.size();
  if (trajectories == 0) throw Error(Errc::insufficient_data, "samples hold no states");
  const int n = samples.front().states.front().size();
  for (const TrajectorySample& s : samples) {
    if (s.states.size() != trajectories) {
      throw Error(Errc::dimension_mismatch, "samples differ in trajectory count");
    }
    for (const LatticeState& x : s.states) {
      if (x.size() != n) throw Error(Errc::dimension_mismatch, "states differ in length");
    }
  }

  const double band = static_cast<double>(trajectories) * (kCell + kRowGap);
  const double width = 2 * kMargin + n * kCell;
  const double height =
      2 * kMargin + static_cast<double>(samples.size()) * (band + kBandGap);

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  out += "<rect class=\"background\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kMargin) + "\" y=\"" + num(kMargin / 2) +
         "\" font-size=\"10\">sites 1.." + std::to_string(n) + ", time downward</text>\n";
  double y = kMargin;
  for (const TrajectorySample& s : samples) {
    out += "<g class=\"sample\" data-t=\"" + num(s.time) + "\">\n";
    out += "<text x=\"" + num(kMargin - 4) + "\" y=\"" + num(y + band / 2 + 3) +
           "\" font-size=\"8\" text-anchor=\"end\">" + num(s.time) + "</text>\n";
    for (std::size_t j = 0; j < trajectories; ++j) {
      const LatticeState& x = s.states[j];
      const double row_y = y + static_cast<double>(j) * (kCell + kRowGap);
      out += "<g class=\"trajectory\" data-index=\"" + std::to_string(j) + "\" data-state=\"" +
             x.to_string() + "\">";
      for (int k = 1; k <= n; ++k) {
        const bool on = x.occupied(k);
        out += "<rect class=\"" + std::string(on ? "occupied" : "vacant") + "\" x=\"" +
               num(kMargin + (k - 1) * kCell) + "\" y=\"" + num(row_y) + "\" width=\"" +
               num(kCell) + "\" height=\"" + num(kCell) + "\" fill=\"" +
               (on ? (j == 0 ? "black" : "#b22222") : "#eeeeee") + "\"/>";
      }
      out += "</g>\n";
    }
    out += "</g>\n";
    y += band + kBandGap;
  }
  out += "</svg>\n";
  return out;
}

std::string render_scatter_svg(std::span<const SummaryRow> rows) {
  if (rows.empty()) throw Error(Errc::insufficient_data, "no summary rows to render");
  // First row per point: summaries list segments in plan order.
  std::vector<const SummaryRow*> points;
  for (const SummaryRow& r : rows) {
    const bool seen = std::any_of(points.begin(), points.end(), [&](const SummaryRow* p) {
      return p->alpha == r.alpha && p->beta == r.beta;
    });
    if (!seen) points.push_back(&r);
  }
  double top = 1.0;
  for (const SummaryRow* p : points) top = std::max({top, p->alpha, p->beta});
  top *= 1.05;

  const double size = 400.0;
  const double full = size + 2 * kMargin;
  auto px = [&](double a) { return kMargin + a / top * size; };
  auto py = [&](double b) { return kMargin + size - b / top * size; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(full) + "\" height=\"" +
         num(full) + "\" viewBox=\"0 0 " + num(full) + " " + num(full) + "\">\n";
  out += "<rect class=\"background\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<g class=\"axes\" stroke=\"black\">";
  out += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(px(top)) +
         "\" y2=\"" + num(py(0)) + "\"/>";
  out += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(px(0)) +
         "\" y2=\"" + num(py(top)) + "\"/></g>\n";
  out += "<text x=\"" + num(px(top) - 10) + "\" y=\"" + num(py(0) + 20) +
         "\" font-size=\"12\">alpha</text>\n";
  out += "<text x=\"" + num(px(0) - 30) + "\" y=\"" + num(py(top) + 10) +
         "\" font-size=\"12\">beta</text>\n";

  const auto dashed = [&](double a0, double b0, double a1, double b1) {
    return "<line class=\"boundary\" x1=\"" + num(px(a0)) + "\" y1=\"" + num(py(b0)) +
           "\" x2=\"" + num(px(a1)) + "\" y2=\"" + num(py(b1)) +
           "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  };
  out += dashed(0.5, 0.5, top, 0.5);
  out += dashed(0.5, 0.5, 0.5, top);
  out += dashed(0.0, 0.0, 0.5, 0.5);

  for (const SummaryRow* p : points) {
    char gamma[32];
    std::snprintf(gamma, sizeof gamma, "%.3f", p->gamma);
    out += "<g class=\"point\" data-alpha=\"" + num(p->alpha) + "\" data-beta=\"" +
           num(p->beta) + "\" data-gamma=\"" + gamma + "\">";
    out += "<circle cx=\"" + num(px(p->alpha)) + "\" cy=\"" + num(py(p->beta)) +
           "\" r=\"3\" fill=\"black\"/>";
    out += "<text class=\"annotation\" x=\"" + num(px(p->alpha) + 5) + "\" y=\"" +
           num(py(p->beta) - 5) + "\" font-size=\"10\">" + gamma + "</text></g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace tasep
