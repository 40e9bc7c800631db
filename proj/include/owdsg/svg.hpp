#pragma once

// Plain SVG figures built only from parsed result files and event metadata.

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "io.hpp"

namespace owdsg {

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

inline std::string line(double x1, double y1, double x2, double y2, const std::string& stroke,
                        double width = 1.0, const std::string& extra = "") {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
         num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"" + extra +
         "/>\n";
}

inline std::string text(double x, double y, const std::string& s, const std::string& anchor = "start",
                        int size = 11) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
         "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill,
                        const std::string& stroke = "none") {
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
         num(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

struct Panel {
  double x, y, w, h;
  double sx(double chunk, std::size_t n_chunks) const {
    return x + w * chunk / static_cast<double>(std::max<std::size_t>(n_chunks, 1));
  }
};

// Event markers: drifts solid, novelties dashed, both red.
inline std::string events(const Panel& p, const StreamEvents& ev) {
  std::string out;
  for (auto d : ev.drift_chunks) {
    double x = p.sx(static_cast<double>(d), ev.n_chunks);
    out += line(x, p.y, x, p.y + p.h, "#d00000", 1.2);
  }
  for (auto n : ev.novelty_chunks) {
    double x = p.sx(static_cast<double>(n), ev.n_chunks);
    out += line(x, p.y, x, p.y + p.h, "#d00000", 1.2, " stroke-dasharray=\"4,3\"");
  }
  return out;
}

inline std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n" + rect(0, 0, w, h, "white");
}

}  // namespace svg

struct DetectionFigureRow {
  StreamEvents events;
  DetectionLog log;
};

// Grid of panels: one row per stream, one column per detector. Inside a panel
// every sensitivity value is a band (most sensitive on top) and every seed a
// thin line within it; each detection is a tick on the chunk axis.
inline std::string detection_figure(const std::vector<DetectionFigureRow>& rows) {
  std::vector<DetectorKind> kinds;
  for (auto k : all_detector_kinds)
    for (const auto& r : rows)
      if (std::any_of(r.log.replays.begin(), r.log.replays.end(),
                      [&](const DetectionRecord& d) { return d.kind == k; })) {
        kinds.push_back(k);
        break;
      }
  const double pw = 300, ph = 180, left = 90, top = 40, gap = 30;
  const double width = left + kinds.size() * (pw + gap) + 10;
  const double height = top + rows.size() * (ph + gap) + 20;
  std::string out = svg::header(width, height);
  for (std::size_t c = 0; c < kinds.size(); ++c)
    out += svg::text(left + c * (pw + gap) + pw / 2, 20, std::string(name(kinds[c])), "middle", 13);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    out += svg::text(10, top + r * (ph + gap) + ph / 2, row.events.label, "start", 12);
    for (std::size_t c = 0; c < kinds.size(); ++c) {
      svg::Panel p{left + c * (pw + gap), top + r * (ph + gap), pw, ph};
      out += svg::rect(p.x, p.y, p.w, p.h, "#fafafa", "#444444");
      // Grid in order of appearance (writers emit most sensitive first).
      std::vector<double> params;
      std::set<std::uint64_t> seed_set;
      for (const auto& d : row.log.replays) {
        if (d.kind != kinds[c]) continue;
        if (std::find(params.begin(), params.end(), d.param) == params.end()) params.push_back(d.param);
        seed_set.insert(d.seed);
      }
      std::vector<std::uint64_t> seeds(seed_set.begin(), seed_set.end());
      const double band = params.empty() ? p.h : p.h / static_cast<double>(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (i % 2 == 1) out += svg::rect(p.x, p.y + i * band, p.w, band, "#eeeeee");
        out += svg::text(p.x - 4, p.y + (i + 0.7) * band, svg::num(params[i]), "end", 8);
      }
      out += svg::events(p, row.events);
      for (const auto& d : row.log.replays) {
        if (d.kind != kinds[c]) continue;
        auto pi = static_cast<std::size_t>(std::find(params.begin(), params.end(), d.param) - params.begin());
        auto si = static_cast<std::size_t>(std::lower_bound(seeds.begin(), seeds.end(), d.seed) - seeds.begin());
        const double lane = band / static_cast<double>(std::max<std::size_t>(seeds.size(), 1));
        const double y0 = p.y + pi * band + si * lane;
        for (auto chunk : d.chunks) {
          double x = p.sx(static_cast<double>(chunk), row.events.n_chunks);
          out += svg::line(x, y0, x, y0 + std::max(lane, 1.0), "#000000", 0.8);
        }
      }
      out += svg::text(p.x, p.y + p.h + 12, "0", "start", 9);
      out += svg::text(p.x + p.w, p.y + p.h + 12, std::to_string(row.events.n_chunks), "end", 9);
    }
  }
  out += "</svg>\n";
  return out;
}

struct OsrFigureRow {
  StreamEvents events;
  std::vector<ScoreRow> scores;
};

// Grid of panels: one row per stream, columns inner/outer/halfpoint/overall.
// Each epsilon is one line, averaged over seeds; undefined chunks break it.
inline std::string osr_figure(const std::vector<OsrFigureRow>& rows) {
  static const char* metric_names[] = {"inner", "outer", "halfpoint", "overall"};
  auto metric = [](const OSRScores& s, int m) -> const Score& {
    switch (m) {
      case 0: return s.inner;
      case 1: return s.outer;
      case 2: return s.halfpoint;
      default: return s.overall;
    }
  };
  const double pw = 260, ph = 160, left = 90, top = 40, gap = 30;
  const double width = left + 4 * (pw + gap) + 120;
  const double height = top + rows.size() * (ph + gap) + 20;
  std::string out = svg::header(width, height);
  for (int m = 0; m < 4; ++m)
    out += svg::text(left + m * (pw + gap) + pw / 2, 20, metric_names[m], "middle", 13);

  std::vector<double> all_eps;
  for (const auto& row : rows)
    for (const auto& s : row.scores)
      if (std::find(all_eps.begin(), all_eps.end(), s.epsilon) == all_eps.end()) all_eps.push_back(s.epsilon);
  std::sort(all_eps.begin(), all_eps.end());

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    out += svg::text(10, top + r * (ph + gap) + ph / 2, row.events.label, "start", 12);
    for (int m = 0; m < 4; ++m) {
      svg::Panel p{left + m * (pw + gap), top + r * (ph + gap), pw, ph};
      out += svg::rect(p.x, p.y, p.w, p.h, "#fafafa", "#444444");
      out += svg::text(p.x - 4, p.y + 8, "1", "end", 9);
      out += svg::text(p.x - 4, p.y + p.h, "0", "end", 9);
      out += svg::events(p, row.events);
      for (std::size_t e = 0; e < all_eps.size(); ++e) {
        std::map<std::size_t, std::pair<double, std::size_t>> acc;
        for (const auto& s : row.scores) {
          if (s.epsilon != all_eps[e]) continue;
          const auto& v = metric(s.scores, m);
          if (!v) continue;
          auto& a = acc[s.chunk];
          a.first += *v;
          ++a.second;
        }
        std::string pts;
        std::size_t prev = 0;
        bool open = false;
        auto flush = [&] {
          if (!pts.empty())
            out += "<polyline fill=\"none\" stroke=\"" + std::string(svg::palette(e)) +
                   "\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
          pts.clear();
        };
        for (const auto& [chunk, a] : acc) {
          if (open && chunk != prev + 1) flush();
          const double x = p.sx(static_cast<double>(chunk), row.events.n_chunks);
          const double y = p.y + p.h * (1.0 - a.first / static_cast<double>(a.second));
          pts += svg::num(x) + "," + svg::num(y) + " ";
          prev = chunk;
          open = true;
        }
        flush();
      }
    }
  }
  const double lx = left + 4 * (pw + gap);
  for (std::size_t e = 0; e < all_eps.size(); ++e) {
    out += svg::line(lx, top + 14 * e + 6, lx + 18, top + 14 * e + 6, svg::palette(e), 2);
    out += svg::text(lx + 22, top + 14 * e + 10, "eps " + format_double(all_eps[e]), "start", 10);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace owdsg
