#include "pmac/experiment/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "pmac/core/error.hpp"
#include "pmac/experiment/sweep.hpp"

namespace pmac {

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("CSV has no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

namespace {

std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (first) {
      t.header = split_row(line);
      first = false;
      continue;
    }
    auto row = split_row(line);
    if (row.size() != t.header.size()) {
      throw ValidationError("CSV row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(row.size()) +
                            " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  if (first) throw ValidationError("CSV is empty");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open CSV " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str());
}

const char* to_string(FigureKind k) {
  switch (k) {
    case FigureKind::throughput: return "throughput";
    case FigureKind::energy: return "energy";
    case FigureKind::collision: return "collision";
    case FigureKind::density: return "density";
    case FigureKind::contention: return "contention";
  }
  return "?";
}

FigureKind parse_figure_kind(std::string_view name) {
  for (FigureKind k : {FigureKind::throughput, FigureKind::energy, FigureKind::collision, FigureKind::density,
                       FigureKind::contention}) {
    if (name == to_string(k)) return k;
  }
  throw ValidationError("unknown figure kind '" + std::string(name) +
                        "' (expected throughput, energy, collision, density or contention)");
}

std::vector<std::string> required_columns(FigureKind kind) {
  switch (kind) {
    case FigureKind::throughput: return {"series", "nodes", "load", "throughput_mean"};
    case FigureKind::energy: return {"series", "nodes", "load", "energy_per_packet_mean"};
    case FigureKind::collision: return {"series", "nodes", "load", "collision_rate_mean"};
    case FigureKind::density:
      return {"series", "nodes", "load", "throughput_mean", "energy_per_packet_mean", "collision_rate_mean"};
    case FigureKind::contention: return {"n_prime", "t_cp_ms", "window", "optimal", "q_analytic", "d_analytic"};
  }
  return {};
}

namespace {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct Panel {
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
};

constexpr double kW = 440, kH = 330;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(x) < 1e-12 ? 0.0 : x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f <= 1.0 ? 1.0 : f <= 2.0 ? 2.0 : f <= 5.0 ? 5.0 : 10.0) * mag;
}

void range_of(std::vector<double> v, double& lo, double& hi, bool from_zero) {
  lo = *std::min_element(v.begin(), v.end());
  hi = *std::max_element(v.begin(), v.end());
  if (from_zero && lo > 0.0) lo = 0.0;
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    const double pad = std::abs(hi) > 0.0 ? std::abs(hi) * 0.1 : 1.0;
    lo -= pad;
    hi += pad;
    if (from_zero && lo < 0.0 && v.front() >= 0.0) lo = 0.0;
  }
}

std::string render_panel(const Panel& p, double ox) {
  std::ostringstream s;
  std::vector<double> xs, ys;
  for (const Series& se : p.series) {
    for (const auto& [x, y] : se.points) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  s << "<g transform=\"translate(" << num(ox) << ",0)\">\n";
  s << "<text x=\"" << num(kW / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.title)
    << "</text>\n";
  s << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"#000\"/>\n";
  s << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kH - 10) << "\" text-anchor=\"middle\" font-size=\"12\">"
    << escape(p.xlabel) << "</text>\n";
  s << "<text transform=\"translate(16," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">"
    << escape(p.ylabel) << "</text>\n";
  if (xs.empty()) {
    s << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kTop + ph / 2)
      << "\" text-anchor=\"middle\" font-size=\"12\">no data</text>\n</g>\n";
    return s.str();
  }
  double x0, x1, y0, y1;
  range_of(xs, x0, x1, false);
  range_of(ys, y0, y1, true);
  auto X = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto Y = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };
  for (int axis = 0; axis < 2; ++axis) {
    const double lo = axis == 0 ? x0 : y0, hi = axis == 0 ? x1 : y1;
    const double step = nice_step(hi - lo);
    for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + step * 1e-9; t += step) {
      if (axis == 0) {
        s << "<line x1=\"" << num(X(t)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(X(t)) << "\" y2=\""
          << num(kTop + ph + 5) << "\" stroke=\"#000\"/>\n";
        s << "<text x=\"" << num(X(t)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\" font-size=\"10\">"
          << tick_label(t) << "</text>\n";
      } else {
        s << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(Y(t)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
          << num(Y(t)) << "\" stroke=\"#000\"/>\n";
        s << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(Y(t) + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
          << tick_label(t) << "</text>\n";
      }
    }
  }
  for (std::size_t i = 0; i < p.series.size(); ++i) {
    const Series& se = p.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    if (se.points.size() > 1) {
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < se.points.size(); ++k) {
        s << (k ? " " : "") << num(X(se.points[k].first)) << "," << num(Y(se.points[k].second));
      }
      s << "\"/>\n";
    }
    for (const auto& [x, y] : se.points) {
      s << "<circle cx=\"" << num(X(x)) << "\" cy=\"" << num(Y(y)) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 14 + 14 * static_cast<double>(i);
    s << "<line x1=\"" << num(kLeft + 8) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(kLeft + 24) << "\" y2=\""
      << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << num(kLeft + 28) << "\" y=\"" << num(ly) << "\" font-size=\"10\">" << escape(se.name)
      << "</text>\n";
  }
  s << "</g>\n";
  return s.str();
}

std::string render_panels(const std::vector<Panel>& panels) {
  std::ostringstream s;
  const double width = kW * static_cast<double>(panels.size());
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(kH)
    << "\" viewBox=\"0 0 " << num(width) << " " << num(kH) << "\" font-family=\"sans-serif\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) s << render_panel(panels[i], kW * static_cast<double>(i));
  s << "</svg>\n";
  return s.str();
}

double value(const CsvTable& t, const std::vector<std::string>& row, std::string_view col) {
  const std::string& cell = row[t.column(col)];
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw ValidationError("column '" + std::string(col) + "' holds non-numeric value '" + cell + "'");
  }
  return x;
}

bool empty(const CsvTable& t, const std::vector<std::string>& row, std::string_view col) {
  return row[t.column(col)].empty();
}

// Series in first-seen order, points sorted by x.
class SeriesBuilder {
 public:
  void add(const std::string& name, double x, double y) {
    auto [it, fresh] = index_.emplace(name, series_.size());
    if (fresh) series_.push_back({name, {}});
    series_[it->second].points.emplace_back(x, y);
  }
  std::vector<Series> take() {
    for (Series& s : series_) std::stable_sort(s.points.begin(), s.points.end());
    return std::move(series_);
  }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<Series> series_;
};

std::string metric_label(std::string_view col) {
  if (col == "throughput_mean") return "Throughput (packet*m/s)";
  if (col == "energy_per_packet_mean") return "Energy per packet (J)";
  return "Collision rate";
}

Panel versus_load(const CsvTable& t, std::string_view col, const std::string& title) {
  bool many = false;
  for (const auto& r : t.rows) many |= r[t.column("nodes")] != t.rows.front()[t.column("nodes")];
  SeriesBuilder b;
  for (const auto& r : t.rows) {
    if (empty(t, r, col)) continue;
    std::string name = r[t.column("series")];
    if (many) name += " N=" + r[t.column("nodes")];
    b.add(name, value(t, r, "load"), value(t, r, col));
  }
  return {title, "Traffic load (packets/s)", metric_label(col), b.take()};
}

std::vector<Panel> density(const CsvTable& t) {
  double top = 0.0;
  for (const auto& r : t.rows) top = std::max(top, value(t, r, "load"));
  std::vector<Panel> out;
  for (std::string_view col : {"throughput_mean", "energy_per_packet_mean", "collision_rate_mean"}) {
    SeriesBuilder b;
    for (const auto& r : t.rows) {
      if (value(t, r, "load") != top || empty(t, r, col)) continue;
      b.add(r[t.column("series")], value(t, r, "nodes"), value(t, r, col));
    }
    out.push_back({metric_label(col) + " at load " + format_number(top), "Number of nodes", metric_label(col), b.take()});
  }
  return out;
}

std::vector<Panel> contention(const CsvTable& t) {
  double t_min = 0.0;
  bool have = false;
  for (const auto& r : t.rows) {
    if (value(t, r, "optimal") != 0.0) continue;
    const double x = value(t, r, "t_cp_ms");
    if (!have || x < t_min) t_min = x;
    have = true;
  }
  SeriesBuilder a, b, c;
  for (const auto& r : t.rows) {
    if (value(t, r, "optimal") == 0.0) {
      if (value(t, r, "t_cp_ms") == t_min) {
        a.add("W=" + r[t.column("window")], value(t, r, "n_prime"), value(t, r, "q_analytic"));
      }
      continue;
    }
    const std::string name = "N'=" + r[t.column("n_prime")];
    b.add(name, value(t, r, "t_cp_ms"), value(t, r, "q_analytic"));
    if (!empty(t, r, "d_analytic")) c.add(name, value(t, r, "t_cp_ms"), value(t, r, "d_analytic"));
  }
  return {{"(a) Successful requests in " + tick_label(t_min) + " ms", "Contending nodes N'", "Successful requests", a.take()},
          {"(b) Successful requests per frame, optimal W", "Contention time (ms)", "Successful requests", b.take()},
          {"(c) Delay to initiate, optimal W", "Contention time (ms)", "Delay (frames)", c.take()}};
}

}  // namespace

std::string render_figure(const CsvTable& table, FigureKind kind) {
  std::string missing;
  for (const std::string& col : required_columns(kind)) {
    if (!table.has(col)) missing += (missing.empty() ? "" : ", ") + col;
  }
  if (!missing.empty()) {
    throw ValidationError(std::string("CSV lacks columns needed for the ") + to_string(kind) + " figure: " + missing);
  }
  switch (kind) {
    case FigureKind::throughput: return render_panels({versus_load(table, "throughput_mean", "Throughput")});
    case FigureKind::energy:
      return render_panels({versus_load(table, "energy_per_packet_mean", "Energy per delivered packet")});
    case FigureKind::collision: return render_panels({versus_load(table, "collision_rate_mean", "Collision rate")});
    case FigureKind::density: return render_panels(density(table));
    case FigureKind::contention: return render_panels(contention(table));
  }
  return {};
}

void emit_plot(const std::filesystem::path& csv, FigureKind kind, const std::filesystem::path& out) {
  write_text(out, render_figure(read_csv(csv), kind));
}

}  // namespace pmac
