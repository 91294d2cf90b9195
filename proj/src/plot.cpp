#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "dws/scenario.hpp"

namespace dws {

namespace {

constexpr int kWidth = 800, kHeight = 500;
constexpr double kLeft = 70, kRight = 640, kTop = 30, kBottom = 440;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name, const std::string& src) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError(src + ": missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Table read_table(std::istream& is, const std::string& src) {
  Table t;
  std::string line;
  if (!std::getline(is, line) || line.empty()) throw ValidationError(src + ": empty CSV");
  t.header = split_csv(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto row = split_csv(line);
    if (row.size() != t.header.size()) throw ValidationError(src + ": row with wrong number of fields");
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw ValidationError(src + ": CSV has no data rows");
  return t;
}

double to_number(const std::string& s, const std::string& src) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(src + ": not a number: '" + s + "'");
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v, double step) {
  char buf[32];
  const int digits = std::max(0, -static_cast<int>(std::floor(std::log10(step) + 1e-9)));
  std::snprintf(buf, sizeof buf, "%.*f", digits, std::abs(v) < 1e-12 * step ? 0.0 : v);
  return buf;
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
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

struct Series {
  std::string label, color, dash;
  std::vector<double> x, y;
};

std::string render(const std::vector<Series>& series, const std::string& xlabel, const std::string& ylabel,
                   const std::string& title) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (x1 - x0 < 1e-12) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kRight - kLeft); };
  auto py = [&](double y) { return kBottom - (y - y0) / (y1 - y0) * (kBottom - kTop); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(0.5 * (kLeft + kRight)) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title) << "</text>\n";
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kRight - kLeft) << "\" height=\""
     << num(kBottom - kTop) << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double xs = nice_step(x1 - x0), ys = nice_step(y1 - y0);
  for (double v = std::ceil(x0 / xs) * xs; v <= x1 + 1e-9 * xs; v += xs) {
    os << "<line x1=\"" << num(px(v)) << "\" y1=\"" << num(kBottom) << "\" x2=\"" << num(px(v)) << "\" y2=\""
       << num(kBottom + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(px(v)) << "\" y=\"" << num(kBottom + 18) << "\" text-anchor=\"middle\">"
       << tick_label(v, xs) << "</text>\n";
  }
  for (double v = std::ceil(y0 / ys) * ys; v <= y1 + 1e-9 * ys; v += ys) {
    os << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(v)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
       << num(py(v)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">"
       << tick_label(v, ys) << "</text>\n";
  }
  os << "<text x=\"" << num(0.5 * (kLeft + kRight)) << "\" y=\"" << num(kBottom + 40)
     << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
  os << "<text x=\"18\" y=\"" << num(0.5 * (kTop + kBottom)) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << num(0.5 * (kTop + kBottom)) << ")\">" << escape(ylabel) << "</text>\n";

  double ly = kTop + 10;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (!s.dash.empty()) os << " stroke-dasharray=\"" << s.dash << "\"";
    os << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << num(px(s.x[i])) << "," << num(py(s.y[i]));
    os << "\"/>\n";
    os << "<line x1=\"" << num(kRight + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kRight + 42) << "\" y2=\""
       << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (!s.dash.empty()) os << " stroke-dasharray=\"" << s.dash << "\"";
    os << "/>\n<text x=\"" << num(kRight + 48) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label) << "</text>\n";
    ly += 20;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::string render_svg(std::istream& csv, const std::string& kind_in, const std::string& src) {
  const Table t = read_table(csv, src);
  std::string kind = kind_in;
  if (kind == "auto") {
    const bool lv = std::find(t.header.begin(), t.header.end(), "label") != t.header.end();
    kind = lv ? "levels" : "oscillation";
  }
  if (kind == "oscillation") {
    const int tc = t.column("t_us", src);
    // spin |0> solid, spin |1> dashed; e blue, g red
    const std::vector<std::tuple<std::string, std::string, std::string>> styles{
        {"p0_e", "#1f77b4", ""}, {"p1_e", "#1f77b4", "6 4"}, {"p0_g", "#d62728", ""}, {"p1_g", "#d62728", "6 4"}};
    std::vector<Series> series;
    for (const auto& [name, color, dash] : styles) {
      const int c = t.column(name, src);
      Series s{name, color, dash, {}, {}};
      for (const auto& row : t.rows) {
        s.x.push_back(to_number(row[tc], src));
        s.y.push_back(to_number(row[c], src));
      }
      series.push_back(std::move(s));
    }
    return render(series, "hold time (us)", "population per atom", "spin populations");
  }
  if (kind == "levels") {
    const int tc = t.column("t_us", src), lc = t.column("label", src), ec = t.column("energy_ER", src);
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::vector<Series> series;
    std::map<std::string, std::size_t> index;
    for (const auto& row : t.rows) {
      auto [it, fresh] = index.emplace(row[lc], series.size());
      if (fresh) series.push_back({row[lc], palette[series.size() % 6], "", {}, {}});
      Series& s = series[it->second];
      s.x.push_back(to_number(row[tc], src));
      s.y.push_back(to_number(row[ec], src));
    }
    return render(series, "ramp time (us)", "energy (E_R)", "pair levels");
  }
  throw ValidationError("unknown plot kind '" + kind + "' (oscillation, levels, auto)");
}

void plot_svg(const std::filesystem::path& csv, const std::string& kind, const std::filesystem::path& svg) {
  std::ifstream is(csv);
  if (!is) throw ValidationError(csv.string() + ": cannot open");
  const std::string text = render_svg(is, kind, csv.string());
  std::ofstream os(svg);
  os << text;
}

}  // namespace dws
