#include "greenlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "greenlab/errors.hpp"

namespace greenlab {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidParameter("cannot read file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw InvalidParameter("cannot create directory for: " + path);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidParameter("cannot write file: " + path);
  out << text;
}

std::string json_dump(const json& j) { return j.dump(2) + "\n"; }

json domain_to_json(const PolygonalDomain& dom, const std::string& name) {
  json j;
  if (!name.empty()) j["name"] = name;
  json verts = json::array();
  for (Vec2 v : dom.vertices()) verts.push_back(json::array({v.x, v.y}));
  j["vertices"] = std::move(verts);
  if (dom.flatness)
    j["flatness"] = {{"gamma", dom.flatness->gamma}, {"R0", dom.flatness->R0}};
  if (dom.lipschitz)
    j["lipschitz"] = {{"L", dom.lipschitz->L}, {"R0", dom.lipschitz->R0}};
  return j;
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok)
      throw InvalidParameter("unknown key \"" + it.key() + "\" in " + where);
  }
}

double num_at(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number())
    throw InvalidParameter(where + " needs numeric \"" + key + "\"");
  return j[key].get<double>();
}

}  // namespace

PolygonalDomain domain_from_json(const json& j) {
  if (!j.is_object()) throw InvalidParameter("domain JSON must be an object");
  reject_unknown(j, {"name", "vertices", "flatness", "lipschitz"}, "domain");
  if (!j.contains("vertices") || !j["vertices"].is_array())
    throw InvalidParameter("domain needs a \"vertices\" array");
  std::vector<Vec2> verts;
  for (const json& p : j["vertices"]) {
    if (!p.is_array() || p.size() != 2)
      throw InvalidParameter("each vertex must be [x, y]");
    verts.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  PolygonalDomain dom = PolygonalDomain::from_vertices(std::move(verts));
  if (j.contains("flatness")) {
    const json& f = j["flatness"];
    reject_unknown(f, {"gamma", "R0"}, "flatness");
    dom.flatness = FlatnessCert{num_at(f, "gamma", "flatness"),
                                num_at(f, "R0", "flatness")};
  }
  if (j.contains("lipschitz")) {
    const json& f = j["lipschitz"];
    reject_unknown(f, {"L", "R0"}, "lipschitz");
    dom.lipschitz =
        LipschitzCert{num_at(f, "L", "lipschitz"), num_at(f, "R0", "lipschitz")};
  }
  return dom;
}

PolygonalDomain load_domain(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter("domain file " + path + ": " + e.what());
  }
  return domain_from_json(j);
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  char buf[40];
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw InvalidParameter("csv row width does not match header");
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Round the raw span to 1/2/5 * 10^k tick steps.
double nice_step(double span, int target) {
  if (!(span > 0.0)) return 1.0;
  double raw = span / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double r = raw / mag;
  double s = r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0;
  return s * mag;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string xml_escape(const std::string& s) {
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

std::string svg_chart(const std::string& title, const std::string& xlabel,
                      const std::string& ylabel,
                      const std::vector<Series>& series, int width,
                      int height) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const Series& s : series)
    for (Vec2 p : s.pts) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
      if (!any) {
        xmin = xmax = p.x;
        ymin = ymax = p.y;
        any = true;
      } else {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
      }
    }
  if (xmax - xmin <= 0) {
    xmin -= 1;
    xmax += 1;
  }
  if (ymax - ymin <= 0) {
    ymin -= 1;
    ymax += 1;
  }
  double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  const double L = 70, R = 20, T = 36, B = 52;
  double pw = width - L - R, ph = height - T - B;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return T + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width
      << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << xml_escape(title) << "</text>\n";

  double xs = nice_step(xmax - xmin, 5), ys = nice_step(ymax - ymin, 5);
  for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-12 * xs; t += xs) {
    svg << "<line x1=\"" << fmt6(px(t)) << "\" y1=\"" << fmt6(T) << "\" x2=\""
        << fmt6(px(t)) << "\" y2=\"" << fmt6(T + ph)
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << fmt6(px(t)) << "\" y=\"" << fmt6(T + ph + 16)
        << "\" text-anchor=\"middle\">" << fmt6(t) << "</text>\n";
  }
  for (double t = std::ceil(ymin / ys) * ys; t <= ymax + 1e-12 * ys; t += ys) {
    svg << "<line x1=\"" << fmt6(L) << "\" y1=\"" << fmt6(py(t)) << "\" x2=\""
        << fmt6(L + pw) << "\" y2=\"" << fmt6(py(t))
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << fmt6(L - 6) << "\" y=\"" << fmt6(py(t) + 4)
        << "\" text-anchor=\"end\">" << fmt6(t) << "</text>\n";
  }
  svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << fmt6(pw)
      << "\" height=\"" << fmt6(ph) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\">" << xml_escape(xlabel) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << height / 2
      << ")\">" << xml_escape(ylabel) << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % 8];
    if (s.line && s.pts.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (Vec2 p : s.pts)
        svg << fmt6(px(p.x)) << "," << fmt6(py(p.y)) << " ";
      svg << "\"/>\n";
    }
    double r = s.line ? 2.5 : 3.0;
    for (Vec2 p : s.pts)
      svg << "<circle cx=\"" << fmt6(px(p.x)) << "\" cy=\"" << fmt6(py(p.y))
          << "\" r=\"" << r << "\" fill=\"" << color << "\"/>\n";
    double ly = T + 16 + 16 * si;
    svg << "<rect x=\"" << fmt6(L + pw - 150) << "\" y=\"" << fmt6(ly - 9)
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << fmt6(L + pw - 136) << "\" y=\"" << fmt6(ly) << "\">"
        << xml_escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace greenlab
