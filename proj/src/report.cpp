#include "krflx/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace krflx {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no inf/nan; they are stored as strings
json jnum(double v) { return std::isfinite(v) ? json(v) : json(num(v)); }

double from_jnum(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    return std::nan("");
  }
  return std::nan("");
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::inconclusive: return "inconclusive";
    case Status::info: return "info";
  }
  return "?";
}

Status parse_status(const std::string& s) {
  if (s == "pass") return Status::pass;
  if (s == "fail") return Status::fail;
  if (s == "inconclusive") return Status::inconclusive;
  if (s == "info") return Status::info;
  throw std::runtime_error("unknown status '" + s + "'");
}

std::string Table::csv() const {
  std::ostringstream os;
  for (size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << num(r[i]);
    os << '\n';
  }
  return os.str();
}

Criterion& Report::add(Criterion c) {
  criteria.push_back(std::move(c));
  return criteria.back();
}

Criterion& Report::check_le(std::string name, double value, double bound, std::string detail) {
  return add({std::move(name), value <= bound ? Status::pass : Status::fail, value, bound, "<=",
              std::move(detail)});
}

Criterion& Report::check_ge(std::string name, double value, double bound, std::string detail) {
  return add({std::move(name), value >= bound ? Status::pass : Status::fail, value, bound, ">=",
              std::move(detail)});
}

Table& Report::table(std::string name, std::vector<std::string> columns) {
  tables.push_back({std::move(name), std::move(columns), {}});
  return tables.back();
}

Status Report::overall() const {
  bool inconclusive = false;
  for (const auto& c : criteria) {
    if (c.status == Status::fail) return Status::fail;
    if (c.status == Status::inconclusive) inconclusive = true;
  }
  return inconclusive ? Status::inconclusive : Status::pass;
}

json Report::to_json() const {
  json j;
  j["schema"] = kReportSchema;
  j["name"] = name;
  j["tag"] = tag;
  j["seed"] = seed;
  j["experimental"] = experimental;
  j["status"] = to_string(overall());
  j["spec"] = spec;
  j["constants"] = constants;
  json cs = json::array();
  for (const auto& c : criteria)
    cs.push_back({{"name", c.name},
                  {"status", to_string(c.status)},
                  {"value", jnum(c.value)},
                  {"tolerance", jnum(c.tolerance)},
                  {"comparison", c.comparison},
                  {"detail", c.detail}});
  j["criteria"] = cs;
  json ts = json::array();
  for (const auto& t : tables) {
    json rows = json::array();
    for (const auto& r : t.rows) {
      json row = json::array();
      for (double v : r) row.push_back(jnum(v));
      rows.push_back(row);
    }
    ts.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", rows}});
  }
  j["tables"] = ts;
  json ps = json::array();
  for (const auto& p : plots) ps.push_back("plots/" + p.name + ".svg");
  j["plots"] = ps;
  j["notes"] = notes;
  return j;
}

Report Report::from_json(const json& j) {
  if (!j.contains("schema") || j.at("schema") != kReportSchema)
    throw std::runtime_error(std::string("report schema mismatch: expected ") + kReportSchema + ", got " +
                             (j.contains("schema") ? j.at("schema").dump() : "none"));
  Report r;
  r.name = j.at("name").get<std::string>();
  r.tag = j.at("tag").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.experimental = j.value("experimental", false);
  r.spec = j.value("spec", json::object());
  r.constants = j.value("constants", json::object());
  for (const auto& c : j.at("criteria"))
    r.criteria.push_back({c.at("name").get<std::string>(), parse_status(c.at("status").get<std::string>()),
                          from_jnum(c.at("value")), from_jnum(c.at("tolerance")),
                          c.at("comparison").get<std::string>(), c.at("detail").get<std::string>()});
  for (const auto& t : j.at("tables")) {
    Table tb{t.at("name").get<std::string>(), t.at("columns").get<std::vector<std::string>>(), {}};
    for (const auto& row : t.at("rows")) {
      std::vector<double> v;
      for (const auto& x : row) v.push_back(from_jnum(x));
      tb.rows.push_back(std::move(v));
    }
    r.tables.push_back(std::move(tb));
  }
  r.notes = j.value("notes", std::vector<std::string>{});
  return r;
}

int exit_code(Status s) {
  switch (s) {
    case Status::fail: return 2;
    case Status::inconclusive: return 3;
    default: return 0;
  }
}

void write_report(const Report& r, const fs::path& dir) {
  fs::create_directories(dir / "tables");
  fs::create_directories(dir / "plots");
  write_file(dir / "report.json", r.to_json().dump(2) + "\n");
  for (const auto& t : r.tables) write_file(dir / "tables" / (t.name + ".csv"), t.csv());
  for (const auto& p : r.plots) write_file(dir / "plots" / (p.name + ".svg"), p.svg);
  json timing{{"name", r.name}, {"runtime_s", r.runtime_s}};
  write_file(dir / "timing.json", timing.dump(2) + "\n");
}

// ── SVG ───────────────────────────────────────────────────────────────────

namespace {

const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<')
      o += "&lt;";
    else if (c == '>')
      o += "&gt;";
    else if (c == '&')
      o += "&amp;";
    else
      o += c;
  }
  return o;
}

}  // namespace

std::string render_svg(const PlotSpec& p) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 55;
  auto tx = [&](double v) { return p.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return p.logy ? std::log10(v) : v; };
  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  for (const auto& s : p.series)
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((p.logx && !(s.x[i] > 0)) || (p.logy && !(s.y[i] > 0))) continue;
      const double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      x0 = std::min(x0, a), x1 = std::max(x1, a), y0 = std::min(y0, b), y1 = std::max(y1, b);
    }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double a) { return L + (a - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double b) { return H - B - (b - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.title)
     << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double a = x0 + (x1 - x0) * k / 4, b = y0 + (y1 - y0) * k / 4;
    os << "<text x=\"" << fmt(px(a)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << fmt(p.logx ? std::pow(10.0, a) : a) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(b) + 4) << "\" text-anchor=\"end\">"
       << fmt(p.logy ? std::pow(10.0, b) : b) << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(p.xlabel)
     << (p.logx ? " (log)" : "") << "</text>\n";
  os << "<text transform=\"translate(16," << H / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(p.ylabel) << (p.logy ? " (log)" : "") << "</text>\n";
  for (size_t k = 0; k < p.series.size(); ++k) {
    const auto& s = p.series[k];
    const char* col = kColours[k % 6];
    std::ostringstream pts;
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((p.logx && !(s.x[i] > 0)) || (p.logy && !(s.y[i] > 0))) continue;
      const double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      if (s.line)
        pts << fmt(px(a)) << ',' << fmt(py(b)) << ' ';
      else
        os << "<circle cx=\"" << fmt(px(a)) << "\" cy=\"" << fmt(py(b)) << "\" r=\"2.5\" fill=\"" << col
           << "\"/>\n";
    }
    if (s.line)
      os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << pts.str()
         << "\"/>\n";
    os << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 15 * k << "\" fill=\"" << col << "\">"
       << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace krflx
