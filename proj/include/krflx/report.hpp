#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace krflx {

inline constexpr const char* kReportSchema = "krflx-report/1";

enum class Status { pass, fail, inconclusive, info };
const char* to_string(Status s);
Status parse_status(const std::string& s);

// One checked claim. `comparison` reads "value <op> tolerance", e.g. "<=".
struct Criterion {
  std::string name;
  Status status = Status::info;
  double value = 0.0;
  double tolerance = 0.0;
  std::string comparison;
  std::string detail;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) { rows.push_back(std::move(row)); }
  std::string csv() const;
};

struct Plot {
  std::string name;
  std::string svg;
};

struct Report {
  std::string name;
  std::string tag;
  std::uint64_t seed = 0;
  bool experimental = false;
  nlohmann::json spec;
  nlohmann::json constants = nlohmann::json::object();
  std::vector<Criterion> criteria;
  std::deque<Table> tables;  // table() hands out references that must survive later calls
  std::vector<Plot> plots;
  std::vector<std::string> notes;
  double runtime_s = 0.0;  // written to timing.json only, so report.json stays reproducible

  // pass/fail check against an upper bound
  Criterion& check_le(std::string name, double value, double bound, std::string detail = {});
  Criterion& check_ge(std::string name, double value, double bound, std::string detail = {});
  Criterion& add(Criterion c);
  Table& table(std::string name, std::vector<std::string> columns);

  // fail if any criterion failed; else inconclusive if any was; else pass
  Status overall() const;
  nlohmann::json to_json() const;
  static Report from_json(const nlohmann::json& j);
};

// 0 pass, 2 fail, 3 inconclusive
int exit_code(Status s);

// report.json, tables/<name>.csv, plots/<name>.svg and timing.json under dir
void write_report(const Report& r, const std::filesystem::path& dir);

struct Series {
  std::string label;
  std::vector<double> x, y;
  bool line = true;  // polyline, else markers
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<Series> series;
};

std::string render_svg(const PlotSpec& p);

}  // namespace krflx
