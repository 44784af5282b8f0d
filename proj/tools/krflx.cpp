// Command-line front end: validate specs, run experiments, merge report tables.
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "krflx/harness.hpp"
#include "krflx/levy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace krflx;

namespace {

constexpr int kExitUsage = 64;

struct Loaded {
  ExperimentSpec spec;
  bool had_seed = false;
};

// exit 64 on unreadable, malformed or invalid input
Loaded load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(kExitUsage);
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    std::cerr << "error: malformed JSON in " << path << ": " << e.what() << "\n";
    std::exit(kExitUsage);
  }
  try {
    return {parse_spec(j), j.is_object() && j.contains("seed")};
  } catch (const SpecError& e) {
    std::cerr << "error: " << path << " fails the schema:\n";
    for (const auto& p : e.problems) std::cerr << "  " << p << "\n";
    std::exit(kExitUsage);
  }
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

int cmd_validate(const std::vector<std::string>& configs) {
  int rc = 0;
  for (const auto& path : configs) {
    const Loaded L = load(path);
    const ExperimentSpec& s = L.spec;
    std::cout << path << ": " << to_string(s.tag) << " '" << s.name << "' parses\n";
    std::vector<std::pair<std::string, const SideSpec*>> sides{{"", &s.plus}};
    if (s.bilateral) sides = {{"plus ", &s.plus}, {"minus ", &s.minus}};
    for (const auto& [label, side] : sides) {
      const auto& m = *side->m;
      const Certificate m1 = check_M1(m);
      const BoundaryClass bc = classify_boundary(m);
      std::cout << "  " << label << "string " << m.describe() << "\n";
      std::cout << "  " << label << "boundary: " << to_string(bc.kind) << "\n";
      std::cout << "  " << label << "M1: " << to_string(m1.verdict) << " (" << m1.detail << ")\n";
      const Certificate c = check_condition_C(m, side->j);
      if (c.verdict == Verdict::yes) {
        const double b = std::isfinite(m.m_inf()) ? drift_b(side->m, side->j) : kInf;
        std::cout << "  " << label << "C: satisfied (κ=" << num(side->j.kappa()) << ", b=" << num(b) << ")\n";
      } else if (c.verdict == Verdict::no) {
        std::cout << "  " << label << "C: violated — " << c.detail << "\n";
        rc = 2;
      } else {
        std::cout << "  " << label << "C: inconclusive — " << c.detail << "\n";
        if (rc == 0) rc = 3;
      }
      if (m1.verdict == Verdict::no) rc = 2;
    }
  }
  return rc;
}

// writes into a fresh sibling directory and renames it into place
void publish(const Report& r, const fs::path& out, bool force) {
  const fs::path tmp = out.parent_path() / (out.filename().string() + ".tmp-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  write_report(r, tmp);
  if (fs::exists(out)) {
    if (!force) {
      fs::remove_all(tmp);
      throw std::runtime_error(out.string() + " exists; use --force to replace it");
    }
    fs::remove_all(out);
  }
  fs::rename(tmp, out);
}

int cmd_run(const std::vector<std::string>& configs, const std::string& out, std::optional<std::uint64_t> seed,
            int workers, bool force, bool verbose) {
  const fs::path root = fs::absolute(out);
  if (fs::exists(root) && !force) {
    std::cerr << "error: " << root << " exists; use --force to replace it\n";
    return kExitUsage;
  }
  std::vector<Loaded> specs;
  for (const auto& c : configs) specs.push_back(load(c));
  std::optional<std::uint64_t> env_seed;
  if (const char* e = std::getenv("KRFLX_SEED")) {
    try {
      env_seed = std::stoull(e);
    } catch (...) {
      std::cerr << "error: KRFLX_SEED is not an unsigned integer\n";
      return kExitUsage;
    }
  }
  if (root.has_parent_path()) fs::create_directories(root.parent_path());

  RunOptions opt;
  opt.workers = workers;
  if (verbose) opt.log = [](const std::string& s) { std::cerr << "[krflx] " << s << "\n"; };

  Status worst = Status::pass;
  int rc = 0;
  for (auto& L : specs) {
    ExperimentSpec& s = L.spec;
    if (seed)
      s.seed = *seed;
    else if (!L.had_seed && env_seed)
      s.seed = *env_seed;
    const fs::path dir = specs.size() == 1 ? root : root / s.name;
    try {
      const Report r = run_experiment(s, opt);
      if (specs.size() > 1) fs::create_directories(root);
      publish(r, dir, force);
      const Status st = r.overall();
      std::cout << s.name << ": " << to_string(st) << " (" << dir.string() << ")\n";
      for (const auto& c : r.criteria)
        std::cout << "  [" << to_string(c.status) << "] " << c.name << ": " << c.value << " " << c.comparison << " "
                  << c.tolerance << "\n";
      if (st == Status::fail) worst = Status::fail;
      if (st == Status::inconclusive && worst != Status::fail) worst = Status::inconclusive;
    } catch (const ExperimentError& e) {
      std::cerr << "error: " << e.what() << "\n";
      const fs::path partial = dir / "partial";
      fs::create_directories(dir);
      publish(e.partial, partial, true);
      std::cerr << "partial results kept in " << partial << "\n";
      worst = Status::fail;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = 1;
    }
  }
  if (rc) return rc;
  return exit_code(worst);
}

// long format: one row per (experiment, table, key columns, quantity)
int cmd_tabulate(const std::vector<std::string>& dirs, const std::string& out) {
  static const std::vector<std::string> keys{"gamma", "t", "lambda", "mu", "s", "x"};
  std::map<std::string, std::string> rows;  // key → value text
  std::map<std::string, std::string> origin;
  std::vector<std::string> conflicts;
  for (const auto& d : dirs) {
    std::vector<fs::path> reports;
    if (fs::exists(fs::path(d) / "report.json"))
      reports.push_back(fs::path(d) / "report.json");
    else if (fs::is_directory(d))
      for (const auto& e : fs::directory_iterator(d))
        if (fs::exists(e.path() / "report.json")) reports.push_back(e.path() / "report.json");
    if (reports.empty()) {
      std::cerr << "error: no report.json under " << d << "\n";
      return kExitUsage;
    }
    for (const auto& p : reports) {
      std::ifstream in(p);
      Report r;
      try {
        r = Report::from_json(json::parse(in));
      } catch (const std::exception& e) {
        std::cerr << "error: " << p << ": " << e.what() << "\n";
        return kExitUsage;
      }
      for (const auto& t : r.tables) {
        std::vector<int> kcol(keys.size(), -1);
        for (size_t c = 0; c < t.columns.size(); ++c)
          for (size_t k = 0; k < keys.size(); ++k)
            if (t.columns[c] == keys[k]) kcol[k] = static_cast<int>(c);
        for (const auto& row : t.rows) {
          std::ostringstream base;
          base << r.name << ',' << t.name;
          for (size_t k = 0; k < keys.size(); ++k) {
            base << ',';
            if (kcol[k] >= 0) base << num(row[kcol[k]]);
          }
          for (size_t c = 0; c < t.columns.size(); ++c) {
            if (std::find(kcol.begin(), kcol.end(), static_cast<int>(c)) != kcol.end()) continue;
            const std::string key = base.str() + ',' + t.columns[c];
            std::ostringstream v;
            v.precision(17);
            v << row[c];
            auto [it, fresh] = rows.emplace(key, v.str());
            if (!fresh && it->second != v.str()) conflicts.push_back(key + " (" + origin[key] + " vs " + p.string() + ")");
            if (fresh) origin[key] = p.string();
          }
        }
      }
    }
  }
  if (!conflicts.empty()) {
    std::cerr << "error: conflicting duplicate keys:\n";
    for (const auto& c : conflicts) std::cerr << "  " << c << "\n";
    return 2;
  }
  std::ofstream file;
  if (!out.empty()) file.open(out);
  std::ostream& os = out.empty() ? std::cout : file;
  os << "experiment,table";
  for (const auto& k : keys) os << ',' << k;
  os << ",quantity,value\n";
  for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::ostringstream tags;
  tags << "Experiment tags (the \"tag\" field of a config):\n";
  for (Tag t : all_tags()) tags << "  " << to_string(t) << "\n      " << describe(t) << "\n";
  tags << "Exit codes: 0 all criteria pass, 2 any fails, 3 inconclusive, 64 malformed or invalid config.";

  CLI::App app{"krflx: jumping-in diffusions, inverse local times and their fluctuation limits"};
  app.footer(tags.str());
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  bool force = false, verbose = false;

  auto* validate = app.add_subcommand("validate", "parse configs and print the M1 and condition (C) certificates");
  validate->add_option("--config,configs", configs, "experiment spec (JSON)")->required();

  auto* run = app.add_subcommand("run", "run experiments and write report.json, tables/*.csv, plots/*.svg");
  run->add_option("--config", configs, "experiment spec (JSON); repeat for several")->required();
  run->add_option("--out", out, "output directory, created atomically")->required();
  run->add_option("--seed", seed, "seed override (default: the spec's seed, then $KRFLX_SEED)");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--force", force, "replace an existing output directory");
  run->add_flag("--verbose", verbose, "progress lines on stderr");

  std::vector<std::string> dirs;
  auto* tab = app.add_subcommand("tabulate", "merge report tables from run directories into one CSV");
  tab->add_option("dirs", dirs, "run directories")->required();
  tab->add_option("--out", out, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  try {
    if (*validate) return cmd_validate(configs);
    if (*run) return cmd_run(configs, out, seed, workers, force, verbose);
    if (*tab) return cmd_tabulate(dirs, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
