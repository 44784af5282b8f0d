#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "krflx/string_calculus.hpp"

namespace krflx {

enum class Tag {
  conv_jump,
  conv_bm,
  ilt_alpha,
  ilt_alpha2,
  ilt_alpha1,
  tail,
  occupation_alpha,
  occupation_alpha2,
  occupation_alpha1,
  arcsine,
  double_laplace
};

const char* to_string(Tag t);
std::optional<Tag> parse_tag(const std::string& s);
const std::vector<Tag>& all_tags();
// one-line description of what the experiment checks
const char* describe(Tag t);

// A JSON spec that failed validation; every entry is "<json pointer>: <problem>".
struct SpecError : std::runtime_error {
  explicit SpecError(std::vector<std::string> problems);
  std::vector<std::string> problems;
};

struct Tolerances {
  double rel = 0.02;         // deterministic convergence, relative
  double ks = 0.05;          // KS distance bound
  double drift_se = 3.0;     // drift check, standard errors
  double slope = 0.1;        // tail slope
  double constant = 0.25;    // tail constant, relative
  long min_exceed = 200;     // tail exceedances needed at the largest s
  double p_rel = 0.02;       // occupation fraction, relative
  double dlt_rel = 0.05;     // double Laplace, relative
  double level = 0.01;       // test size for critical values
};

// one side of a (possibly bilateral) process: a string and its jumping-in measure
struct SideSpec {
  String m;
  JumpMeasure j;
  nlohmann::json m_json, j_json;
  double w = 1.0;  // tail weight w in m(x,∞) ∼ w·m^(α)(x,∞)
  double c = 1.0;  // arcsine tail constant c
};

struct ExperimentSpec {
  Tag tag = Tag::conv_jump;
  std::string name;
  std::uint64_t seed = 1;
  long n = 1000;
  std::vector<double> gamma{1.0};
  std::vector<double> lambda{1.0};
  std::vector<double> mu;
  std::vector<double> t{1.0};
  std::vector<std::pair<double, double>> pairs;  // (t₁, t₂) for joint checks
  double alpha = 1.5;
  std::optional<double> alpha_ref;  // reference law exponent, defaults to alpha
  std::vector<double> negative_controls;
  double eps = 1e-4;
  double chunk = 1.0;
  double em_step = 2e-3;              // Euler–Maruyama h, Δt = h·x²ρ(x)/2
  double local_time = 1e4;            // tail: total local time
  std::pair<double, double> s_range{10.0, 100.0};
  double K = 1.0;                     // slowly varying normalization, constant
  SideSpec plus, minus;               // single-sided experiments use plus
  bool bilateral = false;
  Tolerances tol;
  nlohmann::json source;

  double reference_alpha() const { return alpha_ref.value_or(alpha); }
};

// parses and validates; throws SpecError listing JSON pointers on failure
ExperimentSpec parse_spec(const nlohmann::json& j);
ExperimentSpec load_spec(const std::string& path);

// builders shared with the tests
String parse_string(const nlohmann::json& j, const std::string& ptr, std::vector<std::string>& errs);
JumpMeasure parse_jump(const nlohmann::json& j, const std::string& ptr, std::vector<std::string>& errs);

}  // namespace krflx
